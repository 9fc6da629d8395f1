#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "widenet/config.hpp"
#include "widenet/grad.hpp"

namespace widenet {

inline constexpr const char* kToolVersion = "0.3.0";

/// Environment variable naming the default output directory.
inline constexpr const char* kOutEnv = "WIDENET_OUT";

enum ExitCode : int {
  kExitOk = 0,
  kExitCheckFailed = 1,
  kExitUsage = 2,
  kExitIo = 3,
};

/// io_error, format_error and insufficient_data map to kExitIo, usage and
/// invalid-argument errors to kExitUsage, everything else to kExitCheckFailed.
int exit_code_for(ErrorKind kind);

struct RunConfig {
  std::string command;
  std::optional<std::filesystem::path> config_path;
  std::filesystem::path out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
  std::optional<std::string> dataset;   // "synthetic" or "cifar10:<path>"
  std::vector<std::string> overrides;   // section.key=value, applied in order

  /// File (or built-in defaults), then --dataset, --seed, --jobs, --set.
  Config resolve() const;
};

/// Test seam for cmd_verify: replaces the reverse-mode gradient used by the
/// finite-difference oracle checks.
using GradientFn = std::function<ParamVector(const Network&, const ParamVector&, const Vector&,
                                             const GradTarget&)>;

struct VerifyHooks {
  GradientFn gradient;
};

int cmd_verify(const RunConfig& run, std::ostream& out, std::ostream& err,
               const VerifyHooks& hooks = {});
int cmd_sweep(SweepKind kind, const RunConfig& run, std::ostream& out, std::ostream& err);
int cmd_report(const std::filesystem::path& dir, std::ostream& out, std::ostream& err);

/// Parses argv and dispatches; never throws.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace widenet
