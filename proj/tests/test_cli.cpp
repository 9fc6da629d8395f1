#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "widenet/cli.hpp"
#include "widenet/data_io.hpp"

using namespace widenet;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           (std::string("widenet_cli_") +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  RunConfig run(const std::string& command, std::vector<std::string> overrides = {}) const {
    RunConfig r;
    r.command = command;
    r.out_dir = dir_ / "out";
    r.overrides = std::move(overrides);
    return r;
  }

  int call(std::vector<std::string> args) {
    std::vector<char*> argv;
    args.insert(args.begin(), "widenet");
    for (std::string& a : args) argv.push_back(a.data());
    out_.str("");
    err_.str("");
    return run_cli(static_cast<int>(argv.size()), argv.data(), out_, err_);
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

const std::vector<std::string> kSmallRemainder = {
    "sweep.remainder.widths=64,128,256", "sweep.seeds=0..2", "sweep.probes=20",
    "sweep.beta_probes=20"};

}  // namespace

TEST(ExitCodes, MapErrorKinds) {
  EXPECT_EQ(exit_code_for(ErrorKind::io_error), kExitIo);
  EXPECT_EQ(exit_code_for(ErrorKind::format_error), kExitIo);
  EXPECT_EQ(exit_code_for(ErrorKind::insufficient_data), kExitIo);
  EXPECT_EQ(exit_code_for(ErrorKind::usage_error), kExitUsage);
  EXPECT_EQ(exit_code_for(ErrorKind::invalid_argument), kExitUsage);
  EXPECT_EQ(exit_code_for(ErrorKind::unsupported_activation), kExitUsage);
  EXPECT_EQ(exit_code_for(ErrorKind::convergence_failure), kExitCheckFailed);
  EXPECT_EQ(exit_code_for(ErrorKind::divergence), kExitCheckFailed);
}

TEST_F(CliTest, VerifyPassesAndWritesArtifacts) {
  std::ostringstream out, err;
  ASSERT_EQ(cmd_verify(run("verify", {"verify.seeds=0"}), out, err), kExitOk) << err.str();
  const auto rows = read_csv(dir_ / "out" / "verify.csv");
  EXPECT_GE(rows.size(), 8u);
  for (const MetricsRow& r : rows) {
    EXPECT_EQ(r.metric.rfind("check:", 0), 0u);
    if (!r.degenerate) EXPECT_EQ(r.value, 1.0) << r.metric;
  }
  EXPECT_TRUE(fs::exists(dir_ / "out" / "verify.manifest.ini"));
  EXPECT_NE(out.str().find("gradient_fd"), std::string::npos);
}

TEST_F(CliTest, VerifyCatchesASignFlippedGradient) {
  VerifyHooks hooks;
  hooks.gradient = [](const Network& net, const ParamVector& th, const Vector& x,
                      const GradTarget& t) {
    const ParamVector g = grad(net, th, x, t);
    return g.with_values(-g.values());
  };
  std::ostringstream out, err;
  EXPECT_EQ(cmd_verify(run("verify", {"verify.seeds=0"}), out, err, hooks), kExitCheckFailed);
  EXPECT_NE(err.str().find("gradient_fd"), std::string::npos) << err.str();
}

TEST_F(CliTest, MissingCifarWithoutFallbackIsIoExit) {
  RunConfig r = run("sweep cosine", {"data.fallback=false"});
  r.dataset = "cifar10:" + (dir_ / "absent").string();
  std::ostringstream out, err;
  EXPECT_EQ(cmd_sweep(SweepKind::cosine, r, out, err), kExitIo);
  EXPECT_NE(err.str().find("absent"), std::string::npos);
}

TEST_F(CliTest, SweepWritesCsvPlotManifestAndSummary) {
  std::ostringstream out, err;
  ASSERT_EQ(cmd_sweep(SweepKind::remainder, run("sweep remainder", kSmallRemainder), out, err),
            kExitOk)
      << err.str();
  const fs::path o = dir_ / "out";
  EXPECT_FALSE(read_csv(o / "remainder.csv").empty());
  EXPECT_NE(read_text(o / "remainder.svg").find("<svg"), std::string::npos);
  const Config manifest = Config::load(o / "remainder.manifest.ini");
  EXPECT_EQ(manifest.get("manifest", "command"), "sweep remainder");
  EXPECT_EQ(manifest.get("manifest", "tool_version"), std::string(kToolVersion));
  EXPECT_EQ(manifest.get("sweep.remainder", "widths"), "64,128,256");
  EXPECT_NE(out.str().find("PASS"), std::string::npos);
}

TEST_F(CliTest, ManifestReplayIsByteIdentical) {
  std::ostringstream out, err;
  ASSERT_EQ(cmd_sweep(SweepKind::remainder, run("sweep remainder", kSmallRemainder), out, err),
            kExitOk);
  const std::string csv = read_text(dir_ / "out" / "remainder.csv");
  const std::string manifest = read_text(dir_ / "out" / "remainder.manifest.ini");

  RunConfig replay = run("sweep remainder");
  replay.config_path = dir_ / "out" / "remainder.manifest.ini";
  replay.out_dir = dir_ / "replay";
  ASSERT_EQ(cmd_sweep(SweepKind::remainder, replay, out, err), kExitOk) << err.str();
  EXPECT_EQ(read_text(dir_ / "replay" / "remainder.csv"), csv);
  EXPECT_EQ(read_text(dir_ / "replay" / "remainder.manifest.ini"), manifest);
}

TEST_F(CliTest, ReportOnEmptyDirectoryWarns) {
  std::ostringstream out, err;
  EXPECT_EQ(cmd_report(dir_, out, err), kExitOk);
  EXPECT_EQ(out.str(), "claim\tverdict\tevidence\n");
  EXPECT_NE(err.str().find("warning"), std::string::npos);
}

TEST_F(CliTest, ReportOnCorruptCsvNamesTheLine) {
  write_text(dir_ / "cosine.csv", "not,a,header\n");
  std::ostringstream out, err;
  EXPECT_EQ(cmd_report(dir_, out, err), kExitIo);
  EXPECT_NE(err.str().find("cosine.csv:1"), std::string::npos) << err.str();
}

TEST_F(CliTest, ReportHasOneRowPerClaim) {
  std::ostringstream out, err;
  ASSERT_EQ(cmd_sweep(SweepKind::remainder, run("sweep remainder", kSmallRemainder), out, err),
            kExitOk);
  std::ostringstream rep;
  ASSERT_EQ(cmd_report(dir_ / "out", rep, err), kExitOk);
  std::istringstream lines(rep.str());
  std::string line;
  std::vector<std::string> all;
  while (std::getline(lines, line)) all.push_back(line);
  ASSERT_EQ(all.size(), 8u);
  EXPECT_EQ(all[1].rfind("remainder-bound\tpass\t", 0), 0u) << all[1];
  EXPECT_NE(all[2].find("\tmissing\t"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir_ / "out" / "claims.tsv"));
}

TEST_F(CliTest, RunCliParsingAndExitCodes) {
  EXPECT_EQ(call({}), kExitUsage);
  EXPECT_EQ(call({"frobnicate"}), kExitUsage);
  EXPECT_EQ(call({"sweep", "bogus"}), kExitUsage);
  EXPECT_EQ(call({"--help"}), kExitOk);
  EXPECT_EQ(call({"--version"}), kExitOk);
  EXPECT_NE(out_.str().find(kToolVersion), std::string::npos);
  EXPECT_EQ(call({"verify", "--config", (dir_ / "missing.ini").string()}), kExitUsage);

  write_text(dir_ / "bad.ini", "[run]\nseed 3\n");
  EXPECT_EQ(call({"verify", "--config", (dir_ / "bad.ini").string()}), kExitUsage);
  EXPECT_NE(err_.str().find("bad.ini:2"), std::string::npos) << err_.str();

  EXPECT_EQ(call({"report", dir_.string()}), kExitOk);
}

TEST_F(CliTest, OutEnvironmentVariableSetsDefaultDirectory) {
  ::setenv(kOutEnv, (dir_ / "env").string().c_str(), 1);
  std::vector<std::string> args = {"sweep", "remainder"};
  for (const std::string& s : kSmallRemainder) {
    args.push_back("--set");
    args.push_back(s);
  }
  const int code = call(args);
  ::unsetenv(kOutEnv);
  EXPECT_EQ(code, kExitOk) << err_.str();
  EXPECT_TRUE(fs::exists(dir_ / "env" / "remainder.csv"));
}
