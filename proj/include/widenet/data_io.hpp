#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "widenet/numerics.hpp"

namespace widenet {

/// Inputs (one sample per row) with +-1 labels.
struct Dataset {
  DenseMatrix inputs;
  Vector labels;
  std::string provenance;

  std::size_t size() const { return static_cast<std::size_t>(inputs.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(inputs.cols()); }
};

enum class PixelScaling { unit, standardized };

PixelScaling parse_pixel_scaling(std::string_view name);
std::string_view to_string(PixelScaling scaling);

/// Binary classification subset of the CIFAR-10 binary batches.
struct CifarSelection {
  int positive_class = 0;  // airplane -> +1
  int negative_class = 2;  // bird -> -1
  PixelScaling scaling = PixelScaling::unit;
};

constexpr std::size_t kCifarRecordBytes = 3073;
constexpr std::size_t kCifarPixels = 3072;

/// Reads one batch file or every data_batch_*.bin / test_batch.bin in a
/// directory (sorted by name), keeps records of the two classes and samples
/// n of them without replacement. Pixels are divided by 255; the
/// standardized variant then subtracts the per-channel mean and divides by
/// the per-channel standard deviation of the drawn sample.
Dataset load_cifar10(const std::filesystem::path& path, std::size_t n, Rng& rng,
                     const CifarSelection& selection = {});

/// Rows i.i.d. N(0, I_d) rescaled to unit norm; labels uniform on {-1, +1}.
Dataset synthetic_dataset(std::size_t d, std::size_t n, Rng& rng);

/// One measurement. A degenerate row carries no value.
struct MetricsRow {
  std::string experiment_id;
  std::size_t width = 0;
  std::uint64_t seed = 0;
  std::size_t layer = 0;
  std::string metric;
  double value = 0.0;
  bool degenerate = false;
  std::size_t n_samples = 0;

  bool operator==(const MetricsRow&) const = default;
};

inline constexpr std::string_view kCsvHeader =
    "experiment_id,width,seed,layer,metric,value,n_samples";

/// Header plus one line per row, LF endings, values with 17 significant
/// digits and the literal `degenerate` for degenerate rows.
std::string to_csv(const std::vector<MetricsRow>& rows);
void write_csv(const std::vector<MetricsRow>& rows, const std::filesystem::path& path);
/// Parses a file written by write_csv; format_error names the file and line.
std::vector<MetricsRow> read_csv(const std::filesystem::path& path);
std::vector<MetricsRow> parse_csv(std::string_view text, const std::string& source);

enum class GroupKey { layer, metric, experiment };

/// Log-log plot of value against width: every row as a point, and one
/// polyline per group through the per-width medians. Non-positive and
/// degenerate values are left out.
std::string render_svg(const std::vector<MetricsRow>& rows, GroupKey group,
                       const std::string& title);
void emit_svg_plot(const std::vector<MetricsRow>& rows, const std::filesystem::path& path,
                   GroupKey group, const std::string& title);

/// Creates missing parent directories; io_error on failure.
void write_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

}  // namespace widenet
