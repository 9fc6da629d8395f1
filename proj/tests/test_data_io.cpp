#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <regex>
#include <string>

#include "widenet/data_io.hpp"
#include "widenet/error.hpp"

using namespace widenet;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("widenet_io_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
             "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

// Record k has label labels[k]; every pixel of channel c holds 10 * (k + 1) + c.
std::string cifar_blob(const std::vector<int>& labels) {
  std::string blob;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    blob.push_back(static_cast<char>(labels[k]));
    for (int c = 0; c < 3; ++c) blob.append(1024, static_cast<char>(10 * (k + 1) + c));
  }
  return blob;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no widenet::Error thrown";
  return ErrorKind::invariant_violation;
}

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Cifar, KeepsTheTwoClassesAndMapsLabels) {
  TempDir dir;
  const fs::path file = dir.path() / "data_batch_1.bin";
  write_text(file, cifar_blob({0, 5, 2, 2, 7, 0}));
  Rng rng(1);
  const Dataset ds = load_cifar10(file, 4, rng);
  ASSERT_EQ(ds.size(), 4u);
  ASSERT_EQ(ds.dim(), kCifarPixels);
  int pos = 0;
  for (Eigen::Index i = 0; i < 4; ++i) {
    // Record index from the first pixel; labels must agree with it.
    const int k = static_cast<int>(std::lround(ds.inputs(i, 0) * 255.0)) / 10 - 1;
    EXPECT_TRUE(k == 0 || k == 2 || k == 3 || k == 5) << k;
    EXPECT_EQ(ds.labels(i), (k == 0 || k == 5) ? 1.0 : -1.0);
    EXPECT_NEAR(ds.inputs(i, 1024), (10.0 * (k + 1) + 1) / 255.0, 1e-15);
    EXPECT_NEAR(ds.inputs(i, 2047), (10.0 * (k + 1) + 1) / 255.0, 1e-15);
    pos += ds.labels(i) > 0;
  }
  EXPECT_EQ(pos, 2);
}

TEST(Cifar, StandardizedChannelsHaveZeroMeanUnitVariance) {
  TempDir dir;
  const fs::path file = dir.path() / "test_batch.bin";
  write_text(file, cifar_blob({0, 2, 0, 2}));
  Rng rng(2);
  const Dataset ds = load_cifar10(file, 4, rng, {0, 2, PixelScaling::standardized});
  for (Eigen::Index ch = 0; ch < 3; ++ch) {
    const auto block = ds.inputs.middleCols(ch * 1024, 1024);
    EXPECT_NEAR(block.mean(), 0.0, 1e-12);
    EXPECT_NEAR((block.array() - block.mean()).square().mean(), 1.0, 1e-12);
  }
}

TEST(Cifar, DirectoryModeReadsEveryBatch) {
  TempDir dir;
  write_text(dir.path() / "data_batch_1.bin", cifar_blob({0, 1}));
  write_text(dir.path() / "data_batch_2.bin", cifar_blob({2, 3}));
  write_text(dir.path() / "readme.txt", "not a batch");
  Rng rng(3);
  const Dataset ds = load_cifar10(dir.path(), 2, rng);
  EXPECT_EQ(ds.labels.sum(), 0.0);
}

TEST(Cifar, Errors) {
  TempDir dir;
  Rng rng(4);
  const fs::path trunc = dir.path() / "trunc.bin";
  std::string blob = cifar_blob({0, 2});
  blob.resize(blob.size() - 100);
  write_text(trunc, blob);
  EXPECT_EQ(kind_of([&] { load_cifar10(trunc, 1, rng); }), ErrorKind::format_error);
  EXPECT_NE(message_of([&] { load_cifar10(trunc, 1, rng); }).find("offset 3073"),
            std::string::npos);

  const fs::path badlabel = dir.path() / "label.bin";
  write_text(badlabel, cifar_blob({0, 12}));
  EXPECT_EQ(kind_of([&] { load_cifar10(badlabel, 1, rng); }), ErrorKind::format_error);

  EXPECT_EQ(kind_of([&] { load_cifar10(dir.path() / "nope", 1, rng); }), ErrorKind::io_error);

  const fs::path few = dir.path() / "few.bin";
  write_text(few, cifar_blob({0, 3, 2}));
  EXPECT_EQ(kind_of([&] { load_cifar10(few, 3, rng); }), ErrorKind::insufficient_data);

  const fs::path empty = dir.path() / "empty";
  fs::create_directories(empty);
  EXPECT_EQ(kind_of([&] { load_cifar10(empty, 1, rng); }), ErrorKind::io_error);
}

TEST(Synthetic, UnitNormRowsAndSignLabels) {
  Rng rng(5);
  const Dataset ds = synthetic_dataset(12, 30, rng);
  for (Eigen::Index i = 0; i < 30; ++i) {
    EXPECT_NEAR(ds.inputs.row(i).norm(), 1.0, 1e-14);
    EXPECT_EQ(std::abs(ds.labels(i)), 1.0);
  }
  Rng again(5);
  EXPECT_EQ(synthetic_dataset(12, 30, again).inputs, ds.inputs);
}

TEST(Csv, RoundTripIsExact) {
  std::vector<MetricsRow> rows = {
      {"cosine", 64, 3, 2, "mean_abs_cos@init", 0.1 + 0.2, false, 2000},
      {"cosine", 64, 3, 2, "mean_abs_cos@trained", 0.0, true, 0},
      {"ntk", 1024, 0, 0, "ntk_drift", 1.0 / 3.0, false, 20},
      {"x", 1, 1, 1, "tiny", 4.9e-324, false, 1},
  };
  const std::string text = to_csv(rows);
  EXPECT_EQ(text.substr(0, kCsvHeader.size()), kCsvHeader);
  EXPECT_NE(text.find(",degenerate,"), std::string::npos);
  EXPECT_NE(text.find("0.30000000000000004"), std::string::npos);
  EXPECT_EQ(text.find('\r'), std::string::npos);
  EXPECT_EQ(parse_csv(text, "mem"), rows);

  TempDir dir;
  write_csv(rows, dir.path() / "sub" / "out.csv");
  EXPECT_EQ(read_csv(dir.path() / "sub" / "out.csv"), rows);
}

TEST(Csv, ParseErrorsNameTheLine) {
  const std::string header(kCsvHeader);
  struct Case {
    std::string text;
    std::string where;
  };
  for (const Case& c : std::vector<Case>{
           {"width,seed\n", "f.csv:1: unexpected header"},
           {header + "\ncosine,8,0,1,m,0.5,3\ncosine,8,0,1,m,0.5\n", "f.csv:3: expected 7"},
           {header + "\ncosine,eight,0,1,m,0.5,3\n", "f.csv:2: bad width"},
           {header + "\ncosine,8,0,1,m,nan,3\n", "f.csv:2: bad value"},
           {header + "\ncosine,8,0,1,,0.5,3\n", "f.csv:2: empty identifier"},
       }) {
    try {
      parse_csv(c.text, "f.csv");
      ADD_FAILURE() << c.text;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::format_error);
      EXPECT_NE(std::string(e.what()).find(c.where), std::string::npos) << e.what();
    }
  }
  EXPECT_EQ(kind_of([] { parse_csv("", "e.csv"); }), ErrorKind::format_error);
  EXPECT_TRUE(parse_csv(header + "\n", "h.csv").empty());
}

TEST(Svg, OnePolylinePerGroup) {
  std::vector<MetricsRow> rows;
  for (std::size_t layer : {2u, 3u})
    for (std::size_t w : {8u, 16u, 32u})
      for (std::uint64_t s = 0; s < 3; ++s)
        rows.push_back({"cosine", w, s, layer, "m", 1.0 / static_cast<double>(w * layer + s),
                        false, 1});
  rows.push_back({"cosine", 8, 9, 2, "m", 0.0, true, 0});
  const std::string svg = render_svg(rows, GroupKey::layer, "a < b");
  const std::regex poly("<polyline");
  EXPECT_EQ(std::distance(std::sregex_iterator(svg.begin(), svg.end(), poly),
                          std::sregex_iterator()),
            2);
  EXPECT_NE(svg.find("layer 2"), std::string::npos);
  EXPECT_NE(svg.find("a &lt; b"), std::string::npos);
  EXPECT_EQ(svg.find("a < b"), std::string::npos);
  EXPECT_THROW(render_svg({}, GroupKey::layer, "t"), Error);
}

TEST(TextIo, MissingFileIsIoError) {
  EXPECT_EQ(kind_of([] { read_text("/nonexistent/widenet/file"); }), ErrorKind::io_error);
  EXPECT_EQ(parse_pixel_scaling("standardized"), PixelScaling::standardized);
  EXPECT_EQ(kind_of([] { parse_pixel_scaling("zca"); }), ErrorKind::invalid_argument);
}
