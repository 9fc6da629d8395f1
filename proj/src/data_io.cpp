#include "widenet/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace widenet {

namespace fs = std::filesystem;

PixelScaling parse_pixel_scaling(std::string_view name) {
  if (name == "unit") return PixelScaling::unit;
  if (name == "standardized") return PixelScaling::standardized;
  fail(ErrorKind::invalid_argument, "unknown pixel scaling '" + std::string(name) + "'");
}

std::string_view to_string(PixelScaling scaling) {
  return scaling == PixelScaling::unit ? "unit" : "standardized";
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io_error, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) fail(ErrorKind::io_error, "read failed for " + path.string());
  return ss.str();
}

void write_text(const fs::path& path, std::string_view text) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::io_error, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.flush();
  if (!out) fail(ErrorKind::io_error, "write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// CIFAR-10

namespace {

std::vector<fs::path> batch_files(const fs::path& path) {
  std::error_code ec;
  if (!fs::exists(path, ec)) fail(ErrorKind::io_error, "CIFAR-10 data not found at " + path.string());
  if (!fs::is_directory(path, ec)) return {path};
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(path)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && entry.path().extension() == ".bin" &&
        (name.rfind("data_batch_", 0) == 0 || name == "test_batch.bin"))
      files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) fail(ErrorKind::io_error, "no CIFAR-10 batch files in " + path.string());
  return files;
}

}  // namespace

Dataset load_cifar10(const fs::path& path, std::size_t n, Rng& rng,
                     const CifarSelection& selection) {
  require(n >= 1, "n must be positive");
  struct Candidate {
    std::size_t file;
    std::size_t offset;
    int label;
  };
  std::vector<std::string> blobs;
  std::vector<Candidate> pool;
  const std::vector<fs::path> files = batch_files(path);
  for (std::size_t f = 0; f < files.size(); ++f) {
    blobs.push_back(read_text(files[f]));
    const std::string& blob = blobs.back();
    if (blob.size() % kCifarRecordBytes != 0) {
      const std::size_t offset = blob.size() - blob.size() % kCifarRecordBytes;
      fail(ErrorKind::format_error, files[f].string() + ": truncated record at byte offset " +
                                        std::to_string(offset));
    }
    for (std::size_t off = 0; off < blob.size(); off += kCifarRecordBytes) {
      const int label = static_cast<unsigned char>(blob[off]);
      if (label > 9)
        fail(ErrorKind::format_error, files[f].string() + ": label " + std::to_string(label) +
                                          " out of range at byte offset " + std::to_string(off));
      if (label == selection.positive_class || label == selection.negative_class)
        pool.push_back({f, off, label});
    }
  }
  if (pool.size() < n)
    fail(ErrorKind::insufficient_data, "only " + std::to_string(pool.size()) +
                                           " records of the selected classes, need " +
                                           std::to_string(n));

  for (std::size_t i = 0; i < n; ++i) std::swap(pool[i], pool[i + rng.index(pool.size() - i)]);

  Dataset ds;
  ds.inputs.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(kCifarPixels));
  ds.labels.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const Candidate& c = pool[i];
    const auto* px = reinterpret_cast<const unsigned char*>(blobs[c.file].data() + c.offset + 1);
    const auto row = static_cast<Eigen::Index>(i);
    for (std::size_t k = 0; k < kCifarPixels; ++k)
      ds.inputs(row, static_cast<Eigen::Index>(k)) = px[k] / 255.0;
    ds.labels(row) = c.label == selection.positive_class ? 1.0 : -1.0;
  }

  if (selection.scaling == PixelScaling::standardized) {
    constexpr Eigen::Index kPlane = 1024;
    for (Eigen::Index ch = 0; ch < 3; ++ch) {
      auto block = ds.inputs.middleCols(ch * kPlane, kPlane);
      const double mean = block.mean();
      const double var = (block.array() - mean).square().mean();
      const double sd = var > 0.0 ? std::sqrt(var) : 1.0;
      block = ((block.array() - mean) / sd).matrix();
    }
  }
  ds.provenance = "cifar10:" + path.string() + " scaling=" + std::string(to_string(selection.scaling));
  return ds;
}

Dataset synthetic_dataset(std::size_t d, std::size_t n, Rng& rng) {
  require(d >= 1 && n >= 1, "synthetic dataset needs d >= 1 and n >= 1");
  Dataset ds;
  ds.inputs.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  ds.labels.resize(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
    ds.inputs.row(i) = sphere_sample(d, 1.0, rng).transpose();
    ds.labels(i) = rng.rademacher();
  }
  ds.provenance = "synthetic:d=" + std::to_string(d);
  return ds;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

void check_field(const std::string& s, const char* what) {
  require(!s.empty() && s.find_first_of(",\r\n") == std::string::npos,
          std::string(what) + " must be non-empty and free of commas and newlines");
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class T>
bool parse_uint(std::string_view s, T& out) {
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size() && !s.empty();
}

}  // namespace

std::string to_csv(const std::vector<MetricsRow>& rows) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const MetricsRow& r : rows) {
    check_field(r.experiment_id, "experiment_id");
    check_field(r.metric, "metric");
    if (!r.degenerate)
      require(std::isfinite(r.value), "metric " + r.metric + " is not finite; tag it degenerate");
    out += r.experiment_id + ',' + std::to_string(r.width) + ',' + std::to_string(r.seed) + ',' +
           std::to_string(r.layer) + ',' + r.metric + ',' +
           (r.degenerate ? std::string("degenerate") : format_double(r.value)) + ',' +
           std::to_string(r.n_samples) + '\n';
  }
  return out;
}

void write_csv(const std::vector<MetricsRow>& rows, const fs::path& path) {
  write_text(path, to_csv(rows));
}

std::vector<MetricsRow> parse_csv(std::string_view text, const std::string& source) {
  std::vector<MetricsRow> rows;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  auto bad = [&](const std::string& why) {
    fail(ErrorKind::format_error, source + ":" + std::to_string(line_no) + ": " + why);
  };
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line_no == 1) {
      if (line != kCsvHeader) bad("unexpected header");
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string_view> f;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      f.push_back(line.substr(start, comma == std::string_view::npos ? comma : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (f.size() != 7) bad("expected 7 fields, found " + std::to_string(f.size()));
    MetricsRow r;
    r.experiment_id = std::string(f[0]);
    r.metric = std::string(f[4]);
    if (r.experiment_id.empty() || r.metric.empty()) bad("empty identifier");
    if (!parse_uint(f[1], r.width)) bad("bad width '" + std::string(f[1]) + "'");
    if (!parse_uint(f[2], r.seed)) bad("bad seed '" + std::string(f[2]) + "'");
    if (!parse_uint(f[3], r.layer)) bad("bad layer '" + std::string(f[3]) + "'");
    if (!parse_uint(f[6], r.n_samples)) bad("bad n_samples '" + std::string(f[6]) + "'");
    if (f[5] == "degenerate") {
      r.degenerate = true;
    } else {
      auto [p, ec] = std::from_chars(f[5].data(), f[5].data() + f[5].size(), r.value);
      if (ec != std::errc() || p != f[5].data() + f[5].size() || !std::isfinite(r.value))
        bad("bad value '" + std::string(f[5]) + "'");
    }
    rows.push_back(std::move(r));
  }
  if (line_no == 0) fail(ErrorKind::format_error, source + ": empty file (no header)");
  return rows;
}

std::vector<MetricsRow> read_csv(const fs::path& path) {
  return parse_csv(read_text(path), path.string());
}

// ---------------------------------------------------------------------------
// SVG

namespace {

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string group_name(const MetricsRow& r, GroupKey g) {
  switch (g) {
    case GroupKey::layer: return "layer " + std::to_string(r.layer);
    case GroupKey::metric: return r.metric;
    case GroupKey::experiment: return r.experiment_id;
  }
  return "";
}

}  // namespace

std::string render_svg(const std::vector<MetricsRow>& rows, GroupKey group,
                       const std::string& title) {
  require(!rows.empty(), "cannot plot an empty row set");
  std::map<std::string, std::map<std::size_t, std::vector<double>>> series;
  for (const MetricsRow& r : rows) {
    if (r.degenerate || !(r.value > 0.0) || r.width == 0) continue;
    series[group_name(r, group)][r.width].push_back(r.value);
  }

  constexpr double kW = 640, kH = 420, kLeft = 70, kRight = 150, kTop = 40, kBottom = 50;
  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << kW
      << "\" height=\"" << kH << "\" viewBox=\"0 0 " << kW << ' ' << kH << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kW / 2 << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      << "font-size=\"14\">" << xml_escape(title) << "</text>\n";

  double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
  std::set<std::size_t> widths;
  for (const auto& [name, by_width] : series)
    for (const auto& [w, vals] : by_width) {
      widths.insert(w);
      xmin = std::min(xmin, std::log10(static_cast<double>(w)));
      xmax = std::max(xmax, std::log10(static_cast<double>(w)));
      for (double v : vals) {
        ymin = std::min(ymin, std::log10(v));
        ymax = std::max(ymax, std::log10(v));
      }
    }
  if (series.empty()) {
    svg << "<text x=\"" << kW / 2 << "\" y=\"" << kH / 2
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\">no positive values</text>\n"
        << "</svg>\n";
    return svg.str();
  }
  if (xmax - xmin < 1e-9) { xmin -= 0.5; xmax += 0.5; }
  if (ymax - ymin < 1e-9) { ymin -= 0.5; ymax += 0.5; }
  const double pad_y = 0.05 * (ymax - ymin);
  ymin -= pad_y;
  ymax += pad_y;

  const double pw = kW - kLeft - kRight, ph = kH - kTop - kBottom;
  auto px = [&](double lx) { return kLeft + (lx - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double ly) { return kTop + (ymax - ly) / (ymax - ymin) * ph; };

  svg << "<g stroke=\"black\" fill=\"none\"><rect x=\"" << kLeft << "\" y=\"" << kTop
      << "\" width=\"" << pw << "\" height=\"" << ph << "\"/></g>\n";
  svg << "<g font-family=\"sans-serif\" font-size=\"10\">\n";
  for (std::size_t w : widths) {
    const double x = px(std::log10(static_cast<double>(w)));
    svg << "<line x1=\"" << num(x) << "\" y1=\"" << kTop + ph << "\" x2=\"" << num(x)
        << "\" y2=\"" << kTop + ph + 4 << "\" stroke=\"black\"/>"
        << "<text x=\"" << num(x) << "\" y=\"" << kTop + ph + 16
        << "\" text-anchor=\"middle\">" << w << "</text>\n";
  }
  for (int k = 0; k <= 4; ++k) {
    const double ly = ymin + (ymax - ymin) * k / 4.0;
    svg << "<line x1=\"" << kLeft - 4 << "\" y1=\"" << num(py(ly)) << "\" x2=\"" << kLeft
        << "\" y2=\"" << num(py(ly)) << "\" stroke=\"black\"/>"
        << "<text x=\"" << kLeft - 6 << "\" y=\"" << num(py(ly) + 3)
        << "\" text-anchor=\"end\">" << tick_label(std::pow(10.0, ly)) << "</text>\n";
  }
  svg << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kH - 10
      << "\" text-anchor=\"middle\">width (log scale)</text>\n"
      << "<text x=\"16\" y=\"" << kTop + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << kTop + ph / 2 << ")\">value (log scale)</text>\n</g>\n";

  static constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                            "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};
  std::size_t gi = 0;
  for (const auto& [name, by_width] : series) {
    const char* color = kColors[gi % std::size(kColors)];
    std::ostringstream line;
    for (const auto& [w, vals] : by_width) {
      const double x = px(std::log10(static_cast<double>(w)));
      for (double v : vals)
        svg << "<circle cx=\"" << num(x) << "\" cy=\"" << num(py(std::log10(v)))
            << "\" r=\"2\" fill=\"" << color << "\" fill-opacity=\"0.35\"/>\n";
      line << num(x) << ',' << num(py(std::log10(median(vals)))) << ' ';
    }
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\""
        << line.str() << "\"/>\n";
    const double ly = kTop + 14.0 * static_cast<double>(gi) + 6.0;
    svg << "<line x1=\"" << kLeft + pw + 10 << "\" y1=\"" << ly << "\" x2=\"" << kLeft + pw + 28
        << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>"
        << "<text x=\"" << kLeft + pw + 32 << "\" y=\"" << ly + 4
        << "\" font-family=\"sans-serif\" font-size=\"10\">" << xml_escape(name) << "</text>\n";
    ++gi;
  }
  svg << "</svg>\n";
  return svg.str();
}

void emit_svg_plot(const std::vector<MetricsRow>& rows, const fs::path& path, GroupKey group,
                   const std::string& title) {
  write_text(path, render_svg(rows, group, title));
}

}  // namespace widenet
