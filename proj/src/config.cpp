#include "widenet/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

namespace widenet {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool valid_name(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '.' && c != '-')
      return false;
  return true;
}

[[noreturn]] void bad_value(const std::string& what, std::string_view text, const char* expected) {
  fail(ErrorKind::usage_error,
       what + ": expected " + expected + ", got '" + std::string(text) + "'");
}

std::vector<std::string_view> split_commas(std::string_view text) {
  std::vector<std::string_view> out;
  while (true) {
    const auto comma = text.find(',');
    out.push_back(trim(text.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return out;
}

}  // namespace

Config Config::parse(std::string_view text, const std::string& source) {
  Config cfg;
  std::string section;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text.remove_prefix(eol == std::string_view::npos ? text.size() : eol + 1);
    ++line_no;
    auto error = [&](const std::string& why) {
      fail(ErrorKind::usage_error, source + ":" + std::to_string(line_no) + ": " + why);
    };

    line = trim(line);
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') error("unterminated section header");
      const std::string_view name = trim(line.substr(1, line.size() - 2));
      if (!valid_name(name)) error("bad section name '" + std::string(name) + "'");
      section = name;
      cfg.sections_[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) error("expected 'key = value'");
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    if (!valid_name(key)) error("bad key '" + std::string(key) + "'");
    if (section.empty()) error("key '" + std::string(key) + "' outside any section");
    auto [it, inserted] = cfg.sections_[section].emplace(key, value);
    if (!inserted) error("duplicate key '" + std::string(key) + "' in [" + section + "]");
  }
  return cfg;
}

Config Config::load(const std::filesystem::path& path) {
  return parse(read_text(path), path.string());
}

void Config::apply_override(std::string_view assignment) {
  const auto eq = assignment.find('=');
  const std::string_view lhs = trim(assignment.substr(0, eq));
  const auto dot = lhs.rfind('.');
  if (eq == std::string_view::npos || dot == std::string_view::npos || dot == 0 ||
      dot + 1 == lhs.size())
    fail(ErrorKind::usage_error,
         "override '" + std::string(assignment) + "' is not of the form section.key=value");
  set(std::string(lhs.substr(0, dot)), std::string(lhs.substr(dot + 1)),
      std::string(trim(assignment.substr(eq + 1))));
}

void Config::set(const std::string& section, const std::string& key, std::string value) {
  if (!valid_name(section) || !valid_name(key))
    fail(ErrorKind::usage_error, "bad config name '" + section + "." + key + "'");
  if (value.find('\n') != std::string::npos)
    fail(ErrorKind::usage_error, "config values cannot span lines");
  sections_[section][key] = std::move(value);
}

void Config::erase(const std::string& section, const std::string& key) {
  const auto s = sections_.find(section);
  if (s == sections_.end()) return;
  s->second.erase(key);
  if (s->second.empty()) sections_.erase(s);
}

void Config::erase_section(const std::string& section) { sections_.erase(section); }

std::optional<std::string> Config::get(const std::string& section, const std::string& key) const {
  const auto s = sections_.find(section);
  if (s == sections_.end()) return std::nullopt;
  const auto k = s->second.find(key);
  if (k == s->second.end()) return std::nullopt;
  return k->second;
}

std::string Config::canonical() const {
  std::string out;
  for (const auto& [name, keys] : sections_) {
    if (!out.empty()) out += '\n';
    out += "[" + name + "]\n";
    for (const auto& [k, v] : keys) out += k + " = " + v + "\n";
  }
  return out;
}

std::uint64_t Config::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

double parse_double(std::string_view text, const std::string& what) {
  text = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v))
    bad_value(what, text, "a finite number");
  return v;
}

std::uint64_t parse_uint(std::string_view text, const std::string& what) {
  text = trim(text);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size())
    bad_value(what, text, "a non-negative integer");
  return v;
}

bool parse_bool(std::string_view text, const std::string& what) {
  text = trim(text);
  if (text == "true" || text == "yes" || text == "on" || text == "1") return true;
  if (text == "false" || text == "no" || text == "off" || text == "0") return false;
  bad_value(what, text, "true or false");
}

std::vector<std::uint64_t> parse_uint_list(std::string_view text, const std::string& what) {
  std::vector<std::uint64_t> out;
  if (trim(text).empty()) return out;
  for (std::string_view item : split_commas(text)) {
    const auto dots = item.find("..");
    if (dots == std::string_view::npos) {
      out.push_back(parse_uint(item, what));
      continue;
    }
    const std::uint64_t lo = parse_uint(item.substr(0, dots), what);
    const std::uint64_t hi = parse_uint(item.substr(dots + 2), what);
    if (hi < lo || hi - lo > 1'000'000) bad_value(what, item, "a range lo..hi with lo <= hi");
    for (std::uint64_t v = lo; v <= hi; ++v) out.push_back(v);
  }
  return out;
}

namespace {

// Built-in desk-scale settings, one block per sweep kind.
constexpr std::string_view kDefaults = R"(
[run]
seed = 0
jobs = 1

[data]
source = synthetic
n = 20
dim = 64
pixels = unit
fallback = true

[sweep]
seeds = 0..9
activation = tanh
architecture = mlp
radius = 1
steps = 200
checkpoint_every = 50
probes = 200
beta_probes = 200
max_pairs = 2000
train = true
weights = rademacher

[sweep.cosine]
widths = 8,16,32,64,128,256,512,1024
depth = 4

[sweep.bottleneck]
widths = 4,8,16,32,64,128,256
outer_width = 256
depth = 4

[sweep.remainder]
widths = 64,256,1024,4096
depth = 2
dim = 16

[sweep.ntk]
widths = 64,256,1024
depth = 3

[sweep.crossterm]
widths = 64,128,256,512,1024
depth = 3
dim = 16

[sweep.constancy]
widths = 64,256,1024,2048
depth = 2
dim = 16
probes = 100

[sweep.gram]
widths = 64,128,256,512,1024,2048
depth = 4
dim = 16
)";

class Lookup {
 public:
  Lookup(const Config& cfg, SweepKind kind)
      : cfg_(cfg), own_("sweep." + std::string(to_string(kind))) {}

  std::optional<std::string> find(const std::string& key, bool data_key = false) const {
    if (auto v = cfg_.get(own_, key)) return v;
    if (auto v = cfg_.get("sweep", key)) return v;
    if (data_key) return cfg_.get("data", key);
    return std::nullopt;
  }

  std::string where(const std::string& key) const { return own_ + "." + key; }

  template <class T, class Parse>
  void read(const std::string& key, T& out, Parse parse, bool data_key = false) const {
    if (auto v = find(key, data_key)) out = parse(*v, where(key));
  }

 private:
  const Config& cfg_;
  std::string own_;
};

template <class Enum, class Parser>
auto enum_reader(Parser parser) {
  return [parser](const std::string& text, const std::string& what) -> Enum {
    try {
      return parser(text);
    } catch (const Error& e) {
      const ErrorKind kind =
          e.kind() == ErrorKind::unsupported_activation ? e.kind() : ErrorKind::usage_error;
      fail(kind, what + ": " + e.what());
    }
  };
}

std::size_t as_size(const std::string& t, const std::string& w) {
  return static_cast<std::size_t>(parse_uint(t, w));
}

}  // namespace

Config default_config() { return Config::parse(kDefaults, "<defaults>"); }

SweepConfig sweep_config(const Config& config, SweepKind kind, std::uint64_t seed) {
  // Values from `config` win over the defaults key by key.
  Config merged = default_config();
  for (const auto& [section, keys] : config.sections())
    for (const auto& [k, v] : keys) merged.set(section, k, v);

  const Lookup in(merged, kind);
  SweepConfig c;
  c.kind = kind;
  c.experiment_id = std::string(to_string(kind));
  in.read("id", c.experiment_id, [](const std::string& t, const std::string&) { return t; });

  std::vector<std::uint64_t> widths;
  in.read("widths", widths, parse_uint_list);
  c.widths.assign(widths.begin(), widths.end());
  in.read("seeds", c.seeds, parse_uint_list);
  for (auto& s : c.seeds) s += seed;

  in.read("depth", c.depth, as_size);
  in.read("activation", c.activation, enum_reader<Activation>(parse_activation));
  in.read("architecture", c.architecture, enum_reader<Architecture>(parse_architecture));
  in.read("radius", c.radius, parse_double);
  if (auto v = in.find("lr"); v && *v != "auto") c.lr = parse_double(*v, in.where("lr"));
  in.read("steps", c.steps, as_size);
  in.read("checkpoint_every", c.checkpoint_every, as_size);
  in.read("probes", c.probes, as_size);
  in.read("beta_probes", c.beta_probes, as_size);
  in.read("max_pairs", c.max_pairs, as_size);
  in.read("outer_width", c.outer_width, as_size);
  in.read("train", c.train, parse_bool);
  in.read("weights", c.weights, enum_reader<WeightRule>(parse_weight_rule));
  if (auto v = merged.get("run", "jobs")) c.jobs = as_size(*v, "run.jobs");

  if (auto v = in.find("source", true)) {
    if (*v == "synthetic") {
      c.dataset.source = DataSource::synthetic;
    } else if (*v == "cifar10") {
      c.dataset.source = DataSource::cifar10;
    } else {
      fail(ErrorKind::usage_error, in.where("source") + ": expected synthetic or cifar10");
    }
  }
  if (auto v = in.find("path", true)) c.dataset.path = *v;
  in.read("n", c.dataset.n, as_size, true);
  in.read("dim", c.dataset.dim, as_size, true);
  in.read("pixels", c.dataset.pixels, enum_reader<PixelScaling>(parse_pixel_scaling), true);
  in.read("fallback", c.dataset.fallback_synthetic, parse_bool, true);

  try {
    c.validate();
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::invalid_argument) throw;
    fail(ErrorKind::usage_error, "sweep." + std::string(to_string(kind)) + ": " + e.what());
  }
  return c;
}

}  // namespace widenet
