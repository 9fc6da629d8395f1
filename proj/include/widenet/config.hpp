#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "widenet/experiments.hpp"

namespace widenet {

// Sectioned key-value configuration.
//
//   # comment            ; also a comment
//   [section]
//   key = value
//
// Keys and section names are [A-Za-z0-9_.-]+. A key outside any section, a
// duplicate key or a malformed line is a usage_error naming the line. Lists
// are comma separated; integer lists also accept inclusive ranges "a..b".
class Config {
 public:
  using Section = std::map<std::string, std::string>;

  static Config parse(std::string_view text, const std::string& source = "<config>");
  static Config load(const std::filesystem::path& path);

  /// "section.key=value"; the last dot separates section from key.
  void apply_override(std::string_view assignment);
  void set(const std::string& section, const std::string& key, std::string value);
  void erase(const std::string& section, const std::string& key);
  void erase_section(const std::string& section);

  std::optional<std::string> get(const std::string& section, const std::string& key) const;
  const std::map<std::string, Section>& sections() const { return sections_; }

  /// Sorted sections and keys, one "key = value" per line. parse(canonical())
  /// gives back an equal Config.
  std::string canonical() const;
  /// 64-bit FNV-1a of canonical().
  std::uint64_t hash() const;

  bool operator==(const Config&) const = default;

 private:
  std::map<std::string, Section> sections_;
};

/// Typed readers; a malformed value is a usage_error naming section.key.
double parse_double(std::string_view text, const std::string& what);
std::uint64_t parse_uint(std::string_view text, const std::string& what);
bool parse_bool(std::string_view text, const std::string& what);
std::vector<std::uint64_t> parse_uint_list(std::string_view text, const std::string& what);

/// Sweep settings for `kind`. Each key is looked up in [sweep.<kind>], then
/// [sweep], then (for dataset keys) [data], then the built-in desk default.
/// Seeds are offset by `seed`.
SweepConfig sweep_config(const Config& config, SweepKind kind, std::uint64_t seed = 0);

/// The desk-scale configuration used when no --config is given.
Config default_config();

}  // namespace widenet
