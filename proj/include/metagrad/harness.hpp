#pragma once

// CLI plumbing: key=value settings with layered overrides, and static SVG line charts.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace metagrad {

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// Parses `key = value` lines. Blank lines and lines starting with '#' are skipped; anything
/// else without '=' is a ConstraintError naming the source and line.
KeyValues parse_key_values(std::istream& in, std::string_view source);

/// Known keys with their current values, in declaration order. Layers are applied by the caller
/// from lowest to highest precedence (defaults, config file, flags); unknown keys are rejected.
class Settings {
 public:
  explicit Settings(KeyValues defaults);

  void set(std::string_view key, std::string value);
  void merge(const KeyValues& values, std::string_view source);
  void merge_file(const std::string& path);

  bool contains(std::string_view key) const;
  const std::string& text(std::string_view key) const;
  double number(std::string_view key) const;
  std::size_t count(std::string_view key) const;
  std::uint64_t seed(std::string_view key) const;
  bool flag(std::string_view key) const;
  /// Comma-separated list, empty items dropped.
  std::vector<std::string> list(std::string_view key) const;

  /// Resolved configuration, one `key=value` per line, loadable by merge_file.
  void write(std::ostream& os) const;

 private:
  std::string* find(std::string_view key);
  const std::string* find(std::string_view key) const;

  KeyValues values_;
};

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct LineChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;
  std::vector<Series> series;
};

/// Standalone SVG with one <polyline> per series and a legend. On a log axis non-positive
/// values are drawn on the floor, one decade below the smallest positive value.
void write_svg(std::ostream& os, const LineChart& chart);

}  // namespace metagrad
