#include "metagrad/harness.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "metagrad/errors.hpp"

namespace metagrad {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

KeyValues parse_key_values(std::istream& in, std::string_view source) {
  KeyValues out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw ConstraintError(fmt::format("{}:{}: expected key=value, got '{}'", source, line_no, body));
    }
    const std::string_view key = trim(body.substr(0, eq));
    if (key.empty()) throw ConstraintError(fmt::format("{}:{}: empty key", source, line_no));
    for (const auto& [k, v] : out) {
      if (k == key) throw ConstraintError(fmt::format("{}:{}: duplicate key '{}'", source, line_no, key));
    }
    out.emplace_back(std::string(key), std::string(trim(body.substr(eq + 1))));
  }
  return out;
}

Settings::Settings(KeyValues defaults) : values_(std::move(defaults)) {}

std::string* Settings::find(std::string_view key) {
  for (auto& [k, v] : values_)
    if (k == key) return &v;
  return nullptr;
}

const std::string* Settings::find(std::string_view key) const {
  for (const auto& [k, v] : values_)
    if (k == key) return &v;
  return nullptr;
}

void Settings::set(std::string_view key, std::string value) {
  std::string* slot = find(key);
  if (slot == nullptr) throw ConstraintError(fmt::format("unknown configuration key '{}'", key));
  *slot = std::move(value);
}

void Settings::merge(const KeyValues& values, std::string_view source) {
  for (const auto& [k, v] : values) {
    if (find(k) == nullptr) throw ConstraintError(fmt::format("{}: unknown configuration key '{}'", source, k));
  }
  for (const auto& [k, v] : values) set(k, v);
}

void Settings::merge_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConstraintError("cannot open config file: " + path);
  merge(parse_key_values(in, path), path);
}

bool Settings::contains(std::string_view key) const { return find(key) != nullptr; }

const std::string& Settings::text(std::string_view key) const {
  const std::string* v = find(key);
  if (v == nullptr) throw ConstraintError(fmt::format("unknown configuration key '{}'", key));
  return *v;
}

double Settings::number(std::string_view key) const {
  const std::string& s = text(key);
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(out))
    throw ConstraintError(fmt::format("{}: expected a number, got '{}'", key, s));
  return out;
}

std::size_t Settings::count(std::string_view key) const {
  const std::string& s = text(key);
  std::size_t out = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ConstraintError(fmt::format("{}: expected a nonnegative integer, got '{}'", key, s));
  return out;
}

std::uint64_t Settings::seed(std::string_view key) const {
  const std::string& s = text(key);
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ConstraintError(fmt::format("{}: expected an unsigned 64-bit integer, got '{}'", key, s));
  return out;
}

bool Settings::flag(std::string_view key) const {
  const std::string& s = text(key);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConstraintError(fmt::format("{}: expected true or false, got '{}'", key, s));
}

std::vector<std::string> Settings::list(std::string_view key) const {
  std::vector<std::string> out;
  std::string_view rest = text(key);
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const std::string_view item = trim(rest.substr(0, comma));
    if (!item.empty()) out.emplace_back(item);
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return out;
}

void Settings::write(std::ostream& os) const {
  for (const auto& [k, v] : values_) os << k << '=' << v << '\n';
}

namespace {

std::string escape_xml(std::string_view s) {
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

constexpr std::array<const char*, 8> kPalette{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                              "#9467bd", "#8c564b", "#e377c2", "#17becf"};

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void widen_if_flat() {
    if (!(lo < hi)) {
      if (!std::isfinite(lo)) lo = hi = 0.0;
      lo -= 0.5;
      hi += 0.5;
    }
  }
};

}  // namespace

void write_svg(std::ostream& os, const LineChart& chart) {
  constexpr double width = 640, height = 420;
  constexpr double left = 80, right = 170, top = 40, bottom = 60;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;

  double floor_value = std::numeric_limits<double>::infinity();
  if (chart.log_y) {
    for (const auto& s : chart.series)
      for (double y : s.y)
        if (y > 0.0 && std::isfinite(y)) floor_value = std::min(floor_value, y);
    floor_value = std::isfinite(floor_value) ? floor_value / 10.0 : 1e-16;
  }
  const auto map_y = [&](double y) {
    if (!chart.log_y) return y;
    return std::log10(y > 0.0 ? y : floor_value);
  };

  Range xr, yr;
  for (const auto& s : chart.series) {
    for (double x : s.x) xr.add(x);
    for (double y : s.y) yr.add(map_y(y));
  }
  xr.widen_if_flat();
  yr.widen_if_flat();
  const auto px = [&](double x) { return left + (x - xr.lo) / (xr.hi - xr.lo) * plot_w; };
  const auto py = [&](double y) { return top + (yr.hi - map_y(y)) / (yr.hi - yr.lo) * plot_h; };
  const auto py_mapped = [&](double m) { return top + (yr.hi - m) / (yr.hi - yr.lo) * plot_h; };

  fmt::print(os,
             "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
             "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" "
             "viewBox=\"0 0 {} {}\">\n",
             width, height, width, height);
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  fmt::print(os, "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">{}</text>\n",
             left + plot_w / 2, escape_xml(chart.title));
  fmt::print(os,
             "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
             left, top, plot_w, plot_h);

  constexpr int ticks = 5;
  for (int i = 0; i <= ticks; ++i) {
    const double fx = xr.lo + (xr.hi - xr.lo) * i / ticks;
    fmt::print(os, "<text x=\"{:.2f}\" y=\"{}\" text-anchor=\"middle\" font-size=\"11\">{:.3g}</text>\n",
               px(fx), top + plot_h + 16, fx);
    const double fy = yr.lo + (yr.hi - yr.lo) * i / ticks;
    const double label = chart.log_y ? std::pow(10.0, fy) : fy;
    fmt::print(os, "<text x=\"{}\" y=\"{:.2f}\" text-anchor=\"end\" font-size=\"11\">{:.3g}</text>\n",
               left - 6, py_mapped(fy) + 4, label);
  }
  fmt::print(os, "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"13\">{}</text>\n",
             left + plot_w / 2, height - 16, escape_xml(chart.x_label));
  fmt::print(os,
             "<text x=\"18\" y=\"{}\" text-anchor=\"middle\" font-size=\"13\" "
             "transform=\"rotate(-90 18 {})\">{}</text>\n",
             top + plot_h / 2, top + plot_h / 2,
             escape_xml(chart.y_label + (chart.log_y ? " (log scale)" : "")));

  for (std::size_t i = 0; i < chart.series.size(); ++i) {
    const auto& s = chart.series[i];
    const char* color = kPalette[i % kPalette.size()];
    std::string points;
    for (std::size_t j = 0; j < std::min(s.x.size(), s.y.size()); ++j) {
      if (!std::isfinite(s.y[j])) continue;
      if (!points.empty()) points += ' ';
      points += fmt::format("{:.2f},{:.2f}", px(s.x[j]), py(s.y[j]));
    }
    fmt::print(os, "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"2\" points=\"{}\"/>\n",
               color, points);
    const double ly = top + 14 + 18 * static_cast<double>(i);
    fmt::print(os,
               "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-width=\"2\"/>\n",
               width - right + 12, ly, width - right + 36, ly, color);
    fmt::print(os, "<text x=\"{}\" y=\"{}\" font-size=\"12\">{}</text>\n", width - right + 42,
               ly + 4, escape_xml(s.name));
  }
  os << "</svg>\n";
}

}  // namespace metagrad
