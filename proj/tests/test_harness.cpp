#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "metagrad/errors.hpp"
#include "metagrad/harness.hpp"
#include "xml_check.hpp"

using namespace metagrad;
using metagrad::testing::count_occurrences;
using metagrad::testing::xml_well_formed;

namespace {

KeyValues parse(const std::string& text) {
  std::istringstream in(text);
  return parse_key_values(in, "test.cfg");
}

Settings sample_settings() {
  return Settings({{"K", "5"}, {"alpha", "0.25"}, {"family", "quadratic"}, {"seed", "0"},
                   {"rescale-alpha", "false"}, {"estimator", "full"}});
}

}  // namespace

TEST(KeyValueParser, TrimsAndSkipsComments) {
  const auto kv = parse("# header\n\n  K = 7 \nalpha=0.5\n   # indented comment\nfamily =sinusoid\n");
  ASSERT_EQ(kv.size(), 3u);
  EXPECT_EQ(kv[0], (std::pair<std::string, std::string>{"K", "7"}));
  EXPECT_EQ(kv[1].second, "0.5");
  EXPECT_EQ(kv[2].second, "sinusoid");
  EXPECT_EQ(parse("note=a=b\n")[0].second, "a=b");
  EXPECT_TRUE(parse("").empty());
}

TEST(KeyValueParser, ErrorsNameSourceAndLine) {
  try {
    parse("K=5\nbogus line\n");
    FAIL() << "expected a parse error";
  } catch (const ConstraintError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("test.cfg"), std::string::npos) << msg;
    EXPECT_NE(msg.find('2'), std::string::npos) << msg;
  }
  EXPECT_THROW(parse("K=5\nK=6\n"), ConstraintError);
  EXPECT_THROW(parse("=5\n"), ConstraintError);
}

TEST(Settings, LayersAndTypedAccess) {
  Settings s = sample_settings();
  s.merge(parse("K=9\nfamily=logistic\n"), "file");
  s.set("K", "11");
  EXPECT_EQ(s.count("K"), 11u);
  EXPECT_EQ(s.text("family"), "logistic");
  EXPECT_DOUBLE_EQ(s.number("alpha"), 0.25);
  EXPECT_EQ(s.seed("seed"), 0u);
  EXPECT_FALSE(s.flag("rescale-alpha"));
  for (const char* yes : {"true", "1", "yes", "on"}) {
    s.set("rescale-alpha", yes);
    EXPECT_TRUE(s.flag("rescale-alpha"));
  }
  s.set("estimator", "full, binom,,trunc");
  EXPECT_EQ(s.list("estimator"), (std::vector<std::string>{"full", "binom", "trunc"}));
  EXPECT_TRUE(s.contains("alpha"));
  EXPECT_FALSE(s.contains("beta"));
}

TEST(Settings, RejectsUnknownKeysAndBadValues) {
  Settings s = sample_settings();
  EXPECT_THROW(s.set("beta", "1"), ConstraintError);
  EXPECT_THROW(s.merge(parse("colour=red\n"), "file"), ConstraintError);
  s.set("K", "five");
  EXPECT_THROW(s.count("K"), ConstraintError);
  s.set("K", "-3");
  EXPECT_THROW(s.count("K"), ConstraintError);
  s.set("K", "2.5");
  EXPECT_THROW(s.count("K"), ConstraintError);
  s.set("alpha", "0.25x");
  EXPECT_THROW(s.number("alpha"), ConstraintError);
  s.set("rescale-alpha", "maybe");
  EXPECT_THROW(s.flag("rescale-alpha"), ConstraintError);
  EXPECT_THROW(s.text("nope"), ConstraintError);
}

TEST(Settings, WriteRoundTripsThroughFile) {
  Settings s = sample_settings();
  s.set("alpha", "0.125");
  const auto path = std::filesystem::temp_directory_path() / "metagrad_settings_roundtrip.cfg";
  {
    std::ofstream os(path);
    s.write(os);
  }
  Settings back = sample_settings();
  back.merge_file(path.string());
  std::ostringstream a, b;
  s.write(a);
  back.write(b);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(a.str().substr(0, a.str().find('\n')), "K=5");
  std::filesystem::remove(path);
  EXPECT_THROW(back.merge_file("/nonexistent/metagrad.cfg"), ConstraintError);
}

TEST(Svg, OnePolylinePerSeriesAndWellFormed) {
  LineChart chart{"Errors <K=5> & more", "L", "error", true, {}};
  chart.series.push_back({"FO", {0, 1, 2}, {1.0, 1.0, 1.0}});
  chart.series.push_back({"Trunc", {0, 1, 2}, {1.0, 0.5, 0.0}});
  chart.series.push_back({"Binom", {0, 1, 2}, {1.0, 1e-3, 0.0}});
  std::ostringstream os;
  write_svg(os, chart);
  const std::string svg = os.str();
  EXPECT_TRUE(xml_well_formed(svg)) << svg;
  EXPECT_EQ(count_occurrences(svg, "<polyline"), 3u);
  EXPECT_NE(svg.find("&lt;K=5&gt; &amp; more"), std::string::npos);
  EXPECT_EQ(svg.find("nan"), std::string::npos);
  EXPECT_EQ(svg.find("inf"), std::string::npos);
}

TEST(Svg, ZeroValuesLandOnLogFloor) {
  LineChart chart{"t", "x", "y", true, {{"s", {0, 1}, {1e-2, 0.0}}}};
  std::ostringstream os;
  write_svg(os, chart);
  const std::string svg = os.str();
  // The zero value maps to the bottom edge of the plot area (y = 420 − 60).
  const auto points = svg.substr(svg.find("points=\"") + 8);
  EXPECT_NE(points.substr(0, points.find('"')).find(",360.00"), std::string::npos) << points;
}

TEST(Svg, HandlesFlatAndEmptySeries) {
  LineChart chart{"flat", "x", "y", false, {{"one", {3}, {2.0}}, {"none", {}, {}}}};
  std::ostringstream os;
  write_svg(os, chart);
  EXPECT_TRUE(xml_well_formed(os.str()));
  EXPECT_EQ(count_occurrences(os.str(), "<polyline"), 2u);
  EXPECT_EQ(os.str().find("nan"), std::string::npos);
}

TEST(XmlCheck, RejectsBrokenDocuments) {
  EXPECT_TRUE(xml_well_formed("<a><b/></a>"));
  EXPECT_FALSE(xml_well_formed("<a><b></a>"));
  EXPECT_FALSE(xml_well_formed("<a>x & y</a>"));
  EXPECT_FALSE(xml_well_formed("<a/><b/>"));
  EXPECT_FALSE(xml_well_formed("<a x=\"1></a>"));
}
