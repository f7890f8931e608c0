#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "mems4/io.hpp"

using namespace mems4;

namespace {

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

// Balanced tags and exactly one root element after the XML declaration.
bool well_formed(const std::string& xml, std::string& why) {
  std::vector<std::string> stack;
  int roots = 0;
  std::size_t pos = 0;
  while ((pos = xml.find('<', pos)) != std::string::npos) {
    const auto end = xml.find('>', pos);
    if (end == std::string::npos) return why = "unterminated tag", false;
    std::string tag = xml.substr(pos + 1, end - pos - 1);
    pos = end + 1;
    if (tag.empty()) return why = "empty tag", false;
    if (tag.front() == '?') continue;
    if (tag.front() == '/') {
      const std::string name = tag.substr(1);
      if (stack.empty() || stack.back() != name) return why = "mismatched </" + name + ">", false;
      stack.pop_back();
      continue;
    }
    const bool self_closing = tag.back() == '/';
    const std::string name = tag.substr(0, tag.find_first_of(" /"));
    if (stack.empty()) ++roots;
    if (!self_closing) stack.push_back(name);
  }
  if (!stack.empty()) return why = "unclosed <" + stack.back() + ">", false;
  if (roots != 1) return why = std::to_string(roots) + " roots", false;
  return true;
}

}  // namespace

TEST(Format, ShortestRoundTrip) {
  EXPECT_EQ(io::format_double(0.1), "0.1");
  EXPECT_EQ(io::format_double(-2.0), "-2");
  EXPECT_EQ(io::format_double(1e-300), "1e-300");
  for (double x : {0.1, 1.0 / 3.0, -1e-310, 6.02214076e23, std::numeric_limits<double>::max(),
                   std::numeric_limits<double>::denorm_min(), -0.0})
    EXPECT_TRUE(same_bits(io::parse_double(io::format_double(x)), x)) << x;
}

TEST(Format, ParseRejectsGarbage) {
  EXPECT_THROW((void)io::parse_double("1.5x"), Error);
  EXPECT_THROW((void)io::parse_double(""), Error);
  EXPECT_THROW((void)io::parse_double("abc"), Error);
  EXPECT_DOUBLE_EQ(io::parse_double("+2.5"), 2.5);
  EXPECT_DOUBLE_EQ(io::parse_double("1e3"), 1000.0);
}

TEST(Csv, RandomTableRoundTripsBitExactly) {
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<std::uint64_t> bits;
  io::CsvTable t;
  t.header = {"a", "b", "c"};
  for (int i = 0; i < 500; ++i) {
    std::vector<double> row;
    for (int j = 0; j < 3; ++j) {
      double x;
      do {
        const std::uint64_t b = bits(rng);
        std::memcpy(&x, &b, sizeof x);
      } while (!std::isfinite(x));
      row.push_back(x);
    }
    t.add_row(row);
  }
  const std::string text = t.render();
  const auto back = io::CsvTable::parse(text);
  ASSERT_EQ(back.header, t.header);
  ASSERT_EQ(back.rows.size(), t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_TRUE(same_bits(back.rows[i][j], t.rows[i][j]));
  EXPECT_EQ(back.render(), text);
  EXPECT_EQ(text.find('\r'), std::string::npos);
}

TEST(Csv, NanSurvives) {
  io::CsvTable t;
  t.header = {"M"};
  t.add_row({std::numeric_limits<double>::quiet_NaN()});
  EXPECT_TRUE(std::isnan(io::CsvTable::parse(t.render()).rows[0][0]));
}

TEST(Csv, LayoutAndErrors) {
  io::CsvTable t;
  t.header = {"r", "omega"};
  t.add_row({0.5, -0.25});
  EXPECT_EQ(t.render(), "r,omega\n0.5,-0.25\n");
  EXPECT_EQ(t.column("omega"), 1u);
  EXPECT_THROW((void)t.column("x"), Error);
  EXPECT_THROW(t.add_row({1.0}), Error);
  EXPECT_THROW((void)io::CsvTable::parse("a,b\n1\n"), Error);
  EXPECT_THROW((void)io::CsvTable::parse(""), Error);
  EXPECT_EQ(io::CsvTable::parse("a,b\r\n1,2\r\n").rows[0][1], 2.0);
}

TEST(Svg, WellFormedWithFixedViewBox) {
  io::SvgPlot p{"a < b & c", "x", "y", {{"one", {0, 1, 2}, {1, 4, 9}, "#000"}, {"two", {0, 2}, {2, 0}, "#f00"}}};
  const std::string svg = p.render();
  std::string why;
  EXPECT_TRUE(well_formed(svg, why)) << why;
  EXPECT_NE(svg.find("viewBox=\"0 0 800 600\""), std::string::npos);
  EXPECT_NE(svg.find("a &lt; b &amp; c"), std::string::npos);
  EXPECT_EQ(svg.find("href"), std::string::npos);
}

TEST(Svg, DegenerateDataStillRenders) {
  std::string why;
  EXPECT_TRUE(well_formed(io::SvgPlot{"empty", "x", "y", {}}.render(), why)) << why;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  EXPECT_TRUE(well_formed(io::SvgPlot{"flat", "x", "y", {{"s", {1, 1, nan}, {3, 3, 1}}}}.render(), why)) << why;
}

TEST(Svg, TicksAreRound) {
  const auto t = io::detail::nice_ticks(0.0, 1.0);
  ASSERT_FALSE(t.empty());
  EXPECT_DOUBLE_EQ(t.front(), 0.0);
  for (std::size_t i = 1; i < t.size(); ++i) EXPECT_NEAR(t[i] - t[i - 1], 0.2, 1e-12);
}
