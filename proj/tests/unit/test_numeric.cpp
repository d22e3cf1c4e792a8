#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "hiertt/numeric.hpp"

using hiertt::format_number;
using hiertt::parse_number;
using hiertt::round_to;

namespace {

double value(std::string_view s) {
  auto p = parse_number(s);
  EXPECT_TRUE(p.has_value()) << s;
  return p ? p->value : std::nan("");
}

}  // namespace

TEST(NumericGrammar, AcceptsGroupedAndDecorated) {
  EXPECT_EQ(value("1,959"), 1959.0);
  EXPECT_EQ(value("1,234,567.89"), 1234567.89);
  EXPECT_EQ(value("$1,959"), 1959.0);
  EXPECT_EQ(value("\xE2\x82\xAC" "200"), 200.0);
  EXPECT_EQ(value("\xC2\xA3" "1,000"), 1000.0);
  EXPECT_EQ(value("-45"), -45.0);
  EXPECT_EQ(value("+45"), 45.0);
  EXPECT_EQ(value(".5"), 0.5);
  EXPECT_EQ(value("  12  "), 12.0);
  EXPECT_EQ(value("\xC2\xA0" "12"), 12.0);
  EXPECT_EQ(value("-$5"), -5.0);
}

TEST(NumericGrammar, ParenthesesNegate) {
  EXPECT_EQ(value("(45)"), -45.0);
  EXPECT_EQ(value("$(45)"), -45.0);
  EXPECT_EQ(value("($45)"), -45.0);
  EXPECT_EQ(value("(45%)"), -45.0);
  EXPECT_EQ(value("(45)%"), -45.0);
}

TEST(NumericGrammar, PercentIsAHintNotAScale) {
  auto p = parse_number("4.6%");
  ASSERT_TRUE(p);
  EXPECT_EQ(p->value, 4.6);
  EXPECT_EQ(p->unit_hint, "%");
  EXPECT_EQ(parse_number("$5")->unit_hint, "$");
  EXPECT_EQ(parse_number("5")->unit_hint, "");
}

TEST(NumericGrammar, Rejects) {
  for (const char* s : {"", "abc", "1,95", "12,3456", ",123", "1.2.3", "1e3", "%5", "(-45)", "(45%)%", "5.", "--5",
                        "$$5", "1 000", "(45", "45)", "1,959,00", "-", "."}) {
    EXPECT_FALSE(parse_number(s).has_value()) << s;
  }
}

TEST(NumericGrammar, NoNegativeZero) {
  double z = value("-0");
  EXPECT_EQ(z, 0.0);
  EXPECT_FALSE(std::signbit(z));
  EXPECT_FALSE(std::signbit(value("(0)")));
}

TEST(FormatNumber, ShortestFixed) {
  EXPECT_EQ(format_number(1959), "1959");
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(1577.5), "1577.5");
  EXPECT_EQ(format_number(-0.0), "0");
  EXPECT_EQ(format_number(-45), "-45");
  EXPECT_EQ(format_number(45.0 / 979.0), "0.045965270684371805");
}

TEST(FormatNumber, RoundTripsThroughTheGrammar) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 5000; ++i) {
    std::uint64_t bits = rng();
    double x;
    std::memcpy(&x, &bits, sizeof x);
    if (!std::isfinite(x) || std::fabs(x) > 1e15 || std::fabs(x) < 1e-9) continue;
    auto back = parse_number(format_number(x));
    ASSERT_TRUE(back) << format_number(x);
    EXPECT_EQ(back->value, x) << format_number(x);
  }
}

TEST(RoundTo, HalfAwayFromZero) {
  EXPECT_EQ(round_to(2.5, 0), 3.0);
  EXPECT_EQ(round_to(-2.5, 0), -3.0);
  EXPECT_EQ(round_to(1.23456, 4), 1.2346);
  EXPECT_EQ(round_to(0.04596527, 4), 0.046);
  EXPECT_FALSE(std::signbit(round_to(-0.00001, 4)));
}
