#include <gtest/gtest.h>

#include "expert_spread/rational.hpp"

using expert_spread::Rational;

TEST(Rational, ParsesFractionsAndIntegers) {
  EXPECT_EQ(Rational::parse("2/5"), Rational(2, 5));
  EXPECT_EQ(Rational::parse("4/10"), Rational(2, 5));
  EXPECT_EQ(Rational::parse("-3/6"), Rational(-1, 2));
  EXPECT_EQ(Rational::parse("7"), Rational(7));
  EXPECT_EQ(Rational::parse("0"), Rational(0));
  EXPECT_EQ(Rational::parse("+1/3"), Rational(1, 3));
}

TEST(Rational, RejectsMalformedText) {
  for (const char* bad : {"", "1/0", "1.5", "abc", "1/", "/2", "1/2/3", " 1/2", "1/-2", "0x10"}) {
    EXPECT_THROW(Rational::parse(bad), std::invalid_argument) << bad;
  }
}

TEST(Rational, CanonicalStrings) {
  EXPECT_EQ(Rational(6, 8).str(), "3/4");
  EXPECT_EQ(Rational(4, 2).str(), "2");
  EXPECT_EQ(Rational(3, -9).str(), "-1/3");
  EXPECT_EQ(Rational(0, 5).str(), "0");
}

TEST(Rational, DecimalRendering) {
  EXPECT_EQ(Rational(2, 5).decimal(), "0.4");
  EXPECT_EQ(Rational(1, 3).decimal(), "0.333333333333333");
  EXPECT_EQ(Rational(1).decimal(), "1");
}

TEST(Rational, ArithmeticIsExact) {
  const Rational third(1, 3), sixth(1, 6);
  EXPECT_EQ(third + sixth, Rational(1, 2));
  EXPECT_EQ(third - sixth, sixth);
  EXPECT_EQ(third * sixth, Rational(1, 18));
  EXPECT_EQ(third / sixth, Rational(2));
  EXPECT_EQ(-third, Rational(-1, 3));
  Rational sum;
  for (int i = 0; i < 10; ++i) sum += Rational(1, 10);
  EXPECT_EQ(sum, Rational(1));
}

TEST(Rational, DivisionByZeroThrows) {
  EXPECT_THROW(Rational(1) / Rational(0), std::domain_error);
  EXPECT_THROW(Rational(1, 0), std::invalid_argument);
}

TEST(Rational, OrderingAndHelpers) {
  EXPECT_LT(Rational(1, 3), Rational(1, 2));
  EXPECT_GT(Rational(-1, 3), Rational(-1, 2));
  EXPECT_EQ(expert_spread::abs(Rational(-2, 7)), Rational(2, 7));
  EXPECT_EQ(expert_spread::min(Rational(1, 3), Rational(1, 4)), Rational(1, 4));
  EXPECT_EQ(expert_spread::max(Rational(1, 3), Rational(1, 4)), Rational(1, 3));
  EXPECT_TRUE(Rational(0).is_zero());
  EXPECT_TRUE(Rational(1, 9).is_positive());
  EXPECT_EQ(Rational(-1, 9).sign(), -1);
}
