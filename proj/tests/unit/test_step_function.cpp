#include <cmath>
#include <limits>
#include <sstream>

#include <gtest/gtest.h>

#include "lmpsh/errors.hpp"
#include "lmpsh/step_function.hpp"

using namespace lmpsh;

TEST(StepFunction, RightContinuousEvaluation) {
  const StepFunction f(1.0, {1.0, 2.0}, {0.5, 0.25});
  EXPECT_EQ(f(0.0), 1.0);
  EXPECT_EQ(f(0.999), 1.0);
  EXPECT_EQ(f(1.0), 0.5);
  EXPECT_EQ(f(1.5), 0.5);
  EXPECT_EQ(f(2.0), 0.25);
  EXPECT_EQ(f(100.0), 0.25);
  EXPECT_EQ(f.at_minus(1.0), 1.0);
  EXPECT_EQ(f.at_minus(2.0), 0.5);
  EXPECT_EQ(f.at_minus(2.5), 0.25);
  EXPECT_TRUE(f.is_nonincreasing());
  EXPECT_FALSE(f.is_nondecreasing());
  EXPECT_EQ(f.last_value(), 0.25);
}

TEST(StepFunction, RejectsUnorderedJumps) {
  EXPECT_THROW(StepFunction(0.0, {2.0, 1.0}, {0.1, 0.2}), DataError);
  EXPECT_THROW(StepFunction(0.0, {1.0, 1.0}, {0.1, 0.2}), DataError);
  EXPECT_THROW(StepFunction(0.0, {1.0}, {0.1, 0.2}), DataError);
}

TEST(StepFunction, CsvRoundTrip) {
  const StepFunction f(0.0, {0.3, 1.0 / 3.0, 7.25}, {0.1, 0.2, 1.0 / 7.0});
  std::stringstream ss;
  f.write_csv(ss);
  EXPECT_EQ(StepFunction::read_csv(ss), f);
}

TEST(FormatDouble, ShortestRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456.789, -2.5}) EXPECT_EQ(parse_double(format_double(v)), v);
  EXPECT_EQ(format_double(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_TRUE(std::isnan(parse_double("nan")));
  EXPECT_THROW(parse_double("1.5x"), DataError);
  EXPECT_THROW(parse_double(""), DataError);
}
