#include <sstream>

#include <gtest/gtest.h>

#include "lmpsh/errors.hpp"
#include "lmpsh/experiments.hpp"
#include "lmpsh/svg.hpp"

using namespace lmpsh;

TEST(Scenario, Defaults) {
  const Scenario a = default_scenario(1);
  EXPECT_EQ(a.w, 3.0);
  EXPECT_EQ(a.landmarks.size(), 11u);
  EXPECT_EQ(a.landmarks.back(), 5.0);
  const Scenario b = default_scenario(2);
  EXPECT_EQ(b.w, 2.0);
  EXPECT_EQ(b.landmarks.size(), 9u);
  EXPECT_NEAR(b.truth(1.0, 1.0), true_conditional_cif(b.setting2, 1.0, 1.0, 2.0), 1e-15);
  EXPECT_THROW(default_scenario(3), ConfigError);
}

TEST(CurveStudy, SmallRunIsDeterministic) {
  Scenario sc = default_scenario(1);
  sc.landmarks = {0.0, 1.0};
  sc.grid = {0.0, 0.5, 1.0};
  Budget b;
  b.reps = 3;
  b.n = 300;
  b.seed = 4;
  const CurveStudy a = run_curve_study(sc, b);
  b.jobs = 3;
  const CurveStudy c = run_curve_study(sc, b);
  EXPECT_EQ(a.mean, c.mean);
  EXPECT_EQ(a.sd, c.sd);
  std::ostringstream x, y;
  write_curve_csv(x, {a});
  write_curve_csv(y, {c});
  EXPECT_EQ(x.str(), y.str());
  EXPECT_EQ(x.str().rfind("setting,method,z,s,mean,sd,truth,reps,failures\n", 0), 0u);
  EXPECT_FALSE(curve_checks(a).empty());
  EXPECT_NE(curve_svg({a}).find("<svg"), std::string::npos);
}

TEST(Checks, Format) {
  std::ostringstream os;
  write_checks(os, {{"a", true, "x"}, {"b", false, "y"}});
  EXPECT_NE(os.str().find("PASS"), std::string::npos);
  EXPECT_NE(os.str().find("FAIL"), std::string::npos);
}

TEST(Svg, RendersPanelsAndEscapesText) {
  SvgPanel p;
  p.title = "a < b & c";
  p.series.push_back({"line", {0.0, 1.0, 2.0}, {0.1, 0.4, 0.2}, "#ff0000", true});
  p.hlines = {0.0};
  const std::string svg = render_svg({p, p}, 2);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("a &lt; b &amp; c"), std::string::npos);
  EXPECT_NE(svg.find("stroke-dasharray"), std::string::npos);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
}
