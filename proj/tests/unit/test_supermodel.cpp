#include <cmath>

#include <gtest/gtest.h>

#include "lmpsh/errors.hpp"
#include "lmpsh/landmark.hpp"
#include "lmpsh/simulate.hpp"
#include "lmpsh/supermodel.hpp"
#include "test_data.hpp"

using namespace lmpsh;

namespace {

SurvivalDataset sim2(std::size_t n, std::uint64_t seed) {
  Setting2Params p;
  p.censoring.upper = 15.0;
  return sim_setting2(n, p, seed);
}

}  // namespace

TEST(Grid, MakeAndParse) {
  const auto g = make_grid(0.0, 0.1, 1.0);
  ASSERT_EQ(g.size(), 11u);
  EXPECT_EQ(g[3], 0.3);
  EXPECT_EQ(g.back(), 1.0);
  EXPECT_EQ(parse_grid("0:0.5:2"), (std::vector<double>{0.0, 0.5, 1.0, 1.5, 2.0}));
  EXPECT_EQ(parse_grid("1, 2.5,4"), (std::vector<double>{1.0, 2.5, 4.0}));
  EXPECT_THROW(parse_grid("1:0:2"), ConfigError);
  EXPECT_THROW(parse_grid("a"), ConfigError);
  EXPECT_THROW(parse_grid("2,1"), ConfigError);
}

TEST(Basis, LabelsAndNames) {
  EXPECT_EQ(PolyTerm::power(0).label(), "1");
  EXPECT_EQ(PolyTerm::power(1).label(), "s");
  EXPECT_EQ(PolyTerm::power(2).label(), "s^2");
  EXPECT_EQ(PolyTerm::power(2)(3.0), 9.0);
  EXPECT_EQ(BasisSpec::named("quad"), BasisSpec::quadratic());
  EXPECT_THROW(BasisSpec::named("cubic"), ConfigError);
  EXPECT_EQ(parse_variant("cox"), SupermodelVariant::Cox);
  EXPECT_THROW(parse_variant("aft"), ConfigError);
}

TEST(BuildStacked, ColumnsAndLandmarkBlocks) {
  const SurvivalDataset ds = sim2(300, 1);
  const auto grid = make_grid(0.0, 0.5, 2.0);
  const StackedDataset st = build_stacked(ds, grid, 2.0);
  EXPECT_EQ(st.table.covariate_names, (std::vector<std::string>{"Z", "Z*s", "Z*s^2", "s", "s^2"}));
  EXPECT_EQ(st.grid, grid);
  st.table.validate();
  for (std::size_t r = 0; r < st.table.rows(); ++r) {
    const double s = st.table.landmark[r];
    const auto z = st.table.row(r);
    EXPECT_NEAR(z[1], z[0] * s, 1e-15);
    EXPECT_NEAR(z[2], z[0] * s * s, 1e-15);
    EXPECT_EQ(z[3], s);
    EXPECT_GE(st.table.start[r], s);
    EXPECT_LE(st.table.stop[r], ds.max_time());
  }
  const auto rep = st.repeats();
  for (std::size_t c = 0; c < rep.size(); ++c) {
    std::size_t expected = 0;
    for (double s : grid) {
      for (const auto& r : ds.rows()) expected += (r.id == st.table.cluster_ids[c] && r.time > s) ? 1u : 0u;
    }
    EXPECT_EQ(rep[c], expected);
  }
}

TEST(BuildStacked, BaselineTermsMustVanishAtOrigin) {
  const SurvivalDataset ds = sim2(100, 2);
  BasisSpec b = BasisSpec::linear();
  b.g = {PolyTerm{{1.0, 1.0}}};
  EXPECT_THROW(build_stacked(ds, make_grid(0.0, 0.5, 2.0), 2.0, b), ConfigError);
  EXPECT_THROW(build_stacked(ds, make_grid(0.0, 0.5, 2.0), -1.0), ConfigError);
}

TEST(BuildStacked, ParallelBuildIsIdentical) {
  const SurvivalDataset ds = sim2(300, 3);
  StackOptions one, four;
  four.jobs = 4;
  const auto grid = make_grid(0.0, 0.25, 3.0);
  EXPECT_EQ(build_stacked(ds, grid, 2.0, BasisSpec::quadratic(), one).table,
            build_stacked(ds, grid, 2.0, BasisSpec::quadratic(), four).table);
}

// A one-point grid with the constant basis is the landmark PSH model.
TEST(FitSupermodel, SinglePointConstantBasisIsLandmarkPsh) {
  for (auto variant : {SupermodelVariant::Psh, SupermodelVariant::Cox}) {
    const SurvivalDataset ds = sim2(500, 4);
    StackOptions so;
    so.variant = variant;
    const SupermodelFit sm = fit_supermodel(build_stacked(ds, std::vector<double>{1.5}, 2.0, BasisSpec::constant(), so));
    LandmarkOptions lo;
    lo.competing_as_censoring = variant == SupermodelVariant::Cox;
    const PSHFit lm = fit_landmark_psh(ds, {1.5, 2.0}, lo);
    ASSERT_EQ(sm.model.beta.size(), lm.beta.size());
    EXPECT_LE((sm.model.beta - lm.beta).cwiseAbs().maxCoeff(), 1e-8);
    for (double z : {0.0, 1.0}) {
      const std::vector<double> zz{z};
      EXPECT_NEAR(sm.predict(zz, 1.5, 2.0), predict_conditional_cif(lm, zz, {1.5, 2.0}), 1e-8);
    }
  }
}

TEST(FitSupermodel, CoefficientMapsAndRangeChecks) {
  const SurvivalDataset ds = sim2(800, 5);
  const SupermodelFit fit = fit_supermodel(build_stacked(ds, make_grid(0.0, 0.5, 3.0), 2.0));
  ASSERT_EQ(fit.theta.rows(), 1);
  ASSERT_EQ(fit.theta.cols(), 3);
  ASSERT_EQ(fit.eta.size(), 2);
  for (double s : {0.0, 1.3, 3.0}) {
    EXPECT_NEAR(fit.beta_lm_at(s)[0], fit.theta(0, 0) + fit.theta(0, 1) * s + fit.theta(0, 2) * s * s, 1e-14);
    EXPECT_NEAR(fit.gamma_at(s), fit.eta[0] * s + fit.eta[1] * s * s, 1e-14);
  }
  const std::vector<double> z{1.0};
  EXPECT_THROW(fit.predict(z, 3.5, 2.0), ConfigError);
  EXPECT_THROW(fit.predict(z, 1.0, 2.5), ConfigError);
  const double pi = fit.predict(z, 1.0, 2.0);
  EXPECT_GT(pi, 0.0);
  EXPECT_LT(pi, 1.0);
}

TEST(FitSupermodel, StratifiedVariantDropsBaselineTerms) {
  const SurvivalDataset ds = sim2(500, 6);
  StackOptions so;
  so.stratified = true;
  const auto st = build_stacked(ds, make_grid(0.0, 1.0, 3.0), 2.0, BasisSpec::quadratic(), so);
  EXPECT_EQ(st.table.num_strata(), 4);
  EXPECT_EQ(st.table.covariate_names.size(), 3u);
  const SupermodelFit fit = fit_supermodel(st);
  EXPECT_TRUE(fit.stratified);
  EXPECT_EQ(fit.eta.size(), 0);
  const std::vector<double> z{0.0};
  EXPECT_NO_THROW(fit.predict(z, 2.0, 2.0));
}

TEST(WaldTest, QuadraticFormAndPValue) {
  Eigen::VectorXd b(3);
  b << 1.0, -2.0, 0.5;
  const Eigen::MatrixXd V = Eigen::MatrixXd::Identity(3, 3) * 0.25;
  const std::vector<std::size_t> idx{0, 1};
  const WaldResult r = wald_test(b, V, idx);
  EXPECT_NEAR(r.statistic, (1.0 + 4.0) / 0.25, 1e-12);
  EXPECT_EQ(r.dof, 2);
  EXPECT_NEAR(r.p_value, std::exp(-r.statistic / 2.0), 1e-12);
}

TEST(WaldTest, SupermodelTerms) {
  const SurvivalDataset ds = sim2(600, 7);
  const SupermodelFit fit = fit_supermodel(build_stacked(ds, make_grid(0.0, 0.5, 3.0), 2.0));
  const std::vector<std::size_t> terms{1, 2};
  const WaldResult r = wald_test(fit, "Z", terms);
  EXPECT_EQ(r.dof, 2);
  EXPECT_GE(r.p_value, 0.0);
  EXPECT_LE(r.p_value, 1.0);
  EXPECT_THROW(wald_test(fit, "nope", terms), ConfigError);
  const std::vector<std::size_t> bad{5};
  EXPECT_THROW(wald_test(fit, "Z", bad), ConfigError);
  EXPECT_EQ(wald_test_baseline(fit).dof, 2);
}
