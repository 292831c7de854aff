#include <cmath>
#include <limits>
#include <sstream>

#include <gtest/gtest.h>

#include "lmpsh/censoring.hpp"
#include "lmpsh/errors.hpp"
#include "lmpsh/landmark.hpp"
#include "lmpsh/simulate.hpp"
#include "test_data.hpp"

using namespace lmpsh;
using lmpsh::test::record;

namespace {

SurvivalDataset sim1(std::size_t n, std::uint64_t seed) {
  Setting1Params p;
  p.censoring.upper = 12.0;
  return sim_setting1(n, p, seed);
}

}  // namespace

TEST(LandmarkSpec, Validation) {
  EXPECT_THROW((LandmarkSpec{-1.0, 1.0}.validate()), ConfigError);
  EXPECT_THROW((LandmarkSpec{1.0, 0.0}.validate()), ConfigError);
  EXPECT_NO_THROW((LandmarkSpec{0.0, std::numeric_limits<double>::infinity()}.validate()));
}

TEST(LandmarkSubset, KeepsAtRiskAndCensorsAtHorizon) {
  std::mt19937_64 g(3);
  const SurvivalDataset ds = test::random_competing(g, 200, 1, 2, 0.3);
  const LandmarkSpec spec{0.5, 1.0};
  const SurvivalDataset sub = landmark_subset(ds, spec);
  std::size_t k = 0;
  for (const auto& r : ds.rows()) {
    if (!(r.time > 0.5)) continue;
    const auto& q = sub[k++];
    EXPECT_EQ(q.id, r.id);
    if (r.time > 1.5) {
      EXPECT_EQ(q.time, 1.5);
      EXPECT_EQ(q.status, 0);
      EXPECT_TRUE(q.administrative);
    } else {
      EXPECT_EQ(q.time, r.time);
      EXPECT_EQ(q.cause, r.cause);
      EXPECT_FALSE(q.administrative);
    }
  }
  EXPECT_EQ(k, sub.size());
  EXPECT_THROW(landmark_subset(ds, {100.0, 1.0}), DataError);
}

TEST(LandmarkSubset, FreezesTimeDependentCovariates) {
  SubjectRecord r = record("1", 3.0, 1, 1, {0.0});
  r.segments = {{0.0, 1.0, {0.0}}, {1.0, 3.0, {1.0}}};
  const SurvivalDataset ds({r, record("2", 2.0, 0, 0, {0.0})}, {"v"});
  const SurvivalDataset before = landmark_subset(ds, {0.5, 5.0});
  EXPECT_FALSE(before[0].time_dependent());
  EXPECT_EQ(before[0].covariates[0], 0.0);
  const SurvivalDataset after = landmark_subset(ds, {1.5, 5.0});
  EXPECT_EQ(after[0].covariates[0], 1.0);
}

// Administrative censorings at the horizon are not random censorings.
TEST(LandmarkSubset, AdministrativeCensoringLeavesCensoringKmUntouched) {
  const SurvivalDataset ds({record("1", 1.0, 0, 0), record("2", 2.0, 1, 1), record("3", 5.0, 1, 2),
                            record("4", 6.0, 0, 0)},
                           {});
  const SurvivalDataset sub = landmark_subset(ds, {0.0, 3.0});
  const StepFunction G = km_censoring(sub);
  EXPECT_DOUBLE_EQ(G(1.0), 0.75);
  EXPECT_DOUBLE_EQ(G(10.0), 0.75);
}

// s = 0 and an infinite window reproduce the plain Fine-Gray fit exactly.
TEST(FitLandmarkPsh, OriginWithInfiniteWindowIsPlainFineGray) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const SurvivalDataset ds = sim1(400, seed);
    const PSHFit plain = fit_fine_gray(to_counting_process(ds, km_censoring(ds)).table);
    const PSHFit lm = fit_landmark_psh(ds, {0.0, std::numeric_limits<double>::infinity()});
    EXPECT_EQ(lm.beta, plain.beta);
    EXPECT_EQ(lm.baselines, plain.baselines);
    EXPECT_EQ(lm.cov_robust, plain.cov_robust);
    EXPECT_EQ(lm.landmark, 0.0);
  }
}

TEST(FitLandmarkPsh, MetadataAndPredictionChecks) {
  const SurvivalDataset ds = sim1(600, 4);
  const PSHFit fit = fit_landmark_psh(ds, {1.0, 3.0});
  EXPECT_EQ(fit.landmark, 1.0);
  EXPECT_EQ(fit.window, 3.0);
  EXPECT_EQ(fit.variant, "psh");
  const std::vector<double> z{0.0};
  const double pi = predict_conditional_cif(fit, z, {1.0, 3.0});
  EXPECT_GT(pi, 0.0);
  EXPECT_LT(pi, 1.0);
  EXPECT_LE(predict_conditional_cif(fit, z, {1.0, 2.0}), pi);
  EXPECT_THROW(predict_conditional_cif(fit, z, {1.5, 3.0}), ConfigError);
  EXPECT_THROW(predict_conditional_cif(fit, z, {1.0, 4.0}), ConfigError);
  EXPECT_THROW(fit_landmark_psh(ds, {1000.0, 1.0}), DataError);
}

TEST(FitLandmarkPsh, CoxVariantTreatsCompetingEventsAsCensoring) {
  const SurvivalDataset ds = sim1(500, 8);
  LandmarkOptions o;
  o.competing_as_censoring = true;
  const PSHFit cox = fit_landmark_psh(ds, {0.5, 3.0}, o);
  EXPECT_EQ(cox.variant, "cox");
  const auto cp = landmark_counting_process(ds, {0.5, 3.0}, o).table;
  for (double w : cp.weight) EXPECT_EQ(w, 1.0);
  const auto sub = landmark_subset(ds, {0.5, 3.0});
  EXPECT_EQ(cp.rows(), sub.size());
}

// Ratio identity against the per-cause CIF predictions.
TEST(StandardPsh, ConditionalPredictionIdentity) {
  const SurvivalDataset ds = sim1(800, 5);
  const StandardPshFit fit = fit_standard_psh(ds);
  ASSERT_EQ(fit.by_cause.size(), 2u);
  for (double zv : {0.0, 1.0}) {
    const std::vector<double> z{zv};
    for (double s : {0.0, 1.0, 2.5}) {
      const double F1s = predict_cif(fit.by_cause.at(1), z, s), F2s = predict_cif(fit.by_cause.at(2), z, s);
      const double expected = (predict_cif(fit.by_cause.at(1), z, s + 3.0) - F1s) / (1.0 - F1s - F2s);
      EXPECT_NEAR(predict_conditional_cif(fit, z, {s, 3.0}), expected, 1e-14);
    }
  }
}
