#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "lmpsh/aalen_johansen.hpp"
#include "lmpsh/errors.hpp"
#include "test_data.hpp"

using namespace lmpsh;
using lmpsh::test::record;

TEST(AalenJohansen, ToyValues) {
  const SurvivalDataset ds({record("1", 1.0, 1, 1), record("2", 2.0, 1, 2), record("3", 3.0, 0, 0),
                            record("4", 4.0, 1, 1)},
                           {});
  const auto fit = aalen_johansen(ds);
  const StepFunction F1 = fit.cif_function(1), F2 = fit.cif_function(2), S = fit.survival_function();
  EXPECT_DOUBLE_EQ(F1(1.0), 0.25);
  EXPECT_DOUBLE_EQ(F2(2.0), 0.25);
  EXPECT_DOUBLE_EQ(S(2.0), 0.5);
  EXPECT_DOUBLE_EQ(F1(4.0), 0.75);
  EXPECT_DOUBLE_EQ(S(4.0), 0.0);
  EXPECT_EQ(aj_cif(ds, 3).cif(10.0), 0.0);
  EXPECT_THROW(aj_cif(ds, 0), DataError);
}

// Property: sum of all CIFs plus the all-cause survival is one at every time.
TEST(AalenJohansen, Normalization) {
  std::mt19937_64 g(21);
  for (int rep = 0; rep < 300; ++rep) {
    const SurvivalDataset ds = test::random_competing(g, 2 + rep % 60, 0, 1 + rep % 3, 0.3, rep % 3 == 0);
    const auto fit = aalen_johansen(ds);
    for (std::size_t k = 0; k < fit.times.size(); ++k) {
      double total = fit.survival[k];
      for (const auto& [c, f] : fit.cif) total += f[k];
      EXPECT_NEAR(total, 1.0, 1e-12);
    }
    for (const auto& [c, f] : fit.cif) {
      EXPECT_TRUE(std::is_sorted(f.begin(), f.end()));
    }
  }
}

// Without delayed entry the estimator on {X > s} equals (F1(s+w) - F1(s)) / S(s) from the full data.
TEST(ConditionalCif, MatchesFullDataRatio) {
  std::mt19937_64 g(8);
  for (int rep = 0; rep < 100; ++rep) {
    const SurvivalDataset ds = test::random_competing(g, 80, 0, 2, 0.3, rep % 2 == 0);
    const auto fit = aalen_johansen(ds);
    const StepFunction F1 = fit.cif_function(1), S = fit.survival_function();
    for (double s : {0.0, 0.3, 0.7}) {
      if (!(S(s) > 0.0)) continue;
      const double expected = (F1(s + 0.8) - F1(s)) / S(s);
      EXPECT_NEAR(conditional_cif_np(ds, s, 0.8), expected, 1e-12);
    }
  }
}

TEST(ConditionalCif, EmptyRiskSetThrows) {
  const SurvivalDataset ds({record("1", 1.0, 1, 1)}, {});
  EXPECT_THROW(conditional_cif_np(ds, 2.0, 1.0), DataError);
}

// Oracle: leave-one-out recomputation of the estimator.
TEST(Pseudovalues, MatchBruteForceJackknife) {
  std::mt19937_64 g(13);
  for (int rep = 0; rep < 40; ++rep) {
    const SurvivalDataset ds = test::random_competing(g, 25, 0, 2, 0.3, rep % 2 == 0);
    const double s = rep % 3 == 0 ? 0.0 : 0.4, w = 1.0;
    for (auto target : {PseudoTarget::Cause, PseudoTarget::AllCause}) {
      const auto pv = pseudovalues(ds, s, w, 1, target);
      std::vector<std::size_t> members;
      for (std::size_t i = 0; i < ds.size(); ++i) {
        if (ds[i].time > s) members.push_back(i);
      }
      ASSERT_EQ(pv.size(), members.size());
      const double n = static_cast<double>(members.size());
      auto estimate = [&](const SurvivalDataset& d) {
        if (target == PseudoTarget::Cause) return conditional_cif_np(d, s, w, 1);
        const auto f = aalen_johansen(d);
        const StepFunction S = f.survival_function();
        return 1.0 - S(s + w) / S(s);
      };
      const double full = estimate(ds.subset(members));
      for (std::size_t k = 0; k < members.size(); ++k) {
        std::vector<std::size_t> loo;
        for (std::size_t m : members) {
          if (m != members[k]) loo.push_back(m);
        }
        const double expected = n * full - (n - 1.0) * estimate(ds.subset(loo));
        EXPECT_EQ(pv.ids[k], ds[members[k]].id);
        EXPECT_NEAR(pv.values[k], expected, 1e-10);
      }
    }
  }
}

TEST(Pseudovalues, UncensoredDataGiveIndicators) {
  std::mt19937_64 g(4);
  const SurvivalDataset ds = test::random_competing(g, 60, 0, 2, 0.0);
  const auto pv = pseudovalues(ds, 0.2, 1.0);
  std::size_t k = 0;
  for (const auto& r : ds.rows()) {
    if (!(r.time > 0.2)) continue;
    const double ind = (r.time <= 1.2 && r.cause == 1) ? 1.0 : 0.0;
    EXPECT_NEAR(pv.values[k++], ind, 1e-12);
  }
}
