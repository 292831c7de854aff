#include <gtest/gtest.h>

#include "lmpsh/errors.hpp"
#include "lmpsh/landmark.hpp"
#include "lmpsh/serialize.hpp"
#include "lmpsh/simulate.hpp"
#include "lmpsh/supermodel.hpp"

using namespace lmpsh;

namespace {

SurvivalDataset data() {
  Setting2Params p;
  p.censoring.upper = 10.0;
  return sim_setting2(600, p, 31);
}

}  // namespace

TEST(Serialize, LandmarkFitRoundTripPredictsBitIdentically) {
  const SurvivalDataset ds = data();
  const LandmarkSpec spec{1.0, 2.0};
  const PSHFit fit = fit_landmark_psh(ds, spec);
  const std::string text = to_json(fit);
  EXPECT_EQ(model_type_of_json(text), "psh");
  const PSHFit back = psh_fit_from_json(text);
  EXPECT_EQ(back.beta, fit.beta);
  EXPECT_EQ(back.cov_robust, fit.cov_robust);
  EXPECT_EQ(back.landmark, fit.landmark);
  EXPECT_EQ(back.window, fit.window);
  EXPECT_EQ(back.baselines, fit.baselines);
  for (double z : {0.0, 0.5, 1.0}) {
    const std::vector<double> zz{z};
    EXPECT_EQ(predict_conditional_cif(back, zz, spec), predict_conditional_cif(fit, zz, spec));
  }
  EXPECT_EQ(to_json(back), text);
}

TEST(Serialize, SupermodelRoundTripPredictsBitIdentically) {
  const SurvivalDataset ds = data();
  const auto grid = make_grid(0.0, 0.25, 3.0);
  const SupermodelFit fit = fit_supermodel(build_stacked(ds, grid, 2.0));
  const std::string text = to_json(fit);
  EXPECT_EQ(model_type_of_json(text), "supermodel");
  const SupermodelFit back = supermodel_fit_from_json(text);
  for (double s : {0.0, 0.3, 1.7, 3.0}) {
    for (double z : {0.0, 1.0}) {
      const std::vector<double> zz{z};
      EXPECT_EQ(back.predict(zz, s, 2.0), fit.predict(zz, s, 2.0));
    }
  }
  EXPECT_EQ(to_json(back), text);
}

TEST(Serialize, MalformedInputIsADataError) {
  EXPECT_THROW(psh_fit_from_json("{not json"), DataError);
  EXPECT_THROW(psh_fit_from_json("{\"type\": \"psh\"}"), DataError);
  EXPECT_THROW(model_type_of_json("[]"), DataError);
  const SurvivalDataset ds = data();
  const std::string sm = to_json(fit_supermodel(build_stacked(ds, make_grid(0.0, 0.5, 2.0), 2.0)));
  EXPECT_THROW(psh_fit_from_json(sm), DataError);
}
