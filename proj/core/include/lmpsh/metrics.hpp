#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "lmpsh/aalen_johansen.hpp"
#include "lmpsh/dataset.hpp"
#include "lmpsh/fine_gray.hpp"
#include "lmpsh/step_function.hpp"
#include "lmpsh/supermodel.hpp"

namespace lmpsh {

/// Predicted conditional CIFs pi_i(s, w) for the subjects at risk at s.
struct PredictionSet {
  double s = 0.0;
  double w = 0.0;
  std::vector<std::string> ids;
  std::vector<double> pi;

  std::size_t size() const noexcept { return ids.size(); }
};

/// Indices of the subjects with X > s, in dataset order.
std::vector<std::size_t> risk_set_indices(const SurvivalDataset& ds, double s);

/// n^-1 sum Q_i (1 - 2 pi_i) + pi_i^2 with Q the cause-1 jackknife pseudovalues.
double brier(const SurvivalDataset& ds, const PredictionSet& preds);
double brier(const PseudovalueVector& q, const PredictionSet& preds);

/// sum Q_i / sum pi_i.
double oe_ratio(const SurvivalDataset& ds, const PredictionSet& preds);
double oe_ratio(const PseudovalueVector& q, const PredictionSet& preds);

/// IPCW time-dependent AUC; the censoring KM conditional on X > s is fitted on the
/// landmark subset unless given.
double auc(const SurvivalDataset& ds, const PredictionSet& preds);
double auc(const SurvivalDataset& ds, const PredictionSet& preds, const StepFunction& censoring_given_s);

/// (mean pi - reference)^2.
double squared_bias(const PredictionSet& preds, double reference);

enum class ModelKind { Nonparametric, StandardPsh, LandmarkPsh, Supermodel, CoxSupermodel };
std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& name);

struct ModelSpec {
  ModelKind kind = ModelKind::LandmarkPsh;
  /// Supermodel grid; empty means 0:0.1:(largest evaluation landmark).
  std::vector<double> grid;
  BasisSpec basis = BasisSpec::quadratic();
  bool stratified = false;
  FitOptions fit;
  unsigned jobs = 1;
};

/// Conditional CIF of a trained model for covariates measured at landmark s.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual double predict(std::span<const double> z_s, double s) const = 0;
};

/// Trains `spec` for the given landmarks and window. Landmark-specific models
/// (nonparametric, landmark PSH) can only predict at those landmarks.
std::unique_ptr<Predictor> train(const SurvivalDataset& ds, const ModelSpec& spec, std::span<const double> landmarks,
                                 double w);

/// Predictions for the subjects at risk at s.
PredictionSet predict_at(const Predictor& model, const SurvivalDataset& ds, double s, double w);

struct LandmarkMetrics {
  double s = 0.0;
  double w = 0.0;
  std::size_t at_risk = 0;
  double brier = 0.0;
  double oe = 0.0;
  double auc = 0.0;
};

struct CvOptions {
  int folds = 3;
  std::uint64_t seed = 1;
  unsigned jobs = 1;
};

struct CvResult {
  std::vector<PredictionSet> predictions;  // pooled held-out predictions per landmark
  std::vector<LandmarkMetrics> metrics;
  std::vector<int> fold_of;  // per dataset row
};

/// Fold assignment stratified by (failure inside some evaluation window, cause).
std::vector<int> assign_folds(const SurvivalDataset& ds, std::span<const double> landmarks, double w, int folds,
                              std::uint64_t seed);

CvResult cross_validate(const SurvivalDataset& ds, const ModelSpec& spec, std::span<const double> landmarks, double w,
                        const CvOptions& options = {});

/// Brier, O/E and AUC of a prediction set against the full data. AUC is NaN when
/// there are no weighted cases or controls.
LandmarkMetrics evaluate(const SurvivalDataset& ds, const PredictionSet& preds);

struct MetricRow {
  double landmark = 0.0;
  std::string metric;
  double estimate = 0.0;
  double se = 0.0;
};

/// landmark,metric,estimate,se
void write_metric_table(std::ostream& os, std::span<const MetricRow> rows);

}  // namespace lmpsh
