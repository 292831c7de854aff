#include "lmpsh/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <unordered_map>

#include "lmpsh/censoring.hpp"
#include "lmpsh/errors.hpp"
#include "lmpsh/landmark.hpp"
#include "lmpsh/parallel.hpp"
#include "lmpsh/rng.hpp"

namespace lmpsh {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// pi aligned with the pseudovalue order.
std::vector<double> align(const PseudovalueVector& q, const PredictionSet& preds) {
  if (q.ids.size() != preds.ids.size()) {
    throw DataError("predictions do not match the risk set at s = " + format_double(preds.s));
  }
  if (q.ids == preds.ids) return preds.pi;
  std::unordered_map<std::string, double> by_id;
  for (std::size_t i = 0; i < preds.size(); ++i) by_id.emplace(preds.ids[i], preds.pi[i]);
  std::vector<double> out;
  out.reserve(q.size());
  for (const auto& id : q.ids) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) throw DataError("predictions do not match the risk set at s = " + format_double(preds.s));
    out.push_back(it->second);
  }
  return out;
}

void check_predictions(const PredictionSet& preds) {
  if (preds.ids.size() != preds.pi.size()) throw DataError("prediction set has mismatched columns");
  for (double p : preds.pi) {
    if (!(p >= 0.0 && p <= 1.0)) throw DataError("predictions must lie in [0, 1], got " + format_double(p));
  }
}

std::size_t find_landmark(std::span<const double> landmarks, double s) {
  for (std::size_t k = 0; k < landmarks.size(); ++k) {
    if (std::abs(landmarks[k] - s) <= 1e-9 * (1.0 + std::abs(s))) return k;
  }
  throw ConfigError("model was not trained at landmark " + format_double(s));
}

class NonparametricPredictor final : public Predictor {
 public:
  NonparametricPredictor(const SurvivalDataset& ds, std::span<const double> landmarks, double w)
      : landmarks_(landmarks.begin(), landmarks.end()), tables_(landmarks.size()) {
    for (std::size_t k = 0; k < landmarks_.size(); ++k) {
      const double s = landmarks_[k];
      const SurvivalDataset sub = landmark_subset(ds, {s, w});
      auto& table = tables_[k];
      table.pooled = conditional_cif_np(sub, s, w);
      std::map<std::vector<double>, std::vector<std::size_t>> groups;
      for (std::size_t i = 0; i < sub.size(); ++i) groups[sub[i].covariates].push_back(i);
      for (const auto& [z, idx] : groups) table.by_group.emplace(z, conditional_cif_np(sub.subset(idx), s, w));
    }
  }

  double predict(std::span<const double> z_s, double s) const override {
    const auto& table = tables_[find_landmark(landmarks_, s)];
    const auto it = table.by_group.find(std::vector<double>(z_s.begin(), z_s.end()));
    return it == table.by_group.end() ? table.pooled : it->second;
  }

 private:
  struct Table {
    double pooled = 0.0;
    std::map<std::vector<double>, double> by_group;
  };
  std::vector<double> landmarks_;
  std::vector<Table> tables_;
};

class StandardPshPredictor final : public Predictor {
 public:
  StandardPshPredictor(const SurvivalDataset& ds, const FitOptions& options, double w)
      : fit_(fit_standard_psh(ds, options)), w_(w) {}

  double predict(std::span<const double> z_s, double s) const override {
    return predict_conditional_cif(fit_, z_s, {s, w_});
  }

 private:
  StandardPshFit fit_;
  double w_;
};

class LandmarkPshPredictor final : public Predictor {
 public:
  LandmarkPshPredictor(const SurvivalDataset& ds, const ModelSpec& spec, std::span<const double> landmarks, double w)
      : landmarks_(landmarks.begin(), landmarks.end()), fits_(landmarks.size()), w_(w) {
    LandmarkOptions lo;
    lo.fit = spec.fit;
    parallel_for(landmarks_.size(), spec.jobs,
                 [&](std::size_t k) { fits_[k] = fit_landmark_psh(ds, {landmarks_[k], w}, lo); });
  }

  double predict(std::span<const double> z_s, double s) const override {
    return predict_conditional_cif(fits_[find_landmark(landmarks_, s)], z_s, {s, w_});
  }

 private:
  std::vector<double> landmarks_;
  std::vector<PSHFit> fits_;
  double w_;
};

class SupermodelPredictor final : public Predictor {
 public:
  SupermodelPredictor(const SurvivalDataset& ds, const ModelSpec& spec, std::span<const double> landmarks, double w) {
    std::vector<double> grid = spec.grid;
    if (grid.empty()) {
      const double last = landmarks.empty() ? 0.0 : *std::max_element(landmarks.begin(), landmarks.end());
      grid = make_grid(0.0, 0.1, last);
    }
    StackOptions so;
    so.variant = spec.kind == ModelKind::CoxSupermodel ? SupermodelVariant::Cox : SupermodelVariant::Psh;
    so.stratified = spec.stratified;
    so.jobs = spec.jobs;
    fit_ = fit_supermodel(build_stacked(ds, grid, w, spec.basis, so), spec.fit);
  }

  double predict(std::span<const double> z_s, double s) const override { return fit_.predict(z_s, s, fit_.w); }

 private:
  SupermodelFit fit_;
};

}  // namespace

std::vector<std::size_t> risk_set_indices(const SurvivalDataset& ds, double s) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds[i].time > s) idx.push_back(i);
  }
  return idx;
}

double brier(const PseudovalueVector& q, const PredictionSet& preds) {
  check_predictions(preds);
  const auto pi = align(q, preds);
  double acc = 0.0;
  for (std::size_t i = 0; i < pi.size(); ++i) acc += q.values[i] * (1.0 - 2.0 * pi[i]) + pi[i] * pi[i];
  return acc / static_cast<double>(pi.size());
}

double brier(const SurvivalDataset& ds, const PredictionSet& preds) {
  return brier(pseudovalues(ds, preds.s, preds.w), preds);
}

double oe_ratio(const PseudovalueVector& q, const PredictionSet& preds) {
  check_predictions(preds);
  const auto pi = align(q, preds);
  double observed = 0.0, expected = 0.0;
  for (std::size_t i = 0; i < pi.size(); ++i) {
    observed += q.values[i];
    expected += pi[i];
  }
  if (!(expected > 0.0)) throw DataError("zero expected count at s = " + format_double(preds.s));
  return observed / expected;
}

double oe_ratio(const SurvivalDataset& ds, const PredictionSet& preds) {
  return oe_ratio(pseudovalues(ds, preds.s, preds.w), preds);
}

double auc(const SurvivalDataset& ds, const PredictionSet& preds) {
  const SurvivalDataset sub = landmark_subset(ds, {preds.s, preds.w});
  return auc(ds, preds, km_censoring(sub));
}

double auc(const SurvivalDataset& ds, const PredictionSet& preds, const StepFunction& G) {
  check_predictions(preds);
  std::unordered_map<std::string, double> pi_of;
  for (std::size_t i = 0; i < preds.size(); ++i) pi_of.emplace(preds.ids[i], preds.pi[i]);
  const double horizon = preds.s + preds.w;
  std::vector<std::pair<double, double>> cases, controls;  // (pi, weight)
  std::size_t at_risk = 0;
  for (const auto& r : ds.rows()) {
    if (!(r.time > preds.s)) continue;
    ++at_risk;
    const auto it = pi_of.find(r.id);
    if (it == pi_of.end()) throw DataError("predictions do not match the risk set at s = " + format_double(preds.s));
    if (r.time > horizon) {
      const double g = G(horizon);
      if (g > 0.0) controls.emplace_back(it->second, 1.0 / g);
    } else if (r.status == 1) {
      const double g = G.at_minus(r.time);
      if (!(g > 0.0)) continue;
      (r.cause == 1 ? cases : controls).emplace_back(it->second, 1.0 / g);
    }
  }
  if (at_risk != preds.size()) throw DataError("predictions do not match the risk set at s = " + format_double(preds.s));
  if (cases.empty() || controls.empty()) throw DataError("AUC needs at least one case and one control");

  std::sort(controls.begin(), controls.end());
  std::vector<double> cum(controls.size() + 1, 0.0);
  for (std::size_t j = 0; j < controls.size(); ++j) cum[j + 1] = cum[j] + controls[j].second;
  // AUC = 1/2 + (concordant - discordant) / (2 pairs), exact for fully tied predictions.
  double concordant = 0.0, discordant = 0.0, case_total = 0.0;
  for (const auto& [p, wi] : cases) {
    const auto lo = std::lower_bound(controls.begin(), controls.end(), std::make_pair(p, -1.0)) - controls.begin();
    const auto hi = std::upper_bound(controls.begin(), controls.end(), std::make_pair(p, std::numeric_limits<double>::infinity())) -
                    controls.begin();
    concordant += wi * cum[static_cast<std::size_t>(lo)];
    discordant += wi * (cum.back() - cum[static_cast<std::size_t>(hi)]);
    case_total += wi;
  }
  return 0.5 + 0.5 * (concordant - discordant) / (case_total * cum.back());
}

double squared_bias(const PredictionSet& preds, double reference) {
  if (preds.pi.empty()) return 0.0;
  const double mean = std::accumulate(preds.pi.begin(), preds.pi.end(), 0.0) / static_cast<double>(preds.pi.size());
  return (mean - reference) * (mean - reference);
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Nonparametric:
      return "np";
    case ModelKind::StandardPsh:
      return "psh";
    case ModelKind::LandmarkPsh:
      return "landmark-psh";
    case ModelKind::Supermodel:
      return "supermodel";
    case ModelKind::CoxSupermodel:
      return "cox-supermodel";
  }
  return "unknown";
}

ModelKind parse_model_kind(const std::string& name) {
  for (auto k : {ModelKind::Nonparametric, ModelKind::StandardPsh, ModelKind::LandmarkPsh, ModelKind::Supermodel,
                 ModelKind::CoxSupermodel}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown model '" + name + "' (expected np, psh, landmark-psh, supermodel or cox-supermodel)");
}

std::unique_ptr<Predictor> train(const SurvivalDataset& ds, const ModelSpec& spec, std::span<const double> landmarks,
                                 double w) {
  switch (spec.kind) {
    case ModelKind::Nonparametric:
      return std::make_unique<NonparametricPredictor>(ds, landmarks, w);
    case ModelKind::StandardPsh:
      return std::make_unique<StandardPshPredictor>(ds, spec.fit, w);
    case ModelKind::LandmarkPsh:
      return std::make_unique<LandmarkPshPredictor>(ds, spec, landmarks, w);
    case ModelKind::Supermodel:
    case ModelKind::CoxSupermodel:
      return std::make_unique<SupermodelPredictor>(ds, spec, landmarks, w);
  }
  throw ConfigError("unknown model kind");
}

PredictionSet predict_at(const Predictor& model, const SurvivalDataset& ds, double s, double w) {
  PredictionSet out;
  out.s = s;
  out.w = w;
  for (const auto& r : ds.rows()) {
    if (!(r.time > s)) continue;
    out.ids.push_back(r.id);
    out.pi.push_back(model.predict(r.covariates_at(s), s));
  }
  return out;
}

std::vector<int> assign_folds(const SurvivalDataset& ds, std::span<const double> landmarks, double w, int folds,
                              std::uint64_t seed) {
  if (folds < 2) throw ConfigError("cross-validation needs at least two folds");
  if (static_cast<std::size_t>(folds) > ds.size()) throw ConfigError("more folds than subjects");
  std::map<std::pair<int, int>, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& r = ds[i];
    bool in_window = false;
    if (r.status == 1) {
      for (double s : landmarks) {
        if (r.time > s && r.time <= s + w) {
          in_window = true;
          break;
        }
      }
    }
    strata[{in_window ? 1 : 0, r.cause}].push_back(i);
  }
  std::vector<int> fold(ds.size(), 0);
  std::size_t position = 0;
  for (auto& [key, idx] : strata) {
    std::vector<std::pair<std::uint64_t, std::size_t>> order;
    order.reserve(idx.size());
    for (std::size_t i : idx) order.emplace_back(derive_seed(seed, i), i);
    std::sort(order.begin(), order.end());
    for (const auto& [_, i] : order) fold[i] = static_cast<int>(position++ % static_cast<std::size_t>(folds));
  }
  return fold;
}

LandmarkMetrics evaluate(const SurvivalDataset& ds, const PredictionSet& preds) {
  LandmarkMetrics m;
  m.s = preds.s;
  m.w = preds.w;
  m.at_risk = preds.size();
  const auto q = pseudovalues(ds, preds.s, preds.w);
  m.brier = brier(q, preds);
  try {
    m.oe = oe_ratio(q, preds);
  } catch (const DataError&) {
    m.oe = kNaN;
  }
  try {
    m.auc = auc(ds, preds);
  } catch (const DataError&) {
    m.auc = kNaN;
  }
  return m;
}

CvResult cross_validate(const SurvivalDataset& ds, const ModelSpec& spec, std::span<const double> landmarks, double w,
                        const CvOptions& options) {
  if (landmarks.empty()) throw ConfigError("no evaluation landmarks");
  CvResult out;
  out.fold_of = assign_folds(ds, landmarks, w, options.folds, options.seed);
  const auto k = static_cast<std::size_t>(options.folds);
  // held[f][l] = predictions (dataset row, pi) of fold f at landmark l
  std::vector<std::vector<std::vector<std::pair<std::size_t, double>>>> held(
      k, std::vector<std::vector<std::pair<std::size_t, double>>>(landmarks.size()));
  ModelSpec inner = spec;
  if (options.jobs > 1) inner.jobs = 1;
  parallel_for(k, options.jobs, [&](std::size_t f) {
    std::vector<std::size_t> train_idx;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      if (out.fold_of[i] != static_cast<int>(f)) train_idx.push_back(i);
    }
    const SurvivalDataset training = ds.subset(train_idx);
    bool events = false;
    for (const auto& r : training.rows()) events = events || (r.status == 1 && r.cause == 1);
    if (!events) throw DataError("training data of fold " + std::to_string(f + 1) + " has no cause-1 events");
    const auto model = train(training, inner, landmarks, w);
    for (std::size_t l = 0; l < landmarks.size(); ++l) {
      for (std::size_t i = 0; i < ds.size(); ++i) {
        if (out.fold_of[i] != static_cast<int>(f) || !(ds[i].time > landmarks[l])) continue;
        held[f][l].emplace_back(i, model->predict(ds[i].covariates_at(landmarks[l]), landmarks[l]));
      }
    }
  });
  for (std::size_t l = 0; l < landmarks.size(); ++l) {
    std::vector<std::pair<std::size_t, double>> pooled;
    for (std::size_t f = 0; f < k; ++f) pooled.insert(pooled.end(), held[f][l].begin(), held[f][l].end());
    std::sort(pooled.begin(), pooled.end());
    PredictionSet ps;
    ps.s = landmarks[l];
    ps.w = w;
    for (const auto& [i, p] : pooled) {
      ps.ids.push_back(ds[i].id);
      ps.pi.push_back(p);
    }
    out.metrics.push_back(evaluate(ds, ps));
    out.predictions.push_back(std::move(ps));
  }
  return out;
}

void write_metric_table(std::ostream& os, std::span<const MetricRow> rows) {
  os << "landmark,metric,estimate,se\n";
  for (const auto& r : rows) {
    os << format_double(r.landmark) << ',' << r.metric << ',' << format_double(r.estimate) << ',' << format_double(r.se)
       << '\n';
  }
}

}  // namespace lmpsh
