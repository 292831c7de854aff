#include "lmpsh/landmark.hpp"

#include <algorithm>
#include <cmath>

#include "lmpsh/censoring.hpp"
#include "lmpsh/errors.hpp"

namespace lmpsh {

void LandmarkSpec::validate() const {
  if (!(s >= 0.0) || !std::isfinite(s)) throw ConfigError("landmark time must be finite and nonnegative");
  if (!(w > 0.0)) throw ConfigError("prediction window must be positive");
}

SurvivalDataset landmark_subset(const SurvivalDataset& ds, const LandmarkSpec& spec) {
  spec.validate();
  const double horizon = spec.horizon();
  std::vector<SubjectRecord> rows;
  for (const auto& r : ds.rows()) {
    if (!(r.time > spec.s)) continue;
    SubjectRecord rec = r;
    if (rec.time_dependent()) {
      const auto z = r.covariates_at(spec.s);
      rec.covariates.assign(z.begin(), z.end());
      rec.segments.clear();
    }
    if (rec.time > horizon) {
      rec.time = horizon;
      rec.status = 0;
      rec.cause = 0;
      rec.administrative = true;
    }
    rows.push_back(std::move(rec));
  }
  if (rows.empty()) throw DataError("empty landmark subset at s = " + format_double(spec.s));
  return SurvivalDataset(std::move(rows), ds.covariate_names());
}

CountingProcessResult landmark_counting_process(const SurvivalDataset& ds, const LandmarkSpec& spec,
                                                const LandmarkOptions& options) {
  const SurvivalDataset sub = landmark_subset(ds, spec);
  CountingProcessOptions cpo;
  cpo.entry = spec.s;
  cpo.cause = options.cause;
  cpo.competing_as_censoring = options.competing_as_censoring;
  return to_counting_process(sub, km_censoring(sub), cpo);
}

PSHFit fit_landmark_psh(const SurvivalDataset& ds, const LandmarkSpec& spec, const LandmarkOptions& options) {
  auto cp = landmark_counting_process(ds, spec, options);
  if (cp.table.num_events() == 0) {
    throw DataError("no cause-" + std::to_string(options.cause) + " events in the window at s = " +
                    format_double(spec.s));
  }
  PSHFit fit = fit_fine_gray(cp.table, options.fit);
  fit.truncated = cp.truncated;
  fit.landmark = spec.s;
  fit.window = spec.w;
  fit.variant = options.competing_as_censoring ? "cox" : "psh";
  return fit;
}

double predict_conditional_cif(const PSHFit& fit, std::span<const double> z_s, const LandmarkSpec& spec) {
  if (!fit.landmark || std::abs(*fit.landmark - spec.s) > 1e-12 * (1.0 + std::abs(spec.s))) {
    throw ConfigError("prediction landmark does not match the fitted landmark");
  }
  if (!fit.window || spec.w > *fit.window * (1.0 + 1e-12)) {
    throw ConfigError("prediction window exceeds the fitted window");
  }
  const auto& L = fit.baseline();
  const double dL = L(spec.horizon()) - L.at_minus(spec.s);
  const double v = -std::expm1(-std::exp(linear_predictor(fit.beta, z_s)) * dL);
  return std::clamp(v, 0.0, 1.0);
}

StandardPshFit fit_standard_psh(const SurvivalDataset& ds, const FitOptions& options, int cause) {
  StandardPshFit out;
  out.cause = cause;
  const StepFunction G = km_censoring(ds);
  for (int c : ds.causes()) {
    CountingProcessOptions cpo;
    cpo.cause = c;
    auto cp = to_counting_process(ds, G, cpo);
    PSHFit fit = fit_fine_gray(cp.table, options);
    fit.truncated = cp.truncated;
    out.by_cause.emplace(c, std::move(fit));
  }
  if (!out.by_cause.contains(cause)) throw DataError("no cause-" + std::to_string(cause) + " events");
  return out;
}

double predict_conditional_cif(const StandardPshFit& fit, std::span<const double> z, const LandmarkSpec& spec) {
  const auto& main = fit.by_cause.at(fit.cause);
  double total_s = 0.0;
  for (const auto& [c, f] : fit.by_cause) total_s += predict_cif(f, z, spec.s);
  const double gain = predict_cif(main, z, spec.horizon()) - predict_cif(main, z, spec.s);
  const double surv = 1.0 - total_s;
  if (!(surv > 0.0)) return 1.0;
  return std::clamp(gain / surv, 0.0, 1.0);
}

}  // namespace lmpsh
