#pragma once

#include <limits>
#include <map>
#include <span>

#include "lmpsh/dataset.hpp"
#include "lmpsh/fine_gray.hpp"

namespace lmpsh {

struct LandmarkSpec {
  double s = 0.0;
  double w = std::numeric_limits<double>::infinity();

  double horizon() const noexcept { return s + w; }
  /// Throws ConfigError unless s >= 0 and w > 0.
  void validate() const;
};

/// Subjects with X > s; follow-up beyond s+w is administratively censored at s+w and
/// time-dependent covariates are frozen at Z(s).
SurvivalDataset landmark_subset(const SurvivalDataset& ds, const LandmarkSpec& spec);

struct LandmarkOptions {
  FitOptions fit;
  int cause = 1;
  /// Cox-type fit: competing events leave the risk set.
  bool competing_as_censoring = false;
};

/// Landmark subset with its own censoring KM, encoded with delayed entry at s.
CountingProcessResult landmark_counting_process(const SurvivalDataset& ds, const LandmarkSpec& spec,
                                                const LandmarkOptions& options = {});

PSHFit fit_landmark_psh(const SurvivalDataset& ds, const LandmarkSpec& spec, const LandmarkOptions& options = {});

/// 1 - exp(-exp(z'beta) (Lambda(s+w) - Lambda(s-))). The fit must carry the same
/// landmark; w may not exceed the fitted window.
double predict_conditional_cif(const PSHFit& fit, std::span<const double> z_s, const LandmarkSpec& spec);

/// One Fine-Gray model per observed cause on the full data, combined through
/// (F1(s+w) - F1(s)) / (1 - sum_j F_j(s)).
struct StandardPshFit {
  std::map<int, PSHFit> by_cause;
  int cause = 1;
};

StandardPshFit fit_standard_psh(const SurvivalDataset& ds, const FitOptions& options = {}, int cause = 1);
double predict_conditional_cif(const StandardPshFit& fit, std::span<const double> z, const LandmarkSpec& spec);

}  // namespace lmpsh
