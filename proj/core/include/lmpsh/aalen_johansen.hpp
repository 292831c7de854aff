#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "lmpsh/dataset.hpp"
#include "lmpsh/step_function.hpp"

namespace lmpsh {

struct CIFEstimate {
  int cause = 1;
  StepFunction cif;  // starts at 0, nondecreasing, <= 1
};

/// All-cause Kaplan-Meier survival and the Aalen-Johansen CIF of every cause, on a
/// common grid of distinct failure times.
struct AalenJohansenFit {
  std::vector<double> times;
  std::vector<double> survival;
  std::map<int, std::vector<double>> cif;

  StepFunction survival_function() const;
  StepFunction cif_function(int cause) const;
};

AalenJohansenFit aalen_johansen(const SurvivalDataset& ds);

/// F_j(t) = sum over failure times t_i <= t of S(t_i-) d_{j,i} / n_i.
CIFEstimate aj_cif(const SurvivalDataset& ds, int cause);

/// Nonparametric P(s < T <= s+w, cause | T > s), from the Aalen-Johansen
/// estimator on the subjects with X > s.
double conditional_cif_np(const SurvivalDataset& ds, double s, double w, int cause = 1);

enum class PseudoTarget {
  Cause,     // cause-specific conditional CIF
  AllCause,  // P(T <= s+w | T > s)
};

struct PseudovalueVector {
  double s = 0.0;
  double w = 0.0;
  double estimate = 0.0;  // full-sample conditional estimate
  std::vector<std::string> ids;
  std::vector<double> values;

  std::size_t size() const noexcept { return ids.size(); }
};

/// Exact jackknife pseudovalues n F - (n-1) F^(-i) over the subjects with X > s.
PseudovalueVector pseudovalues(const SurvivalDataset& ds, double s, double w, int cause = 1,
                               PseudoTarget target = PseudoTarget::Cause);

/// id,s,w,q
void write_pseudovalues_csv(std::ostream& os, const PseudovalueVector& pv);

}  // namespace lmpsh
