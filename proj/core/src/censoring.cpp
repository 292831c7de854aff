#include "lmpsh/censoring.hpp"

#include <algorithm>
#include <vector>

namespace lmpsh {

StepFunction km_censoring(const SurvivalDataset& ds) {
  struct Obs {
    double time;
    bool censoring;
  };
  std::vector<Obs> obs;
  obs.reserve(ds.size());
  for (const auto& r : ds.rows()) obs.push_back({r.time, r.status == 0 && !r.administrative});
  std::sort(obs.begin(), obs.end(), [](const Obs& a, const Obs& b) { return a.time < b.time; });

  std::vector<double> times, values;
  double surv = 1.0;
  std::size_t at_risk = obs.size();
  std::size_t i = 0;
  while (i < obs.size()) {
    const double t = obs[i].time;
    std::size_t censored = 0, failed = 0;
    for (; i < obs.size() && obs[i].time == t; ++i) {
      (obs[i].censoring ? censored : failed) += 1;
    }
    // Failures at t precede censoring at t.
    const std::size_t risk = at_risk - failed;
    if (censored > 0) {
      surv *= 1.0 - static_cast<double>(censored) / static_cast<double>(risk);
      times.push_back(t);
      values.push_back(surv);
    }
    at_risk -= censored + failed;
  }
  return StepFunction(1.0, std::move(times), std::move(values));
}

}  // namespace lmpsh
