#include "lmpsh/aalen_johansen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "lmpsh/errors.hpp"

namespace lmpsh {

StepFunction AalenJohansenFit::survival_function() const { return StepFunction(1.0, times, survival); }

StepFunction AalenJohansenFit::cif_function(int cause) const {
  const auto it = cif.find(cause);
  if (it == cif.end()) return StepFunction(0.0, times, std::vector<double>(times.size(), 0.0));
  return StepFunction(0.0, times, it->second);
}

AalenJohansenFit aalen_johansen(const SurvivalDataset& ds) {
  std::vector<std::size_t> order(ds.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ds[a].time < ds[b].time; });

  AalenJohansenFit fit;
  for (int c : ds.causes()) fit.cif[c];
  std::map<int, double> F;
  for (const auto& [c, _] : fit.cif) F[c] = 0.0;
  double S = 1.0;
  std::size_t at_risk = ds.size();
  std::size_t i = 0;
  std::map<int, std::size_t> d;
  while (i < order.size()) {
    const double t = ds[order[i]].time;
    d.clear();
    std::size_t dall = 0, leaving = 0;
    for (; i < order.size() && ds[order[i]].time == t; ++i) {
      const auto& r = ds[order[i]];
      ++leaving;
      if (r.status == 1) {
        ++d[r.cause];
        ++dall;
      }
    }
    if (dall > 0) {
      const double n = static_cast<double>(at_risk);
      for (auto& [c, f] : F) {
        const auto it = d.find(c);
        if (it != d.end()) f += S * static_cast<double>(it->second) / n;
      }
      S *= 1.0 - static_cast<double>(dall) / n;
      fit.times.push_back(t);
      fit.survival.push_back(S);
      for (const auto& [c, f] : F) fit.cif[c].push_back(f);
    }
    at_risk -= leaving;
  }
  return fit;
}

CIFEstimate aj_cif(const SurvivalDataset& ds, int cause) {
  // Causes without observed failures are valid labels with a zero CIF.
  if (cause < 1) throw DataError("unknown cause label " + std::to_string(cause));
  return {cause, aalen_johansen(ds).cif_function(cause)};
}

namespace {

// Distinct failure times in (s, s+w] with risk-set sizes and event counts,
// for the subjects with X > s.
struct WindowCounts {
  std::vector<double> times;
  std::vector<double> at_risk;
  std::vector<double> events;  // failures of any cause
  std::vector<double> target;  // failures counted in the numerator
};

WindowCounts window_counts(const SurvivalDataset& ds, double s, double w, int cause, PseudoTarget mode,
                           std::vector<std::size_t>* members) {
  const double horizon = s + w;
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds[i].time > s) idx.push_back(i);
  }
  std::vector<std::size_t> fail;
  for (std::size_t i : idx) {
    if (ds[i].status == 1 && ds[i].time <= horizon) fail.push_back(i);
  }
  std::sort(fail.begin(), fail.end(), [&](std::size_t a, std::size_t b) { return ds[a].time < ds[b].time; });
  std::vector<double> xs;
  xs.reserve(idx.size());
  for (std::size_t i : idx) xs.push_back(ds[i].time);
  std::sort(xs.begin(), xs.end());

  WindowCounts wc;
  for (std::size_t k = 0; k < fail.size();) {
    const double t = ds[fail[k]].time;
    double d = 0, d1 = 0;
    for (; k < fail.size() && ds[fail[k]].time == t; ++k) {
      d += 1;
      if (mode == PseudoTarget::AllCause || ds[fail[k]].cause == cause) d1 += 1;
    }
    const auto first = std::lower_bound(xs.begin(), xs.end(), t);
    wc.times.push_back(t);
    wc.at_risk.push_back(static_cast<double>(xs.end() - first));
    wc.events.push_back(d);
    wc.target.push_back(d1);
  }
  if (members != nullptr) *members = std::move(idx);
  return wc;
}

// Conditional CIF from the window counts after removing one subject with
// follow-up x (infinity when beyond the horizon), failure flag and target flag.
double window_estimate(const WindowCounts& wc, double x, bool removed_fails, bool removed_target) {
  double S = 1.0, F = 0.0;
  for (std::size_t k = 0; k < wc.times.size(); ++k) {
    double n = wc.at_risk[k], d = wc.events[k], d1 = wc.target[k];
    if (x >= wc.times[k]) n -= 1;
    if (removed_fails && x == wc.times[k]) {
      d -= 1;
      if (removed_target) d1 -= 1;
    }
    if (d <= 0 || n <= 0) continue;
    F += S * d1 / n;
    S *= 1.0 - d / n;
  }
  return F;
}

}  // namespace

double conditional_cif_np(const SurvivalDataset& ds, double s, double w, int cause) {
  std::vector<std::size_t> members;
  const auto wc = window_counts(ds, s, w, cause, PseudoTarget::Cause, &members);
  if (members.empty()) throw DataError("empty risk set at landmark " + format_double(s));
  return std::clamp(window_estimate(wc, -std::numeric_limits<double>::infinity(), false, false), 0.0, 1.0);
}

PseudovalueVector pseudovalues(const SurvivalDataset& ds, double s, double w, int cause, PseudoTarget target) {
  std::vector<std::size_t> members;
  const auto wc = window_counts(ds, s, w, cause, target, &members);
  const double n = static_cast<double>(members.size());
  if (members.size() < 2) throw DataError("pseudovalues need at least two subjects at risk at " + format_double(s));

  PseudovalueVector pv;
  pv.s = s;
  pv.w = w;
  pv.estimate = window_estimate(wc, -std::numeric_limits<double>::infinity(), false, false);
  const double horizon = s + w;

  struct Key {
    double x;
    int kind;  // 0 censored, 1 failure not in target, 2 target failure
    bool operator<(const Key& o) const { return x < o.x || (x == o.x && kind < o.kind); }
  };
  std::map<Key, double> cache;
  pv.ids.reserve(members.size());
  pv.values.reserve(members.size());
  for (std::size_t i : members) {
    const auto& r = ds[i];
    Key key{r.time > horizon ? std::numeric_limits<double>::infinity() : r.time, 0};
    if (r.status == 1 && r.time <= horizon) {
      key.kind = (target == PseudoTarget::AllCause || r.cause == cause) ? 2 : 1;
    }
    auto it = cache.find(key);
    if (it == cache.end()) {
      it = cache.emplace(key, window_estimate(wc, key.x, key.kind > 0, key.kind == 2)).first;
    }
    pv.ids.push_back(r.id);
    pv.values.push_back(n * pv.estimate - (n - 1.0) * it->second);
  }
  return pv;
}

void write_pseudovalues_csv(std::ostream& os, const PseudovalueVector& pv) {
  os << "id,s,w,q\n";
  for (std::size_t i = 0; i < pv.size(); ++i) {
    os << pv.ids[i] << ',' << format_double(pv.s) << ',' << format_double(pv.w) << ',' << format_double(pv.values[i])
       << '\n';
  }
}

}  // namespace lmpsh
