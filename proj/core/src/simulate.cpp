#include "lmpsh/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include <json.hpp>

#include "lmpsh/errors.hpp"
#include "lmpsh/parallel.hpp"
#include "lmpsh/rng.hpp"

namespace lmpsh {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::uint64_t kPilotSeed = 0x70696c6f74ULL;
constexpr std::size_t kPilotSize = 20000;

void check(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

void validate_censoring(const CensoringParams& c) {
  check(c.upper > 0.0, "censoring upper bound must be positive");
  check(c.target_fraction >= 0.0 && c.target_fraction < 1.0, "censoring fraction must lie in [0, 1)");
}

// Draw indices within one subject's stream.
enum Draw : std::uint64_t { kCovariate = 0, kCause = 1, kTime = 2, kCensor = 3, kOnset = 4 };

double one_minus_exp_neg(double x) { return -std::expm1(-x); }

// Cumulative subdistribution hazard of the second setting.
double setting2_cumhaz(const Setting2Params& q, double z, double t) {
  if (t <= 0.0) return 0.0;
  const double zb = z * q.beta22;
  if (std::isinf(t)) return zb > 0.0 ? kInf : -std::exp(z * q.beta21) * std::log1p(-q.p);
  const double base = q.p * one_minus_exp_neg(std::pow(q.lambda2 * t, q.alpha2));
  return -std::exp(z * q.beta21) * std::pow(t + 1.0, zb) * std::log1p(-base);
}

// Subject hazard with the switch at `onset`.
double switched_cumhaz(const Setting2Params& q, double z, double onset, double beta_td, double t) {
  if (t <= onset) return setting2_cumhaz(q, z, t);
  const double at_onset = setting2_cumhaz(q, z, onset);
  return at_onset + std::exp(beta_td) * (setting2_cumhaz(q, z, t) - at_onset);
}

template <class F>
double invert_increasing(F&& fn, double target) {
  double lo = 0.0, hi = 1.0;
  while (fn(hi) < target) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e12) throw NumericalError("event-time inversion failed to bracket the target");
  }
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    if (fn(mid) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

struct Latent {
  double z = 0.0;
  double time = 0.0;
  int cause = 1;
  double onset = kInf;
};

Latent latent_setting1(const Setting1Params& q, const CounterRng& rng) {
  Latent out;
  out.z = rng.uniform_at(kCovariate) < 0.5 ? 1.0 : 0.0;
  const double u = rng.uniform_at(kTime);
  if (rng.uniform_at(kCause) < q.p) {
    out.cause = 1;
    out.time = std::pow(-std::log1p(-u), 1.0 / q.alpha1) / (q.lambda1 * std::exp(out.z * q.beta1));
  } else {
    out.cause = 2;
    out.time = -std::log1p(-u) / std::exp(out.z * q.beta_c);
  }
  return out;
}

Latent latent_switched(const Setting2Params& q, double onset_rate, double beta_td, const CounterRng& rng) {
  Latent out;
  out.z = rng.uniform_at(kCovariate) < 0.5 ? 1.0 : 0.0;
  if (onset_rate > 0.0) out.onset = -std::log1p(-rng.uniform_at(kOnset)) / onset_rate;
  const double total = switched_cumhaz(q, out.z, out.onset, beta_td, kInf);
  const double f1_inf = one_minus_exp_neg(total);
  const double u = rng.uniform_at(kTime);
  if (rng.uniform_at(kCause) < f1_inf) {
    out.cause = 1;
    const double target = -std::log1p(-u * f1_inf);
    out.time = invert_increasing([&](double t) { return switched_cumhaz(q, out.z, out.onset, beta_td, t); }, target);
  } else {
    out.cause = 2;
    out.time = -std::log1p(-u) / std::exp(out.z * q.beta_c);
  }
  return out;
}

SubjectRecord observe(std::size_t i, const Latent& lat, double upper, const CounterRng& rng, bool with_switch) {
  SubjectRecord r;
  r.id = std::to_string(i + 1);
  const double c = std::isinf(upper) ? kInf : rng.uniform_at(kCensor) * upper;
  if (lat.time <= c) {
    r.time = lat.time;
    r.status = 1;
    r.cause = lat.cause;
  } else {
    r.time = c;
  }
  r.covariates = {lat.z};
  if (with_switch) {
    r.covariates.push_back(0.0);
    if (lat.onset < r.time) {
      r.segments.push_back({0.0, lat.onset, {lat.z, 0.0}});
      r.segments.push_back({lat.onset, r.time, {lat.z, 1.0}});
    }
  }
  return r;
}

template <class Gen>
std::vector<double> pilot_times(Gen&& gen) {
  std::vector<double> t(kPilotSize);
  for (std::size_t i = 0; i < kPilotSize; ++i) t[i] = gen(CounterRng(kPilotSeed, i)).time;
  return t;
}

double resolve_upper(const CensoringParams& c, const std::function<double(double)>& calibrate) {
  if (c.target_fraction > 0.0) return calibrate(c.target_fraction);
  return c.upper;
}

}  // namespace

void Setting1Params::validate() const {
  check(p > 0.0 && p <= 1.0, "p must lie in (0, 1]");
  check(alpha1 > 0.0 && std::isfinite(alpha1), "alpha1 must be positive");
  check(lambda1 > 0.0 && std::isfinite(lambda1), "lambda1 must be positive");
  check(std::isfinite(beta1) && std::isfinite(beta_c), "coefficients must be finite");
  validate_censoring(censoring);
}

void Setting2Params::validate() const {
  check(p > 0.0 && p < 1.0, "p must lie in (0, 1)");
  check(alpha2 > 0.0 && std::isfinite(alpha2), "alpha2 must be positive");
  check(lambda2 > 0.0 && std::isfinite(lambda2), "lambda2 must be positive");
  check(std::isfinite(beta21) && std::isfinite(beta_c), "coefficients must be finite");
  check(beta22 >= 0.0 && std::isfinite(beta22), "beta22 must be finite and nonnegative");
  validate_censoring(censoring);
}

void TdCovParams::validate() const {
  base.validate();
  check(onset_rate >= 0.0 && std::isfinite(onset_rate), "onset rate must be finite and nonnegative");
  check(std::isfinite(beta_td), "beta_td must be finite");
}

double calibrate_uniform_bound(std::span<const double> latent_times, double target) {
  if (!(target > 0.0 && target < 1.0)) throw ConfigError("censoring fraction must lie in (0, 1)");
  if (latent_times.empty()) throw DataError("no latent times to calibrate against");
  auto fraction = [&](double b) {
    double acc = 0.0;
    for (double t : latent_times) acc += std::min(t, b);
    return acc / (static_cast<double>(latent_times.size()) * b);
  };
  double lo = *std::min_element(latent_times.begin(), latent_times.end());
  double hi = *std::max_element(latent_times.begin(), latent_times.end());
  while (fraction(hi) > target) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (fraction(mid) > target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double calibrate_censoring(const Setting1Params& params, double target) {
  params.validate();
  return calibrate_uniform_bound(pilot_times([&](const CounterRng& r) { return latent_setting1(params, r); }), target);
}

double calibrate_censoring(const Setting2Params& params, double target) {
  params.validate();
  return calibrate_uniform_bound(
      pilot_times([&](const CounterRng& r) { return latent_switched(params, 0.0, 0.0, r); }), target);
}

double calibrate_censoring(const TdCovParams& params, double target) {
  params.validate();
  return calibrate_uniform_bound(pilot_times([&](const CounterRng& r) {
                                   return latent_switched(params.base, params.onset_rate, params.beta_td, r);
                                 }),
                                 target);
}

SurvivalDataset sim_setting1(std::size_t n, const Setting1Params& params, std::uint64_t seed, unsigned jobs) {
  params.validate();
  const double upper = resolve_upper(params.censoring, [&](double f) { return calibrate_censoring(params, f); });
  std::vector<SubjectRecord> rows(n);
  parallel_for(n, jobs, [&](std::size_t i) {
    const CounterRng rng(seed, i);
    rows[i] = observe(i, latent_setting1(params, rng), upper, rng, false);
  });
  return SurvivalDataset(std::move(rows), {"Z"});
}

SurvivalDataset sim_setting2(std::size_t n, const Setting2Params& params, std::uint64_t seed, unsigned jobs) {
  params.validate();
  const double upper = resolve_upper(params.censoring, [&](double f) { return calibrate_censoring(params, f); });
  std::vector<SubjectRecord> rows(n);
  parallel_for(n, jobs, [&](std::size_t i) {
    const CounterRng rng(seed, i);
    rows[i] = observe(i, latent_switched(params, 0.0, 0.0, rng), upper, rng, false);
  });
  return SurvivalDataset(std::move(rows), {"Z"});
}

SurvivalDataset sim_tdcov(std::size_t n, const TdCovParams& params, std::uint64_t seed, unsigned jobs) {
  params.validate();
  const double upper =
      resolve_upper(params.base.censoring, [&](double f) { return calibrate_censoring(params, f); });
  std::vector<SubjectRecord> rows(n);
  parallel_for(n, jobs, [&](std::size_t i) {
    const CounterRng rng(seed, i);
    rows[i] = observe(i, latent_switched(params.base, params.onset_rate, params.beta_td, rng), upper, rng, true);
  });
  return SurvivalDataset(std::move(rows), {"Z", "Ztd"});
}

double true_cif(const Setting1Params& q, int cause, double z, double t) {
  if (t <= 0.0) return 0.0;
  if (cause == 1) {
    if (std::isinf(t)) return q.p;
    return q.p * one_minus_exp_neg(std::pow(q.lambda1 * std::exp(z * q.beta1) * t, q.alpha1));
  }
  if (cause == 2) return (1.0 - q.p) * (std::isinf(t) ? 1.0 : one_minus_exp_neg(std::exp(z * q.beta_c) * t));
  throw ConfigError("cause must be 1 or 2");
}

double true_cif(const Setting2Params& q, int cause, double z, double t) {
  if (t <= 0.0) return 0.0;
  if (cause == 1) return one_minus_exp_neg(setting2_cumhaz(q, z, t));
  if (cause == 2) {
    const double rest = 1.0 - one_minus_exp_neg(setting2_cumhaz(q, z, kInf));
    return rest * (std::isinf(t) ? 1.0 : one_minus_exp_neg(std::exp(z * q.beta_c) * t));
  }
  throw ConfigError("cause must be 1 or 2");
}

namespace {

template <class P>
double conditional(const P& q, double z, double s, double w) {
  const double f1s = true_cif(q, 1, z, s);
  const double surv = 1.0 - f1s - true_cif(q, 2, z, s);
  if (!(surv > 0.0)) return 0.0;
  return (true_cif(q, 1, z, s + w) - f1s) / surv;
}

}  // namespace

double true_conditional_cif(const Setting1Params& params, double z, double s, double w) {
  return conditional(params, z, s, w);
}

double true_conditional_cif(const Setting2Params& params, double z, double s, double w) {
  return conditional(params, z, s, w);
}

SurvivalDataset simulate(const SimulationConfig& config, unsigned jobs) {
  if (config.n < 1) throw ConfigError("n must be at least 1");
  switch (config.setting) {
    case 1:
      return sim_setting1(config.n, config.setting1, config.seed, jobs);
    case 2:
      return sim_setting2(config.n, config.setting2, config.seed, jobs);
    case 3:
      return sim_tdcov(config.n, config.tdcov, config.seed, jobs);
    default:
      throw ConfigError("setting must be 1, 2 or 3");
  }
}

namespace {

nlohmann::json censoring_json(const CensoringParams& c, double realized) {
  nlohmann::json j;
  j["target_fraction"] = c.target_fraction;
  if (std::isinf(realized)) {
    j["upper"] = nullptr;
  } else {
    j["upper"] = realized;
  }
  return j;
}

}  // namespace

std::string simulation_manifest(const SimulationConfig& config) {
  nlohmann::json j;
  j["n"] = config.n;
  j["seed"] = config.seed;
  j["setting"] = config.setting;
  nlohmann::json params;
  if (config.setting == 1) {
    const auto& q = config.setting1;
    j["generator"] = "setting1";
    params = {{"p", q.p}, {"alpha1", q.alpha1}, {"lambda1", q.lambda1}, {"beta1", q.beta1}, {"beta_c", q.beta_c}};
    params["censoring"] =
        censoring_json(q.censoring, resolve_upper(q.censoring, [&](double f) { return calibrate_censoring(q, f); }));
  } else {
    const auto& q = config.setting == 2 ? config.setting2 : config.tdcov.base;
    j["generator"] = config.setting == 2 ? "setting2" : "tdcov";
    params = {{"p", q.p},           {"alpha2", q.alpha2}, {"lambda2", q.lambda2},
              {"beta21", q.beta21}, {"beta22", q.beta22}, {"beta_c", q.beta_c}};
    double upper = 0.0;
    if (config.setting == 2) {
      upper = resolve_upper(q.censoring, [&](double f) { return calibrate_censoring(q, f); });
    } else {
      params["onset_rate"] = config.tdcov.onset_rate;
      params["beta_td"] = config.tdcov.beta_td;
      upper = resolve_upper(q.censoring, [&](double f) { return calibrate_censoring(config.tdcov, f); });
    }
    params["censoring"] = censoring_json(q.censoring, upper);
  }
  j["params"] = params;
  return j.dump(2);
}

}  // namespace lmpsh
