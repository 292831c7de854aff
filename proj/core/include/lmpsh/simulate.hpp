#pragma once

#include <cstdint>
#include <limits>
#include <string>

#include "lmpsh/dataset.hpp"

namespace lmpsh {

/// Independent U(0, upper) censoring. A positive target fraction replaces `upper`
/// by the bound whose expected censored fraction equals the target.
struct CensoringParams {
  double upper = std::numeric_limits<double>::infinity();
  double target_fraction = 0.0;
};

/// F1(t; Z) = p (1 - exp(-(lambda1 exp(Z beta1) t)^alpha1)); competing cause
/// exponential with rate exp(Z beta_c).
struct Setting1Params {
  double p = 0.3;
  double alpha1 = 3.2;
  double lambda1 = 0.18;
  double beta1 = -0.81;
  double beta_c = 0.5;
  CensoringParams censoring;

  void validate() const;
};

/// F1(t; Z) = 1 - (1 - p (1 - exp(-(lambda2 t)^alpha2)))^exp(Z beta21 + Z beta22 log(t+1)).
struct Setting2Params {
  double p = 0.3;
  double alpha2 = 3.2;
  double lambda2 = 0.12;
  double beta21 = 0.8;
  double beta22 = 0.3;
  double beta_c = 0.5;
  CensoringParams censoring;

  void validate() const;
};

/// Setting 2 plus a binary covariate switching from 0 to 1 at an exponential onset
/// time; after the switch the subdistribution hazard is multiplied by exp(beta_td).
struct TdCovParams {
  Setting2Params base;
  double onset_rate = 0.25;
  double beta_td = 1.0;

  void validate() const;
};

SurvivalDataset sim_setting1(std::size_t n, const Setting1Params& params, std::uint64_t seed, unsigned jobs = 1);
SurvivalDataset sim_setting2(std::size_t n, const Setting2Params& params, std::uint64_t seed, unsigned jobs = 1);
SurvivalDataset sim_tdcov(std::size_t n, const TdCovParams& params, std::uint64_t seed, unsigned jobs = 1);

/// Uniform upper bound b with mean(min(T_i, b)) / b = target over the given latent times.
double calibrate_uniform_bound(std::span<const double> latent_times, double target);
/// Bound for the target fraction, found on a fixed pilot sample of uncensored times.
double calibrate_censoring(const Setting1Params& params, double target);
double calibrate_censoring(const Setting2Params& params, double target);
double calibrate_censoring(const TdCovParams& params, double target);

/// Closed-form CIF of cause 1 or 2 at t for covariate value z (t may be infinite).
double true_cif(const Setting1Params& params, int cause, double z, double t);
double true_cif(const Setting2Params& params, int cause, double z, double t);

/// (F1(s+w) - F1(s)) / (1 - F1(s) - F2(s)).
double true_conditional_cif(const Setting1Params& params, double z, double s, double w);
double true_conditional_cif(const Setting2Params& params, double z, double s, double w);

struct SimulationConfig {
  int setting = 1;  // 1, 2, or 3 for the time-dependent covariate generator
  std::size_t n = 1000;
  std::uint64_t seed = 1;
  Setting1Params setting1;
  Setting2Params setting2;
  TdCovParams tdcov;
};

SurvivalDataset simulate(const SimulationConfig& config, unsigned jobs = 1);
/// JSON description of the generator, parameters, realized censoring bound, n and seed.
std::string simulation_manifest(const SimulationConfig& config);

}  // namespace lmpsh
