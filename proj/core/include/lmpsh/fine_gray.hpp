#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "lmpsh/dataset.hpp"
#include "lmpsh/step_function.hpp"

namespace lmpsh {

struct LogLikelihood {
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
};

/// Weighted Breslow log partial likelihood over events of interest, with
/// delayed entry: the risk set of an event at t is every row of the same stratum
/// with start < t <= stop. Exact analytic gradient and hessian.
///
/// Throws NumericalError when exp(z'beta) overflows.
LogLikelihood partial_loglik(const CountingProcessTable& cp, const Eigen::VectorXd& beta);

struct FitOptions {
  int max_iterations = 50;
  double tolerance = 1e-8;  // sup-norm of the score at exit
  int max_halvings = 40;
  bool center = true;
  bool compute_robust = true;
};

struct PSHFit {
  std::vector<std::string> covariate_names;
  Eigen::VectorXd beta;
  /// Cumulative baseline subdistribution hazard, one per stratum, on the original covariate scale.
  std::vector<StepFunction> baselines;
  Eigen::MatrixXd cov_model;
  Eigen::MatrixXd cov_robust;
  int iterations = 0;
  bool converged = false;
  double loglik = 0.0;
  double loglik_null = 0.0;
  std::size_t num_rows = 0;
  std::size_t num_events = 0;
  std::size_t num_clusters = 0;
  std::size_t truncated = 0;

  // Landmark metadata; empty for a plain Fine-Gray fit.
  std::optional<double> landmark;
  std::optional<double> window;
  std::string variant = "psh";

  const StepFunction& baseline(int stratum = 0) const { return baselines.at(static_cast<std::size_t>(stratum)); }
  Eigen::VectorXd robust_se() const { return cov_robust.diagonal().cwiseSqrt(); }
  Eigen::VectorXd model_se() const { return cov_model.diagonal().cwiseSqrt(); }
};

/// Newton-Raphson with step-halving on internally centered covariates.
/// Returns converged = false after max_iterations; throws RankDeficientError when
/// a column is constant or the design is collinear, DataError without events.
PSHFit fit_fine_gray(const CountingProcessTable& cp, const FitOptions& options = {});

/// Lambda(t) = sum over event times e <= t of (sum of event weights) / sum_{r in risk(e)} w_r exp(z_r'beta),
/// per stratum.
std::vector<StepFunction> breslow_baseline(const CountingProcessTable& cp, const Eigen::VectorXd& beta);

/// I^-1 (sum_g U_g U_g') I^-1 with U_g the summed weighted score residuals of all
/// rows sharing a subject id.
Eigen::MatrixXd robust_variance(const CountingProcessTable& cp, const Eigen::VectorXd& beta);

/// Per-row weighted score residuals (rows x p); they sum to the score.
Eigen::MatrixXd score_residuals(const CountingProcessTable& cp, const Eigen::VectorXd& beta);

/// 1 - exp(-exp(z'beta) Lambda(t)).
double predict_cif(const PSHFit& fit, std::span<const double> z, double t, int stratum = 0);

double linear_predictor(const Eigen::VectorXd& beta, std::span<const double> z);

}  // namespace lmpsh
