#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "lmpsh/dataset.hpp"
#include "lmpsh/fine_gray.hpp"

namespace lmpsh {

/// Polynomial c0 + c1 s + c2 s^2 + ... in the landmark time.
struct PolyTerm {
  std::vector<double> coef;

  static PolyTerm power(int k);
  double operator()(double s) const;
  /// "1", "s", "s^2", or a generic "poly(c0;c1;...)".
  std::string label() const;
  friend bool operator==(const PolyTerm&, const PolyTerm&) = default;
};

struct BasisSpec {
  std::vector<PolyTerm> f;  // landmark-varying covariate effects
  std::vector<PolyTerm> g;  // landmark-varying baseline shift; each must vanish at the grid origin

  static BasisSpec constant();                  // f = {1}, g = {}
  static BasisSpec linear();                    // f = {1, s}, g = {s}
  static BasisSpec quadratic();                 // f = {1, s, s^2}, g = {s, s^2}
  /// "const", "linear" or "quad"; ConfigError otherwise.
  static BasisSpec named(const std::string& name);
  friend bool operator==(const BasisSpec&, const BasisSpec&) = default;
};

enum class SupermodelVariant { Psh, Cox };
std::string to_string(SupermodelVariant v);
SupermodelVariant parse_variant(const std::string& name);

/// from:step:to, inclusive of `to` up to rounding.
std::vector<double> make_grid(double from, double step, double to);
/// Parses "a:step:b" or a comma-separated list.
std::vector<double> parse_grid(const std::string& text);

struct StackOptions {
  SupermodelVariant variant = SupermodelVariant::Psh;
  /// Separate baseline per landmark; g terms are dropped.
  bool stratified = false;
  unsigned jobs = 1;
};

struct StackedDataset {
  CountingProcessTable table;
  std::vector<std::string> base_names;
  std::vector<double> grid;     // landmarks actually stacked
  std::vector<double> dropped;  // landmarks with an empty subset
  double w = 0.0;
  BasisSpec basis;
  StackOptions options;
  std::size_t truncated = 0;
  std::vector<std::string> warnings;

  /// Number of landmark subsets each subject (cluster) appears in.
  std::vector<std::size_t> repeats() const;
};

/// Landmark subsets at each grid point with subset-local IPCW weights, delayed entry
/// at s, columns Z_j*f_m(s) followed by g_l(s), stacked in grid order.
StackedDataset build_stacked(const SurvivalDataset& ds, std::span<const double> grid, double w,
                             const BasisSpec& basis = BasisSpec::quadratic(), const StackOptions& options = {});

struct SupermodelFit {
  std::vector<std::string> covariate_names;  // unexpanded covariates
  BasisSpec basis;
  std::vector<double> grid;
  double w = 0.0;
  SupermodelVariant variant = SupermodelVariant::Psh;
  bool stratified = false;
  Eigen::MatrixXd theta;  // covariates x f terms
  Eigen::VectorXd eta;    // g terms
  PSHFit model;           // the fit on the stacked table (expanded names, baselines, covariances)

  Eigen::VectorXd beta_lm_at(double s) const;
  double gamma_at(double s) const;
  /// Eq. 4 conditional CIF for covariates measured at s.
  double predict(std::span<const double> z_s, double s, double w) const;
  /// Index of the coefficient of covariate j and f term m in model.beta.
  std::size_t theta_index(std::size_t j, std::size_t m) const { return j * basis.f.size() + m; }
};

SupermodelFit fit_supermodel(const StackedDataset& stacked, const FitOptions& options = {});

struct WaldResult {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
};

/// Joint Wald test that beta[indices] = 0 under covariance `cov`.
WaldResult wald_test(const Eigen::VectorXd& beta, const Eigen::MatrixXd& cov, std::span<const std::size_t> indices);

/// Joint robust Wald test that the listed f-term coefficients of a covariate are zero.
WaldResult wald_test(const SupermodelFit& fit, const std::string& covariate, std::span<const std::size_t> terms);

/// Joint robust Wald test that every baseline shift coefficient is zero.
WaldResult wald_test_baseline(const SupermodelFit& fit);

}  // namespace lmpsh
