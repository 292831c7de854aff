#include "lmpsh/supermodel.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <unordered_map>

#include <Eigen/Cholesky>
#include <boost/math/distributions/chi_squared.hpp>

#include "lmpsh/errors.hpp"
#include "lmpsh/landmark.hpp"
#include "lmpsh/parallel.hpp"

namespace lmpsh {

PolyTerm PolyTerm::power(int k) {
  if (k < 0) throw ConfigError("negative polynomial power");
  PolyTerm t;
  t.coef.assign(static_cast<std::size_t>(k) + 1, 0.0);
  t.coef.back() = 1.0;
  return t;
}

double PolyTerm::operator()(double s) const {
  double v = 0.0;
  for (auto it = coef.rbegin(); it != coef.rend(); ++it) v = v * s + *it;
  return v;
}

std::string PolyTerm::label() const {
  std::size_t nonzero = 0, last = 0;
  for (std::size_t k = 0; k < coef.size(); ++k) {
    if (coef[k] != 0.0) {
      ++nonzero;
      last = k;
    }
  }
  if (nonzero == 1 && coef[last] == 1.0) {
    if (last == 0) return "1";
    if (last == 1) return "s";
    return "s^" + std::to_string(last);
  }
  std::string out = "poly(";
  for (std::size_t k = 0; k < coef.size(); ++k) {
    if (k > 0) out += ';';
    out += format_double(coef[k]);
  }
  return out + ")";
}

BasisSpec BasisSpec::constant() { return {{PolyTerm::power(0)}, {}}; }
BasisSpec BasisSpec::linear() { return {{PolyTerm::power(0), PolyTerm::power(1)}, {PolyTerm::power(1)}}; }
BasisSpec BasisSpec::quadratic() {
  return {{PolyTerm::power(0), PolyTerm::power(1), PolyTerm::power(2)}, {PolyTerm::power(1), PolyTerm::power(2)}};
}

BasisSpec BasisSpec::named(const std::string& name) {
  if (name == "const" || name == "constant") return constant();
  if (name == "linear") return linear();
  if (name == "quad" || name == "quadratic") return quadratic();
  throw ConfigError("unknown basis '" + name + "' (expected const, linear or quad)");
}

std::string to_string(SupermodelVariant v) { return v == SupermodelVariant::Psh ? "psh" : "cox"; }

SupermodelVariant parse_variant(const std::string& name) {
  if (name == "psh") return SupermodelVariant::Psh;
  if (name == "cox") return SupermodelVariant::Cox;
  throw ConfigError("unknown variant '" + name + "' (expected psh or cox)");
}

std::vector<double> make_grid(double from, double step, double to) {
  if (!(step > 0.0) || !std::isfinite(from) || !std::isfinite(to) || to < from) {
    throw ConfigError("invalid landmark grid");
  }
  const auto n = static_cast<std::size_t>(std::floor((to - from) / step + 1e-9));
  std::vector<double> grid;
  grid.reserve(n + 1);
  for (std::size_t k = 0; k <= n; ++k) {
    grid.push_back(std::round((from + static_cast<double>(k) * step) * 1e10) / 1e10);
  }
  return grid;
}

std::vector<double> parse_grid(const std::string& text) {
  auto parse = [&](const std::string& piece) {
    try {
      return parse_double(piece);
    } catch (const DataError&) {
      throw ConfigError("invalid landmark grid '" + text + "'");
    }
  };
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    if (parts.size() != 3) throw ConfigError("grid must be from:step:to, got '" + text + "'");
    return make_grid(parse(parts[0]), parse(parts[1]), parse(parts[2]));
  }
  std::vector<double> grid;
  std::stringstream ss(text);
  for (std::string p; std::getline(ss, p, ',');) grid.push_back(parse(p));
  if (grid.empty()) throw ConfigError("empty landmark grid");
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (!(grid[k] >= 0.0) || !std::isfinite(grid[k]) || (k > 0 && !(grid[k] > grid[k - 1]))) {
      throw ConfigError("landmark grid must be finite, nonnegative and increasing, got '" + text + "'");
    }
  }
  return grid;
}

std::vector<std::size_t> StackedDataset::repeats() const {
  std::vector<std::size_t> count(table.cluster_ids.size(), 0);
  std::vector<double> seen(table.cluster_ids.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t r = 0; r < table.rows(); ++r) {
    const std::size_t c = table.cluster[r];
    if (!(seen[c] == table.landmark[r])) {
      ++count[c];
      seen[c] = table.landmark[r];
    }
  }
  return count;
}

StackedDataset build_stacked(const SurvivalDataset& ds, std::span<const double> grid, double w, const BasisSpec& basis,
                             const StackOptions& options) {
  if (grid.empty()) throw ConfigError("empty landmark grid");
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (!(grid[k] >= 0.0) || !std::isfinite(grid[k])) throw ConfigError("landmarks must be finite and nonnegative");
    if (k > 0 && !(grid[k] > grid[k - 1])) throw ConfigError("landmark grid must be strictly increasing");
  }
  if (!(w > 0.0)) throw ConfigError("prediction window must be positive");
  if (basis.f.empty()) throw ConfigError("basis needs at least one f term");
  for (const auto& g : basis.g) {
    if (std::abs(g(grid.front())) > 1e-12) {
      throw ConfigError("g term '" + g.label() + "' is nonzero at the first landmark " + format_double(grid.front()) +
                        "; identifiability requires g(s0) = 0");
    }
  }

  StackedDataset out;
  out.base_names = ds.covariate_names();
  out.w = w;
  out.basis = basis;
  out.options = options;
  const std::size_t p = ds.num_covariates();
  const std::size_t mf = basis.f.size();
  const std::size_t mg = options.stratified ? 0 : basis.g.size();
  auto& names = out.table.covariate_names;
  for (std::size_t j = 0; j < p; ++j) {
    for (const auto& f : basis.f) {
      const std::string l = f.label();
      names.push_back(l == "1" ? out.base_names[j] : out.base_names[j] + "*" + l);
    }
  }
  for (std::size_t l = 0; l < mg; ++l) names.push_back(basis.g[l].label());

  LandmarkOptions lo;
  lo.competing_as_censoring = options.variant == SupermodelVariant::Cox;
  std::vector<std::optional<CountingProcessResult>> parts(grid.size());
  parallel_for(grid.size(), options.jobs, [&](std::size_t k) {
    bool any = false;
    for (const auto& r : ds.rows()) {
      if (r.time > grid[k]) {
        any = true;
        break;
      }
    }
    if (any) parts[k] = landmark_counting_process(ds, {grid[k], w}, lo);
  });

  std::unordered_map<std::string, std::size_t> cluster_of;
  std::vector<double> row(names.size());
  std::size_t total = 0;
  for (const auto& part : parts) total += part ? part->table.rows() : 0;
  out.table.reserve(total);
  int stratum = 0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (!parts[k]) {
      out.dropped.push_back(grid[k]);
      out.warnings.push_back("landmark " + format_double(grid[k]) + " has an empty risk set and was dropped");
      continue;
    }
    const double s = grid[k];
    const auto& cp = parts[k]->table;
    out.truncated += parts[k]->truncated;
    std::vector<double> fv(mf), gv(mg);
    for (std::size_t m = 0; m < mf; ++m) fv[m] = basis.f[m](s);
    for (std::size_t l = 0; l < mg; ++l) gv[l] = basis.g[l](s);
    std::vector<std::size_t> remap(cp.cluster_ids.size());
    for (std::size_t c = 0; c < cp.cluster_ids.size(); ++c) {
      auto [it, inserted] = cluster_of.emplace(cp.cluster_ids[c], out.table.cluster_ids.size());
      if (inserted) out.table.cluster_ids.push_back(cp.cluster_ids[c]);
      remap[c] = it->second;
    }
    for (std::size_t r = 0; r < cp.rows(); ++r) {
      const auto z = cp.row(r);
      for (std::size_t j = 0; j < p; ++j) {
        for (std::size_t m = 0; m < mf; ++m) row[j * mf + m] = z[j] * fv[m];
      }
      for (std::size_t l = 0; l < mg; ++l) row[p * mf + l] = gv[l];
      out.table.push_row(remap[cp.cluster[r]], cp.start[r], cp.stop[r], cp.status[r], cp.weight[r], row,
                         options.stratified ? stratum : 0, s);
    }
    out.grid.push_back(s);
    ++stratum;
  }
  if (out.grid.empty()) throw DataError("every landmark subset is empty");
  if (!ds.empty() && out.grid.back() + w > ds.max_time()) {
    out.warnings.push_back("window at the last landmark extends beyond the observed follow-up");
  }
  return out;
}

SupermodelFit fit_supermodel(const StackedDataset& stacked, const FitOptions& options) {
  SupermodelFit fit;
  fit.covariate_names = stacked.base_names;
  fit.basis = stacked.basis;
  fit.grid = stacked.grid;
  fit.w = stacked.w;
  fit.variant = stacked.options.variant;
  fit.stratified = stacked.options.stratified;
  if (fit.stratified) fit.basis.g.clear();
  fit.model = fit_fine_gray(stacked.table, options);
  fit.model.truncated = stacked.truncated;
  fit.model.window = stacked.w;
  fit.model.variant = to_string(fit.variant);

  const auto p = static_cast<Eigen::Index>(fit.covariate_names.size());
  const auto mf = static_cast<Eigen::Index>(fit.basis.f.size());
  const auto mg = static_cast<Eigen::Index>(fit.basis.g.size());
  fit.theta.resize(p, mf);
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index m = 0; m < mf; ++m) fit.theta(j, m) = fit.model.beta[j * mf + m];
  }
  fit.eta = fit.model.beta.segment(p * mf, mg);
  return fit;
}

namespace {

void check_range(const SupermodelFit& fit, double s) {
  const double tol = 1e-9 * (1.0 + std::abs(s));
  if (fit.grid.empty() || s < fit.grid.front() - tol || s > fit.grid.back() + tol) {
    throw ConfigError("landmark " + format_double(s) + " is outside the fitted grid range");
  }
}

}  // namespace

Eigen::VectorXd SupermodelFit::beta_lm_at(double s) const {
  check_range(*this, s);
  Eigen::VectorXd f(static_cast<Eigen::Index>(basis.f.size()));
  for (std::size_t m = 0; m < basis.f.size(); ++m) f[static_cast<Eigen::Index>(m)] = basis.f[m](s);
  return theta * f;
}

double SupermodelFit::gamma_at(double s) const {
  check_range(*this, s);
  double v = 0.0;
  for (std::size_t l = 0; l < basis.g.size(); ++l) v += eta[static_cast<Eigen::Index>(l)] * basis.g[l](s);
  return v;
}

double SupermodelFit::predict(std::span<const double> z_s, double s, double window) const {
  check_range(*this, s);
  if (std::abs(window - w) > 1e-9 * (1.0 + w)) {
    throw ConfigError("prediction window " + format_double(window) + " differs from the fitted window " +
                      format_double(w));
  }
  int stratum = 0;
  if (stratified) {
    const auto it = std::find_if(grid.begin(), grid.end(),
                                 [&](double g) { return std::abs(g - s) <= 1e-9 * (1.0 + std::abs(s)); });
    if (it == grid.end()) throw ConfigError("stratified supermodel predicts only at grid landmarks");
    stratum = static_cast<int>(it - grid.begin());
  }
  const Eigen::VectorXd b = beta_lm_at(s);
  const double lp = linear_predictor(b, z_s) + gamma_at(s);
  const auto& L = model.baseline(stratum);
  const double dL = L(s + w) - L.at_minus(s);
  return std::clamp(-std::expm1(-std::exp(lp) * dL), 0.0, 1.0);
}

WaldResult wald_test(const Eigen::VectorXd& beta, const Eigen::MatrixXd& cov, std::span<const std::size_t> indices) {
  if (indices.empty()) throw ConfigError("Wald test needs at least one term");
  if (cov.size() == 0) throw NumericalError("covariance not available");
  const auto q = static_cast<Eigen::Index>(indices.size());
  Eigen::VectorXd b(q);
  Eigen::MatrixXd V(q, q);
  for (Eigen::Index a = 0; a < q; ++a) {
    const auto ia = static_cast<Eigen::Index>(indices[static_cast<std::size_t>(a)]);
    if (ia >= beta.size()) throw ConfigError("coefficient index out of range");
    b[a] = beta[ia];
    for (Eigen::Index c = 0; c < q; ++c) V(a, c) = cov(ia, static_cast<Eigen::Index>(indices[static_cast<std::size_t>(c)]));
  }
  WaldResult res;
  res.dof = static_cast<int>(q);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(V);
  const auto D = ldlt.vectorD();
  if (ldlt.info() != Eigen::Success || !(D.minCoeff() > 1e-14 * std::max(1.0, D.cwiseAbs().maxCoeff()))) {
    throw RankDeficientError("singular covariance submatrix in Wald test");
  }
  if (b.isZero(0.0)) return res;
  res.statistic = b.dot(ldlt.solve(b));
  boost::math::chi_squared chi(static_cast<double>(q));
  res.p_value = boost::math::cdf(boost::math::complement(chi, res.statistic));
  return res;
}

WaldResult wald_test(const SupermodelFit& fit, const std::string& covariate, std::span<const std::size_t> terms) {
  const auto it = std::find(fit.covariate_names.begin(), fit.covariate_names.end(), covariate);
  if (it == fit.covariate_names.end()) throw ConfigError("unknown covariate '" + covariate + "'");
  if (terms.empty()) throw ConfigError("Wald test needs at least one term");
  if (fit.model.cov_robust.size() == 0) throw NumericalError("robust covariance not available");
  const std::size_t j = static_cast<std::size_t>(it - fit.covariate_names.begin());
  std::vector<std::size_t> idx;
  for (std::size_t m : terms) {
    if (m >= fit.basis.f.size()) throw ConfigError("basis term index out of range");
    idx.push_back(fit.theta_index(j, m));
  }
  return wald_test(fit.model.beta, fit.model.cov_robust, idx);
}

WaldResult wald_test_baseline(const SupermodelFit& fit) {
  if (fit.eta.size() == 0) throw ConfigError("the supermodel has no baseline terms");
  if (fit.model.cov_robust.size() == 0) throw NumericalError("robust covariance not available");
  const std::size_t first = fit.covariate_names.size() * fit.basis.f.size();
  std::vector<std::size_t> idx;
  for (Eigen::Index l = 0; l < fit.eta.size(); ++l) idx.push_back(first + static_cast<std::size_t>(l));
  return wald_test(fit.model.beta, fit.model.cov_robust, idx);
}

}  // namespace lmpsh
