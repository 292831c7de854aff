#include "lmpsh/fine_gray.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "lmpsh/errors.hpp"

namespace lmpsh {

namespace {

constexpr double kMaxEta = 700.0;

// Event-time bookkeeping that does not depend on beta. For every row we store
// the half-open range [lo, hi) of event-time indices whose time lies in
// (start, stop], so risk-set sums become difference arrays over event times.
class RiskSetEngine {
 public:
  RiskSetEngine(const CountingProcessTable& cp, std::span<const double> center) : cp_(cp), p_(cp.cols()) {
    const std::size_t n = cp.rows();
    zc_.resize(n * p_);
    for (std::size_t r = 0; r < n; ++r) {
      const auto z = cp.row(r);
      for (std::size_t j = 0; j < p_; ++j) zc_[r * p_ + j] = z[j] - center[j];
    }
    strata_.resize(static_cast<std::size_t>(std::max(cp.num_strata(), 1)));
    for (std::size_t r = 0; r < n; ++r) {
      if (cp.stratum[r] < 0) throw DataError("negative stratum index");
      strata_[static_cast<std::size_t>(cp.stratum[r])].rows.push_back(r);
    }
    for (auto& st : strata_) {
      for (std::size_t r : st.rows) {
        if (cp.status[r] == 1) st.times.push_back(cp.stop[r]);
      }
      std::sort(st.times.begin(), st.times.end());
      st.times.erase(std::unique(st.times.begin(), st.times.end()), st.times.end());
      st.lo.resize(st.rows.size());
      st.hi.resize(st.rows.size());
      st.event_at.assign(st.rows.size(), -1);
      for (std::size_t j = 0; j < st.rows.size(); ++j) {
        const std::size_t r = st.rows[j];
        st.lo[j] = static_cast<std::uint32_t>(std::upper_bound(st.times.begin(), st.times.end(), cp.start[r]) -
                                              st.times.begin());
        st.hi[j] = static_cast<std::uint32_t>(std::upper_bound(st.times.begin(), st.times.end(), cp.stop[r]) -
                                              st.times.begin());
        if (cp.status[r] == 1) st.event_at[j] = static_cast<std::int64_t>(st.hi[j]) - 1;
      }
    }
  }

  std::size_t dim() const noexcept { return p_; }
  std::span<const double> centered_row(std::size_t r) const { return {zc_.data() + r * p_, p_}; }

  // Fills eta_ and risk_ (w * exp(eta)) for the centered design.
  void set_beta(const Eigen::VectorXd& beta) {
    const std::size_t n = cp_.rows();
    eta_.resize(n);
    risk_.resize(n);
    for (std::size_t r = 0; r < n; ++r) {
      double e = 0.0;
      const double* z = zc_.data() + r * p_;
      for (std::size_t j = 0; j < p_; ++j) e += z[j] * beta[static_cast<Eigen::Index>(j)];
      if (!(e < kMaxEta) || !std::isfinite(e)) throw NumericalError("linear predictor overflow; divergent coefficients");
      eta_[r] = e;
      risk_[r] = cp_.weight[r] * std::exp(e);
    }
  }

  LogLikelihood evaluate(const Eigen::VectorXd& beta, bool with_hessian) {
    set_beta(beta);
    LogLikelihood out;
    out.gradient = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p_));
    if (with_hessian) out.hessian = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p_), static_cast<Eigen::Index>(p_));
    const std::size_t p = p_;
    const std::size_t p2 = with_hessian ? p * (p + 1) / 2 : 0;
    std::vector<double> cur1(p), cur2(p2), zbar(p);

    for (const auto& st : strata_) {
      const std::size_t K = st.times.size();
      if (K == 0) continue;
      std::vector<double> d0(K + 1, 0.0), d1((K + 1) * p, 0.0), d2((K + 1) * p2, 0.0);
      std::vector<double> dw(K, 0.0), zsum(K * p, 0.0);
      for (std::size_t j = 0; j < st.rows.size(); ++j) {
        const std::size_t lo = st.lo[j], hi = st.hi[j];
        const std::size_t r = st.rows[j];
        if (st.event_at[j] >= 0) {
          const std::size_t k = static_cast<std::size_t>(st.event_at[j]);
          const double w = cp_.weight[r];
          dw[k] += w;
          out.value += w * eta_[r];
          const double* z = zc_.data() + r * p;
          for (std::size_t a = 0; a < p; ++a) zsum[k * p + a] += w * z[a];
        }
        if (lo >= hi) continue;
        const double rk = risk_[r];
        const double* z = zc_.data() + r * p;
        d0[lo] += rk;
        d0[hi] -= rk;
        double* lo1 = d1.data() + lo * p;
        double* hi1 = d1.data() + hi * p;
        for (std::size_t a = 0; a < p; ++a) {
          const double v = rk * z[a];
          lo1[a] += v;
          hi1[a] -= v;
        }
        if (with_hessian) {
          double* lo2 = d2.data() + lo * p2;
          double* hi2 = d2.data() + hi * p2;
          std::size_t idx = 0;
          for (std::size_t a = 0; a < p; ++a) {
            const double va = rk * z[a];
            for (std::size_t b = a; b < p; ++b, ++idx) {
              const double v = va * z[b];
              lo2[idx] += v;
              hi2[idx] -= v;
            }
          }
        }
      }
      double cur0 = 0.0;
      std::fill(cur1.begin(), cur1.end(), 0.0);
      std::fill(cur2.begin(), cur2.end(), 0.0);
      for (std::size_t k = 0; k < K; ++k) {
        cur0 += d0[k];
        for (std::size_t a = 0; a < p; ++a) cur1[a] += d1[k * p + a];
        for (std::size_t q = 0; q < p2; ++q) cur2[q] += d2[k * p2 + q];
        const double d = dw[k];
        if (d <= 0.0) continue;
        out.value -= d * std::log(cur0);
        for (std::size_t a = 0; a < p; ++a) {
          zbar[a] = cur1[a] / cur0;
          out.gradient[static_cast<Eigen::Index>(a)] += zsum[k * p + a] - d * zbar[a];
        }
        if (with_hessian) {
          std::size_t idx = 0;
          for (std::size_t a = 0; a < p; ++a) {
            for (std::size_t b = a; b < p; ++b, ++idx) {
              const double v = d * (cur2[idx] / cur0 - zbar[a] * zbar[b]);
              out.hessian(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) -= v;
            }
          }
        }
      }
    }
    if (with_hessian) {
      for (Eigen::Index a = 0; a < out.hessian.rows(); ++a) {
        for (Eigen::Index b = 0; b < a; ++b) out.hessian(a, b) = out.hessian(b, a);
      }
    }
    if (!std::isfinite(out.value)) throw NumericalError("non-finite partial likelihood");
    return out;
  }

  struct StratumSums {
    std::vector<double> dlambda;  // d_k / S0_k (centered scale)
    std::vector<double> zbar;     // K x p
  };

  // Per-stratum increments of the centered Breslow baseline and risk-set means.
  std::vector<StratumSums> sums(const Eigen::VectorXd& beta) {
    set_beta(beta);
    const std::size_t p = p_;
    std::vector<StratumSums> out(strata_.size());
    for (std::size_t s = 0; s < strata_.size(); ++s) {
      const auto& st = strata_[s];
      const std::size_t K = st.times.size();
      std::vector<double> d0(K + 1, 0.0), d1((K + 1) * p, 0.0), dw(K, 0.0);
      for (std::size_t j = 0; j < st.rows.size(); ++j) {
        const std::size_t r = st.rows[j];
        if (st.event_at[j] >= 0) dw[static_cast<std::size_t>(st.event_at[j])] += cp_.weight[r];
        const std::size_t lo = st.lo[j], hi = st.hi[j];
        if (lo >= hi) continue;
        const double rk = risk_[r];
        d0[lo] += rk;
        d0[hi] -= rk;
        const double* z = zc_.data() + r * p;
        for (std::size_t a = 0; a < p; ++a) {
          d1[lo * p + a] += rk * z[a];
          d1[hi * p + a] -= rk * z[a];
        }
      }
      auto& o = out[s];
      o.dlambda.assign(K, 0.0);
      o.zbar.assign(K * p, 0.0);
      double cur0 = 0.0;
      std::vector<double> cur1(p, 0.0);
      for (std::size_t k = 0; k < K; ++k) {
        cur0 += d0[k];
        for (std::size_t a = 0; a < p; ++a) cur1[a] += d1[k * p + a];
        o.dlambda[k] = dw[k] > 0.0 ? dw[k] / cur0 : 0.0;
        for (std::size_t a = 0; a < p; ++a) o.zbar[k * p + a] = cur0 > 0.0 ? cur1[a] / cur0 : 0.0;
      }
    }
    return out;
  }

  std::vector<StepFunction> baselines(const Eigen::VectorXd& beta, double shift) {
    const auto all = sums(beta);
    std::vector<StepFunction> out;
    const double scale = std::exp(-shift);
    for (std::size_t s = 0; s < strata_.size(); ++s) {
      const auto& st = strata_[s];
      std::vector<double> values(st.times.size());
      double cum = 0.0;
      for (std::size_t k = 0; k < st.times.size(); ++k) {
        cum += all[s].dlambda[k];
        values[k] = cum * scale;
      }
      out.emplace_back(0.0, st.times, std::move(values));
    }
    return out;
  }

  Eigen::MatrixXd residuals(const Eigen::VectorXd& beta) {
    const auto all = sums(beta);
    const std::size_t p = p_;
    Eigen::MatrixXd U = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(cp_.rows()), static_cast<Eigen::Index>(p));
    for (std::size_t s = 0; s < strata_.size(); ++s) {
      const auto& st = strata_[s];
      const auto& ss = all[s];
      const std::size_t K = st.times.size();
      std::vector<double> A(K + 1, 0.0), B((K + 1) * p, 0.0);
      for (std::size_t k = 0; k < K; ++k) {
        A[k + 1] = A[k] + ss.dlambda[k];
        for (std::size_t a = 0; a < p; ++a) B[(k + 1) * p + a] = B[k * p + a] + ss.dlambda[k] * ss.zbar[k * p + a];
      }
      for (std::size_t j = 0; j < st.rows.size(); ++j) {
        const std::size_t r = st.rows[j];
        const double* z = zc_.data() + r * p;
        const auto ri = static_cast<Eigen::Index>(r);
        if (st.event_at[j] >= 0) {
          const std::size_t k = static_cast<std::size_t>(st.event_at[j]);
          for (std::size_t a = 0; a < p; ++a) {
            U(ri, static_cast<Eigen::Index>(a)) += cp_.weight[r] * (z[a] - ss.zbar[k * p + a]);
          }
        }
        const std::size_t lo = st.lo[j], hi = st.hi[j];
        if (lo >= hi) continue;
        const double cumA = A[hi] - A[lo];
        for (std::size_t a = 0; a < p; ++a) {
          const double cumB = B[hi * p + a] - B[lo * p + a];
          U(ri, static_cast<Eigen::Index>(a)) -= risk_[r] * (z[a] * cumA - cumB);
        }
      }
    }
    return U;
  }

 private:
  struct Stratum {
    std::vector<double> times;
    std::vector<std::size_t> rows;
    std::vector<std::uint32_t> lo, hi;
    std::vector<std::int64_t> event_at;
  };
  const CountingProcessTable& cp_;
  std::size_t p_;
  std::vector<double> zc_;
  std::vector<Stratum> strata_;
  std::vector<double> eta_, risk_;
};

std::vector<double> column_means(const CountingProcessTable& cp) {
  std::vector<double> m(cp.cols(), 0.0);
  if (cp.rows() == 0) return m;
  for (std::size_t r = 0; r < cp.rows(); ++r) {
    const auto z = cp.row(r);
    for (std::size_t j = 0; j < m.size(); ++j) m[j] += z[j];
  }
  for (double& v : m) v /= static_cast<double>(cp.rows());
  return m;
}

void check_columns(const CountingProcessTable& cp, std::span<const double> center) {
  for (std::size_t j = 0; j < cp.cols(); ++j) {
    double spread = 0.0, scale = 0.0;
    for (std::size_t r = 0; r < cp.rows(); ++r) {
      const double v = cp.z[r * cp.cols() + j];
      spread = std::max(spread, std::abs(v - center[j]));
      scale = std::max(scale, std::abs(v));
    }
    if (spread <= 1e-12 * (1.0 + scale)) {
      throw RankDeficientError("covariate '" + cp.covariate_names[j] + "' is constant; design is rank deficient");
    }
  }
}

Eigen::MatrixXd sandwich(const Eigen::MatrixXd& info_inverse, const Eigen::MatrixXd& U,
                         const CountingProcessTable& cp) {
  const auto p = U.cols();
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(cp.cluster_ids.size()), p);
  for (std::size_t r = 0; r < cp.rows(); ++r) G.row(static_cast<Eigen::Index>(cp.cluster[r])) += U.row(static_cast<Eigen::Index>(r));
  const Eigen::MatrixXd meat = G.transpose() * G;
  Eigen::MatrixXd V = info_inverse * meat * info_inverse;
  return 0.5 * (V + V.transpose());
}

Eigen::MatrixXd invert_information(const Eigen::MatrixXd& info) {
  if (info.rows() == 0) return info;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
  const auto D = ldlt.vectorD();
  if (ldlt.info() != Eigen::Success || D.minCoeff() <= 1e-12 * std::max(1.0, D.cwiseAbs().maxCoeff())) {
    throw RankDeficientError("information matrix is singular");
  }
  Eigen::MatrixXd inv = ldlt.solve(Eigen::MatrixXd::Identity(info.rows(), info.cols()));
  return 0.5 * (inv + inv.transpose());
}

}  // namespace

double linear_predictor(const Eigen::VectorXd& beta, std::span<const double> z) {
  if (static_cast<std::size_t>(beta.size()) != z.size()) throw DataError("covariate vector has wrong length");
  double e = 0.0;
  for (std::size_t j = 0; j < z.size(); ++j) e += beta[static_cast<Eigen::Index>(j)] * z[j];
  return e;
}

LogLikelihood partial_loglik(const CountingProcessTable& cp, const Eigen::VectorXd& beta) {
  if (cp.rows() == 0) throw DataError("empty counting-process table");
  if (static_cast<std::size_t>(beta.size()) != cp.cols()) throw DataError("beta has wrong length");
  const std::vector<double> zero(cp.cols(), 0.0);
  RiskSetEngine engine(cp, zero);
  return engine.evaluate(beta, true);
}

std::vector<StepFunction> breslow_baseline(const CountingProcessTable& cp, const Eigen::VectorXd& beta) {
  const std::vector<double> zero(cp.cols(), 0.0);
  RiskSetEngine engine(cp, zero);
  return engine.baselines(beta, 0.0);
}

Eigen::MatrixXd score_residuals(const CountingProcessTable& cp, const Eigen::VectorXd& beta) {
  const auto center = column_means(cp);
  RiskSetEngine engine(cp, center);
  return engine.residuals(beta);
}

Eigen::MatrixXd robust_variance(const CountingProcessTable& cp, const Eigen::VectorXd& beta) {
  const auto center = column_means(cp);
  RiskSetEngine engine(cp, center);
  const auto ll = engine.evaluate(beta, true);
  const Eigen::MatrixXd inv = invert_information(-ll.hessian);
  return sandwich(inv, engine.residuals(beta), cp);
}

PSHFit fit_fine_gray(const CountingProcessTable& cp, const FitOptions& options) {
  if (cp.rows() == 0) throw DataError("empty counting-process table");
  if (cp.num_events() == 0) throw DataError("no events of interest");
  const std::size_t p = cp.cols();
  const std::vector<double> center = options.center ? column_means(cp) : std::vector<double>(p, 0.0);
  check_columns(cp, center);

  RiskSetEngine engine(cp, center);
  PSHFit fit;
  fit.covariate_names = cp.covariate_names;
  fit.num_rows = cp.rows();
  fit.num_events = cp.num_events();
  fit.num_clusters = cp.cluster_ids.size();

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
  LogLikelihood ll = engine.evaluate(beta, true);
  fit.loglik_null = ll.value;
  if (p > 0) invert_information(-ll.hessian);

  int iter = 0;
  bool converged = p == 0;
  while (!converged && iter < options.max_iterations) {
    if (ll.gradient.lpNorm<Eigen::Infinity>() < options.tolerance) {
      converged = true;
      break;
    }
    ++iter;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(-ll.hessian);
    const Eigen::VectorXd step = ldlt.solve(ll.gradient);
    if (ldlt.info() != Eigen::Success || !step.allFinite()) throw NumericalError("Newton step failed");
    double scale = 1.0;
    bool accepted = false;
    for (int h = 0; h <= options.max_halvings; ++h, scale *= 0.5) {
      const Eigen::VectorXd cand = beta + scale * step;
      try {
        LogLikelihood next = engine.evaluate(cand, true);
        if (next.value >= ll.value - 1e-12 * (1.0 + std::abs(ll.value))) {
          beta = cand;
          ll = std::move(next);
          accepted = true;
          break;
        }
      } catch (const NumericalError&) {
        // overflow: keep halving
      }
    }
    if (!accepted) break;
  }
  if (!converged) converged = ll.gradient.lpNorm<Eigen::Infinity>() < options.tolerance;

  fit.beta = beta;
  fit.iterations = iter;
  fit.converged = converged;
  fit.loglik = ll.value;
  double shift = 0.0;
  for (std::size_t j = 0; j < p; ++j) shift += center[j] * beta[static_cast<Eigen::Index>(j)];
  fit.baselines = engine.baselines(beta, shift);
  fit.cov_model = invert_information(-ll.hessian);
  if (options.compute_robust) {
    fit.cov_robust = sandwich(fit.cov_model, engine.residuals(beta), cp);
  }
  return fit;
}

double predict_cif(const PSHFit& fit, std::span<const double> z, double t, int stratum) {
  if (t <= 0.0) return 0.0;
  const double lp = linear_predictor(fit.beta, z);
  const double v = -std::expm1(-std::exp(lp) * fit.baseline(stratum)(t));
  return std::clamp(v, 0.0, 1.0);
}

}  // namespace lmpsh
