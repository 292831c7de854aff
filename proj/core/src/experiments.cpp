#include "lmpsh/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "lmpsh/errors.hpp"
#include "lmpsh/metrics.hpp"
#include "lmpsh/parallel.hpp"
#include "lmpsh/rng.hpp"
#include "lmpsh/svg.hpp"

namespace lmpsh {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t replication_seed(std::uint64_t master, std::uint64_t stream, int rep) {
  return derive_seed(derive_seed(master, stream), static_cast<std::uint64_t>(rep));
}

struct Moments {
  double mean = kNaN;
  double sd = kNaN;
};

Moments moments(const std::vector<double>& xs) {
  double sum = 0.0;
  std::size_t n = 0;
  for (double x : xs) {
    if (std::isnan(x)) continue;
    sum += x;
    ++n;
  }
  Moments m;
  if (n == 0) return m;
  m.mean = sum / static_cast<double>(n);
  if (n < 2) return m;
  double ss = 0.0;
  for (double x : xs) {
    if (!std::isnan(x)) ss += (x - m.mean) * (x - m.mean);
  }
  m.sd = std::sqrt(ss / static_cast<double>(n - 1));
  return m;
}

std::string fixed(double v, int digits = 4) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

ModelSpec spec_for(ModelKind kind, const std::vector<double>& grid) {
  ModelSpec spec;
  spec.kind = kind;
  spec.grid = grid;
  return spec;
}

const char* kPalette[] = {"#000000", "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

}  // namespace

void write_checks(std::ostream& os, const std::vector<CheckResult>& checks) {
  for (const auto& c : checks) os << (c.pass ? "PASS " : "FAIL ") << c.name << " | " << c.detail << '\n';
}

SurvivalDataset Scenario::simulate(std::size_t n, std::uint64_t seed) const {
  return setting == 1 ? sim_setting1(n, setting1, seed) : sim_setting2(n, setting2, seed);
}

double Scenario::truth(double z, double s) const {
  return setting == 1 ? true_conditional_cif(setting1, z, s, w) : true_conditional_cif(setting2, z, s, w);
}

Scenario default_scenario(int setting, double censoring_fraction) {
  if (setting != 1 && setting != 2) throw ConfigError("scenario setting must be 1 or 2");
  Scenario sc;
  sc.setting = setting;
  sc.censoring_fraction = censoring_fraction;
  const double last = setting == 1 ? 5.0 : 4.0;
  sc.w = setting == 1 ? 3.0 : 2.0;
  sc.landmarks = make_grid(0.0, 0.5, last);
  sc.grid = make_grid(0.0, 0.1, last);
  if (censoring_fraction > 0.0) {
    if (setting == 1) {
      sc.setting1.censoring.upper = calibrate_censoring(sc.setting1, censoring_fraction);
    } else {
      sc.setting2.censoring.upper = calibrate_censoring(sc.setting2, censoring_fraction);
    }
  }
  return sc;
}

std::size_t CurveStudy::method_index(const std::string& name) const {
  const auto it = std::find(methods.begin(), methods.end(), name);
  if (it == methods.end()) throw ConfigError("unknown method '" + name + "'");
  return static_cast<std::size_t>(it - methods.begin());
}

CurveStudy run_curve_study(const Scenario& scenario, const Budget& budget) {
  CurveStudy out;
  out.scenario = scenario;
  out.reps = budget.reps;
  out.methods = {"NP", "PSH", "LM-PSH", "LM-PSH-Super", "LM-Cox-Super"};
  const std::vector<ModelKind> kinds = {ModelKind::Nonparametric, ModelKind::StandardPsh, ModelKind::LandmarkPsh,
                                        ModelKind::Supermodel, ModelKind::CoxSupermodel};
  const std::size_t M = kinds.size(), A = out.arms.size(), L = scenario.landmarks.size();
  const auto reps = static_cast<std::size_t>(std::max(budget.reps, 0));

  // values[rep][method][arm * L + landmark]
  std::vector<std::vector<std::vector<double>>> values(reps, std::vector<std::vector<double>>(M));
  parallel_for(reps, budget.jobs, [&](std::size_t r) {
    const SurvivalDataset ds =
        scenario.simulate(budget.n, replication_seed(budget.seed, static_cast<std::uint64_t>(scenario.setting),
                                                     static_cast<int>(r)));
    for (std::size_t m = 0; m < M; ++m) {
      auto& v = values[r][m];
      v.assign(A * L, kNaN);
      try {
        const auto model = train(ds, spec_for(kinds[m], scenario.grid), scenario.landmarks, scenario.w);
        for (std::size_t a = 0; a < A; ++a) {
          const double z[1] = {out.arms[a]};
          for (std::size_t l = 0; l < L; ++l) v[a * L + l] = model->predict(z, scenario.landmarks[l]);
        }
      } catch (const DataError&) {
        std::fill(v.begin(), v.end(), kNaN);
      } catch (const NumericalError&) {
        std::fill(v.begin(), v.end(), kNaN);
      }
    }
  });

  out.truth.assign(A, std::vector<double>(L));
  for (std::size_t a = 0; a < A; ++a) {
    for (std::size_t l = 0; l < L; ++l) out.truth[a][l] = scenario.truth(out.arms[a], scenario.landmarks[l]);
  }
  out.mean.assign(M, std::vector<std::vector<double>>(A, std::vector<double>(L)));
  out.sd = out.mean;
  out.failures.assign(M, 0);
  std::vector<double> column(reps);
  for (std::size_t m = 0; m < M; ++m) {
    for (std::size_t r = 0; r < reps; ++r) out.failures[m] += std::isnan(values[r][m].empty() ? kNaN : values[r][m][0]);
    for (std::size_t a = 0; a < A; ++a) {
      for (std::size_t l = 0; l < L; ++l) {
        for (std::size_t r = 0; r < reps; ++r) column[r] = values[r][m][a * L + l];
        const auto mo = moments(column);
        out.mean[m][a][l] = mo.mean;
        out.sd[m][a][l] = mo.sd;
      }
    }
  }
  return out;
}

void write_curve_csv(std::ostream& os, const std::vector<CurveStudy>& studies) {
  os << "setting,method,z,s,mean,sd,truth,reps,failures\n";
  for (const auto& st : studies) {
    for (std::size_t a = 0; a < st.arms.size(); ++a) {
      for (std::size_t l = 0; l < st.scenario.landmarks.size(); ++l) {
        os << st.scenario.setting << ",True," << format_double(st.arms[a]) << ','
           << format_double(st.scenario.landmarks[l]) << ',' << format_double(st.truth[a][l]) << ",0,"
           << format_double(st.truth[a][l]) << ',' << st.reps << ",0\n";
      }
    }
    for (std::size_t m = 0; m < st.methods.size(); ++m) {
      for (std::size_t a = 0; a < st.arms.size(); ++a) {
        for (std::size_t l = 0; l < st.scenario.landmarks.size(); ++l) {
          os << st.scenario.setting << ',' << st.methods[m] << ',' << format_double(st.arms[a]) << ','
             << format_double(st.scenario.landmarks[l]) << ',' << format_double(st.mean[m][a][l]) << ','
             << format_double(st.sd[m][a][l]) << ',' << format_double(st.truth[a][l]) << ',' << st.reps << ','
             << st.failures[m] << '\n';
        }
      }
    }
  }
}

std::string curve_svg(const std::vector<CurveStudy>& studies) {
  std::vector<SvgPanel> panels;
  for (const auto& st : studies) {
    for (std::size_t m = 0; m < st.methods.size(); ++m) {
      SvgPanel p;
      p.title = "Setting " + std::to_string(st.scenario.setting) + ": " + st.methods[m];
      p.xlabel = "landmark s (w = " + format_double(st.scenario.w) + ")";
      p.ylabel = st.methods[m] == "LM-Cox-Super" ? "conditional failure probability" : "conditional CIF";
      p.ymin = 0.0;
      for (std::size_t a = st.arms.size(); a-- > 0;) {
        const std::string arm = "Z=" + format_double(st.arms[a]);
        const std::string color = a == 1 ? "#000000" : "#999999";
        p.series.push_back({"True " + arm, st.scenario.landmarks, st.truth[a], color, true});
        p.series.push_back({arm, st.scenario.landmarks, st.mean[m][a], color, false});
      }
      panels.push_back(std::move(p));
    }
  }
  return render_svg(panels, 5);
}

std::vector<CheckResult> curve_checks(const CurveStudy& st, double tolerance) {
  std::vector<CheckResult> out;
  const std::string prefix = "setting " + std::to_string(st.scenario.setting) + ": ";
  const std::size_t L = st.scenario.landmarks.size();
  for (const std::string name : {"LM-PSH", "LM-PSH-Super"}) {
    const std::size_t m = st.method_index(name);
    double worst = 0.0, at_s = 0.0, at_z = 0.0;
    bool finite = true;
    for (std::size_t a = 0; a < st.arms.size(); ++a) {
      for (std::size_t l = 0; l < L; ++l) {
        const double d = std::abs(st.mean[m][a][l] - st.truth[a][l]);
        if (std::isnan(d)) finite = false;
        if (d > worst) worst = d, at_s = st.scenario.landmarks[l], at_z = st.arms[a];
      }
    }
    CheckResult c;
    c.name = prefix + name + " mean within " + fixed(tolerance, 2) + " of truth at every landmark";
    c.pass = finite && worst <= tolerance;
    c.detail = "max |mean - truth| = " + fixed(worst) + " at s = " + format_double(at_s) + ", Z = " +
               format_double(at_z) + "; failed reps = " + std::to_string(st.failures[m]);
    out.push_back(c);
  }
  const std::size_t m = st.method_index("LM-Cox-Super");
  std::size_t over = 0;
  for (std::size_t l = 0; l < L; ++l) {
    bool exceeds = false;
    for (std::size_t a = 0; a < st.arms.size(); ++a) exceeds = exceeds || st.mean[m][a][l] - st.truth[a][l] > tolerance;
    over += exceeds;
  }
  CheckResult c;
  c.name = prefix + "LM-Cox-Super exceeds truth by > " + fixed(tolerance, 2) + " at half the landmarks or more";
  c.pass = 2 * over >= L;
  c.detail = std::to_string(over) + " of " + std::to_string(L) + " landmarks";
  out.push_back(c);
  return out;
}

IncrementStudy run_increment_study(const Scenario& scenario, const Budget& budget, int folds) {
  IncrementStudy out;
  out.scenario = scenario;
  out.reps = budget.reps;
  out.folds = folds;
  out.methods = {"PSH", "LM-PSH", "LM-PSH-Super"};
  const std::vector<ModelKind> kinds = {ModelKind::StandardPsh, ModelKind::LandmarkPsh, ModelKind::Supermodel};
  const std::size_t M = kinds.size(), L = scenario.landmarks.size();
  const auto reps = static_cast<std::size_t>(std::max(budget.reps, 0));

  std::vector<std::vector<std::vector<double>>> inc(reps, std::vector<std::vector<double>>(M));
  std::vector<std::vector<double>> np(reps);
  parallel_for(reps, budget.jobs, [&](std::size_t r) {
    const std::uint64_t seed =
        replication_seed(budget.seed, 100 + static_cast<std::uint64_t>(scenario.setting), static_cast<int>(r));
    const SurvivalDataset ds = scenario.simulate(budget.n, seed);
    CvOptions cv;
    cv.folds = folds;
    cv.seed = seed;
    np[r].assign(L, kNaN);
    for (auto& v : inc[r]) v.assign(L, kNaN);
    try {
      const auto ref = cross_validate(ds, spec_for(ModelKind::Nonparametric, scenario.grid), scenario.landmarks,
                                      scenario.w, cv);
      for (std::size_t l = 0; l < L; ++l) np[r][l] = ref.metrics[l].brier;
    } catch (const DataError&) {
      return;
    } catch (const NumericalError&) {
      return;
    }
    for (std::size_t m = 0; m < M; ++m) {
      try {
        const auto res = cross_validate(ds, spec_for(kinds[m], scenario.grid), scenario.landmarks, scenario.w, cv);
        for (std::size_t l = 0; l < L; ++l) inc[r][m][l] = (res.metrics[l].brier - np[r][l]) / np[r][l];
      } catch (const DataError&) {
      } catch (const NumericalError&) {
      }
    }
  });

  out.mean.assign(M, std::vector<double>(L));
  out.sd = out.mean;
  out.brier_np.assign(L, kNaN);
  out.failures.assign(M, 0);
  std::vector<double> column(reps);
  for (std::size_t l = 0; l < L; ++l) {
    for (std::size_t r = 0; r < reps; ++r) column[r] = np[r][l];
    out.brier_np[l] = moments(column).mean;
  }
  for (std::size_t m = 0; m < M; ++m) {
    for (std::size_t r = 0; r < reps; ++r) out.failures[m] += std::isnan(inc[r][m][0]);
    for (std::size_t l = 0; l < L; ++l) {
      for (std::size_t r = 0; r < reps; ++r) column[r] = inc[r][m][l];
      const auto mo = moments(column);
      out.mean[m][l] = mo.mean;
      out.sd[m][l] = mo.sd;
    }
  }
  return out;
}

void write_increment_csv(std::ostream& os, const std::vector<IncrementStudy>& studies) {
  os << "setting,method,s,mean,sd,brier_np,reps,failures\n";
  for (const auto& st : studies) {
    for (std::size_t m = 0; m < st.methods.size(); ++m) {
      for (std::size_t l = 0; l < st.scenario.landmarks.size(); ++l) {
        os << st.scenario.setting << ',' << st.methods[m] << ',' << format_double(st.scenario.landmarks[l]) << ','
           << format_double(st.mean[m][l]) << ',' << format_double(st.sd[m][l]) << ','
           << format_double(st.brier_np[l]) << ',' << st.reps << ',' << st.failures[m] << '\n';
      }
    }
  }
}

std::string increment_svg(const std::vector<IncrementStudy>& studies) {
  std::vector<SvgPanel> panels;
  for (const auto& st : studies) {
    SvgPanel p;
    p.title = "Setting " + std::to_string(st.scenario.setting) + " (w = " + format_double(st.scenario.w) + ")";
    p.xlabel = "landmark s";
    p.ylabel = "relative increment of Brier score vs NP";
    p.hlines = {0.0};
    for (std::size_t m = 0; m < st.methods.size(); ++m) {
      p.series.push_back({st.methods[m], st.scenario.landmarks, st.mean[m], kPalette[m + 1], false});
    }
    panels.push_back(std::move(p));
  }
  return render_svg(panels, 2);
}

std::vector<CheckResult> increment_checks(const IncrementStudy& st, double band) {
  std::vector<CheckResult> out;
  const std::string prefix = "setting " + std::to_string(st.scenario.setting) + ": ";
  const std::size_t L = st.scenario.landmarks.size();
  const auto psh = static_cast<std::size_t>(
      std::find(st.methods.begin(), st.methods.end(), "PSH") - st.methods.begin());
  const auto lm = static_cast<std::size_t>(
      std::find(st.methods.begin(), st.methods.end(), "LM-PSH") - st.methods.begin());
  double worst = 0.0, at = 0.0;
  bool finite = true;
  for (std::size_t l = 0; l < L; ++l) {
    const double d = std::abs(st.mean[lm][l]);
    if (std::isnan(d)) finite = false;
    if (d > worst) worst = d, at = st.scenario.landmarks[l];
  }
  CheckResult c1;
  c1.name = prefix + "LM-PSH relative increment within +/-" + fixed(band, 2) + " at every landmark";
  c1.pass = finite && worst <= band;
  c1.detail = "max |increment| = " + fixed(worst) + " at s = " + format_double(at);
  out.push_back(c1);

  double late_psh = 0.0, late_lm = 0.0;
  std::size_t count = 0;
  for (std::size_t l = L / 2; l < L; ++l) {
    late_psh += st.mean[psh][l];
    late_lm += st.mean[lm][l];
    ++count;
  }
  late_psh /= static_cast<double>(std::max<std::size_t>(count, 1));
  late_lm /= static_cast<double>(std::max<std::size_t>(count, 1));
  CheckResult c2;
  c2.name = prefix + "PSH increment positive and above LM-PSH at late landmarks";
  c2.pass = late_psh > 0.0 && late_psh > late_lm;
  c2.detail = "mean increment over s >= " + format_double(st.scenario.landmarks[L / 2]) + ": PSH " + fixed(late_psh) +
              ", LM-PSH " + fixed(late_lm);
  out.push_back(c2);
  return out;
}

CalibrationScenario default_calibration_scenario(double censoring_fraction) {
  CalibrationScenario sc;
  sc.params.onset_rate = 0.3;
  sc.params.beta_td = 1.0;
  sc.censoring_fraction = censoring_fraction;
  sc.landmarks = make_grid(2.4, 0.2, 3.6);
  sc.grid = make_grid(0.0, 0.1, 4.0);
  if (censoring_fraction > 0.0) sc.params.base.censoring.upper = calibrate_censoring(sc.params, censoring_fraction);
  return sc;
}

CalibrationStudy run_calibration_study(const CalibrationScenario& scenario, const Budget& budget) {
  CalibrationStudy out;
  out.scenario = scenario;
  out.reps = budget.reps;
  out.methods = {"LM-PSH-Super", "LM-Cox-Super"};
  const std::vector<ModelKind> kinds = {ModelKind::Supermodel, ModelKind::CoxSupermodel};
  const std::size_t M = kinds.size(), L = scenario.landmarks.size();
  const auto reps = static_cast<std::size_t>(std::max(budget.reps, 0));

  // metrics[rep][method] per landmark
  std::vector<std::vector<std::vector<LandmarkMetrics>>> metrics(reps, std::vector<std::vector<LandmarkMetrics>>(M));
  parallel_for(reps, budget.jobs, [&](std::size_t r) {
    const std::uint64_t seed = replication_seed(budget.seed, 200, static_cast<int>(r));
    const SurvivalDataset ds = sim_tdcov(budget.n, scenario.params, seed);
    CvOptions cv;
    cv.folds = scenario.folds;
    cv.seed = seed;
    for (std::size_t m = 0; m < M; ++m) {
      try {
        metrics[r][m] = cross_validate(ds, spec_for(kinds[m], scenario.grid), scenario.landmarks, scenario.w, cv).metrics;
      } catch (const DataError&) {
      } catch (const NumericalError&) {
      }
    }
  });

  out.summary.resize(M);
  out.failures.assign(M, 0);
  std::vector<double> oe(reps), bs(reps), au(reps);
  for (std::size_t m = 0; m < M; ++m) {
    auto& s = out.summary[m];
    for (std::size_t r = 0; r < reps; ++r) out.failures[m] += metrics[r][m].empty();
    for (std::size_t l = 0; l < L; ++l) {
      for (std::size_t r = 0; r < reps; ++r) {
        const bool ok = !metrics[r][m].empty();
        oe[r] = ok ? metrics[r][m][l].oe : kNaN;
        bs[r] = ok ? metrics[r][m][l].brier : kNaN;
        au[r] = ok ? metrics[r][m][l].auc : kNaN;
      }
      const auto a = moments(oe), b = moments(bs), c = moments(au);
      s.oe_mean.push_back(a.mean);
      s.oe_sd.push_back(a.sd);
      s.brier_mean.push_back(b.mean);
      s.brier_sd.push_back(b.sd);
      s.auc_mean.push_back(c.mean);
      s.auc_sd.push_back(c.sd);
    }
  }
  return out;
}

void write_calibration_csv(std::ostream& os, const CalibrationStudy& st) {
  os << "method,landmark,metric,estimate,se\n";
  for (std::size_t m = 0; m < st.methods.size(); ++m) {
    const auto& s = st.summary[m];
    for (std::size_t l = 0; l < st.scenario.landmarks.size(); ++l) {
      const std::string head = st.methods[m] + ',' + format_double(st.scenario.landmarks[l]) + ',';
      os << head << "oe," << format_double(s.oe_mean[l]) << ',' << format_double(s.oe_sd[l]) << '\n';
      os << head << "brier," << format_double(s.brier_mean[l]) << ',' << format_double(s.brier_sd[l]) << '\n';
      os << head << "auc," << format_double(s.auc_mean[l]) << ',' << format_double(s.auc_sd[l]) << '\n';
    }
  }
}

void write_calibration_table(std::ostream& os, const CalibrationStudy& st) {
  char line[256];
  for (std::size_t m = 0; m < st.methods.size(); ++m) {
    const auto& s = st.summary[m];
    os << st.methods[m] << " (x100, replication SD in parentheses; " << st.reps << " replications, "
       << st.failures[m] << " failed)\n";
    std::snprintf(line, sizeof line, "%-9s %-20s %-20s %-20s\n", "Landmark", "O/E", "Brier", "AUC");
    os << line;
    for (std::size_t l = 0; l < st.scenario.landmarks.size(); ++l) {
      auto cell = [](double mean, double sd) { return fixed(100 * mean, 3) + " (" + fixed(100 * sd, 3) + ")"; };
      std::snprintf(line, sizeof line, "%-9s %-20s %-20s %-20s\n", format_double(st.scenario.landmarks[l]).c_str(),
                    cell(s.oe_mean[l], s.oe_sd[l]).c_str(), cell(s.brier_mean[l], s.brier_sd[l]).c_str(),
                    cell(s.auc_mean[l], s.auc_sd[l]).c_str());
      os << line;
    }
    os << '\n';
  }
}

std::vector<CheckResult> calibration_checks(const CalibrationStudy& st, double lo, double hi, double auc_floor) {
  std::vector<CheckResult> out;
  const auto& sup = st.summary.at(0);
  const auto& cox = st.summary.at(1);
  const std::size_t L = st.scenario.landmarks.size();
  double oe_min = std::numeric_limits<double>::infinity(), oe_max = -oe_min, auc_min = oe_min;
  std::size_t dominated = 0;
  for (std::size_t l = 0; l < L; ++l) {
    oe_min = std::min(oe_min, sup.oe_mean[l]);
    oe_max = std::max(oe_max, sup.oe_mean[l]);
    auc_min = std::min(auc_min, sup.auc_mean[l]);
    dominated += std::abs(sup.oe_mean[l] - 1.0) < std::abs(cox.oe_mean[l] - 1.0);
  }
  const bool finite = std::isfinite(oe_min) && std::isfinite(oe_max) && std::isfinite(auc_min);
  out.push_back({"LM-PSH-Super mean O/E within [" + fixed(lo, 2) + ", " + fixed(hi, 2) + "] at every landmark",
                 finite && oe_min >= lo && oe_max <= hi, "range " + fixed(oe_min) + " to " + fixed(oe_max)});
  out.push_back({"LM-PSH-Super mean AUC > " + fixed(auc_floor, 2) + " at every landmark",
                 finite && auc_min > auc_floor, "minimum " + fixed(auc_min)});
  std::string detail;
  for (std::size_t l = 0; l < L; ++l) {
    detail += (l ? "; " : "") + format_double(st.scenario.landmarks[l]) + ": " + fixed(sup.oe_mean[l], 3) + " vs " +
              fixed(cox.oe_mean[l], 3);
  }
  out.push_back({"LM-PSH-Super O/E closer to 1 than LM-Cox-Super at every landmark", dominated == L, detail});
  return out;
}

}  // namespace lmpsh
