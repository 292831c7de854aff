#include <cmath>
#include <cstdio>
#include <iostream>
#include <limits>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "lmpsh/censoring.hpp"
#include "lmpsh/errors.hpp"
#include "lmpsh/fine_gray.hpp"
#include "lmpsh/landmark.hpp"
#include "lmpsh/serialize.hpp"
#include "lmpsh/supermodel.hpp"
#include "manifest.hpp"
#include "table_io.hpp"

namespace lmpsh::cli {

namespace {

struct FitCommandOptions {
  DataOptions data;
  std::string model = "supermodel";
  std::string variant = "psh";
  double s = 0.0;
  double w = std::numeric_limits<double>::infinity();
  std::string grid;
  std::string basis = "quad";
  bool stratified = false;
  int cause = 1;
  int max_iterations = 50;
  double tolerance = 1e-8;
  unsigned jobs = 1;
  std::string out = "out";
};

double normal_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

std::string row(const std::string& a, const std::string& b, double beta, double se_model, double se_robust) {
  char buf[256];
  const double z = beta / se_robust;
  std::snprintf(buf, sizeof buf, "%-18s %-10s %10.4f %10.4f %10.4f %8.3f %9.4g\n", a.c_str(), b.c_str(), beta,
                se_model, se_robust, z, normal_p(z));
  return buf;
}

std::string header() {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-18s %-10s %10s %10s %10s %8s %9s\n", "Covariate", "Term", "beta", "se", "se(rob)",
                "z", "p");
  return buf;
}

void write_fit_summary(std::ostream& os, const PSHFit& fit) {
  os << "rows " << fit.num_rows << ", events " << fit.num_events << ", subjects " << fit.num_clusters
     << ", iterations " << fit.iterations << (fit.converged ? ", converged" : ", NOT converged") << '\n';
  if (fit.truncated > 0) os << "competing-event subjects truncated where censoring survival reached 0: " << fit.truncated << '\n';
  char buf[128];
  std::snprintf(buf, sizeof buf, "log partial likelihood %.4f (null %.4f)\n\n", fit.loglik, fit.loglik_null);
  os << buf;
}

void write_psh_report(std::ostream& os, const PSHFit& fit) {
  if (fit.landmark) {
    os << (fit.variant == "cox" ? "Landmark Cox model" : "Landmark PSH model") << " at s = " << format_double(*fit.landmark)
       << ", w = " << format_double(fit.window.value_or(std::numeric_limits<double>::infinity())) << '\n';
  } else {
    os << (fit.variant == "cox" ? "Cause-specific Cox model" : "Fine-Gray PSH model") << '\n';
  }
  write_fit_summary(os, fit);
  os << header();
  const auto se = fit.model_se();
  const auto rse = fit.robust_se();
  for (std::size_t j = 0; j < fit.covariate_names.size(); ++j) {
    const auto i = static_cast<Eigen::Index>(j);
    os << row(fit.covariate_names[j], "Constant", fit.beta[i], se[i], rse[i]);
  }
}

void write_supermodel_report(std::ostream& os, const SupermodelFit& fit) {
  os << (fit.variant == SupermodelVariant::Cox ? "Landmark Cox supermodel" : "Landmark PSH supermodel")
     << (fit.stratified ? " (stratified by landmark)" : "") << ", w = " << format_double(fit.w) << ", "
     << fit.grid.size() << " landmarks in [" << format_double(fit.grid.front()) << ", "
     << format_double(fit.grid.back()) << "]\n";
  write_fit_summary(os, fit.model);
  os << header();
  const auto se = fit.model.model_se();
  const auto rse = fit.model.robust_se();
  for (std::size_t j = 0; j < fit.covariate_names.size(); ++j) {
    for (std::size_t m = 0; m < fit.basis.f.size(); ++m) {
      const auto i = static_cast<Eigen::Index>(fit.theta_index(j, m));
      const std::string term = fit.basis.f[m].label() == "1" ? "Constant" : fit.basis.f[m].label();
      os << row(m == 0 ? fit.covariate_names[j] : "", term, fit.model.beta[i], se[i], rse[i]);
    }
  }
  const std::size_t first = fit.covariate_names.size() * fit.basis.f.size();
  for (Eigen::Index l = 0; l < fit.eta.size(); ++l) {
    const auto i = static_cast<Eigen::Index>(first) + l;
    os << row(l == 0 ? "Baseline" : "", fit.basis.g[static_cast<std::size_t>(l)].label(), fit.model.beta[i], se[i],
              rse[i]);
  }

  os << "\nRobust Wald tests\n";
  char buf[256];
  auto line = [&](const std::string& what, const WaldResult& r) {
    std::snprintf(buf, sizeof buf, "%-40s chi2 = %9.4f on %d df, p = %.4g\n", what.c_str(), r.statistic, r.dof,
                  r.p_value);
    os << buf;
  };
  std::vector<std::size_t> varying;
  for (std::size_t m = 0; m < fit.basis.f.size(); ++m) {
    if (fit.basis.f[m].label() != "1") varying.push_back(m);
  }
  for (const auto& name : fit.covariate_names) {
    std::vector<std::size_t> all(fit.basis.f.size());
    for (std::size_t m = 0; m < all.size(); ++m) all[m] = m;
    try {
      line(name + ": no effect", wald_test(fit, name, all));
      if (!varying.empty()) line(name + ": landmark-constant effect", wald_test(fit, name, varying));
    } catch (const NumericalError& e) {
      os << name << ": " << e.what() << '\n';
    }
  }
  if (fit.eta.size() > 0) {
    try {
      line("Baseline: no landmark dependence", wald_test_baseline(fit));
    } catch (const NumericalError& e) {
      os << "Baseline: " << e.what() << '\n';
    }
  }
}

void run_fit(const FitCommandOptions& o, const CLI::App& sub, const Context& ctx) {
  FitOptions fo;
  if (o.max_iterations < 1) throw ConfigError("--max-iter must be positive");
  if (!(o.tolerance > 0.0)) throw ConfigError("--tol must be positive");
  fo.max_iterations = o.max_iterations;
  fo.tolerance = o.tolerance;
  const bool cox = parse_variant(o.variant) == SupermodelVariant::Cox;
  const SurvivalDataset ds = o.data.load(o.cause);

  std::string json;
  std::ostringstream report;
  if (o.model == "psh") {
    CountingProcessOptions cpo;
    cpo.competing_as_censoring = cox;
    const auto cp = to_counting_process(ds, km_censoring(ds), cpo);
    PSHFit fit = fit_fine_gray(cp.table, fo);
    fit.truncated = cp.truncated;
    fit.variant = cox ? "cox" : "psh";
    write_psh_report(report, fit);
    json = to_json(fit);
  } else if (o.model == "landmark-psh") {
    LandmarkOptions lo;
    lo.fit = fo;
    lo.competing_as_censoring = cox;
    const PSHFit fit = fit_landmark_psh(ds, {o.s, o.w}, lo);
    write_psh_report(report, fit);
    json = to_json(fit);
  } else {
    if (o.grid.empty()) throw ConfigError("--grid is required for the supermodel");
    if (!std::isfinite(o.w)) throw ConfigError("--w must be finite for the supermodel");
    StackOptions so;
    so.variant = cox ? SupermodelVariant::Cox : SupermodelVariant::Psh;
    so.stratified = o.stratified;
    so.jobs = resolve_jobs(o.jobs);
    const auto stacked = build_stacked(ds, parse_grid(o.grid), o.w, BasisSpec::named(o.basis), so);
    for (const auto& wmsg : stacked.warnings) std::cerr << "warning: " << wmsg << '\n';
    const SupermodelFit fit = fit_supermodel(stacked, fo);
    write_supermodel_report(report, fit);
    json = to_json(fit);
  }

  ensure_directory(o.out);
  open_output(std::filesystem::path(o.out) / "model.json") << json << '\n';
  open_output(std::filesystem::path(o.out) / "report.txt") << report.str();
  RunManifest m;
  m.command = "fit";
  m.argv = ctx.argv;
  m.config = sub.config_to_str(true, false);
  m.inputs = o.data.inputs();
  m.outputs = {"model.json", "report.txt"};
  m.write(o.out);
  std::cout << report.str();
}

}  // namespace

void add_fit(CLI::App& app, const Context& ctx) {
  auto o = std::make_shared<FitCommandOptions>();
  auto* sub = app.add_subcommand("fit", "Fit a Fine-Gray, landmark PSH or landmark supermodel");
  o->data.add_to(*sub);
  sub->add_option("--model", o->model, "psh, landmark-psh or supermodel")
      ->check(CLI::IsMember({"psh", "landmark-psh", "supermodel"}))
      ->capture_default_str();
  sub->add_option("--variant", o->variant, "psh, or cox to treat competing events as censoring")
      ->check(CLI::IsMember({"psh", "cox"}))
      ->capture_default_str();
  sub->add_option("--s", o->s, "Landmark time of the landmark PSH model")->capture_default_str();
  sub->add_option("--w", o->w, "Prediction window width")->capture_default_str();
  sub->add_option("--grid", o->grid, "Supermodel landmarks, from:step:to or a comma list");
  sub->add_option("--basis", o->basis, "Supermodel basis: const, linear or quad")
      ->check(CLI::IsMember({"const", "linear", "quad"}))
      ->capture_default_str();
  sub->add_flag("--stratified", o->stratified, "Separate baseline per landmark instead of baseline terms");
  sub->add_option("--cause", o->cause, "Event of interest")->capture_default_str();
  sub->add_option("--max-iter", o->max_iterations, "Newton-Raphson iteration limit")->capture_default_str();
  sub->add_option("--tol", o->tolerance, "Score sup-norm convergence tolerance")->capture_default_str();
  sub->add_option("--jobs", o->jobs, "Worker threads (0: all cores)")->capture_default_str();
  sub->add_option("-o,--out", o->out, "Output directory")->capture_default_str();
  sub->callback([o, sub, &ctx] { run_fit(*o, *sub, ctx); });
}

}  // namespace lmpsh::cli
