#include <cmath>
#include <cstdio>
#include <iostream>
#include <limits>
#include <memory>
#include <unordered_map>

#include <CLI11.hpp>

#include "commands.hpp"
#include "lmpsh/aalen_johansen.hpp"
#include "lmpsh/errors.hpp"
#include "lmpsh/metrics.hpp"
#include "manifest.hpp"
#include "table_io.hpp"

namespace lmpsh::cli {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct EvaluateOptions {
  DataOptions data;
  std::string model = "supermodel";
  std::string landmarks;
  double w = 0.0;
  int folds = 3;
  std::uint64_t seed = 1;
  std::string grid;
  std::string basis = "quad";
  bool stratified = false;
  int cause = 1;
  unsigned jobs = 1;
  std::string out = "out";
};

// Plug-in standard errors of the Brier score and of the O/E ratio (delta method).
std::pair<double, double> metric_se(const PseudovalueVector& q, const PredictionSet& preds, double oe) {
  std::unordered_map<std::string, double> pi_of;
  for (std::size_t i = 0; i < preds.size(); ++i) pi_of.emplace(preds.ids[i], preds.pi[i]);
  const double n = static_cast<double>(q.size());
  if (n < 2) return {kNaN, kNaN};
  std::vector<double> b(q.size()), r(q.size());
  double sum_pi = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double pi = pi_of.at(q.ids[i]);
    b[i] = q.values[i] * (1.0 - 2.0 * pi) + pi * pi;
    r[i] = q.values[i] - oe * pi;
    sum_pi += pi;
  }
  auto sd = [n](const std::vector<double>& x) {
    double m = 0.0, ss = 0.0;
    for (double v : x) m += v;
    m /= n;
    for (double v : x) ss += (v - m) * (v - m);
    return std::sqrt(ss / (n - 1.0));
  };
  const double se_b = sd(b) / std::sqrt(n);
  const double se_oe = std::isnan(oe) || !(sum_pi > 0.0) ? kNaN : sd(r) * std::sqrt(n) / sum_pi;
  return {se_b, se_oe};
}

void run_evaluate(const EvaluateOptions& o, const CLI::App& sub, const Context& ctx) {
  if (!(o.w > 0.0) || !std::isfinite(o.w)) throw ConfigError("--w must be positive and finite");
  if (o.folds < 1) throw ConfigError("--folds must be at least 1");
  const SurvivalDataset ds = o.data.load(o.cause);
  const std::vector<double> landmarks = parse_grid(o.landmarks);

  ModelSpec spec;
  spec.kind = parse_model_kind(o.model);
  if (!o.grid.empty()) spec.grid = parse_grid(o.grid);
  spec.basis = BasisSpec::named(o.basis);
  spec.stratified = o.stratified;
  const unsigned jobs = resolve_jobs(o.jobs);
  spec.jobs = jobs;

  std::vector<PredictionSet> preds;
  std::vector<int> fold_of(ds.size(), 0);
  if (o.folds == 1) {
    const auto model = train(ds, spec, landmarks, o.w);
    for (double s : landmarks) preds.push_back(predict_at(*model, ds, s, o.w));
  } else {
    CvOptions cv;
    cv.folds = o.folds;
    cv.seed = o.seed;
    cv.jobs = jobs;
    CvResult res = cross_validate(ds, spec, landmarks, o.w, cv);
    preds = std::move(res.predictions);
    fold_of = std::move(res.fold_of);
  }

  std::vector<MetricRow> rows;
  for (const auto& p : preds) {
    const LandmarkMetrics m = evaluate(ds, p);
    const auto q = pseudovalues(ds, p.s, p.w);
    const auto [se_b, se_oe] = metric_se(q, p, m.oe);
    rows.push_back({p.s, "at_risk", static_cast<double>(m.at_risk), kNaN});
    rows.push_back({p.s, "brier", m.brier, se_b});
    rows.push_back({p.s, "oe", m.oe, se_oe});
    rows.push_back({p.s, "auc", m.auc, kNaN});
    rows.push_back({p.s, "bias2", squared_bias(p, q.estimate), kNaN});
  }

  ensure_directory(o.out);
  {
    auto os = open_output(std::filesystem::path(o.out) / "metrics.csv");
    write_metric_table(os, rows);
  }
  {
    std::unordered_map<std::string, int> fold_by_id;
    for (std::size_t i = 0; i < ds.size(); ++i) fold_by_id.emplace(ds[i].id, fold_of[i]);
    auto os = open_output(std::filesystem::path(o.out) / "predictions.csv");
    os << "id,s,w,pi,fold\n";
    for (const auto& p : preds) {
      for (std::size_t i = 0; i < p.size(); ++i) {
        os << p.ids[i] << ',' << format_double(p.s) << ',' << format_double(p.w) << ',' << format_double(p.pi[i]) << ','
           << fold_by_id.at(p.ids[i]) << '\n';
      }
    }
  }
  RunManifest man;
  man.command = "evaluate";
  man.argv = ctx.argv;
  man.config = sub.config_to_str(true, false);
  man.seed = o.seed;
  man.inputs = o.data.inputs();
  man.outputs = {"metrics.csv", "predictions.csv"};
  man.write(o.out);

  std::printf("%-10s %8s %10s %10s %10s\n", "landmark", "at_risk", "brier", "o/e", "auc");
  for (std::size_t k = 0; k < rows.size(); k += 5) {
    std::printf("%-10s %8.0f %10.5f %10.4f %10.4f\n", format_double(rows[k].landmark).c_str(), rows[k].estimate,
                rows[k + 1].estimate, rows[k + 2].estimate, rows[k + 3].estimate);
  }
}

}  // namespace

void add_evaluate(CLI::App& app, const Context& ctx) {
  auto o = std::make_shared<EvaluateOptions>();
  auto* sub = app.add_subcommand("evaluate", "Cross-validated Brier score, O/E ratio and AUC at landmarks");
  o->data.add_to(*sub);
  sub->add_option("--model", o->model, "np, psh, landmark-psh, supermodel or cox-supermodel")
      ->check(CLI::IsMember({"np", "psh", "landmark-psh", "supermodel", "cox-supermodel"}))
      ->capture_default_str();
  sub->add_option("--landmarks", o->landmarks, "Evaluation landmarks, from:step:to or a comma list")->required();
  sub->add_option("--w", o->w, "Prediction window width")->required();
  sub->add_option("--folds", o->folds, "Cross-validation folds (1: apparent performance)")->capture_default_str();
  sub->add_option("--seed", o->seed, "Fold assignment seed")->capture_default_str();
  sub->add_option("--grid", o->grid, "Supermodel landmarks (default 0:0.1:<largest evaluation landmark>)");
  sub->add_option("--basis", o->basis, "Supermodel basis: const, linear or quad")
      ->check(CLI::IsMember({"const", "linear", "quad"}))
      ->capture_default_str();
  sub->add_flag("--stratified", o->stratified, "Separate supermodel baseline per landmark");
  sub->add_option("--cause", o->cause, "Event of interest")->capture_default_str();
  sub->add_option("--jobs", o->jobs, "Worker threads (0: all cores)")->capture_default_str();
  sub->add_option("-o,--out", o->out, "Output directory")->capture_default_str();
  sub->callback([o, sub, &ctx] { run_evaluate(*o, *sub, ctx); });
}

}  // namespace lmpsh::cli
