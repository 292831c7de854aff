#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <sstream>
#include <variant>

#include <CLI11.hpp>

#include "commands.hpp"
#include "lmpsh/censoring.hpp"
#include "lmpsh/errors.hpp"
#include "lmpsh/landmark.hpp"
#include "lmpsh/parallel.hpp"
#include "lmpsh/rng.hpp"
#include "lmpsh/serialize.hpp"
#include "lmpsh/supermodel.hpp"
#include "lmpsh/svg.hpp"
#include "manifest.hpp"
#include "table_io.hpp"

namespace lmpsh::cli {

namespace {

using Model = std::variant<PSHFit, SupermodelFit>;

struct PredictOptions {
  std::string model;
  std::string profiles;
  std::string s;
  std::optional<double> w;
  bool svg = false;
  int bootstrap = 0;
  double level = 0.95;
  DataOptions data;
  int cause = 1;
  std::uint64_t seed = 1;
  unsigned jobs = 1;
  std::string out = "out";
};

Model load_model(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  const std::string text = ss.str();
  if (model_type_of_json(text) == "supermodel") return supermodel_fit_from_json(text);
  return psh_fit_from_json(text);
}

const std::vector<std::string>& covariate_names(const Model& m) {
  return std::visit([](const auto& f) -> const std::vector<std::string>& { return f.covariate_names; }, m);
}

bool is_plain(const Model& m) { return std::holds_alternative<PSHFit>(m) && !std::get<PSHFit>(m).landmark; }

double default_window(const Model& m) {
  if (const auto* sm = std::get_if<SupermodelFit>(&m)) return sm->w;
  const auto& f = std::get<PSHFit>(m);
  return f.window.value_or(std::numeric_limits<double>::infinity());
}

// Conditional CIF for landmark models; the unconditional CIF at t = s for a plain fit.
double predict_one(const Model& m, std::span<const double> z, double s, double w) {
  if (const auto* sm = std::get_if<SupermodelFit>(&m)) return sm->predict(z, s, w);
  const auto& f = std::get<PSHFit>(m);
  if (!f.landmark) return predict_cif(f, z, s);
  return predict_conditional_cif(f, z, {s, w});
}

Model refit(const Model& m, const SurvivalDataset& ds) {
  FitOptions fo;
  fo.compute_robust = false;
  if (const auto* sm = std::get_if<SupermodelFit>(&m)) {
    StackOptions so;
    so.variant = sm->variant;
    so.stratified = sm->stratified;
    return fit_supermodel(build_stacked(ds, sm->grid, sm->w, sm->basis, so), fo);
  }
  const auto& f = std::get<PSHFit>(m);
  const bool cox = f.variant == "cox";
  if (f.landmark) {
    LandmarkOptions lo;
    lo.fit = fo;
    lo.competing_as_censoring = cox;
    return fit_landmark_psh(ds, {*f.landmark, f.window.value_or(std::numeric_limits<double>::infinity())}, lo);
  }
  CountingProcessOptions cpo;
  cpo.competing_as_censoring = cox;
  return fit_fine_gray(to_counting_process(ds, km_censoring(ds), cpo).table, fo);
}

SurvivalDataset resample(const SurvivalDataset& ds, std::uint64_t seed, std::size_t b) {
  CounterRng rng(seed, b);
  std::vector<SubjectRecord> rows;
  rows.reserve(ds.size());
  for (std::size_t k = 0; k < ds.size(); ++k) {
    const auto i = std::min(ds.size() - 1, static_cast<std::size_t>(rng.next() * static_cast<double>(ds.size())));
    SubjectRecord r = ds[i];
    r.id += "#" + std::to_string(k);
    rows.push_back(std::move(r));
  }
  return SurvivalDataset(std::move(rows), ds.covariate_names());
}

void run_predict(const PredictOptions& o, const CLI::App& sub, const Context& ctx) {
  const Model model = load_model(o.model);
  const auto& names = covariate_names(model);
  const Profiles prof = read_profiles(o.profiles, names);
  const std::vector<double> times = parse_grid(o.s);
  const double w = o.w.value_or(default_window(model));
  if (!(w > 0.0)) throw ConfigError("--w must be positive");
  if (!is_plain(model) && !std::isfinite(w)) throw ConfigError("--w is required for a model without a window");

  const std::size_t P = prof.values.size(), K = times.size();
  std::vector<double> est(P * K);
  for (std::size_t p = 0; p < P; ++p) {
    for (std::size_t k = 0; k < K; ++k) est[p * K + k] = predict_one(model, prof.values[p], times[k], w);
  }

  std::vector<double> lower, upper;
  std::size_t failed = 0;
  if (o.bootstrap > 0) {
    if (o.data.data.empty()) throw ConfigError("--bootstrap needs --data");
    if (!(o.level > 0.0 && o.level < 1.0)) throw ConfigError("--level must lie in (0, 1)");
    const SurvivalDataset ds = o.data.load(o.cause);
    if (ds.covariate_names() != names) throw DataError("data covariates do not match the model covariates");
    const auto B = static_cast<std::size_t>(o.bootstrap);
    std::vector<std::vector<double>> draws(B);
    parallel_for(B, resolve_jobs(o.jobs), [&](std::size_t b) {
      try {
        const Model mb = refit(model, resample(ds, o.seed, b));
        std::vector<double> v(P * K);
        for (std::size_t p = 0; p < P; ++p) {
          for (std::size_t k = 0; k < K; ++k) v[p * K + k] = predict_one(mb, prof.values[p], times[k], w);
        }
        draws[b] = std::move(v);
      } catch (const DataError&) {
      } catch (const NumericalError&) {
      }
    });
    lower.resize(P * K);
    upper.resize(P * K);
    const double a = (1.0 - o.level) / 2.0;
    for (std::size_t c = 0; c < P * K; ++c) {
      std::vector<double> col;
      for (const auto& d : draws) {
        if (!d.empty()) col.push_back(d[c]);
      }
      lower[c] = quantile(col, a);
      upper[c] = quantile(col, 1.0 - a);
    }
    for (const auto& d : draws) failed += d.empty() ? 1u : 0u;
    if (failed == B) throw NumericalError("every bootstrap refit failed");
  }

  ensure_directory(o.out);
  const std::string tcol = is_plain(model) ? "t" : "s";
  {
    auto os = open_output(std::filesystem::path(o.out) / "predictions.csv");
    os << "profile," << tcol << ",w,cif" << (lower.empty() ? "" : ",lower,upper") << '\n';
    for (std::size_t p = 0; p < P; ++p) {
      for (std::size_t k = 0; k < K; ++k) {
        const std::size_t c = p * K + k;
        os << prof.labels[p] << ',' << format_double(times[k]) << ',' << format_double(is_plain(model) ? 0.0 : w) << ','
           << format_double(est[c]);
        if (!lower.empty()) os << ',' << format_double(lower[c]) << ',' << format_double(upper[c]);
        os << '\n';
      }
    }
  }
  RunManifest m;
  m.command = "predict";
  m.argv = ctx.argv;
  m.config = sub.config_to_str(true, false);
  m.inputs = {o.model, o.profiles};
  if (o.bootstrap > 0) {
    m.seed = o.seed;
    for (auto& in : o.data.inputs()) m.inputs.push_back(in);
  }
  m.outputs = {"predictions.csv"};
  if (o.svg) {
    SvgPanel panel;
    panel.title = is_plain(model) ? "Predicted cumulative incidence"
                                   : "Predicted conditional cumulative incidence, w = " + format_double(w);
    panel.xlabel = is_plain(model) ? "time" : "landmark s";
    panel.ylabel = "CIF";
    panel.ymin = 0.0;
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    for (std::size_t p = 0; p < P; ++p) {
      SvgSeries sr;
      sr.label = prof.labels[p];
      sr.color = colors[p % 6];
      sr.x = times;
      sr.y.assign(est.begin() + static_cast<std::ptrdiff_t>(p * K), est.begin() + static_cast<std::ptrdiff_t>((p + 1) * K));
      panel.series.push_back(sr);
      if (!lower.empty()) {
        for (const auto* band : {&lower, &upper}) {
          SvgSeries b = sr;
          b.label.clear();
          b.dashed = true;
          b.y.assign(band->begin() + static_cast<std::ptrdiff_t>(p * K),
                     band->begin() + static_cast<std::ptrdiff_t>((p + 1) * K));
          panel.series.push_back(b);
        }
      }
    }
    open_output(std::filesystem::path(o.out) / "curve.svg") << render_svg({panel});
    m.outputs.push_back("curve.svg");
  }
  m.write(o.out);
  std::cout << "wrote " << P * K << " predictions to " << (std::filesystem::path(o.out) / "predictions.csv").string()
            << '\n';
  if (failed > 0) std::cerr << "warning: " << failed << " of " << o.bootstrap << " bootstrap refits failed\n";
}

}  // namespace

void add_predict(CLI::App& app, const Context& ctx) {
  auto o = std::make_shared<PredictOptions>();
  auto* sub = app.add_subcommand("predict", "Predict conditional cumulative incidences for covariate profiles");
  sub->add_option("--model", o->model, "Model JSON written by fit")->required();
  sub->add_option("--profiles", o->profiles, "CSV with one column per model covariate and an optional profile column")
      ->required();
  sub->add_option("--s", o->s, "Landmarks (times for a plain Fine-Gray model), from:step:to or a comma list")
      ->required();
  sub->add_option("--w", o->w, "Prediction window (default: the fitted window)");
  sub->add_flag("--svg", o->svg, "Also draw the curves as curve.svg");
  sub->add_option("--bootstrap", o->bootstrap, "Nonparametric bootstrap refits for percentile intervals")
      ->capture_default_str();
  sub->add_option("--level", o->level, "Bootstrap interval coverage")->capture_default_str();
  o->data.add_to(*sub, false);
  sub->add_option("--cause", o->cause, "Event of interest of the bootstrap refits")->capture_default_str();
  sub->add_option("--seed", o->seed, "Bootstrap seed")->capture_default_str();
  sub->add_option("--jobs", o->jobs, "Worker threads (0: all cores)")->capture_default_str();
  sub->add_option("-o,--out", o->out, "Output directory")->capture_default_str();
  sub->callback([o, sub, &ctx] { run_predict(*o, *sub, ctx); });
}

}  // namespace lmpsh::cli
