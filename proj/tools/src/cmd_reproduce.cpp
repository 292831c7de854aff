#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "lmpsh/errors.hpp"
#include "lmpsh/experiments.hpp"
#include "manifest.hpp"
#include "table_io.hpp"

namespace lmpsh::cli {

namespace {

struct ReproduceOptions {
  std::string target;
  std::optional<int> reps;
  std::optional<std::size_t> n;
  std::optional<double> censoring;
  std::uint64_t seed = 20240601;
  int folds = 3;
  unsigned jobs = 1;
  std::string out = "out";
};

void run_reproduce(const ReproduceOptions& o, const CLI::App& sub, const Context& ctx) {
  const bool table1 = o.target == "table1";
  Budget budget;
  budget.reps = o.reps.value_or(o.target == "fig1" ? 200 : 100);
  budget.n = o.n.value_or(table1 ? 5000 : 1000);
  budget.seed = o.seed;
  budget.jobs = resolve_jobs(o.jobs);
  if (budget.reps < 1) throw ConfigError("--reps must be positive");
  if (budget.n < 10) throw ConfigError("--n must be at least 10");
  if (o.folds < 2) throw ConfigError("--folds must be at least 2");
  const double fraction = o.censoring.value_or(table1 ? 0.3 : 0.25);

  ensure_directory(o.out);
  const std::filesystem::path dir(o.out);
  std::vector<CheckResult> checks;
  std::vector<std::string> outputs;
  if (o.target == "fig1") {
    std::vector<CurveStudy> studies;
    for (int setting : {1, 2}) {
      studies.push_back(run_curve_study(default_scenario(setting, fraction), budget));
      for (auto& c : curve_checks(studies.back())) checks.push_back(std::move(c));
    }
    auto csv = open_output(dir / "curves.csv");
    write_curve_csv(csv, studies);
    open_output(dir / "fig1.svg") << curve_svg(studies);
    outputs = {"curves.csv", "fig1.svg"};
  } else if (o.target == "fig2") {
    std::vector<IncrementStudy> studies;
    for (int setting : {1, 2}) {
      studies.push_back(run_increment_study(default_scenario(setting, fraction), budget, o.folds));
      for (auto& c : increment_checks(studies.back())) checks.push_back(std::move(c));
    }
    auto csv = open_output(dir / "increments.csv");
    write_increment_csv(csv, studies);
    open_output(dir / "fig2.svg") << increment_svg(studies);
    outputs = {"increments.csv", "fig2.svg"};
  } else {
    CalibrationScenario scenario = default_calibration_scenario(fraction);
    scenario.folds = o.folds;
    const CalibrationStudy study = run_calibration_study(scenario, budget);
    checks = calibration_checks(study);
    auto csv = open_output(dir / "calibration.csv");
    write_calibration_csv(csv, study);
    auto table = open_output(dir / "table1.txt");
    write_calibration_table(table, study);
    write_calibration_table(std::cout, study);
    outputs = {"calibration.csv", "table1.txt"};
  }
  {
    auto os = open_output(dir / "checks.txt");
    write_checks(os, checks);
  }
  outputs.push_back("checks.txt");
  write_checks(std::cout, checks);

  RunManifest m;
  m.command = "reproduce " + o.target;
  m.argv = ctx.argv;
  m.config = sub.config_to_str(true, false);
  m.seed = o.seed;
  m.outputs = outputs;
  std::ostringstream details;
  details << "{\"reps\": " << budget.reps << ", \"n\": " << budget.n << ", \"censoring_fraction\": "
          << format_double(fraction) << "}";
  m.extra_json = details.str();
  m.write(dir);
}

}  // namespace

void add_reproduce(CLI::App& app, const Context& ctx) {
  auto o = std::make_shared<ReproduceOptions>();
  auto* sub = app.add_subcommand("reproduce", "Run a simulation study: fig1 (conditional CIF curves), fig2 (Brier "
                                              "increments) or table1 (calibration of the supermodels)");
  sub->add_option("target", o->target, "fig1, fig2 or table1")->required()->check(CLI::IsMember({"fig1", "fig2", "table1"}));
  sub->add_option("--reps", o->reps, "Replications (default 200 for fig1, 100 otherwise)");
  sub->add_option("--n", o->n, "Subjects per replication (default 5000 for table1, 1000 otherwise)");
  sub->add_option("--censoring", o->censoring, "Target censored fraction (default 0.3 for table1, 0.25 otherwise)");
  sub->add_option("--seed", o->seed, "Master seed")->capture_default_str();
  sub->add_option("--folds", o->folds, "Cross-validation folds for fig2 and table1")->capture_default_str();
  sub->add_option("--jobs", o->jobs, "Worker threads (0: all cores)")->capture_default_str();
  sub->add_option("-o,--out", o->out, "Output directory")->capture_default_str();
  sub->callback([o, sub, &ctx] { run_reproduce(*o, *sub, ctx); });
}

}  // namespace lmpsh::cli
