#include <iostream>
#include <memory>
#include <optional>

#include <CLI11.hpp>

#include "commands.hpp"
#include "lmpsh/errors.hpp"
#include "lmpsh/simulate.hpp"
#include "manifest.hpp"
#include "table_io.hpp"

namespace lmpsh::cli {

namespace {

struct SimulateOptions {
  int setting = 1;
  std::size_t n = 1000;
  std::uint64_t seed = 1;
  std::optional<double> p, alpha, lambda, beta1, beta21, beta22, beta_c;
  double censoring = 0.25;
  std::optional<double> censor_upper;
  std::optional<double> onset_rate, beta_td;
  unsigned jobs = 1;
  std::string out = "out";
};

SimulationConfig to_config(const SimulateOptions& o) {
  SimulationConfig c;
  c.setting = o.setting;
  c.n = o.n;
  c.seed = o.seed;
  CensoringParams cens;
  if (o.censor_upper) {
    if (!(*o.censor_upper > 0.0)) throw ConfigError("--censor-upper must be positive");
    cens.upper = *o.censor_upper;
  } else {
    if (!(o.censoring >= 0.0 && o.censoring < 1.0)) throw ConfigError("--censoring must lie in [0, 1)");
    cens.target_fraction = o.censoring;
  }
  if (o.setting == 1) {
    if (o.beta21 || o.beta22) throw ConfigError("--beta21/--beta22 apply to settings 2 and 3");
    auto& s = c.setting1;
    if (o.p) s.p = *o.p;
    if (o.alpha) s.alpha1 = *o.alpha;
    if (o.lambda) s.lambda1 = *o.lambda;
    if (o.beta1) s.beta1 = *o.beta1;
    if (o.beta_c) s.beta_c = *o.beta_c;
    s.censoring = cens;
    s.validate();
  } else {
    if (o.beta1) throw ConfigError("--beta1 applies to setting 1");
    auto& s = o.setting == 2 ? c.setting2 : c.tdcov.base;
    if (o.p) s.p = *o.p;
    if (o.alpha) s.alpha2 = *o.alpha;
    if (o.lambda) s.lambda2 = *o.lambda;
    if (o.beta21) s.beta21 = *o.beta21;
    if (o.beta22) s.beta22 = *o.beta22;
    if (o.beta_c) s.beta_c = *o.beta_c;
    s.censoring = cens;
    if (o.setting == 3) {
      if (o.onset_rate) c.tdcov.onset_rate = *o.onset_rate;
      if (o.beta_td) c.tdcov.beta_td = *o.beta_td;
      c.tdcov.validate();
    } else {
      s.validate();
    }
  }
  if (o.setting != 3 && (o.onset_rate || o.beta_td)) throw ConfigError("--onset-rate/--beta-td apply to setting 3");
  return c;
}

void run_simulate(const SimulateOptions& o, const CLI::App& sub, const Context& ctx) {
  if (o.n == 0) throw ConfigError("--n must be positive");
  const SimulationConfig config = to_config(o);
  const SurvivalDataset ds = simulate(config, resolve_jobs(o.jobs));
  ensure_directory(o.out);
  RunManifest m;
  m.command = "simulate";
  m.argv = ctx.argv;
  m.config = sub.config_to_str(true, false);
  m.seed = o.seed;
  {
    auto os = open_output(std::filesystem::path(o.out) / "data.csv");
    write_csv(os, ds);
  }
  m.outputs.push_back("data.csv");
  if (ds.has_time_dependent()) {
    auto os = open_output(std::filesystem::path(o.out) / "data_long.csv");
    write_long_csv(os, ds);
    m.outputs.push_back("data_long.csv");
  }
  m.extra_json = simulation_manifest(config);
  m.write(o.out);
  std::size_t events = 0;
  for (const auto& r : ds.rows()) events += r.status == 1 ? 1u : 0u;
  std::cout << "simulated " << ds.size() << " subjects (" << events << " failures) into " << o.out << '\n';
}

}  // namespace

void add_simulate(CLI::App& app, const Context& ctx) {
  auto o = std::make_shared<SimulateOptions>();
  auto* sub = app.add_subcommand("simulate", "Simulate competing-risks data");
  sub->add_option("--setting", o->setting, "1: PSH-violating time-fixed effect, 2: log(t+1) effect, 3: time-dependent covariate")
      ->check(CLI::IsMember({1, 2, 3}))
      ->capture_default_str();
  sub->add_option("--n", o->n, "Number of subjects")->capture_default_str();
  sub->add_option("--seed", o->seed, "Random seed")->capture_default_str();
  sub->add_option("--p", o->p, "Limiting cause-1 probability for Z = 0");
  sub->add_option("--alpha", o->alpha, "Weibull shape of the cause-1 subdistribution");
  sub->add_option("--lambda", o->lambda, "Weibull rate of the cause-1 subdistribution");
  sub->add_option("--beta1", o->beta1, "Setting 1 covariate effect");
  sub->add_option("--beta21", o->beta21, "Settings 2/3 time-constant covariate effect");
  sub->add_option("--beta22", o->beta22, "Settings 2/3 coefficient of Z log(t + 1); 0 gives PSH data");
  sub->add_option("--beta-c", o->beta_c, "Competing-cause covariate effect");
  sub->add_option("--censoring", o->censoring, "Target censored fraction of uniform censoring")->capture_default_str();
  sub->add_option("--censor-upper", o->censor_upper, "Fixed upper bound of uniform censoring (overrides --censoring)");
  sub->add_option("--onset-rate", o->onset_rate, "Setting 3 exponential onset rate of the time-dependent covariate");
  sub->add_option("--beta-td", o->beta_td, "Setting 3 effect of the time-dependent covariate");
  sub->add_option("--jobs", o->jobs, "Worker threads (0: all cores)")->capture_default_str();
  sub->add_option("-o,--out", o->out, "Output directory")->capture_default_str();
  sub->callback([o, sub, &ctx] { run_simulate(*o, *sub, ctx); });
}

}  // namespace lmpsh::cli
