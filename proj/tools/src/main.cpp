#include <exception>
#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "lmpsh/errors.hpp"

int main(int argc, char** argv) {
  lmpsh::cli::Context ctx;
  ctx.argv.assign(argv, argv + argc);

  CLI::App app{"Landmark proportional subdistribution hazards models for dynamic competing-risks prediction", "lmpsh"};
  app.set_version_flag("--version", std::string(LMPSH_VERSION));
  app.set_config("--config", "", "TOML file with option values (section per command); command-line flags win");
  app.require_subcommand(1);
  lmpsh::cli::add_simulate(app, ctx);
  lmpsh::cli::add_fit(app, ctx);
  lmpsh::cli::add_predict(app, ctx);
  lmpsh::cli::add_evaluate(app, ctx);
  lmpsh::cli::add_reproduce(app, ctx);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const lmpsh::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const lmpsh::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const lmpsh::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
