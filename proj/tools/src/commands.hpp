#pragma once

#include <string>
#include <vector>

namespace CLI {
class App;
}

namespace lmpsh::cli {

struct Context {
  std::vector<std::string> argv;
};

void add_simulate(CLI::App& app, const Context& ctx);
void add_fit(CLI::App& app, const Context& ctx);
void add_predict(CLI::App& app, const Context& ctx);
void add_evaluate(CLI::App& app, const Context& ctx);
void add_reproduce(CLI::App& app, const Context& ctx);

}  // namespace lmpsh::cli
