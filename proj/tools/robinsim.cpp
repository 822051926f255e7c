// robinsim <subcommand> --config <path> [--seed S] [--out DIR] [--workers W]
//
// Exit codes: 0 success, 2 configuration error, 3 numeric failure.

#include <robinsim/harness.hpp>

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<unsigned> workers;
};

int run(robinsim::Engine engine, const Options& opt) {
  std::ifstream f(opt.config);
  if (!f) throw robinsim::ConfigError("cannot read config file " + opt.config);
  std::stringstream text;
  text << f.rdbuf();
  auto config = robinsim::parse_config(text.str());
  if (config.engine != engine) {
    throw robinsim::ConfigError("config declares engine '" + std::string(robinsim::engine_name(config.engine)) +
                                "' but subcommand '" + std::string(robinsim::engine_name(engine)) + "' was invoked");
  }
  if (opt.seed) config.set_seed(*opt.seed);
  if (opt.out) config.set_out(*opt.out);
  if (opt.workers) config.set_workers(*opt.workers);
  for (const auto& path : robinsim::run_experiment(config)) std::cout << path.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Euler simulation of diffusion with partially reflecting boundaries"};
  app.require_subcommand(1);
  Options opt;
  robinsim::Engine chosen = robinsim::Engine::sim1d;

  for (auto engine : {robinsim::Engine::sim1d, robinsim::Engine::simnd, robinsim::Engine::fpe,
                      robinsim::Engine::analytic, robinsim::Engine::blcheck, robinsim::Engine::convergence}) {
    auto* sub = app.add_subcommand(std::string(robinsim::engine_name(engine)));
    sub->add_option("--config", opt.config, "experiment file (key = value lines)")->required();
    sub->add_option("--seed", opt.seed, "override the seed");
    sub->add_option("--out", opt.out, "output directory");
    sub->add_option("--workers", opt.workers, "worker threads (0 = all cores)");
    sub->callback([&chosen, engine] { chosen = engine; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    return run(chosen, opt);
  } catch (const robinsim::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const robinsim::DomainError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const robinsim::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  }
}
