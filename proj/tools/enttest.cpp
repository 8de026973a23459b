// enttest: experiment runner.
//
//   enttest calibrate|grid|scaling|bayesnet|oracle --spec FILE [--check]
//           [--workers N] [--seed S] [--out DIR]
//
// Exit status: 0 ok, 1 error, 2 check failure.

#include <cstdlib>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "enttest/bench.hpp"
#include "enttest/errors.hpp"

namespace {

std::size_t default_workers() {
  if (const char* env = std::getenv("ENTTEST_WORKERS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
    std::cerr << "enttest: ignoring ENTTEST_WORKERS='" << env << "'\n";
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entropy equivalence testing experiments"};
  app.require_subcommand(1);

  std::string spec_path, out_dir;
  bool check = false;
  std::size_t workers = default_workers();
  std::uint64_t seed = 0;

  const std::pair<const char*, const char*> commands[] = {
      {"calibrate", "fit threshold constants and write calibrated.cfg"},
      {"grid", "error-rate grid over (tester, n, eps, family)"},
      {"scaling", "minimal passing budget versus n"},
      {"bayesnet", "Bayes-net closeness and identity suite"},
      {"oracle", "deterministic and Monte Carlo oracle checks"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--spec", spec_path, "experiment spec file");
    sub->add_flag("--check", check, "exit 2 when any acceptance target is missed");
    sub->add_option("--workers", workers, "worker threads (default $ENTTEST_WORKERS)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "override the master seed");
    sub->add_option("--out", out_dir, "output directory");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    const std::string name = app.get_subcommands().front()->get_name();
    const enttest::ExperimentKind kind = enttest::parse_kind(name);
    enttest::ExperimentSpec spec;
    if (spec_path.empty()) {
      std::istringstream none;
      spec = enttest::read_spec(none, kind);
    } else {
      spec = enttest::load_spec(spec_path, kind);
    }
    if (app.get_subcommands().front()->count("--seed")) spec.seed = seed;
    if (!out_dir.empty()) spec.out_dir = out_dir;

    const enttest::ExperimentResult res = enttest::run_experiment(spec, {workers, check});
    for (const auto& line : res.summary) std::cout << line << '\n';
    if (!res.ok()) {
      for (const auto& line : res.failures) std::cout << "FAIL " << line << '\n';
      return 2;
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "enttest: " << e.what() << '\n';
    return 1;
  }
}
