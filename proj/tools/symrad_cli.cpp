// symrad command-line front end.
//
//   symrad fig2|fig3|fig4|fig5|run [--config FILE] [--seed N] [--out FILE]
//          [--methods mrc,corr_eig,sdr] [--trials N] [--realizations N]
//          [--threads N]
//   symrad validate-config --config FILE
//
// Without --config each figure command uses the built-in defaults. Output
// is CSV on stdout unless --out (or the config's output key) names a file.
// Exit codes: 0 success, 2 configuration error, 3 solver failure.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "symrad/cli/config.hpp"
#include "symrad/cli/csv.hpp"
#include "symrad/cli/experiments.hpp"

namespace {

using namespace symrad;
using namespace symrad::cli;

constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string methods;
  std::optional<std::size_t> trials;
  std::optional<std::size_t> realizations;
  std::optional<std::size_t> threads;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "Experiment config file");
  cmd->add_option("--seed", f.seed, "Master seed (overrides the config)");
  cmd->add_option("--out", f.out, "Output CSV path (default: stdout)");
  cmd->add_option("--methods", f.methods, "Comma list of mrc, corr_eig, sdr");
  cmd->add_option("--trials", f.trials, "Monte Carlo trials per rate")->check(CLI::PositiveNumber);
  cmd->add_option("--realizations", f.realizations, "Channel realizations")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--threads", f.threads, "Worker threads (0 = all cores)");
}

ExperimentConfig resolve(const Flags& f, Sweep sweep) {
  ExperimentConfig c = f.config.empty() ? default_config(sweep) : load_config(f.config);
  if (c.sweep != sweep) {
    throw ConfigError("config declares sweep '" + to_string(c.sweep) +
                          "' but this command needs '" + to_string(sweep) + "'",
                      0, "sweep");
  }
  if (f.seed) c.seed = *f.seed;
  if (!f.out.empty()) c.output_path = f.out;
  if (!f.methods.empty()) c.methods = parse_methods(f.methods);
  if (f.trials) c.mc_trials = *f.trials;
  if (f.realizations) c.n_realizations = *f.realizations;
  if (f.threads) c.threads = *f.threads;
  c.validate();
  return c;
}

int write(const ResultTable& t, const ExperimentConfig& c) {
  if (c.output_path.empty()) {
    std::cout << format_csv(t);
  } else {
    emit_csv(t, c.output_path);
    std::cerr << "wrote " << t.rows.size() << " rows to " << c.output_path << "\n";
  }
  if (has_solver_failures(t)) {
    std::cerr << "error: SDP solver failed on some points (see status column)\n";
    return kExitSolver;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Symbiotic radio rate and beamforming experiments"};
  app.require_subcommand(1);
  Flags f;
  auto* fig2 = app.add_subcommand("fig2", "Primary rate versus BD sum rate, massive-BD regime");
  auto* fig3 = app.add_subcommand("fig3", "Primary rate versus p for each beamformer, one realization");
  auto* fig4 = app.add_subcommand("fig4", "Primary rate versus number of BDs");
  auto* fig5 = app.add_subcommand("fig5", "Secondary sum rate versus number of BDs");
  auto* run = app.add_subcommand("run", "Single scenario averaged over realizations");
  auto* validate = app.add_subcommand("validate-config", "Parse a config and print it in canonical form");
  for (CLI::App* cmd : {fig2, fig3, fig4, fig5, run}) add_common(cmd, f);
  validate->add_option("--config", f.config, "Experiment config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (validate->parsed()) {
      std::cout << emit_config(load_config(f.config));
      return 0;
    }
    if (fig2->parsed()) {
      const ExperimentConfig c = resolve(f, Sweep::RsVsRbdCurve);
      return write(run_fig2(c), c);
    }
    if (fig3->parsed()) {
      const ExperimentConfig c = resolve(f, Sweep::PowerSweep);
      return write(run_fig3(c), c);
    }
    if (fig4->parsed() || fig5->parsed()) {
      const ExperimentConfig c = resolve(f, Sweep::BdCountSweep);
      return write(run_fig4_fig5(c, fig4->parsed() ? "fig4" : "fig5"), c);
    }
    if (run->parsed()) {
      const ExperimentConfig c = resolve(f, Sweep::SingleRun);
      return write(run_single(c), c);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const SolverError& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kExitSolver;
  } catch (const ValidationError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}
