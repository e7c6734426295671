// Command-line runner: model-based solves, data-driven learning, disturbance
// robustness sweeps and raw trajectory generation, all driven by a JSON
// config (see configs/ for annotated examples). bench-pendulum is the
// learning pipeline with the bundled 6-state benchmark and its standard
// parameters baked in.

#include <cstdio>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "olsbpi/experiment.hpp"
#include "olsbpi/preset.hpp"

namespace {

struct GlobalOpts {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

void apply_overrides(olsbpi::ExperimentConfig& cfg, const GlobalOpts& opts) {
  if (!opts.out_dir.empty()) cfg.output_dir = opts.out_dir;
  if (opts.seed) cfg.seeds = {*opts.seed};
}

int run(const olsbpi::ExperimentConfig& cfg, const GlobalOpts& opts) {
  const auto outcome = olsbpi::run_experiment(cfg);
  if (!opts.quiet) {
    std::printf("wrote %s/summary.json (%zu report rows)\n", outcome.output_dir.c_str(),
                outcome.report.rows.size());
  }
  return 0;
}

olsbpi::ExperimentConfig bench_pendulum_config() {
  olsbpi::ExperimentConfig cfg;
  cfg.algorithm = olsbpi::Algorithm::learn;
  olsbpi::PendulumPreset preset = olsbpi::preset_triple_pendulum();
  cfg.gain = preset.initial_gain.K;
  cfg.model = std::move(preset.model);
  cfg.weights = std::move(preset.weights);
  cfg.sim.dt = 1e-3;
  cfg.sim.t_f = 510.0;
  cfg.sim.sigma_u = 100.0;
  cfg.olsbpi.iterations = 10;
  cfg.olsbpi.s_f = 100.0;
  cfg.olsbpi.mode = olsbpi::OlsbpiOptions::Mode::ode;
  // The exploratory rollout spans six orders of magnitude in the lifted
  // regressor, so the least-squares pseudoinverse must keep directions the
  // default threshold would discard.
  cfg.olsbpi.rank_tol = 1e-13;
  cfg.seeds = {1};
  cfg.output_dir = "olsbpi_out";
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"optimal stationary control of linear stochastic systems: "
               "model-based and data-driven policy iteration"};
  app.require_subcommand(1);
  app.fallthrough();  // accept the global flags after the subcommand too

  GlobalOpts opts;
  app.add_option("--config", opts.config_path, "path to a JSON experiment config")
      ->envname("OLSBPI_CONFIG");
  app.add_option("--out", opts.out_dir, "output directory (overrides config)");
  app.add_option("--seed", opts.seed, "single seed overriding the config seed list");
  app.add_flag("--quiet", opts.quiet, "suppress progress output");

  auto* sc_solve = app.add_subcommand("solve", "model-based policy iteration");
  auto* sc_learn = app.add_subcommand("learn", "data-driven policy iteration from one rollout");
  auto* sc_sim = app.add_subcommand("simulate", "generate exploratory trajectories");
  auto* sc_robust = app.add_subcommand("robust", "policy iteration under G disturbances");
  auto* sc_bench =
      app.add_subcommand("bench-pendulum", "learning benchmark on the bundled 6-state model");

  CLI11_PARSE(app, argc, argv);

  try {
    olsbpi::ExperimentConfig cfg;
    if (app.got_subcommand(sc_bench)) {
      cfg = bench_pendulum_config();
    } else {
      olsbpi::Algorithm expected = olsbpi::Algorithm::solve;
      if (app.got_subcommand(sc_learn)) expected = olsbpi::Algorithm::learn;
      if (app.got_subcommand(sc_sim)) expected = olsbpi::Algorithm::simulate;
      if (app.got_subcommand(sc_robust)) expected = olsbpi::Algorithm::robust;
      (void)sc_solve;
      if (opts.config_path.empty()) {
        std::fprintf(stderr, "error: --config is required for this subcommand\n");
        return 2;
      }
      cfg = olsbpi::load_config(opts.config_path, expected);
    }
    apply_overrides(cfg, opts);
    return run(cfg, opts);
  } catch (const olsbpi::ParseError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const olsbpi::ValidationError& e) {
    std::fprintf(stderr, "config error:\n");
    for (const auto& issue : e.issues) std::fprintf(stderr, "  - %s\n", issue.c_str());
    return 2;
  } catch (const olsbpi::MissingABData& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const olsbpi::Error& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  }
}
