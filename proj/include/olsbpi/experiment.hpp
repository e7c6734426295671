#ifndef OLSBPI_EXPERIMENT_HPP
#define OLSBPI_EXPERIMENT_HPP

#include <string>
#include <vector>

#include "olsbpi/config.hpp"

// Experiment runner: dispatches a validated config to the solver, learning
// or simulation pipeline, fans independent seeds out to workers, merges the
// results in seed order and writes the artifact files (report.csv,
// summary.json, fig1*.csv/svg, trajectory_<seed>.csv). Identical configs
// and seeds produce byte-identical reports.

namespace olsbpi {

struct ReportRow {
  std::uint64_t seed = 0;
  int iteration = 0;
  double gain_error = 0.0;
  double value_error = 0.0;
  double cost_error = 0.0;
  double rel_delta_g = 0.0;
  bool admissible = false;
  double ref_gain_error = 0.0;
  double ref_value_error = 0.0;
  double ref_cost_error = 0.0;
};

struct ConvergenceReport {
  std::vector<ReportRow> rows;              // ordered by (seed position, iteration)
  std::vector<IterationRecord> reference;   // model-based policy iteration
};

struct ExperimentOutcome {
  ConvergenceReport report;     // first magnitude's report for robust sweeps
  std::string summary_json;     // what was written to summary.json
  std::string output_dir;
};

// Runs the experiment and writes all artifacts under cfg.output_dir. On a
// numerical failure, summary.json is still written with the failure record
// before the RunError is rethrown.
ExperimentOutcome run_experiment(const ExperimentConfig& cfg);

void write_report_csv(const ConvergenceReport& report, const std::string& path);

// Plot-ready per-iteration quantiles (median, p10, p90) of the learning
// errors next to the model-based reference: fig1a (gain error), fig1b
// (value error), fig1c (cost error), fig1d (relative G estimation error).
// Optionally renders static log-scale SVG line charts.
void emit_plot_data(const ConvergenceReport& report, const std::string& out_dir,
                    bool render_svg = true);

}  // namespace olsbpi

#endif
