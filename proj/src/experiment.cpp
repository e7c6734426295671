#include "olsbpi/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <thread>

#include "json.hpp"
#include "olsbpi/csv.hpp"

namespace olsbpi {

using nlohmann::ordered_json;

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void set_errors_against(std::vector<IterationRecord>& records, const Matrix& K_opt,
                        const Matrix& P_opt, double J_opt) {
  for (auto& rec : records) {
    if (rec.gain.size() > 0) rec.gain_error = (rec.gain - K_opt).norm();
    if (rec.value.size() > 0) {
      rec.value_error = (rec.value - P_opt).norm();
      rec.cost_error = std::abs(rec.cost - J_opt);
    }
  }
}

// Runs worker(i) for i in [0, count) on up to max_workers threads and
// returns results in index order.
template <typename T, typename Fn>
std::vector<T> map_in_order(int count, int max_workers, Fn worker) {
  std::vector<T> results(count);
  int next = 0;
  while (next < count) {
    const int batch = std::min(max_workers, count - next);
    std::vector<std::future<T>> futures;
    futures.reserve(batch);
    for (int k = 0; k < batch; ++k)
      futures.push_back(std::async(std::launch::async, worker, next + k));
    for (int k = 0; k < batch; ++k) results[next + k] = futures[k].get();
    next += batch;
  }
  return results;
}

int worker_cap() {
  const unsigned hw = std::thread::hardware_concurrency();
  return std::max(1u, hw ? hw : 1u);
}

double quantile(std::vector<double> values, double q) {
  std::erase_if(values, [](double v) { return std::isnan(v); });
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<size_t>(std::floor(pos));
  const auto hi = static_cast<size_t>(std::ceil(pos));
  const double frac = pos - static_cast<double>(lo);
  return values[lo] * (1.0 - frac) + values[hi] * frac;
}

struct FigSeries {
  std::string file;
  std::string title;
  std::vector<double> median, p10, p90, reference;  // indexed by iteration-1
};

void write_fig_csv(const FigSeries& fig, const fs::path& dir) {
  std::ofstream out(dir / fig.file);
  if (!out) throw Error("cannot open " + (dir / fig.file).string());
  out << "iteration,olsbpi_median,olsbpi_p10,olsbpi_p90,model_based_pi\n";
  for (size_t i = 0; i < fig.median.size(); ++i) {
    out << (i + 1) << "," << format_double17(fig.median[i]) << ","
        << format_double17(fig.p10[i]) << "," << format_double17(fig.p90[i]) << ","
        << format_double17(fig.reference[i]) << "\n";
  }
}

// Minimal static line chart, log-scale y. Non-finite and non-positive
// points are skipped.
void write_fig_svg(const FigSeries& fig, const fs::path& dir) {
  const double width = 560, height = 380;
  const double x0 = 78, x1 = 535, y0 = 330, y1 = 40;  // plot box, y grows up

  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  const auto scan = [&](const std::vector<double>& v) {
    for (double y : v)
      if (std::isfinite(y) && y > 0.0) {
        lo = std::min(lo, y);
        hi = std::max(hi, y);
      }
  };
  scan(fig.median);
  scan(fig.p10);
  scan(fig.p90);
  scan(fig.reference);
  if (!(hi > 0.0)) return;  // nothing plottable
  double lg_lo = std::floor(std::log10(lo));
  double lg_hi = std::ceil(std::log10(hi));
  if (lg_hi - lg_lo < 1.0) lg_hi = lg_lo + 1.0;

  const auto n = static_cast<double>(fig.median.size());
  const auto px = [&](double it) { return x0 + (x1 - x0) * (n > 1 ? (it - 1.0) / (n - 1.0) : 0.5); };
  const auto py = [&](double v) {
    return y0 + (y1 - y0) * (std::log10(v) - lg_lo) / (lg_hi - lg_lo);
  };
  const auto polyline = [&](const std::vector<double>& v, const char* style) {
    std::string pts;
    for (size_t i = 0; i < v.size(); ++i) {
      if (!std::isfinite(v[i]) || v[i] <= 0.0) continue;
      pts += std::to_string(px(static_cast<double>(i + 1))) + "," + std::to_string(py(v[i])) + " ";
    }
    if (pts.empty()) return std::string();
    return "  <polyline fill=\"none\" " + std::string(style) + " points=\"" + pts + "\"/>\n";
  };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
         "\" height=\"" + std::to_string(height) + "\">\n";
  svg += "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "  <text x=\"" + std::to_string((x0 + x1) / 2) +
         "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">" +
         fig.title + "</text>\n";
  // axes
  svg += "  <line x1=\"" + std::to_string(x0) + "\" y1=\"" + std::to_string(y0) + "\" x2=\"" +
         std::to_string(x1) + "\" y2=\"" + std::to_string(y0) + "\" stroke=\"black\"/>\n";
  svg += "  <line x1=\"" + std::to_string(x0) + "\" y1=\"" + std::to_string(y0) + "\" x2=\"" +
         std::to_string(x0) + "\" y2=\"" + std::to_string(y1) + "\" stroke=\"black\"/>\n";
  for (double lg = lg_lo; lg <= lg_hi + 0.5; lg += 1.0) {
    const double y = py(std::pow(10.0, lg));
    svg += "  <line x1=\"" + std::to_string(x0 - 4) + "\" y1=\"" + std::to_string(y) +
           "\" x2=\"" + std::to_string(x1) + "\" y2=\"" + std::to_string(y) +
           "\" stroke=\"#dddddd\"/>\n";
    svg += "  <text x=\"" + std::to_string(x0 - 8) + "\" y=\"" + std::to_string(y + 4) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">1e" +
           std::to_string(static_cast<int>(lg)) + "</text>\n";
  }
  for (size_t i = 0; i < fig.median.size(); ++i) {
    const double x = px(static_cast<double>(i + 1));
    svg += "  <text x=\"" + std::to_string(x) + "\" y=\"" + std::to_string(y0 + 16) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" +
           std::to_string(i + 1) + "</text>\n";
  }
  svg += "  <text x=\"" + std::to_string((x0 + x1) / 2) + "\" y=\"" +
         std::to_string(y0 + 34) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">iteration</text>\n";
  svg += polyline(fig.p10, "stroke=\"#9ecae1\" stroke-width=\"1\"");
  svg += polyline(fig.p90, "stroke=\"#9ecae1\" stroke-width=\"1\"");
  svg += polyline(fig.median, "stroke=\"#1f77b4\" stroke-width=\"2\"");
  svg += polyline(fig.reference, "stroke=\"#d62728\" stroke-width=\"1.5\" stroke-dasharray=\"6,3\"");
  svg += "  <text x=\"" + std::to_string(x1 - 4) + "\" y=\"" + std::to_string(y1 + 12) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\" "
         "fill=\"#1f77b4\">data-driven (median, p10-p90)</text>\n";
  svg += "  <text x=\"" + std::to_string(x1 - 4) + "\" y=\"" + std::to_string(y1 + 26) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\" "
         "fill=\"#d62728\">model-based</text>\n";
  svg += "</svg>\n";

  const fs::path path = dir / fs::path(fig.file).replace_extension(".svg");
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string());
  out << svg;
}

ordered_json record_summary(const IterationRecord& rec) {
  return ordered_json{{"iteration", rec.index},
                      {"gain_error", rec.gain_error},
                      {"value_error", rec.value_error},
                      {"cost_error", rec.cost_error},
                      {"admissible", rec.admissible}};
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << text;
}

struct GroundTruth {
  Matrix K_opt;
  Matrix P_opt;
  double J_opt = 0.0;
};

GroundTruth compute_ground_truth(const Matrix& gain, const SystemModel& model,
                                 const CostWeights& weights, const std::string& phase) {
  try {
    const PiTrace truth = standard_pi({gain}, model, weights, 100, 1e-13, false);
    const auto& last = truth.iterations.back();
    return {last.gain, last.value, last.cost};
  } catch (const Error& e) {
    throw RunError(phase + "/ground-truth", -1, -1, e.what());
  }
}

std::vector<IterationRecord> reference_trace(const Matrix& gain, const SystemModel& model,
                                             const CostWeights& weights, int iterations,
                                             const GroundTruth& truth) {
  PiTrace ref = standard_pi({gain}, model, weights, iterations, 0.0, false);
  set_errors_against(ref.iterations, truth.K_opt, truth.P_opt, truth.J_opt);
  return std::move(ref.iterations);
}

ReportRow row_from_records(std::uint64_t seed, const IterationRecord& rec,
                           const std::vector<IterationRecord>& reference) {
  ReportRow row;
  row.seed = seed;
  row.iteration = rec.index;
  row.gain_error = rec.gain_error;
  row.value_error = rec.value_error;
  row.cost_error = rec.cost_error;
  row.rel_delta_g = rec.rel_delta_g;
  row.admissible = rec.admissible;
  const size_t idx = std::min(static_cast<size_t>(rec.index) - 1, reference.size() - 1);
  row.ref_gain_error = reference[idx].gain_error;
  row.ref_value_error = reference[idx].value_error;
  row.ref_cost_error = reference[idx].cost_error;
  return row;
}

struct LearnSeedResult {
  std::vector<ReportRow> rows;
  ordered_json summary;
};

ExperimentOutcome run_learn(const ExperimentConfig& cfg, const fs::path& out_dir,
                            ordered_json& summary) {
  const SystemModel& model = cfg.require_model();
  const CostWeights& weights = cfg.require_weights();
  const GroundTruth truth = compute_ground_truth(cfg.gain, model, weights, "learn");
  const auto reference =
      reference_trace(cfg.gain, model, weights, cfg.olsbpi.iterations, truth);

  summary["optimum"] = {{"J_star", truth.J_opt},
                        {"K_star_norm", truth.K_opt.norm()},
                        {"P_star_norm", truth.P_opt.norm()}};

  const auto worker = [&](int idx) -> LearnSeedResult {
    const std::uint64_t seed = cfg.seeds[idx];
    const auto start = Clock::now();
    std::string phase = "simulate";
    try {
      SimConfig sim = cfg.sim;
      sim.seed = seed;
      const Trajectory traj = simulate(model, {cfg.gain}, sim);

      phase = "build-data";
      const DataMatrices data = build_data_matrices(traj, weights);

      phase = "olsbpi";
      OlsbpiOptions opt;
      opt.iterations = cfg.olsbpi.iterations;
      opt.s_f = cfg.olsbpi.s_f;
      opt.mode = cfg.olsbpi.mode;
      opt.ode.rank_tol = cfg.olsbpi.rank_tol;
      const OlsbpiResult result = run_olsbpi(data, {cfg.gain}, opt);

      phase = "diagnose";
      const auto records = diagnose(result, model, weights);

      LearnSeedResult out;
      for (const auto& rec : records) out.rows.push_back(row_from_records(seed, rec, reference));
      bool all_admissible = true;
      for (const auto& rec : records) all_admissible &= rec.admissible;
      out.summary = {{"seed", seed},
                     {"cond_psi", data.cond_psi},
                     {"ill_conditioned", data.ill_conditioned},
                     {"final_gain_error", records.back().gain_error},
                     {"final_value_error", records.back().value_error},
                     {"final_cost_error", records.back().cost_error},
                     {"all_admissible", all_admissible},
                     {"runtime_s", seconds_since(start)}};
      return out;
    } catch (const Error& e) {
      throw RunError("learn/" + phase, static_cast<long long>(seed), -1, e.what());
    }
  };

  const auto results =
      map_in_order<LearnSeedResult>(static_cast<int>(cfg.seeds.size()), worker_cap(), worker);

  ExperimentOutcome outcome;
  outcome.report.reference = reference;
  ordered_json per_seed = ordered_json::array();
  std::vector<double> final_gain_errors;
  for (const auto& res : results) {
    outcome.report.rows.insert(outcome.report.rows.end(), res.rows.begin(), res.rows.end());
    per_seed.push_back(res.summary);
    final_gain_errors.push_back(res.summary["final_gain_error"].get<double>());
  }
  summary["per_seed"] = per_seed;
  summary["aggregate"] = {
      {"median_final_gain_error", quantile(final_gain_errors, 0.5)},
      {"median_final_gain_error_rel", quantile(final_gain_errors, 0.5) / truth.K_opt.norm()}};

  write_report_csv(outcome.report, (out_dir / "report.csv").string());
  emit_plot_data(outcome.report, out_dir.string(), cfg.svg);
  ordered_json ref_json = ordered_json::array();
  for (const auto& rec : reference) ref_json.push_back(record_summary(rec));
  summary["model_based_reference"] = ref_json;
  return outcome;
}

ExperimentOutcome run_solve(const ExperimentConfig& cfg, const fs::path& out_dir,
                            ordered_json& summary) {
  const SystemModel& model = cfg.require_model();
  const CostWeights& weights = cfg.require_weights();
  const auto start = Clock::now();
  PiTrace trace;
  try {
    trace = standard_pi({cfg.gain}, model, weights, cfg.solve.max_iter, cfg.solve.tol, false);
  } catch (const Error& e) {
    throw RunError("solve", -1, -1, e.what());
  }

  const GroundTruth truth{trace.iterations.back().gain, trace.iterations.back().value,
                          trace.iterations.back().cost};
  set_errors_against(trace.iterations, truth.K_opt, truth.P_opt, truth.J_opt);

  ExperimentOutcome outcome;
  outcome.report.reference = trace.iterations;
  for (const auto& rec : trace.iterations)
    outcome.report.rows.push_back(row_from_records(0, rec, outcome.report.reference));

  summary["converged"] = trace.converged;
  summary["iterations"] = trace.iterations.size();
  summary["final_residual"] = trace.final_residual;
  summary["monotone_violation"] = trace.monotone_violation;
  summary["J_star"] = truth.J_opt;
  summary["K_star_norm"] = truth.K_opt.norm();
  summary["runtime_s"] = seconds_since(start);
  if (!trace.converged)
    throw RunError("solve", -1, static_cast<int>(trace.iterations.size()),
                   "policy iteration did not reach tol=" + std::to_string(cfg.solve.tol) +
                       " in " + std::to_string(cfg.solve.max_iter) + " iterations");

  write_report_csv(outcome.report, (out_dir / "report.csv").string());
  emit_plot_data(outcome.report, out_dir.string(), cfg.svg);
  return outcome;
}

ExperimentOutcome run_robust(const ExperimentConfig& cfg, const fs::path& out_dir,
                             ordered_json& summary) {
  const SystemModel& model = cfg.require_model();
  const CostWeights& weights = cfg.require_weights();
  const GroundTruth truth = compute_ground_truth(cfg.gain, model, weights, "robust");
  const auto reference =
      reference_trace(cfg.gain, model, weights, cfg.robust.max_iter, truth);

  ExperimentOutcome outcome;
  outcome.report.reference = reference;
  ordered_json per_magnitude = ordered_json::array();

  for (size_t mi = 0; mi < cfg.robust.magnitudes.size(); ++mi) {
    const double magnitude = cfg.robust.magnitudes[mi];

    const auto worker = [&](int idx) -> LearnSeedResult {
      const std::uint64_t seed = cfg.seeds[idx];
      try {
        DisturbanceSpec spec;
        spec.mode = cfg.robust.mode;
        spec.magnitude = magnitude;
        spec.seed = cfg.robust.seed + seed;
        const PiTrace trace = robust_pi({cfg.gain}, model, weights, spec, cfg.robust.max_iter);
        LearnSeedResult out;
        for (const auto& rec : trace.iterations)
          out.rows.push_back(row_from_records(seed, rec, reference));
        out.summary = {{"seed", seed},
                       {"iterations", trace.iterations.size()},
                       {"halted_nonadmissible_at", trace.nonadmissible_at},
                       {"final_value_error", trace.iterations.back().value_error}};
        return out;
      } catch (const Error& e) {
        throw RunError("robust (magnitude " + std::to_string(magnitude) + ")",
                       static_cast<long long>(seed), -1, e.what());
      }
    };

    const auto results =
        map_in_order<LearnSeedResult>(static_cast<int>(cfg.seeds.size()), worker_cap(), worker);

    ConvergenceReport report;
    report.reference = reference;
    ordered_json per_seed = ordered_json::array();
    std::vector<double> finals;
    for (const auto& res : results) {
      report.rows.insert(report.rows.end(), res.rows.begin(), res.rows.end());
      per_seed.push_back(res.summary);
      if (res.summary["halted_nonadmissible_at"].get<int>() == -1)
        finals.push_back(res.summary["final_value_error"].get<double>());
    }

    const std::string name = cfg.robust.magnitudes.size() == 1
                                 ? "report.csv"
                                 : "report_m" + std::to_string(mi) + ".csv";
    write_report_csv(report, (out_dir / name).string());
    per_magnitude.push_back({{"magnitude", magnitude},
                             {"report", name},
                             {"median_final_value_error", quantile(finals, 0.5)},
                             {"completed_runs", finals.size()},
                             {"per_seed", per_seed}});
    if (mi == 0) {
      outcome.report = report;
      emit_plot_data(report, out_dir.string(), cfg.svg);
    }
  }
  summary["magnitudes"] = per_magnitude;
  summary["J_star"] = truth.J_opt;
  return outcome;
}

ExperimentOutcome run_simulate(const ExperimentConfig& cfg, const fs::path& out_dir,
                               ordered_json& summary) {
  const SystemModel& model = cfg.require_model();

  struct SimResult {
    ordered_json summary;
  };
  const auto worker = [&](int idx) -> SimResult {
    const std::uint64_t seed = cfg.seeds[idx];
    const auto start = Clock::now();
    try {
      SimConfig sim = cfg.sim;
      sim.seed = seed;
      const Trajectory traj = simulate(model, {cfg.gain}, sim);
      const std::string file = "trajectory_" + std::to_string(seed) + ".csv";
      write_trajectory_csv(traj, (out_dir / file).string());
      return {{{"seed", seed},
               {"file", file},
               {"samples", traj.samples()},
               {"moment_p2", estimate_stationary_moment(traj, 2)},
               {"runtime_s", seconds_since(start)}}};
    } catch (const Error& e) {
      throw RunError("simulate", static_cast<long long>(seed), -1, e.what());
    }
  };

  const auto results =
      map_in_order<SimResult>(static_cast<int>(cfg.seeds.size()), worker_cap(), worker);
  ordered_json per_seed = ordered_json::array();
  for (const auto& res : results) per_seed.push_back(res.summary);
  summary["per_seed"] = per_seed;
  return {};
}

}  // namespace

void write_report_csv(const ConvergenceReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << "seed,iteration,gain_error,value_error,cost_error,rel_delta_g,admissible,"
         "ref_gain_error,ref_value_error,ref_cost_error\n";
  for (const auto& row : report.rows) {
    out << row.seed << "," << row.iteration << "," << format_double17(row.gain_error) << ","
        << format_double17(row.value_error) << "," << format_double17(row.cost_error) << ","
        << format_double17(row.rel_delta_g) << "," << (row.admissible ? 1 : 0) << ","
        << format_double17(row.ref_gain_error) << "," << format_double17(row.ref_value_error)
        << "," << format_double17(row.ref_cost_error) << "\n";
  }
}

void emit_plot_data(const ConvergenceReport& report, const std::string& out_dir,
                    bool render_svg) {
  if (report.rows.empty()) throw EmptyReport("no rows to plot");
  const fs::path dir(out_dir);

  int max_iter = 0;
  for (const auto& row : report.rows) max_iter = std::max(max_iter, row.iteration);

  const auto collect = [&](auto getter) {
    std::vector<std::vector<double>> per_iter(max_iter);
    for (const auto& row : report.rows) per_iter[row.iteration - 1].push_back(getter(row));
    return per_iter;
  };
  const auto make_fig = [&](const std::string& file, const std::string& title, auto getter,
                            auto ref_getter) {
    FigSeries fig;
    fig.file = file;
    fig.title = title;
    const auto per_iter = collect(getter);
    for (int i = 0; i < max_iter; ++i) {
      fig.median.push_back(quantile(per_iter[i], 0.5));
      fig.p10.push_back(quantile(per_iter[i], 0.1));
      fig.p90.push_back(quantile(per_iter[i], 0.9));
      const size_t ref_idx = std::min(static_cast<size_t>(i), report.reference.size() - 1);
      fig.reference.push_back(report.reference.empty() ? 0.0
                                                       : ref_getter(report.reference[ref_idx]));
    }
    write_fig_csv(fig, dir);
    if (render_svg) write_fig_svg(fig, dir);
  };

  make_fig(
      "fig1a.csv", "gain error vs optimum", [](const ReportRow& r) { return r.gain_error; },
      [](const IterationRecord& r) { return r.gain_error; });
  make_fig(
      "fig1b.csv", "value-matrix error vs optimum",
      [](const ReportRow& r) { return r.value_error; },
      [](const IterationRecord& r) { return r.value_error; });
  make_fig(
      "fig1c.csv", "stationary-cost error vs optimum",
      [](const ReportRow& r) { return r.cost_error; },
      [](const IterationRecord& r) { return r.cost_error; });
  make_fig(
      "fig1d.csv", "relative G estimation error",
      [](const ReportRow& r) { return r.rel_delta_g; },
      [](const IterationRecord&) { return 0.0; });
}

ExperimentOutcome run_experiment(const ExperimentConfig& cfg) {
  const fs::path out_dir(cfg.output_dir);
  fs::create_directories(out_dir);

  ordered_json summary;
  summary["algorithm"] = to_string(cfg.algorithm);
  summary["seeds"] = cfg.seeds;
  summary["parameters"] = {{"dt", cfg.sim.dt},
                           {"t_f", cfg.sim.t_f},
                           {"sigma_u", cfg.sim.sigma_u},
                           {"N", cfg.olsbpi.iterations},
                           {"s_f", cfg.olsbpi.s_f},
                           {"rank_tol", cfg.olsbpi.rank_tol}};
  const auto start = Clock::now();

  ExperimentOutcome outcome;
  try {
    switch (cfg.algorithm) {
      case Algorithm::solve: outcome = run_solve(cfg, out_dir, summary); break;
      case Algorithm::learn: outcome = run_learn(cfg, out_dir, summary); break;
      case Algorithm::robust: outcome = run_robust(cfg, out_dir, summary); break;
      case Algorithm::simulate: outcome = run_simulate(cfg, out_dir, summary); break;
    }
  } catch (const RunError& e) {
    summary["status"] = "error";
    summary["error"] = {{"phase", e.phase},
                        {"seed", e.seed},
                        {"iteration", e.iteration},
                        {"message", e.what()}};
    summary["total_runtime_s"] = seconds_since(start);
    write_text_file(out_dir / "summary.json", summary.dump(2) + "\n");
    throw;
  }

  summary["status"] = "ok";
  summary["total_runtime_s"] = seconds_since(start);
  outcome.summary_json = summary.dump(2) + "\n";
  outcome.output_dir = out_dir.string();
  write_text_file(out_dir / "summary.json", outcome.summary_json);
  return outcome;
}

}  // namespace olsbpi
