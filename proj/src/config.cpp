#include "olsbpi/config.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "olsbpi/preset.hpp"

namespace olsbpi {

using nlohmann::ordered_json;

namespace {

struct Issues {
  std::vector<std::string> list;
  void add(const std::string& path, const std::string& what) { list.push_back(path + ": " + what); }
  bool empty() const { return list.empty(); }
};

Matrix matrix_from_json(const ordered_json& j, const std::string& path, Issues& issues) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) {
    issues.add(path, "expected a non-empty array of rows");
    return {};
  }
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Matrix M(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (!j[i].is_array() || static_cast<Eigen::Index>(j[i].size()) != cols) {
      issues.add(path, "row " + std::to_string(i) + " has inconsistent length");
      return {};
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (!j[i][c].is_number()) {
        issues.add(path, "entry (" + std::to_string(i) + "," + std::to_string(c) +
                             ") is not a number");
        return {};
      }
      M(i, c) = j[i][c].get<double>();
    }
  }
  return M;
}

Vector vector_from_json(const ordered_json& j, const std::string& path, Issues& issues) {
  if (!j.is_array()) {
    issues.add(path, "expected an array");
    return {};
  }
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!j[i].is_number()) {
      issues.add(path, "entry " + std::to_string(i) + " is not a number");
      return {};
    }
    v[i] = j[i].get<double>();
  }
  return v;
}

ordered_json matrix_to_json(const Matrix& M) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(row);
  }
  return rows;
}

ordered_json vector_to_json(const Vector& v) {
  ordered_json out = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

std::optional<Algorithm> algorithm_from_string(const std::string& s) {
  if (s == "solve") return Algorithm::solve;
  if (s == "learn") return Algorithm::learn;
  if (s == "robust") return Algorithm::robust;
  if (s == "simulate") return Algorithm::simulate;
  return std::nullopt;
}

std::optional<DisturbanceSpec::Mode> disturbance_mode_from_string(const std::string& s) {
  if (s == "none") return DisturbanceSpec::Mode::none;
  if (s == "constant") return DisturbanceSpec::Mode::constant;
  if (s == "decaying") return DisturbanceSpec::Mode::decaying;
  if (s == "random-bounded") return DisturbanceSpec::Mode::random_bounded;
  return std::nullopt;
}

std::string disturbance_mode_to_string(DisturbanceSpec::Mode m) {
  switch (m) {
    case DisturbanceSpec::Mode::none: return "none";
    case DisturbanceSpec::Mode::constant: return "constant";
    case DisturbanceSpec::Mode::decaying: return "decaying";
    case DisturbanceSpec::Mode::random_bounded: return "random-bounded";
  }
  return "none";
}

void parse_model_section(const ordered_json& j, ExperimentConfig& cfg, Issues& issues) {
  if (!j.contains("model") || !j["model"].is_object()) {
    issues.add("model", "section is required");
    return;
  }
  const auto& jm = j["model"];

  Matrix Q, R;
  bool have_weights = false;
  if (j.contains("weights")) {
    if (!j["weights"].is_object()) {
      issues.add("weights", "must be an object with Q and R");
    } else {
      if (j["weights"].contains("Q"))
        Q = matrix_from_json(j["weights"]["Q"], "weights.Q", issues);
      else
        issues.add("weights.Q", "missing");
      if (j["weights"].contains("R"))
        R = matrix_from_json(j["weights"]["R"], "weights.R", issues);
      else
        issues.add("weights.R", "missing");
      have_weights = Q.size() > 0 && R.size() > 0;
    }
  }

  if (jm.contains("preset")) {
    const std::string name = jm["preset"].is_string() ? jm["preset"].get<std::string>() : "";
    if (name != "triple-pendulum") {
      issues.add("model.preset", "unknown preset '" + name + "'");
      return;
    }
    try {
      PendulumPreset preset = preset_triple_pendulum();
      cfg.model = std::move(preset.model);
      if (have_weights) {
        try {
          cfg.weights = CostWeights(Q, R);
        } catch (const Error& e) {
          issues.add("weights", e.what());
        }
      } else {
        cfg.weights = std::move(preset.weights);
      }
      if (cfg.gain.size() == 0) cfg.gain = preset.initial_gain.K;
    } catch (const Error& e) {
      issues.add("model.preset", e.what());
    }
    return;
  }

  Matrix A, B, C;
  std::vector<Matrix> D, F;
  if (jm.contains("A"))
    A = matrix_from_json(jm["A"], "model.A", issues);
  else
    issues.add("model.A", "missing");
  if (jm.contains("B"))
    B = matrix_from_json(jm["B"], "model.B", issues);
  else
    issues.add("model.B", "missing");
  if (jm.contains("C"))
    C = matrix_from_json(jm["C"], "model.C", issues);
  else
    issues.add("model.C", "missing");
  if (jm.contains("D")) {
    if (!jm["D"].is_array()) {
      issues.add("model.D", "must be an array of matrices");
    } else {
      for (size_t k = 0; k < jm["D"].size(); ++k)
        D.push_back(matrix_from_json(jm["D"][k], "model.D[" + std::to_string(k) + "]", issues));
    }
  }
  if (jm.contains("F")) {
    if (!jm["F"].is_array()) {
      issues.add("model.F", "must be an array of matrices");
    } else {
      for (size_t k = 0; k < jm["F"].size(); ++k)
        F.push_back(matrix_from_json(jm["F"][k], "model.F[" + std::to_string(k) + "]", issues));
    }
  }
  if (A.size() == 0 || B.size() == 0 || C.size() == 0) return;

  try {
    cfg.model = SystemModel(A, B, D, F, C);
  } catch (const Error& e) {
    issues.add("model", e.what());
  }
  if (!have_weights) {
    issues.add("weights", "section is required for an inline model");
    return;
  }
  try {
    cfg.weights = CostWeights(Q, R);
  } catch (const Error& e) {
    issues.add("weights", e.what());
  }
}

ExperimentConfig parse_validated(const ordered_json& j,
                                 std::optional<Algorithm> expected_algorithm) {
  Issues issues;
  ExperimentConfig cfg;

  if (j.contains("schema_version")) {
    if (!j["schema_version"].is_number_integer() || j["schema_version"].get<int>() != 1)
      issues.add("schema_version", "unsupported version (expected 1)");
  } else {
    issues.add("schema_version", "missing");
  }

  bool have_algorithm = false;
  if (j.contains("algorithm")) {
    const auto alg = j["algorithm"].is_string()
                         ? algorithm_from_string(j["algorithm"].get<std::string>())
                         : std::nullopt;
    if (!alg) {
      issues.add("algorithm", "must be one of solve|learn|robust|simulate");
    } else {
      cfg.algorithm = *alg;
      have_algorithm = true;
      if (expected_algorithm && *expected_algorithm != *alg)
        issues.add("algorithm", "config selects '" + to_string(*alg) +
                                    "' but the subcommand requires '" +
                                    to_string(*expected_algorithm) + "'");
    }
  }
  if (!have_algorithm) {
    if (expected_algorithm)
      cfg.algorithm = *expected_algorithm;
    else
      issues.add("algorithm", "missing");
  }

  if (j.contains("gain")) cfg.gain = matrix_from_json(j["gain"], "gain", issues);

  parse_model_section(j, cfg, issues);

  if (cfg.model && cfg.gain.size() > 0 &&
      (cfg.gain.rows() != cfg.model->m || cfg.gain.cols() != cfg.model->n))
    issues.add("gain", "must be m x n for the configured model");
  if (cfg.model && cfg.gain.size() == 0) issues.add("gain", "missing (no preset default)");

  if (j.contains("sim")) {
    const auto& js = j["sim"];
    if (!js.is_object()) {
      issues.add("sim", "must be an object");
    } else {
      if (js.contains("dt")) cfg.sim.dt = js["dt"].get<double>();
      if (js.contains("t_f")) cfg.sim.t_f = js["t_f"].get<double>();
      if (js.contains("sigma_u")) cfg.sim.sigma_u = js["sigma_u"].get<double>();
      if (js.contains("x0")) cfg.sim.x0 = vector_from_json(js["x0"], "sim.x0", issues);
      if (js.contains("y0")) cfg.sim.y0 = vector_from_json(js["y0"], "sim.y0", issues);
      if (!(cfg.sim.dt > 0.0)) issues.add("sim.dt", "must be positive");
      if (!(cfg.sim.t_f >= cfg.sim.dt)) issues.add("sim.t_f", "must be at least dt");
      if (cfg.model && cfg.sim.x0.size() > 0 && cfg.sim.x0.size() != cfg.model->n)
        issues.add("sim.x0", "must have length n");
      if (cfg.model && cfg.sim.y0.size() > 0 && cfg.sim.y0.size() != cfg.model->m)
        issues.add("sim.y0", "must have length m");
    }
  } else if (cfg.algorithm == Algorithm::learn || cfg.algorithm == Algorithm::simulate) {
    issues.add("sim", "section is required for learn/simulate");
  }

  if (j.contains("olsbpi")) {
    const auto& jo = j["olsbpi"];
    if (jo.contains("N")) cfg.olsbpi.iterations = jo["N"].get<int>();
    if (jo.contains("s_f")) cfg.olsbpi.s_f = jo["s_f"].get<double>();
    if (jo.contains("rank_tol")) cfg.olsbpi.rank_tol = jo["rank_tol"].get<double>();
    if (jo.contains("mode")) {
      const std::string mode = jo["mode"].get<std::string>();
      if (mode == "ode")
        cfg.olsbpi.mode = OlsbpiOptions::Mode::ode;
      else if (mode == "equilibrium")
        cfg.olsbpi.mode = OlsbpiOptions::Mode::equilibrium;
      else
        issues.add("olsbpi.mode", "must be 'ode' or 'equilibrium'");
    }
    if (cfg.olsbpi.iterations < 2) issues.add("olsbpi.N", "must be at least 2");
    if (!(cfg.olsbpi.s_f > 0.0)) issues.add("olsbpi.s_f", "must be positive");
  } else if (cfg.algorithm == Algorithm::learn) {
    issues.add("olsbpi", "section is required for learn");
  }

  if (j.contains("solve")) {
    const auto& js = j["solve"];
    if (js.contains("max_iter")) cfg.solve.max_iter = js["max_iter"].get<int>();
    if (js.contains("tol")) cfg.solve.tol = js["tol"].get<double>();
    if (cfg.solve.max_iter < 1) issues.add("solve.max_iter", "must be at least 1");
  }

  if (j.contains("disturbance")) {
    const auto& jd = j["disturbance"];
    if (jd.contains("mode")) {
      const auto mode = jd["mode"].is_string()
                            ? disturbance_mode_from_string(jd["mode"].get<std::string>())
                            : std::nullopt;
      if (!mode)
        issues.add("disturbance.mode", "must be none|constant|decaying|random-bounded");
      else
        cfg.robust.mode = *mode;
    }
    if (jd.contains("magnitude")) cfg.robust.magnitudes = {jd["magnitude"].get<double>()};
    if (jd.contains("magnitudes")) {
      cfg.robust.magnitudes.clear();
      for (const auto& v : jd["magnitudes"]) cfg.robust.magnitudes.push_back(v.get<double>());
    }
    if (jd.contains("seed")) cfg.robust.seed = jd["seed"].get<std::uint64_t>();
    if (jd.contains("max_iter")) cfg.robust.max_iter = jd["max_iter"].get<int>();
    for (double mag : cfg.robust.magnitudes)
      if (mag < 0.0) issues.add("disturbance.magnitude", "must be nonnegative");
    if (cfg.robust.magnitudes.empty())
      issues.add("disturbance.magnitudes", "must not be empty");
    if (cfg.robust.max_iter < 1) issues.add("disturbance.max_iter", "must be at least 1");
  } else if (cfg.algorithm == Algorithm::robust) {
    issues.add("disturbance", "section is required for robust");
  }

  if (j.contains("seeds")) {
    cfg.seeds.clear();
    for (const auto& v : j["seeds"]) {
      if (!v.is_number()) {
        issues.add("seeds", "entries must be integers");
        break;
      }
      cfg.seeds.push_back(v.get<std::uint64_t>());
    }
    if (cfg.seeds.empty()) issues.add("seeds", "must not be empty");
  }

  if (j.contains("output_dir")) cfg.output_dir = j["output_dir"].get<std::string>();
  if (j.contains("svg")) cfg.svg = j["svg"].get<bool>();

  if (!issues.empty()) throw ValidationError(std::move(issues.list));
  return cfg;
}

}  // namespace

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::solve: return "solve";
    case Algorithm::learn: return "learn";
    case Algorithm::robust: return "robust";
    case Algorithm::simulate: return "simulate";
  }
  return "solve";
}

const SystemModel& ExperimentConfig::require_model() const {
  if (!model) throw InvalidArgument("config has no model");
  return *model;
}

const CostWeights& ExperimentConfig::require_weights() const {
  if (!weights) throw InvalidArgument("config has no weights");
  return *weights;
}

ExperimentConfig parse_config(const std::string& text,
                              std::optional<Algorithm> expected_algorithm) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(e.what());
  }
  try {
    return parse_validated(j, expected_algorithm);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError({std::string("config: ") + e.what()});
  }
}

ExperimentConfig load_config(const std::string& path,
                             std::optional<Algorithm> expected_algorithm) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), expected_algorithm);
}

std::string serialize_config(const ExperimentConfig& cfg) {
  ordered_json j;
  j["schema_version"] = cfg.schema_version;
  j["algorithm"] = to_string(cfg.algorithm);
  if (cfg.model) {
    ordered_json jm;
    jm["A"] = matrix_to_json(cfg.model->A);
    jm["B"] = matrix_to_json(cfg.model->B);
    ordered_json D = ordered_json::array();
    for (const auto& Dj : cfg.model->D) D.push_back(matrix_to_json(Dj));
    jm["D"] = D;
    ordered_json F = ordered_json::array();
    for (const auto& Fk : cfg.model->F) F.push_back(matrix_to_json(Fk));
    jm["F"] = F;
    jm["C"] = matrix_to_json(cfg.model->C);
    j["model"] = jm;
  }
  if (cfg.weights) {
    j["weights"]["Q"] = matrix_to_json(cfg.weights->Q);
    j["weights"]["R"] = matrix_to_json(cfg.weights->R);
  }
  if (cfg.gain.size() > 0) j["gain"] = matrix_to_json(cfg.gain);
  j["sim"] = {{"dt", cfg.sim.dt}, {"t_f", cfg.sim.t_f}, {"sigma_u", cfg.sim.sigma_u}};
  if (cfg.sim.x0.size() > 0) j["sim"]["x0"] = vector_to_json(cfg.sim.x0);
  if (cfg.sim.y0.size() > 0) j["sim"]["y0"] = vector_to_json(cfg.sim.y0);
  j["olsbpi"] = {{"N", cfg.olsbpi.iterations},
                 {"s_f", cfg.olsbpi.s_f},
                 {"mode", cfg.olsbpi.mode == OlsbpiOptions::Mode::ode ? "ode" : "equilibrium"},
                 {"rank_tol", cfg.olsbpi.rank_tol}};
  j["solve"] = {{"max_iter", cfg.solve.max_iter}, {"tol", cfg.solve.tol}};
  j["disturbance"] = {{"mode", disturbance_mode_to_string(cfg.robust.mode)},
                      {"magnitudes", cfg.robust.magnitudes},
                      {"seed", cfg.robust.seed},
                      {"max_iter", cfg.robust.max_iter}};
  j["seeds"] = cfg.seeds;
  j["output_dir"] = cfg.output_dir;
  j["svg"] = cfg.svg;
  return j.dump(2) + "\n";
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  return serialize_config(a) == serialize_config(b);
}

}  // namespace olsbpi
