#ifndef OLSBPI_CONFIG_HPP
#define OLSBPI_CONFIG_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "olsbpi/learning.hpp"
#include "olsbpi/sde_sim.hpp"
#include "olsbpi/solvers.hpp"

// Experiment configuration: a versioned JSON document with matrices as
// row-major nested arrays. load_config validates everything up front and
// reports every problem at once; presets are expanded at load time so a
// serialized config always carries inline matrices.

namespace olsbpi {

enum class Algorithm { solve, learn, robust, simulate };

std::string to_string(Algorithm a);

struct SolveParams {
  int max_iter = defaults::pi_max_iter;
  double tol = defaults::pi_tol;
};

struct OlsbpiParams {
  int iterations = 10;
  double s_f = 100.0;
  OlsbpiOptions::Mode mode = OlsbpiOptions::Mode::ode;
  double rank_tol = defaults::pinv_rank_tol;
};

struct RobustParams {
  DisturbanceSpec::Mode mode = DisturbanceSpec::Mode::none;
  std::vector<double> magnitudes = {0.0};  // one report per entry
  std::uint64_t seed = 0;
  int max_iter = 40;
};

struct ExperimentConfig {
  int schema_version = 1;
  Algorithm algorithm = Algorithm::solve;
  std::optional<SystemModel> model;
  std::optional<CostWeights> weights;
  Matrix gain;  // initial policy K1
  SimConfig sim;
  SolveParams solve;
  OlsbpiParams olsbpi;
  RobustParams robust;
  std::vector<std::uint64_t> seeds = {1};
  std::string output_dir = "olsbpi_out";
  bool svg = true;

  const SystemModel& require_model() const;
  const CostWeights& require_weights() const;
};

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);

// Parses and fully validates; throws ParseError on malformed JSON and
// ValidationError carrying the complete list of problems otherwise.
// expected_algorithm, when set, must match the config (or the config may
// omit the field).
ExperimentConfig load_config(const std::string& path,
                             std::optional<Algorithm> expected_algorithm = std::nullopt);
ExperimentConfig parse_config(const std::string& text,
                              std::optional<Algorithm> expected_algorithm = std::nullopt);

std::string serialize_config(const ExperimentConfig& cfg);

}  // namespace olsbpi

#endif
