#ifndef OLSBPI_PRESET_HPP
#define OLSBPI_PRESET_HPP

#include <string>

#include "olsbpi/model.hpp"

// The bundled 6-state / 2-input benchmark: a stochastically perturbed
// linearized multibody balance model with one state-multiplicative noise
// channel, one input-multiplicative noise channel and full-rank additive
// noise. A and B are loaded from data/triple_pendulum_ab.json; the
// remaining matrices and the stabilizing initial gain are fixed here.

namespace olsbpi {

struct PendulumPreset {
  SystemModel model;
  CostWeights weights;
  PolicyGain initial_gain;
};

// Resolution order for the data directory: explicit argument, the
// OLSBPI_DATA_DIR environment variable, then the source-tree default.
// Throws MissingABData when the bundled file cannot be found.
PendulumPreset preset_triple_pendulum(const std::string& data_dir = "");

std::string preset_data_dir();

}  // namespace olsbpi

#endif
