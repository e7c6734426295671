#ifndef OLSBPI_SDE_SIM_HPP
#define OLSBPI_SDE_SIM_HPP

#include <cstdint>
#include <string>

#include "olsbpi/model.hpp"

// Euler-Maruyama rollout of the plant under the exploratory policy
//
//   u = -K1 x + sigma_u y,   dy = -y dt + dw4,
//
// integrated as one cascaded linear SDE in v = [x; y]. Per step the Brownian
// increments are drawn from a single generator in a fixed order: q1 state
// noises, q2 input noises, p additive noises, m exploration noises, each
// increment ~ Normal(0, dt). Identical (seed, config) pairs reproduce
// trajectories bit for bit.

namespace olsbpi {

struct SimConfig {
  double dt = 1e-3;
  double t_f = 1.0;
  double sigma_u = 0.0;
  std::uint64_t seed = 0;
  Vector x0;  // empty means zero
  Vector y0;  // empty means zero
  double blowup_threshold = 1e12;
};

struct Trajectory {
  Vector times;        // T+1 entries, uniform grid 0, dt, ..., t_f
  Matrix states;       // (T+1) x n
  Matrix inputs;       // (T+1) x m, u_k = -K1 x_k + sigma_u y_k
  Matrix exploration;  // (T+1) x m, the y process
  double dt = 0.0;
  double sigma_u = 0.0;
  Matrix gain;         // K1 used during collection

  Eigen::Index samples() const { return times.size(); }
};

Trajectory simulate(const SystemModel& model, const PolicyGain& K1, const SimConfig& cfg);

// One Euler-Maruyama step of the exploration process: y + (-y) dt + dW.
Vector ou_noise_step(const Vector& y, double dt, const Vector& dW);

// Time average of ||[x; y]||_2^p after discarding the burn-in fraction;
// diagnostic for the existence of stationary moments. p must be 2 or 4.
double estimate_stationary_moment(const Trajectory& traj, int p, double burn_in_fraction = 0.1);

// CSV export: header `t, x1..xn, u1..um, y1..ym`, 17 significant digits.
void write_trajectory_csv(const Trajectory& traj, const std::string& path);

}  // namespace olsbpi

#endif
