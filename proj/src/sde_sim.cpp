#include "olsbpi/sde_sim.hpp"

#include <cmath>
#include <fstream>

#include "olsbpi/csv.hpp"
#include "olsbpi/rng.hpp"

namespace olsbpi {

Vector ou_noise_step(const Vector& y, double dt, const Vector& dW) {
  if (dt <= 0.0) throw InvalidArgument("dt must be positive");
  if (dW.size() != y.size()) throw DimensionMismatch("dW must match y");
  return y - y * dt + dW;
}

Trajectory simulate(const SystemModel& model, const PolicyGain& K1, const SimConfig& cfg) {
  if (K1.K.rows() != model.m || K1.K.cols() != model.n)
    throw DimensionMismatch("gain must be m x n");
  if (!(cfg.dt > 0.0)) throw InvalidArgument("dt must be positive");
  if (!(cfg.t_f >= cfg.dt)) throw InvalidArgument("t_f must be at least dt");
  const double steps_real = cfg.t_f / cfg.dt;
  if (!(steps_real < 9.0e15)) throw InvalidArgument("t_f/dt too large");
  const auto T = static_cast<Eigen::Index>(std::llround(steps_real));

  const int n = model.n;
  const int m = model.m;
  const int p = model.p();
  const int d = n + m;

  // Cascade matrices for v = [x; y].
  Matrix Ac = Matrix::Zero(d, d);
  Ac.topLeftCorner(n, n) = model.A - model.B * K1.K;
  Ac.topRightCorner(n, m) = cfg.sigma_u * model.B;
  Ac.bottomRightCorner(m, m) = -Matrix::Identity(m, m);

  std::vector<Matrix> Dc(model.D.size(), Matrix::Zero(d, d));
  for (size_t j = 0; j < model.D.size(); ++j) Dc[j].topLeftCorner(n, n) = model.D[j];

  std::vector<Matrix> Fc(model.F.size(), Matrix::Zero(d, d));
  for (size_t k = 0; k < model.F.size(); ++k) {
    Fc[k].topLeftCorner(n, n) = -model.F[k] * K1.K;
    Fc[k].topRightCorner(n, m) = cfg.sigma_u * model.F[k];
  }

  Matrix Cc = Matrix::Zero(d, p + m);
  Cc.topLeftCorner(n, p) = model.C;
  Cc.bottomRightCorner(m, m) = Matrix::Identity(m, m);

  Vector v = Vector::Zero(d);
  if (cfg.x0.size() > 0) {
    if (cfg.x0.size() != n) throw DimensionMismatch("x0 must have length n");
    v.head(n) = cfg.x0;
  }
  if (cfg.y0.size() > 0) {
    if (cfg.y0.size() != m) throw DimensionMismatch("y0 must have length m");
    v.tail(m) = cfg.y0;
  }

  Trajectory traj;
  traj.dt = cfg.dt;
  traj.sigma_u = cfg.sigma_u;
  traj.gain = K1.K;
  traj.times = Vector::LinSpaced(T + 1, 0.0, static_cast<double>(T) * cfg.dt);
  traj.states.resize(T + 1, n);
  traj.inputs.resize(T + 1, m);
  traj.exploration.resize(T + 1, m);

  Rng rng(cfg.seed);
  const double sq_dt = std::sqrt(cfg.dt);
  Vector dW_add(p + m);
  Vector drift(d), diffusion(d);

  const auto record = [&](Eigen::Index k) {
    traj.states.row(k) = v.head(n).transpose();
    traj.exploration.row(k) = v.tail(m).transpose();
    traj.inputs.row(k) = (-K1.K * v.head(n) + cfg.sigma_u * v.tail(m)).transpose();
  };
  record(0);

  for (Eigen::Index k = 0; k < T; ++k) {
    drift.noalias() = Ac * v;
    diffusion.setZero();
    for (const auto& Dj : Dc) diffusion.noalias() += (sq_dt * rng.next_normal()) * (Dj * v);
    for (const auto& Fk : Fc) diffusion.noalias() += (sq_dt * rng.next_normal()) * (Fk * v);
    for (int a = 0; a < p + m; ++a) dW_add[a] = sq_dt * rng.next_normal();
    v += cfg.dt * drift + diffusion + Cc * dW_add;

    if (!(v.norm() < cfg.blowup_threshold))
      throw Blowup("state norm exceeded " + std::to_string(cfg.blowup_threshold) + " at t=" +
                   std::to_string(static_cast<double>(k + 1) * cfg.dt) +
                   " (check gain admissibility and dt)");
    record(k + 1);
  }
  return traj;
}

double estimate_stationary_moment(const Trajectory& traj, int p, double burn_in_fraction) {
  if (p != 2 && p != 4) throw InvalidArgument("moment order must be 2 or 4");
  if (burn_in_fraction < 0.0 || burn_in_fraction >= 1.0)
    throw InvalidArgument("burn-in fraction must lie in [0, 1)");
  const Eigen::Index total = traj.samples();
  if (total < 1) throw TooFewSamples("empty trajectory");
  const auto start = static_cast<Eigen::Index>(std::floor(burn_in_fraction * total));
  double acc = 0.0;
  for (Eigen::Index k = start; k < total; ++k) {
    const double sq =
        traj.states.row(k).squaredNorm() + traj.exploration.row(k).squaredNorm();
    acc += (p == 2) ? sq : sq * sq;
  }
  return acc / static_cast<double>(total - start);
}

void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  const Eigen::Index n = traj.states.cols();
  const Eigen::Index m = traj.inputs.cols();
  out << "t";
  for (Eigen::Index i = 1; i <= n; ++i) out << ",x" << i;
  for (Eigen::Index i = 1; i <= m; ++i) out << ",u" << i;
  for (Eigen::Index i = 1; i <= m; ++i) out << ",y" << i;
  out << "\n";
  for (Eigen::Index k = 0; k < traj.samples(); ++k) {
    out << format_double17(traj.times[k]);
    for (Eigen::Index i = 0; i < n; ++i) out << "," << format_double17(traj.states(k, i));
    for (Eigen::Index i = 0; i < m; ++i) out << "," << format_double17(traj.inputs(k, i));
    for (Eigen::Index i = 0; i < m; ++i) out << "," << format_double17(traj.exploration(k, i));
    out << "\n";
  }
}

}  // namespace olsbpi
