#ifndef OLSBPI_SOLVERS_HPP
#define OLSBPI_SOLVERS_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "olsbpi/model.hpp"

// Model-based policy iteration and the exact solves behind it. The policy
// evaluation step is a dense n^2 x n^2 linear solve of the vectorized
// generalized Lyapunov equation; exactness matters because these routines
// serve as the ground truth for the data-driven pipeline.

namespace olsbpi {

namespace defaults {
inline constexpr double pi_tol = 1e-10;
inline constexpr int pi_max_iter = 50;
inline constexpr double lyap_cond_limit = 1e12;
inline constexpr double monotone_slack = 1e-8;
}  // namespace defaults

// Per-iteration diagnostics shared by the solver traces, the data-driven
// loop and the experiment reports. Error norms are measured against the
// converged optimum; entries that are unknown in a given context hold NaN.
struct IterationRecord {
  int index = 0;              // 1-based
  Matrix gain;                // K_i
  Matrix value;               // P_i, exact solution of the evaluation equation
  Matrix g_hat;               // G used by the improvement step
  Matrix delta_g;             // g_hat - G(value)
  double cost = 0.0;          // trace(C^T P_i C)
  double gain_error = 0.0;    // ||K_i - K*||_F
  double value_error = 0.0;   // ||P_i - P*||_F
  double cost_error = 0.0;    // |J_i - J*|
  double rel_delta_g = 0.0;   // ||delta_g||_F / ||G(value)||_F
  double residual = 0.0;      // ||Riccati(P_i)||_F
  bool admissible = false;
  double abscissa = 0.0;
};

struct PiTrace {
  std::vector<IterationRecord> iterations;
  bool converged = false;
  double final_residual = 0.0;           // ||Riccati(P_last)||_F
  bool monotone_violation = false;       // lambda_min(P_i - P_{i+1}) < -slack
  int nonadmissible_at = -1;             // iteration index of a destabilized gain, -1 if none
};

struct DisturbanceSpec {
  enum class Mode { none, constant, decaying, random_bounded };
  Mode mode = Mode::none;
  double magnitude = 0.0;    // Frobenius bound per iteration
  std::uint64_t seed = 0;
};

// Unique P with L_K(P) = -S, via vec_inv(bigA(K)^{-1} vec(-S)), symmetrized.
Matrix solve_generalized_lyapunov(const PolicyGain& K, const Matrix& S, const SystemModel& model,
                                  double cond_limit = defaults::lyap_cond_limit);

// P_K solving L_K(P) + Q + K^T R K = 0 and the stationary cost
// J = trace(C^T P_K C). Requires an admissible gain.
struct PolicyCost {
  Matrix P;
  double J = 0.0;
};
PolicyCost policy_cost(const PolicyGain& K, const SystemModel& model, const CostWeights& weights);

// Exact policy iteration from an admissible gain. Stops when
// ||P_i - P_{i-1}||_F < tol; throws NoConvergence at max_iter when
// require_convergence is set.
PiTrace standard_pi(const PolicyGain& K1, const SystemModel& model, const CostWeights& weights,
                    int max_iter = defaults::pi_max_iter, double tol = defaults::pi_tol,
                    bool require_convergence = true);

// Policy iteration with an additive disturbance on each evaluated G.
// Runs exactly max_iter iterations unless a destabilized or singular
// improvement halts the run (recorded in the trace, not thrown).
// With Mode::none the arithmetic path is identical to standard_pi.
PiTrace robust_pi(const PolicyGain& K1, const SystemModel& model, const CostWeights& weights,
                  const DisturbanceSpec& spec, int max_iter);

// Independent cross-check of the generalized Riccati equation: damped
// Gauss-Newton on svec(P) with a finite-difference Jacobian, initialized
// from the deterministic-case solution (Hamiltonian eigenvector method).
// Deliberately shares no code path with standard_pi.
Matrix riccati_oracle(const SystemModel& model, const CostWeights& weights, double tol = 1e-10);

// Optimum of the deterministic problem (D, F ignored), used as the oracle
// initializer; exposed for tests.
Matrix deterministic_are(const SystemModel& model, const CostWeights& weights);

}  // namespace olsbpi

#endif
