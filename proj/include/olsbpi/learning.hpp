#ifndef OLSBPI_LEARNING_HPP
#define OLSBPI_LEARNING_HPP

#include <string>
#include <vector>

#include "olsbpi/sde_sim.hpp"
#include "olsbpi/solvers.hpp"

// Data-driven policy iteration. From a single exploratory rollout the
// least-squares triplet (psi, zeta, xi) is accumulated over the lifted
// regressor z~ = svec(z z^T), z = [x; u; 1]. Policy evaluation integrates a
// linear matrix ODE whose equilibrium is the value certificate of the
// current gain; policy improvement reuses the same data for every
// iteration (off-policy).
//
// The zeta integral pairs the regressor at the LEFT endpoint of each step
// with the forward difference of svec(x x^T). This is the Ito convention;
// a midpoint or trapezoid rule would estimate the wrong (Stratonovich)
// integral and bias every downstream estimate. Locked by tests.

namespace olsbpi {

namespace defaults {
inline constexpr double psi_warn_cond = 1e10;
inline constexpr double ode_blowup = 1e10;
}  // namespace defaults

struct DataMatrices {
  Matrix psi;   // nz x nz, symmetric PSD, nz = (n+m+1)(n+m+2)/2
  Matrix zeta;  // nz x n(n+1)/2
  Vector xi;    // nz
  int n = 0;
  int m = 0;
  double t_f = 0.0;
  double cond_psi = 0.0;
  bool ill_conditioned = false;  // cond_psi > psi_warn_cond

  Eigen::Index nz() const { return svec_size(n + m + 1); }
};

struct OdeConfig {
  double max_step = 0.01;                   // RK4 step, capped at s_f/1000
  double blowup = defaults::ode_blowup;     // Frobenius bound on the iterate
  double rank_tol = defaults::pinv_rank_tol;
};

struct OlsbpiOptions {
  int iterations = 10;  // N; produces gains K_1..K_N
  double s_f = 100.0;   // policy-evaluation horizon
  enum class Mode { ode, equilibrium };
  Mode mode = Mode::ode;
  OdeConfig ode;
};

struct OlsbpiResult {
  std::vector<Matrix> gains;            // K_1..K_N
  std::vector<ThetaMatrix> theta_estimates;  // Theta_1..Theta_{N-1}
  std::vector<GMatrix> g_estimates;     // G_1..G_{N-1}
  std::vector<IterationRecord> diagnostics;  // filled by diagnose()
};

// Lifted regressor svec([x; u; 1] [x; u; 1]^T); the final entry is 1.
Vector z_tilde(const Vector& x, const Vector& u);

// Left-endpoint Riemann/Ito accumulation of the data triplet over a
// recorded trajectory. burn_in_fraction drops the leading transient.
DataMatrices build_data_matrices(const Trajectory& traj, const CostWeights& weights,
                                 double burn_in_fraction = 0.0);

// Model-implied triplet with psi = I: zeta and xi encode the affine map
// P -> theta(P) exactly, so the data-driven path reproduces the
// model-based one to round-off. Used for equivalence tests and debugging.
DataMatrices exact_data_matrices(const SystemModel& model, const CostWeights& weights);

// The linear vectorized policy-evaluation system p' = T1 p + T2 on
// p = vec(P), plus its restriction to svec coordinates (the symmetric
// subspace is invariant; the full T1 is always singular on the
// antisymmetric complement, so Hurwitz checks use the reduced form).
struct OdeOperators {
  Matrix T1;       // n^2 x n^2
  Vector T2;       // n^2
  Matrix T1_svec;  // n(n+1)/2 square
  Vector T2_svec;
};
OdeOperators ode_operators(const DataMatrices& data, const PolicyGain& K,
                           double rank_tol = defaults::pinv_rank_tol);

// Integrates the evaluation ODE from P(0) = 0 with classical RK4 and
// returns P(s_f). Throws OdeUnstable when the iterate norm passes the
// blowup bound (data too short or too poorly excited).
Matrix policy_evaluation_ode(const DataMatrices& data, const PolicyGain& K, double s_f,
                             const OdeConfig& cfg = {});

// Closed-form equilibrium of the same linear system; requires the reduced
// system matrix to be Hurwitz (checked, NotHurwitz otherwise).
Matrix equilibrium_policy_evaluation(const DataMatrices& data, const PolicyGain& K,
                                     double rank_tol = defaults::pinv_rank_tol);

// The full data-driven loop: N-1 rounds of evaluate / re-estimate /
// improve, returning every iterate. Admissibility of intermediate gains is
// not checked here (the data-driven setting cannot); diagnose() flags it.
OlsbpiResult run_olsbpi(const DataMatrices& data, const PolicyGain& K1, const OlsbpiOptions& opt);

// Ground-truth diagnostics when the model is available: exact value and
// cost of every iterate, estimation error of every G, and error norms
// against the policy-iteration optimum.
std::vector<IterationRecord> diagnose(const OlsbpiResult& result, const SystemModel& model,
                                      const CostWeights& weights);

// Plain-text serialization (dimensions header + 17-digit rows) so an
// expensive rollout can be cached and reloaded exactly.
void save_data_matrices(const DataMatrices& data, const std::string& path);
DataMatrices load_data_matrices(const std::string& path);

}  // namespace olsbpi

#endif
