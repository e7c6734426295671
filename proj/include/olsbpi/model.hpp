#ifndef OLSBPI_MODEL_HPP
#define OLSBPI_MODEL_HPP

#include <vector>

#include "olsbpi/matrix_ops.hpp"

// Continuous-time linear stochastic system
//
//   dx = (A x + B u) dt + sum_j D_j x dw_1j + sum_k F_k u dw_2k + C dw_3
//
// with quadratic running cost r(x,u) = x^T Q x + u^T R u, and the operator
// family built on it: Pi, Sigma, the generalized Lyapunov operator L_K and
// its n^2 x n^2 vectorization, the G/Theta matrices of a value certificate,
// and the Riccati residual whose root is the optimal P.

namespace olsbpi {

namespace defaults {
inline constexpr double stab_margin = 1e-9;    // Hurwitz margin on bigA eigenvalues
inline constexpr double guu_cond_limit = 1e12; // condition cap for G_uu inversion
}  // namespace defaults

struct SystemModel {
  Matrix A;                // n x n drift
  Matrix B;                // n x m input
  std::vector<Matrix> D;   // q1 state-noise gains, each n x n
  std::vector<Matrix> F;   // q2 input-noise gains, each n x m
  Matrix C;                // n x p additive-noise gain, C C^T > 0
  int n = 0;
  int m = 0;

  SystemModel(Matrix A_, Matrix B_, std::vector<Matrix> D_, std::vector<Matrix> F_, Matrix C_);

  int q1() const { return static_cast<int>(D.size()); }
  int q2() const { return static_cast<int>(F.size()); }
  int p() const { return static_cast<int>(C.cols()); }
};

struct CostWeights {
  Matrix Q;  // n x n, symmetric positive definite
  Matrix R;  // m x m, symmetric positive definite
  CostWeights(Matrix Q_, Matrix R_);
};

struct PolicyGain {
  Matrix K;  // m x n, policy u = -K x
};

// Symmetric (n+m) x (n+m) matrix with the state/input block partition.
struct GMatrix {
  Matrix M;
  int n = 0;
  int m = 0;
  Matrix xx() const { return M.topLeftCorner(n, n); }
  Matrix ux() const { return M.bottomLeftCorner(m, n); }
  Matrix uu() const { return M.bottomRightCorner(m, m); }
};

// G extended by one row/column holding the additive-noise cost rate
// trace(C^T P C) in the corner; estimated variants may populate the
// coupling entries, so the full symmetric matrix is stored.
struct ThetaMatrix {
  Matrix M;  // (n+m+1) x (n+m+1)
  int n = 0;
  int m = 0;
  Matrix g_block() const { return M.topLeftCorner(n + m, n + m); }
  double additive_cost() const { return M(n + m, n + m); }
};

struct Admissibility {
  bool admissible = false;
  double abscissa = 0.0;  // max real part of bigA(K) eigenvalues
};

// Pi(P) = sum_j D_j^T P D_j (zero when q1 = 0).
Matrix op_pi(const Matrix& P, const SystemModel& model);

// Sigma(P) = sum_k F_k^T P F_k (zero when q2 = 0).
Matrix op_sigma(const Matrix& P, const SystemModel& model);

// L_K(P) = (A-BK)^T P + P (A-BK) + Pi(P) + K^T Sigma(P) K.
Matrix lyap_op(const PolicyGain& K, const Matrix& P, const SystemModel& model);

// Vectorization of L_K: vec(L_K(P)) = bigA(K) vec(P).
Matrix bigA(const PolicyGain& K, const SystemModel& model);

// Mean-square stability test: bigA(K) Hurwitz with margin.
Admissibility is_admissible(const PolicyGain& K, const SystemModel& model,
                            double stab_margin = defaults::stab_margin);

// Alternative test: the solution of L_K(P) = -I exists and is positive
// definite. Requires bigA(K) nonsingular.
bool is_admissible_lyapunov(const PolicyGain& K, const SystemModel& model);

// G(P) = [ Q + A^T P + P A + Pi(P)   P B          ]
//        [ B^T P                     R + Sigma(P) ]
GMatrix g_of_p(const Matrix& P, const SystemModel& model, const CostWeights& weights);

// [I_a, -K^T] M [I_a, -K^T]^T for symmetric M of order a+b and K in R^{b x a}.
Matrix h_reduce(const Matrix& M, const Matrix& K);

// H(G, K) with the G block partition.
Matrix h_op(const GMatrix& G, const PolicyGain& K);

// K = G_uu^{-1} G_ux; throws SingularGuu when cond(G_uu) exceeds the limit.
PolicyGain improved_gain(const GMatrix& G, double cond_limit = defaults::guu_cond_limit);

// R(P) = Q + A^T P + P A + Pi(P) - P B (R + Sigma(P))^{-1} B^T P.
Matrix riccati_residual(const Matrix& P, const SystemModel& model, const CostWeights& weights);

// theta(P) = G(P) (+) trace(C^T P C) as a direct sum.
ThetaMatrix theta_of_p(const Matrix& P, const SystemModel& model, const CostWeights& weights);

ThetaMatrix make_theta(const Matrix& full, int n, int m);

// Extracts the G block of a Theta estimate: G = H(theta, 0) drops the
// constant row/column.
GMatrix g_from_theta(const ThetaMatrix& theta);

}  // namespace olsbpi

#endif
