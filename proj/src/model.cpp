#include "olsbpi/model.hpp"

#include <Eigen/Eigenvalues>

namespace olsbpi {

namespace {

void check_square(const Matrix& M, int n, const char* name) {
  if (M.rows() != n || M.cols() != n)
    throw DimensionMismatch(std::string(name) + " must be " + std::to_string(n) + "x" +
                            std::to_string(n));
}

double min_eigenvalue_sym(const Matrix& S) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(S));
  return es.eigenvalues().minCoeff();
}

}  // namespace

SystemModel::SystemModel(Matrix A_, Matrix B_, std::vector<Matrix> D_, std::vector<Matrix> F_,
                         Matrix C_)
    : A(std::move(A_)), B(std::move(B_)), D(std::move(D_)), F(std::move(F_)), C(std::move(C_)) {
  if (A.rows() != A.cols() || A.rows() < 1) throw DimensionMismatch("A must be square, n >= 1");
  n = static_cast<int>(A.rows());
  if (B.rows() != n || B.cols() < 1) throw DimensionMismatch("B must be n x m with m >= 1");
  m = static_cast<int>(B.cols());
  for (const auto& Dj : D) check_square(Dj, n, "each D_j");
  for (const auto& Fk : F) {
    if (Fk.rows() != n || Fk.cols() != m) throw DimensionMismatch("each F_k must be n x m");
  }
  if (C.rows() != n || C.cols() < 1) throw DimensionMismatch("C must be n x p with p >= 1");
  if (min_eigenvalue_sym(C * C.transpose()) <= 0.0)
    throw NotPositiveDefinite("C C^T must be positive definite");
}

CostWeights::CostWeights(Matrix Q_, Matrix R_) : Q(std::move(Q_)), R(std::move(R_)) {
  require_symmetric(Q);
  require_symmetric(R);
  if (min_eigenvalue_sym(Q) <= 0.0) throw NotPositiveDefinite("Q must be positive definite");
  if (min_eigenvalue_sym(R) <= 0.0) throw NotPositiveDefinite("R must be positive definite");
}

Matrix op_pi(const Matrix& P, const SystemModel& model) {
  check_square(P, model.n, "P");
  Matrix out = Matrix::Zero(model.n, model.n);
  for (const auto& Dj : model.D) out += Dj.transpose() * P * Dj;
  return symmetrize(out);
}

Matrix op_sigma(const Matrix& P, const SystemModel& model) {
  check_square(P, model.n, "P");
  Matrix out = Matrix::Zero(model.m, model.m);
  for (const auto& Fk : model.F) out += Fk.transpose() * P * Fk;
  return symmetrize(out);
}

Matrix lyap_op(const PolicyGain& K, const Matrix& P, const SystemModel& model) {
  if (K.K.rows() != model.m || K.K.cols() != model.n)
    throw DimensionMismatch("gain must be m x n");
  check_square(P, model.n, "P");
  const Matrix Acl = model.A - model.B * K.K;
  Matrix out = Acl.transpose() * P + P * Acl + op_pi(P, model) +
               K.K.transpose() * op_sigma(P, model) * K.K;
  return symmetrize(out);
}

Matrix bigA(const PolicyGain& K, const SystemModel& model) {
  if (K.K.rows() != model.m || K.K.cols() != model.n)
    throw DimensionMismatch("gain must be m x n");
  const int n = model.n;
  const Matrix AclT = (model.A - model.B * K.K).transpose();
  const Matrix I = Matrix::Identity(n, n);
  Matrix out = kron(I, AclT) + kron(AclT, I);
  for (const auto& Dj : model.D) out += kron(Dj.transpose(), Dj.transpose());
  for (const auto& Fk : model.F) {
    const Matrix FKt = (Fk * K.K).transpose();
    out += kron(FKt, FKt);
  }
  return out;
}

Admissibility is_admissible(const PolicyGain& K, const SystemModel& model, double stab_margin) {
  Eigen::EigenSolver<Matrix> es(bigA(K, model), false);
  const double abscissa = es.eigenvalues().real().maxCoeff();
  return {abscissa < -stab_margin, abscissa};
}

bool is_admissible_lyapunov(const PolicyGain& K, const SystemModel& model) {
  const Matrix op = bigA(K, model);
  if (cond_number(op) > 1e14) throw SingularOperator("bigA(K) is numerically singular");
  const Vector rhs = vec(Matrix(-Matrix::Identity(model.n, model.n)));
  const Matrix P = symmetrize(vec_inv(op.fullPivLu().solve(rhs), model.n, model.n));
  return min_eigenvalue_sym(P) > 0.0;
}

GMatrix g_of_p(const Matrix& P, const SystemModel& model, const CostWeights& weights) {
  check_square(P, model.n, "P");
  const int n = model.n;
  const int m = model.m;
  Matrix G(n + m, n + m);
  G.topLeftCorner(n, n) =
      weights.Q + model.A.transpose() * P + P * model.A + op_pi(P, model);
  G.topRightCorner(n, m) = P * model.B;
  G.bottomLeftCorner(m, n) = model.B.transpose() * P;
  G.bottomRightCorner(m, m) = weights.R + op_sigma(P, model);
  return {symmetrize(G), n, m};
}

Matrix h_reduce(const Matrix& M, const Matrix& K) {
  const Eigen::Index a = K.cols();
  const Eigen::Index b = K.rows();
  if (M.rows() != a + b || M.cols() != a + b)
    throw DimensionMismatch("H: matrix order must equal a+b of the gain");
  Matrix S(a, a + b);
  S << Matrix::Identity(a, a), -K.transpose();
  return symmetrize(S * M * S.transpose());
}

Matrix h_op(const GMatrix& G, const PolicyGain& K) { return h_reduce(G.M, K.K); }

PolicyGain improved_gain(const GMatrix& G, double cond_limit) {
  const Matrix Guu = G.uu();
  if (cond_number(Guu) > cond_limit)
    throw SingularGuu("condition number of G_uu exceeds " + std::to_string(cond_limit));
  return {Guu.fullPivLu().solve(G.ux())};
}

Matrix riccati_residual(const Matrix& P, const SystemModel& model, const CostWeights& weights) {
  check_square(P, model.n, "P");
  const Matrix inner = weights.R + op_sigma(P, model);
  if (cond_number(inner) > defaults::guu_cond_limit)
    throw SingularInner("R + Sigma(P) is numerically singular");
  Matrix res = weights.Q + model.A.transpose() * P + P * model.A + op_pi(P, model) -
               P * model.B * inner.fullPivLu().solve(model.B.transpose() * P);
  return symmetrize(res);
}

ThetaMatrix theta_of_p(const Matrix& P, const SystemModel& model, const CostWeights& weights) {
  const GMatrix G = g_of_p(P, model, weights);
  const int d = model.n + model.m;
  Matrix T = Matrix::Zero(d + 1, d + 1);
  T.topLeftCorner(d, d) = G.M;
  T(d, d) = (model.C.transpose() * P * model.C).trace();
  return {T, model.n, model.m};
}

ThetaMatrix make_theta(const Matrix& full, int n, int m) {
  if (full.rows() != n + m + 1 || full.cols() != n + m + 1)
    throw DimensionMismatch("theta must have order n+m+1");
  return {symmetrize(full), n, m};
}

GMatrix g_from_theta(const ThetaMatrix& theta) {
  const Matrix zero_gain = Matrix::Zero(1, theta.n + theta.m);
  return {h_reduce(theta.M, zero_gain), theta.n, theta.m};
}

}  // namespace olsbpi
