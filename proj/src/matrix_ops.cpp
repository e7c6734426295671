#include "olsbpi/matrix_ops.hpp"

#include <cmath>
#include <numbers>

namespace olsbpi {

namespace {
constexpr double kSqrt2 = std::numbers::sqrt2;

bool is_triangular_number(Eigen::Index len, Eigen::Index& n_out) {
  // len = n(n+1)/2  =>  n = (-1 + sqrt(1+8 len)) / 2
  const auto n = static_cast<Eigen::Index>(std::floor((std::sqrt(8.0 * static_cast<double>(len) + 1.0) - 1.0) / 2.0));
  for (Eigen::Index k = std::max<Eigen::Index>(0, n - 1); k <= n + 1; ++k) {
    if (k * (k + 1) / 2 == len) {
      n_out = k;
      return true;
    }
  }
  return false;
}
}  // namespace

Matrix symmetrize(const Matrix& M) { return 0.5 * (M + M.transpose()); }

void require_symmetric(const Matrix& X, double tol) {
  if (X.rows() != X.cols())
    throw AsymmetricInput("matrix is not square: " + std::to_string(X.rows()) + "x" +
                          std::to_string(X.cols()));
  const double asym = (X - X.transpose()).norm();
  const double scale = std::max(X.norm(), 1e-300);
  if (asym > tol * scale)
    throw AsymmetricInput("relative asymmetry " + std::to_string(asym / scale) +
                          " exceeds tolerance " + std::to_string(tol));
}

Vector svec(const Matrix& X, double tol) {
  require_symmetric(X, tol);
  const Eigen::Index n = X.rows();
  Vector v(svec_size(n));
  Eigen::Index idx = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    v[idx++] = X(i, i);
    for (Eigen::Index j = i + 1; j < n; ++j) v[idx++] = kSqrt2 * 0.5 * (X(i, j) + X(j, i));
  }
  return v;
}

Matrix smat(const Vector& v) {
  Eigen::Index n = 0;
  if (!is_triangular_number(v.size(), n))
    throw BadLength("svec length " + std::to_string(v.size()) + " is not a triangular number");
  Matrix X(n, n);
  Eigen::Index idx = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    X(i, i) = v[idx++];
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double x = v[idx++] / kSqrt2;
      X(i, j) = x;
      X(j, i) = x;
    }
  }
  return X;
}

Vector vec(const Matrix& X) {
  return Eigen::Map<const Vector>(X.data(), X.size());
}

Matrix vec_inv(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
  if (v.size() != rows * cols)
    throw BadLength("vector of length " + std::to_string(v.size()) + " cannot fill " +
                    std::to_string(rows) + "x" + std::to_string(cols));
  return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

Matrix kron(const Matrix& A, const Matrix& B) {
  Matrix K(A.rows() * B.rows(), A.cols() * B.cols());
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j)
      K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  return K;
}

Matrix duplication_matrix(Eigen::Index n) {
  if (n < 1) throw InvalidArgument("duplication matrix order must be >= 1");
  Matrix D = Matrix::Zero(n * n, svec_size(n));
  Eigen::Index col = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    D(i + i * n, col++) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      D(i + j * n, col) = 1.0 / kSqrt2;
      D(j + i * n, col) = 1.0 / kSqrt2;
      ++col;
    }
  }
  return D;
}

Matrix pinv(const Matrix& M, double rank_tol) {
  if (M.size() == 0) return Matrix(M.cols(), M.rows());
  Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const double cutoff = rank_tol * (s.size() > 0 ? s[0] : 0.0);
  Vector inv = Vector::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s[i] > cutoff && s[i] > 0.0) inv[i] = 1.0 / s[i];
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

double cond_number(const Matrix& M) {
  Eigen::JacobiSVD<Matrix> svd(M);
  const Vector& s = svd.singularValues();
  if (s.size() == 0) return 1e300;
  const double smax = s[0];
  const double smin = s[s.size() - 1];
  if (!(smin > smax * 1e-300) || smin <= 0.0) return 1e300;
  return smax / smin;
}

}  // namespace olsbpi
