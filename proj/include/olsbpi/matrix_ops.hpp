#ifndef OLSBPI_MATRIX_OPS_HPP
#define OLSBPI_MATRIX_OPS_HPP

#include <Eigen/Dense>

#include "olsbpi/errors.hpp"

// Symmetric-vectorization algebra shared by every other module.
//
// svec stacks the upper triangle row by row with off-diagonal entries scaled
// by sqrt(2), so that ||svec(X)||_2 = ||X||_F and svec(A).svec(B) = <A,B>_F.
// vec stacks columns. Both conventions must stay bit-consistent across the
// code base; do not reorder.

namespace olsbpi {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace defaults {
inline constexpr double sym_tol = 1e-10;        // relative symmetry tolerance
inline constexpr double pinv_rank_tol = 1e-10;  // relative singular value cutoff
}  // namespace defaults

// (M + M^T)/2; used on every operator output to suppress round-off drift.
Matrix symmetrize(const Matrix& M);

// Throws AsymmetricInput when ||X - X^T||_F > tol * max(||X||_F, 1e-300).
void require_symmetric(const Matrix& X, double tol = defaults::sym_tol);

// Length of svec for a symmetric matrix of order n.
inline Eigen::Index svec_size(Eigen::Index n) { return n * (n + 1) / 2; }

Vector svec(const Matrix& X, double tol = defaults::sym_tol);
Matrix smat(const Vector& v);

Vector vec(const Matrix& X);
Matrix vec_inv(const Vector& v, Eigen::Index rows, Eigen::Index cols);

Matrix kron(const Matrix& A, const Matrix& B);

// D_n with vec(X) = D_n svec(X) and svec(X) = D_n^+ vec(X) for symmetric X.
// Columns are orthonormal, so D_n^+ = D_n^T.
Matrix duplication_matrix(Eigen::Index n);

// Moore-Penrose pseudoinverse via SVD; singular values below
// rank_tol * sigma_max are treated as zero.
Matrix pinv(const Matrix& M, double rank_tol = defaults::pinv_rank_tol);

// sigma_max / sigma_min; returns 1e300 when sigma_min underflows to zero.
double cond_number(const Matrix& M);

}  // namespace olsbpi

#endif
