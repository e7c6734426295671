#include "olsbpi/solvers.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>

#include "olsbpi/rng.hpp"

namespace olsbpi {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double min_eigenvalue_sym(const Matrix& S) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(S));
  return es.eigenvalues().minCoeff();
}

// Symmetric matrix with unit Frobenius norm, direction uniform over the
// normalized Gaussian ensemble.
Matrix random_symmetric_direction(Rng& rng, int d) {
  Matrix S(d, d);
  for (int i = 0; i < d; ++i) {
    S(i, i) = rng.next_normal();
    for (int j = i + 1; j < d; ++j) {
      const double v = rng.next_normal();
      S(i, j) = v;
      S(j, i) = v;
    }
  }
  const double norm = S.norm();
  if (norm == 0.0) return Matrix::Zero(d, d);
  return S / norm;
}

struct EvalStep {
  Matrix P;          // exact solution for the current gain
  GMatrix G;         // G(P)
  double cost = 0.0; // trace(C^T P C)
};

EvalStep evaluate_policy(const PolicyGain& K, const SystemModel& model,
                         const CostWeights& weights) {
  const Matrix S = weights.Q + K.K.transpose() * weights.R * K.K;
  EvalStep step{solve_generalized_lyapunov(K, S, model), {}, 0.0};
  step.G = g_of_p(step.P, model, weights);
  step.cost = (model.C.transpose() * step.P * model.C).trace();
  return step;
}

void fill_errors_against_optimum(std::vector<IterationRecord>& records, const Matrix& K_opt,
                                 const Matrix& P_opt, double J_opt) {
  for (auto& rec : records) {
    if (rec.gain.size() > 0) rec.gain_error = (rec.gain - K_opt).norm();
    if (rec.value.size() > 0) {
      rec.value_error = (rec.value - P_opt).norm();
      rec.cost_error = std::abs(rec.cost - J_opt);
    }
  }
}

PiTrace run_pi(const PolicyGain& K1, const SystemModel& model, const CostWeights& weights,
               int max_iter, double tol, bool stop_on_tol, const DisturbanceSpec& spec) {
  const Admissibility initial = is_admissible(K1, model);
  if (!initial.admissible)
    throw NotAdmissible("initial gain has spectral abscissa " + std::to_string(initial.abscissa));

  const bool disturbed = spec.mode != DisturbanceSpec::Mode::none && spec.magnitude > 0.0;
  Rng rng(spec.seed);

  PiTrace trace;
  PolicyGain K = K1;
  Admissibility adm = initial;
  Matrix P_prev;

  for (int i = 1; i <= max_iter; ++i) {
    EvalStep step;
    try {
      step = evaluate_policy(K, model, weights);
    } catch (const SingularOperator&) {
      // Only reachable on a disturbed run whose gain sits at the stability
      // boundary; treat like a destabilized iterate.
      if (!disturbed) throw;
      trace.nonadmissible_at = i;
      break;
    }

    IterationRecord rec;
    rec.index = i;
    rec.gain = K.K;
    rec.value = step.P;
    rec.cost = step.cost;
    rec.residual = riccati_residual(step.P, model, weights).norm();
    rec.admissible = true;
    rec.abscissa = adm.abscissa;
    rec.gain_error = rec.value_error = rec.cost_error = kNaN;

    GMatrix G_hat = step.G;
    if (disturbed) {
      double target = spec.magnitude;
      switch (spec.mode) {
        case DisturbanceSpec::Mode::constant:
          break;
        case DisturbanceSpec::Mode::decaying:
          target = spec.magnitude / (static_cast<double>(i) * i);
          break;
        case DisturbanceSpec::Mode::random_bounded:
          target = spec.magnitude * rng.next_uniform();
          break;
        case DisturbanceSpec::Mode::none:
          break;
      }
      const Matrix dG = target * random_symmetric_direction(rng, model.n + model.m);
      G_hat.M = step.G.M + dG;
      rec.delta_g = dG;
      rec.rel_delta_g = dG.norm() / step.G.M.norm();
    } else {
      rec.delta_g = Matrix::Zero(model.n + model.m, model.n + model.m);
      rec.rel_delta_g = 0.0;
    }
    rec.g_hat = G_hat.M;

    if (stop_on_tol && P_prev.size() > 0 && (step.P - P_prev).norm() < tol) {
      trace.iterations.push_back(std::move(rec));
      trace.converged = true;
      break;
    }
    if (P_prev.size() > 0 &&
        min_eigenvalue_sym(P_prev - step.P) < -defaults::monotone_slack && !disturbed)
      trace.monotone_violation = true;
    P_prev = step.P;

    trace.iterations.push_back(std::move(rec));
    if (i == max_iter) break;

    PolicyGain next;
    try {
      next = improved_gain(G_hat);
    } catch (const SingularGuu&) {
      trace.nonadmissible_at = i + 1;
      break;
    }
    adm = is_admissible(next, model);
    if (!adm.admissible) {
      trace.nonadmissible_at = i + 1;
      break;
    }
    K = next;
  }

  if (!trace.iterations.empty())
    trace.final_residual = trace.iterations.back().residual;
  return trace;
}

}  // namespace

Matrix solve_generalized_lyapunov(const PolicyGain& K, const Matrix& S, const SystemModel& model,
                                  double cond_limit) {
  require_symmetric(S);
  if (S.rows() != model.n) throw DimensionMismatch("S must be n x n");
  const Matrix op = bigA(K, model);
  Eigen::JacobiSVD<Matrix> svd(op, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  if (sv.size() == 0 || !(sv[sv.size() - 1] > sv[0] / cond_limit))
    throw SingularOperator("bigA(K) condition number exceeds " + std::to_string(cond_limit));
  const Vector p = svd.solve(vec(Matrix(-S)));
  return symmetrize(vec_inv(p, model.n, model.n));
}

PolicyCost policy_cost(const PolicyGain& K, const SystemModel& model, const CostWeights& weights) {
  const Admissibility adm = is_admissible(K, model);
  if (!adm.admissible)
    throw NotAdmissible("gain has spectral abscissa " + std::to_string(adm.abscissa));
  const Matrix S = weights.Q + K.K.transpose() * weights.R * K.K;
  PolicyCost out;
  out.P = solve_generalized_lyapunov(K, S, model);
  out.J = (model.C.transpose() * out.P * model.C).trace();
  return out;
}

PiTrace standard_pi(const PolicyGain& K1, const SystemModel& model, const CostWeights& weights,
                    int max_iter, double tol, bool require_convergence) {
  PiTrace trace = run_pi(K1, model, weights, max_iter, tol, /*stop_on_tol=*/tol > 0.0, {});
  if (require_convergence && !trace.converged)
    throw NoConvergence("policy iteration did not converge in " + std::to_string(max_iter) +
                        " iterations (last step residual " +
                        std::to_string(trace.final_residual) + ")");
  fill_errors_against_optimum(trace.iterations, trace.iterations.back().gain,
                              trace.iterations.back().value, trace.iterations.back().cost);
  return trace;
}

PiTrace robust_pi(const PolicyGain& K1, const SystemModel& model, const CostWeights& weights,
                  const DisturbanceSpec& spec, int max_iter) {
  if (spec.magnitude < 0.0) throw InvalidArgument("disturbance magnitude must be nonnegative");
  // Reference optimum for the error columns; the disturbed run itself never
  // uses it.
  const PiTrace exact = standard_pi(K1, model, weights, 100, 1e-13, false);
  const Matrix& P_opt = exact.iterations.back().value;
  const Matrix& K_opt = exact.iterations.back().gain;
  const double J_opt = exact.iterations.back().cost;

  PiTrace trace = run_pi(K1, model, weights, max_iter, 0.0, /*stop_on_tol=*/false, spec);
  fill_errors_against_optimum(trace.iterations, K_opt, P_opt, J_opt);
  return trace;
}

Matrix deterministic_are(const SystemModel& model, const CostWeights& weights) {
  const int n = model.n;
  Matrix H(2 * n, 2 * n);
  const Matrix RinvBt = weights.R.fullPivLu().solve(model.B.transpose());
  H.topLeftCorner(n, n) = model.A;
  H.topRightCorner(n, n) = -model.B * RinvBt;
  H.bottomLeftCorner(n, n) = -weights.Q;
  H.bottomRightCorner(n, n) = -model.A.transpose();

  Eigen::EigenSolver<Matrix> es(H);
  Eigen::MatrixXcd basis(2 * n, n);
  int found = 0;
  for (int i = 0; i < 2 * n && found < n; ++i) {
    if (es.eigenvalues()[i].real() < 0.0) basis.col(found++) = es.eigenvectors().col(i);
  }
  if (found != n)
    throw OracleDiverged("Hamiltonian matrix does not have n stable eigenvalues");
  const Eigen::MatrixXcd U1 = basis.topRows(n);
  const Eigen::MatrixXcd U2 = basis.bottomRows(n);
  const Eigen::MatrixXcd Pc = U2 * U1.fullPivLu().solve(Eigen::MatrixXcd::Identity(n, n));
  return symmetrize(Pc.real());
}

Matrix riccati_oracle(const SystemModel& model, const CostWeights& weights, double tol) {
  const int n = model.n;
  const Eigen::Index dim = svec_size(n);

  const auto residual = [&](const Vector& p) -> Vector {
    return svec(riccati_residual(smat(p), model, weights));
  };

  Vector p = svec(deterministic_are(model, weights));
  Vector r = residual(p);

  const int max_iter = 200;
  for (int iter = 0; iter < max_iter; ++iter) {
    if (r.norm() < tol) return smat(p);

    // Finite-difference Jacobian of the residual in svec coordinates.
    Matrix J(dim, dim);
    for (Eigen::Index j = 0; j < dim; ++j) {
      const double h = std::sqrt(std::numeric_limits<double>::epsilon()) *
                       std::max(1.0, std::abs(p[j]));
      Vector pp = p;
      pp[j] += h;
      Vector pm = p;
      pm[j] -= h;
      J.col(j) = (residual(pp) - residual(pm)) / (2.0 * h);
    }

    const Vector dp = -pinv(J) * r;
    double alpha = 1.0;
    bool accepted = false;
    while (alpha > 1e-8) {
      const Vector trial = p + alpha * dp;
      const Vector rt = residual(trial);
      if (rt.norm() < (1.0 - 1e-4 * alpha) * r.norm()) {
        p = trial;
        r = rt;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted)
      throw OracleDiverged("line search stalled at residual " + std::to_string(r.norm()));
  }
  throw OracleDiverged("no convergence in 200 damped Newton steps, residual " +
                       std::to_string(r.norm()));
}

}  // namespace olsbpi
