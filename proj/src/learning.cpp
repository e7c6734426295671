#include "olsbpi/learning.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "olsbpi/csv.hpp"

namespace olsbpi {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_data_gain(const DataMatrices& data, const PolicyGain& K) {
  if (K.K.rows() != data.m || K.K.cols() != data.n)
    throw DimensionMismatch("gain must be m x n for the data matrices");
}

double psi_condition(const Matrix& psi) {
  const double c = cond_number(psi);
  return std::isfinite(c) ? c : 1e300;
}

}  // namespace

Vector z_tilde(const Vector& x, const Vector& u) {
  const Eigen::Index n = x.size();
  const Eigen::Index m = u.size();
  Vector z(n + m + 1);
  z.head(n) = x;
  z.segment(n, m) = u;
  z[n + m] = 1.0;
  return svec(z * z.transpose());
}

DataMatrices build_data_matrices(const Trajectory& traj, const CostWeights& weights,
                                 double burn_in_fraction) {
  const Eigen::Index total = traj.samples();
  if (total < 2) throw TooFewSamples("need at least two samples");
  if (burn_in_fraction < 0.0 || burn_in_fraction >= 1.0)
    throw InvalidArgument("burn-in fraction must lie in [0, 1)");

  const auto n = traj.states.cols();
  const auto m = traj.inputs.cols();
  if (weights.Q.rows() != n || weights.R.rows() != m)
    throw DimensionMismatch("weights do not match trajectory dimensions");

  const auto first = static_cast<Eigen::Index>(std::floor(burn_in_fraction * total));
  if (total - first < 2) throw TooFewSamples("burn-in leaves fewer than two samples");

  DataMatrices data;
  data.n = static_cast<int>(n);
  data.m = static_cast<int>(m);
  const Eigen::Index nz = data.nz();
  const Eigen::Index nx = svec_size(n);
  data.psi = Matrix::Zero(nz, nz);
  data.zeta = Matrix::Zero(nz, nx);
  data.xi = Vector::Zero(nz);

  const double dt = traj.dt;
  Vector x = traj.states.row(first).transpose();
  Vector xt_prev = svec(x * x.transpose());
  for (Eigen::Index k = first; k + 1 < total; ++k) {
    x = traj.states.row(k).transpose();
    const Vector u = traj.inputs.row(k).transpose();
    const Vector zt = z_tilde(x, u);
    const Vector x_next = traj.states.row(k + 1).transpose();
    const Vector xt_next = svec(x_next * x_next.transpose());

    // Ito convention: regressor at the left endpoint throughout.
    data.psi.noalias() += zt * zt.transpose() * dt;
    data.zeta.noalias() += zt * (xt_next - xt_prev).transpose();
    const double r = x.dot(weights.Q * x) + u.dot(weights.R * u);
    data.xi.noalias() += zt * (r * dt);
    xt_prev = xt_next;
  }

  data.t_f = static_cast<double>(total - 1 - first) * dt;
  data.psi = symmetrize(data.psi / data.t_f);
  data.zeta /= data.t_f;
  data.xi /= data.t_f;
  data.cond_psi = psi_condition(data.psi);
  data.ill_conditioned = data.cond_psi > defaults::psi_warn_cond;
  return data;
}

DataMatrices exact_data_matrices(const SystemModel& model, const CostWeights& weights) {
  DataMatrices data;
  data.n = model.n;
  data.m = model.m;
  const Eigen::Index nz = data.nz();
  const Eigen::Index nx = svec_size(model.n);

  data.psi = Matrix::Identity(nz, nz);
  data.xi = svec(theta_of_p(Matrix::Zero(model.n, model.n), model, weights).M);
  data.zeta = Matrix::Zero(nz, nx);
  for (Eigen::Index j = 0; j < nx; ++j) {
    Vector e = Vector::Zero(nx);
    e[j] = 1.0;
    const Matrix Pj = smat(e);
    data.zeta.col(j) = svec(theta_of_p(Pj, model, weights).M) - data.xi;
  }
  data.t_f = std::numeric_limits<double>::infinity();
  data.cond_psi = 1.0;
  data.ill_conditioned = false;
  return data;
}

OdeOperators ode_operators(const DataMatrices& data, const PolicyGain& K, double rank_tol) {
  check_data_gain(data, K);
  const int n = data.n;
  const int m = data.m;

  // vec(H(H(Theta, 0), K)) = Gamma vec(Theta) with the row selector
  // S = [I_n, -K^T, 0].
  Matrix S(n, n + m + 1);
  S << Matrix::Identity(n, n), -K.K.transpose(), Matrix::Zero(n, 1);
  const Matrix gamma = kron(S, S);

  const Matrix lift = gamma * duplication_matrix(n + m + 1) * pinv(data.psi, rank_tol);
  const Matrix Dn = duplication_matrix(n);

  OdeOperators ops;
  ops.T1 = lift * data.zeta * pinv(Dn);
  ops.T2 = lift * data.xi;
  ops.T1_svec = pinv(Dn) * lift * data.zeta;
  ops.T2_svec = pinv(Dn) * ops.T2;
  return ops;
}

Matrix policy_evaluation_ode(const DataMatrices& data, const PolicyGain& K, double s_f,
                             const OdeConfig& cfg) {
  if (!(s_f > 0.0)) throw InvalidArgument("s_f must be positive");
  const OdeOperators ops = ode_operators(data, K, cfg.rank_tol);
  const Eigen::Index n2 = static_cast<Eigen::Index>(data.n) * data.n;

  const double h_target = std::min(cfg.max_step, s_f / 1000.0);
  const auto steps = static_cast<Eigen::Index>(std::ceil(s_f / h_target));
  const double h = s_f / static_cast<double>(steps);

  Vector p = Vector::Zero(n2);
  Vector k1(n2), k2(n2), k3(n2), k4(n2);
  for (Eigen::Index s = 0; s < steps; ++s) {
    k1.noalias() = ops.T1 * p;
    k1 += ops.T2;
    k2.noalias() = ops.T1 * (p + 0.5 * h * k1);
    k2 += ops.T2;
    k3.noalias() = ops.T1 * (p + 0.5 * h * k2);
    k3 += ops.T2;
    k4.noalias() = ops.T1 * (p + h * k3);
    k4 += ops.T2;
    p += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!(p.norm() < cfg.blowup))
      throw OdeUnstable("policy-evaluation iterate exceeded " + std::to_string(cfg.blowup) +
                        " at s=" + std::to_string(static_cast<double>(s + 1) * h) +
                        " (data horizon too short or excitation too weak)");
  }
  return symmetrize(vec_inv(p, data.n, data.n));
}

Matrix equilibrium_policy_evaluation(const DataMatrices& data, const PolicyGain& K,
                                     double rank_tol) {
  const OdeOperators ops = ode_operators(data, K, rank_tol);
  Eigen::EigenSolver<Matrix> es(ops.T1_svec, false);
  const double abscissa = es.eigenvalues().real().maxCoeff();
  if (!(abscissa < 0.0))
    throw NotHurwitz("policy-evaluation system matrix has spectral abscissa " +
                     std::to_string(abscissa));
  const Vector q = ops.T1_svec.fullPivLu().solve(Vector(-ops.T2_svec));
  return smat(q);
}

OlsbpiResult run_olsbpi(const DataMatrices& data, const PolicyGain& K1, const OlsbpiOptions& opt) {
  check_data_gain(data, K1);
  if (opt.iterations < 2) throw InvalidArgument("need at least two iterations");

  const Matrix psi_inv = pinv(data.psi, opt.ode.rank_tol);
  OlsbpiResult result;
  result.gains.push_back(K1.K);

  PolicyGain K = K1;
  for (int i = 1; i <= opt.iterations - 1; ++i) {
    const std::string ctx = " [olsbpi iteration " + std::to_string(i) + "]";
    Matrix P_hat;
    try {
      P_hat = (opt.mode == OlsbpiOptions::Mode::ode)
                  ? policy_evaluation_ode(data, K, opt.s_f, opt.ode)
                  : equilibrium_policy_evaluation(data, K, opt.ode.rank_tol);
    } catch (const OdeUnstable& e) {
      throw OdeUnstable(e.what() + ctx);
    } catch (const NotHurwitz& e) {
      throw NotHurwitz(e.what() + ctx);
    }

    const Vector theta_vec = psi_inv * (data.zeta * svec(P_hat) + data.xi);
    const ThetaMatrix theta = make_theta(smat(theta_vec), data.n, data.m);
    const GMatrix G = g_from_theta(theta);

    try {
      K = improved_gain(G);
    } catch (const SingularGuu& e) {
      throw SingularGuu(e.what() + ctx);
    }
    result.theta_estimates.push_back(theta);
    result.g_estimates.push_back(G);
    result.gains.push_back(K.K);
  }
  return result;
}

std::vector<IterationRecord> diagnose(const OlsbpiResult& result, const SystemModel& model,
                                      const CostWeights& weights) {
  if (result.gains.empty()) throw InvalidArgument("empty result");

  const PiTrace truth =
      standard_pi({result.gains.front()}, model, weights, 100, 1e-13, false);
  const Matrix& P_opt = truth.iterations.back().value;
  const Matrix& K_opt = truth.iterations.back().gain;
  const double J_opt = truth.iterations.back().cost;

  std::vector<IterationRecord> records;
  records.reserve(result.gains.size());
  for (size_t i = 0; i < result.gains.size(); ++i) {
    IterationRecord rec;
    rec.index = static_cast<int>(i) + 1;
    rec.gain = result.gains[i];
    rec.gain_error = (rec.gain - K_opt).norm();

    const Admissibility adm = is_admissible({rec.gain}, model);
    rec.admissible = adm.admissible;
    rec.abscissa = adm.abscissa;
    rec.cost = rec.value_error = rec.cost_error = rec.rel_delta_g = rec.residual = kNaN;

    if (adm.admissible) {
      const PolicyCost pc = policy_cost({rec.gain}, model, weights);
      rec.value = pc.P;
      rec.cost = pc.J;
      rec.value_error = (pc.P - P_opt).norm();
      rec.cost_error = std::abs(pc.J - J_opt);
      rec.residual = riccati_residual(pc.P, model, weights).norm();
      if (i < result.g_estimates.size()) {
        const GMatrix G_true = g_of_p(pc.P, model, weights);
        rec.g_hat = result.g_estimates[i].M;
        rec.delta_g = rec.g_hat - G_true.M;
        rec.rel_delta_g = rec.delta_g.norm() / G_true.M.norm();
      }
    }
    records.push_back(std::move(rec));
  }
  return records;
}

void save_data_matrices(const DataMatrices& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << "olsbpi-data 1\n";
  out << data.n << " " << data.m << " " << format_double17(data.t_f) << " "
      << format_double17(data.cond_psi) << " " << (data.ill_conditioned ? 1 : 0) << "\n";
  const auto write_matrix = [&](const Matrix& M) {
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
      for (Eigen::Index j = 0; j < M.cols(); ++j) {
        if (j) out << " ";
        out << format_double17(M(i, j));
      }
      out << "\n";
    }
  };
  write_matrix(data.psi);
  write_matrix(data.zeta);
  write_matrix(data.xi);
}

DataMatrices load_data_matrices(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "olsbpi-data" || version != 1)
    throw ParseError(path + " is not a data-matrix file");
  DataMatrices data;
  int ill = 0;
  in >> data.n >> data.m >> data.t_f >> data.cond_psi >> ill;
  if (!in || data.n < 1 || data.m < 1) throw ParseError("bad data-matrix header in " + path);
  data.ill_conditioned = ill != 0;
  const Eigen::Index nz = data.nz();
  const Eigen::Index nx = svec_size(data.n);
  const auto read_matrix = [&](Eigen::Index rows, Eigen::Index cols) {
    Matrix M(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) in >> M(i, j);
    if (!in) throw ParseError("truncated data-matrix file " + path);
    return M;
  };
  data.psi = read_matrix(nz, nz);
  data.zeta = read_matrix(nz, nx);
  data.xi = read_matrix(nz, 1);
  return data;
}

}  // namespace olsbpi
