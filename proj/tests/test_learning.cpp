#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "olsbpi/learning.hpp"
#include "test_util.hpp"

using namespace olsbpi;
using testutil::two_state_additive;
using testutil::two_state_noisy;

namespace {

SystemModel scalar_model(double a, double b, double c = 1.0) {
  return {Matrix::Constant(1, 1, a), Matrix::Constant(1, 1, b), {}, {},
          Matrix::Constant(1, 1, c)};
}

const CostWeights kUnit1{Matrix::Identity(1, 1), Matrix::Identity(1, 1)};

Trajectory constant_zero_trajectory(int n, int m, int samples, double dt) {
  Trajectory traj;
  traj.dt = dt;
  traj.sigma_u = 0.0;
  traj.gain = Matrix::Zero(m, n);
  traj.times = Vector::LinSpaced(samples, 0.0, dt * (samples - 1));
  traj.states = Matrix::Zero(samples, n);
  traj.inputs = Matrix::Zero(samples, m);
  traj.exploration = Matrix::Zero(samples, m);
  return traj;
}

using testutil::trajectory_prefix;
using testutil::trapezoid_zeta;

Trajectory explore_rollout(const testutil::RandomSystem& sys, double t_f, double sigma_u,
                           std::uint64_t seed) {
  SimConfig cfg;
  cfg.dt = 1e-3;
  cfg.t_f = t_f;
  cfg.sigma_u = sigma_u;
  cfg.seed = seed;
  return simulate(sys.model, sys.k0, cfg);
}

}  // namespace

TEST_SUITE_BEGIN("learning");

TEST_CASE("z_tilde ends with the constant entry") {
  Vector x(2), u(1);
  x << 2.0, -1.0;
  u << 3.0;
  const Vector zt = z_tilde(x, u);
  REQUIRE(zt.size() == svec_size(4));
  CHECK(zt[zt.size() - 1] == 1.0);
  // First entry is x1^2, last off-diagonal block carries x and u linearly.
  CHECK(zt[0] == doctest::Approx(4.0));
}

TEST_CASE("constant zero trajectory gives the degenerate triplet") {
  const auto traj = constant_zero_trajectory(2, 1, 100, 0.01);
  const DataMatrices data = build_data_matrices(traj, CostWeights(Matrix::Identity(2, 2),
                                                                  Matrix::Identity(1, 1)));
  const Eigen::Index nz = data.nz();
  Matrix expect = Matrix::Zero(nz, nz);
  expect(nz - 1, nz - 1) = 1.0;
  CHECK((data.psi - expect).norm() < 1e-12);
  CHECK(data.zeta.isZero(0.0));
  CHECK(data.xi.isZero(0.0));
  CHECK(data.ill_conditioned);  // rank-one psi
}

TEST_CASE("build_data_matrices rejects degenerate input") {
  const auto traj = constant_zero_trajectory(2, 1, 1, 0.01);
  const CostWeights w(Matrix::Identity(2, 2), Matrix::Identity(1, 1));
  CHECK_THROWS_AS(build_data_matrices(traj, w), TooFewSamples);
  const auto traj2 = constant_zero_trajectory(2, 1, 10, 0.01);
  CHECK_THROWS_AS(build_data_matrices(traj2, w, 0.95), TooFewSamples);
  CHECK_THROWS_AS(build_data_matrices(traj2, w, -0.1), InvalidArgument);
}

TEST_CASE("psi is symmetric PSD on recorded data") {
  const auto sys = two_state_additive();
  const DataMatrices data = build_data_matrices(explore_rollout(sys, 50.0, 1.0, 5), sys.weights);
  CHECK((data.psi - data.psi.transpose()).norm() == 0.0);
  Eigen::SelfAdjointEigenSolver<Matrix> es(data.psi);
  CHECK(es.eigenvalues().minCoeff() >= -1e-10 * es.eigenvalues().maxCoeff());
}

TEST_CASE("the data equation residual shrinks as the horizon grows") {
  const auto sys = two_state_additive();
  Rng rng(61);
  const Matrix P = testutil::random_symmetric(rng, 2);
  const Vector theta_true = svec(theta_of_p(P, sys.model, sys.weights).M);

  int improved = 0;
  const int seeds = 5;
  for (int s = 1; s <= seeds; ++s) {
    const Trajectory longrun = explore_rollout(sys, 800.0, 1.0, 100 + s);
    const DataMatrices d_long = build_data_matrices(longrun, sys.weights);
    const DataMatrices d_short = build_data_matrices(trajectory_prefix(longrun, 200.0), sys.weights);
    const auto residual = [&](const DataMatrices& d) {
      return (d.psi * theta_true - d.zeta * svec(P) - d.xi).norm();
    };
    if (residual(d_long) < residual(d_short)) ++improved;
  }
  CHECK(improved >= 4);
}

TEST_CASE("left-endpoint zeta beats the trapezoid variant") {
  const auto sys = two_state_additive();
  const Matrix P = 0.7 * Matrix::Identity(2, 2);
  const Vector theta_true = svec(theta_of_p(P, sys.model, sys.weights).M);

  int left_wins = 0;
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const Trajectory traj = explore_rollout(sys, 1500.0, 1.0, 7000 + seed);
    const DataMatrices data = build_data_matrices(traj, sys.weights);
    const Matrix zeta_trap = trapezoid_zeta(traj, data.t_f);
    const Matrix psi_inv = pinv(data.psi);
    const double err_left =
        (psi_inv * (data.zeta * svec(P) + data.xi) - theta_true).norm();
    const double err_trap =
        (psi_inv * (zeta_trap * svec(P) + data.xi) - theta_true).norm();
    if (err_left < err_trap) ++left_wins;
  }
  CHECK(left_wins >= 3);
}

TEST_CASE("exact data reproduces the model operators") {
  const auto sys = two_state_noisy();
  const DataMatrices data = exact_data_matrices(sys.model, sys.weights);
  Rng rng(62);
  const PolicyGain K{testutil::random_matrix(rng, 1, 2, 0.3)};

  const OdeOperators ops = ode_operators(data, K);
  const Matrix Dn = duplication_matrix(2);
  const Matrix big = bigA(K, sys.model);
  // T1 equals bigA on the symmetric subspace (its invariant domain).
  CHECK(((ops.T1 - big) * Dn).norm() < 1e-10);
  const Vector t2_expect = vec(Matrix(sys.weights.Q + K.K.transpose() * sys.weights.R * K.K));
  CHECK((ops.T2 - t2_expect).norm() < 1e-10);
}

TEST_CASE("policy evaluation ODE: scalar closed form") {
  const SystemModel sys = scalar_model(-1.0, 1.0);
  const DataMatrices data = exact_data_matrices(sys, kUnit1);
  const PolicyGain K{Matrix::Zero(1, 1)};
  // T1 = -2, T2 = 1, P(0) = 0  =>  P(s) = (1 - exp(-2 s)) / 2.
  const Matrix P5 = policy_evaluation_ode(data, K, 5.0);
  CHECK(P5(0, 0) == doctest::Approx(0.5 * (1.0 - std::exp(-10.0))).epsilon(1e-8));
  CHECK(P5(0, 0) == doctest::Approx(0.49998).epsilon(1e-4));

  const Matrix Peq = equilibrium_policy_evaluation(data, K);
  CHECK(Peq(0, 0) == doctest::Approx(0.5));
}

TEST_CASE("policy evaluation ODE: equilibrium matches the Lyapunov solve") {
  const auto sys = two_state_noisy();
  const DataMatrices data = exact_data_matrices(sys.model, sys.weights);
  Rng rng(63);
  const PolicyGain K{testutil::random_matrix(rng, 1, 2, 0.2)};
  REQUIRE(is_admissible(K, sys.model).admissible);

  const Matrix S = sys.weights.Q + K.K.transpose() * sys.weights.R * K.K;
  const Matrix P_lyap = solve_generalized_lyapunov(K, S, sys.model);

  const Matrix P_ode = policy_evaluation_ode(data, K, 100.0);
  CHECK((P_ode - P_lyap).norm() < 1e-6);

  const Matrix P_eq = equilibrium_policy_evaluation(data, K);
  CHECK((P_eq - P_lyap).norm() < 1e-9);
  CHECK((P_ode - P_eq).norm() < 1e-6);

  // Past the mixing time the horizon no longer matters.
  const Matrix P_ode2 = policy_evaluation_ode(data, K, 200.0);
  CHECK((P_ode2 - P_ode).norm() < 1e-8);
}

TEST_CASE("policy evaluation diverges visibly on an unstable system") {
  const SystemModel unstable = scalar_model(1.0, 0.0);
  const DataMatrices data = exact_data_matrices(unstable, kUnit1);
  const PolicyGain K{Matrix::Zero(1, 1)};
  CHECK_THROWS_AS(policy_evaluation_ode(data, K, 50.0), OdeUnstable);
  CHECK_THROWS_AS(equilibrium_policy_evaluation(data, K), NotHurwitz);
}

TEST_CASE("olsbpi on exact data tracks standard_pi iteration by iteration") {
  const auto sys = two_state_noisy();
  const DataMatrices data = exact_data_matrices(sys.model, sys.weights);

  OlsbpiOptions opt;
  opt.iterations = 8;
  opt.s_f = 100.0;
  const OlsbpiResult learned = run_olsbpi(data, sys.k0, opt);
  const PiTrace exact = standard_pi(sys.k0, sys.model, sys.weights, 8, 0.0, false);

  REQUIRE(learned.gains.size() == 8);
  for (size_t i = 0; i < exact.iterations.size(); ++i) {
    CHECK((learned.gains[i] - exact.iterations[i].gain).norm() < 1e-6);
    if (i < learned.g_estimates.size())
      CHECK((learned.g_estimates[i].M - exact.iterations[i].g_hat).norm() < 1e-6);
  }

  // Equilibrium mode reaches the same iterates.
  opt.mode = OlsbpiOptions::Mode::equilibrium;
  const OlsbpiResult eq = run_olsbpi(data, sys.k0, opt);
  for (size_t i = 0; i < eq.gains.size(); ++i)
    CHECK((eq.gains[i] - learned.gains[i]).norm() < 1e-6);
}

TEST_CASE("diagnose on exact data reports vanishing estimation error") {
  const auto sys = two_state_noisy();
  const DataMatrices data = exact_data_matrices(sys.model, sys.weights);
  OlsbpiOptions opt;
  opt.iterations = 6;
  const OlsbpiResult learned = run_olsbpi(data, sys.k0, opt);
  const auto records = diagnose(learned, sys.model, sys.weights);
  REQUIRE(records.size() == 6);

  const PiTrace truth = standard_pi(sys.k0, sys.model, sys.weights);
  const double J_opt = truth.iterations.back().cost;
  for (const auto& rec : records) {
    CHECK(rec.admissible);
    CHECK(rec.cost >= J_opt - 1e-8);
    if (rec.delta_g.size() > 0) CHECK(rec.delta_g.norm() < 1e-6);
  }
  CHECK(records.back().gain_error < 1e-7);
}

TEST_CASE("olsbpi learns a near-optimal gain from one noisy rollout") {
  const auto sys = two_state_noisy();
  const Trajectory traj = explore_rollout(sys, 2000.0, 1.0, 424242);
  const DataMatrices data = build_data_matrices(traj, sys.weights);
  CHECK(data.cond_psi < 1e8);

  OlsbpiOptions opt;
  opt.iterations = 10;
  opt.s_f = 100.0;
  const OlsbpiResult learned = run_olsbpi(data, sys.k0, opt);
  const auto records = diagnose(learned, sys.model, sys.weights);

  const PiTrace truth = standard_pi(sys.k0, sys.model, sys.weights);
  const double k_norm = truth.iterations.back().gain.norm();
  CHECK(records.back().gain_error / k_norm < 0.1);
  for (const auto& rec : records) CHECK(rec.admissible);

  // Every stored estimate is exactly symmetric.
  for (const auto& theta : learned.theta_estimates)
    CHECK((theta.M - theta.M.transpose()).norm() == 0.0);
  for (const auto& g : learned.g_estimates) CHECK((g.M - g.M.transpose()).norm() == 0.0);
}

TEST_CASE("zero exploration makes psi numerically singular") {
  const SystemModel sys = scalar_model(-1.0, 1.0);
  SimConfig cfg;
  cfg.dt = 1e-3;
  cfg.t_f = 50.0;
  cfg.sigma_u = 0.0;  // u = -K x exactly
  cfg.seed = 17;
  const Trajectory traj = simulate(sys, {Matrix::Constant(1, 1, 0.5)}, cfg);
  const DataMatrices data = build_data_matrices(traj, kUnit1);
  CHECK(data.cond_psi > 1e12);
  CHECK(data.ill_conditioned);
}

TEST_CASE("burn-in discards the leading transient window") {
  const auto sys = two_state_additive();
  const Trajectory traj = explore_rollout(sys, 40.0, 1.0, 6);
  const DataMatrices full = build_data_matrices(traj, sys.weights);
  const DataMatrices trimmed = build_data_matrices(traj, sys.weights, 0.5);
  CHECK(trimmed.t_f == doctest::Approx(0.5 * full.t_f).epsilon(1e-3));
  CHECK((trimmed.psi - full.psi).norm() > 0.0);
}

TEST_CASE("data matrices serialize and reload exactly") {
  const auto sys = two_state_additive();
  const DataMatrices data = build_data_matrices(explore_rollout(sys, 20.0, 1.0, 3), sys.weights);
  const auto path = std::filesystem::temp_directory_path() / "olsbpi_data_test.txt";
  save_data_matrices(data, path.string());
  const DataMatrices loaded = load_data_matrices(path.string());
  CHECK(loaded.n == data.n);
  CHECK(loaded.m == data.m);
  CHECK(loaded.t_f == data.t_f);
  CHECK((loaded.psi.array() == data.psi.array()).all());
  CHECK((loaded.zeta.array() == data.zeta.array()).all());
  CHECK((loaded.xi.array() == data.xi.array()).all());
  std::filesystem::remove(path);

  CHECK_THROWS_AS(load_data_matrices("/nonexistent/olsbpi.dat"), Error);
}

TEST_SUITE_END();
