// Acceptance suite. Each criterion prints one PASS/FAIL line; the binary
// exits nonzero if any criterion fails. Runtime-heavy checks reuse fixed
// seeds so every run is deterministic.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "olsbpi/experiment.hpp"
#include "olsbpi/preset.hpp"
#include "test_util.hpp"

using namespace olsbpi;
namespace fs = std::filesystem;

namespace {

struct Criterion {
  int id;
  std::string name;
  double time_limit_s;  // 0 = unbounded
  std::function<std::string()> run;  // empty string = pass, otherwise detail
};

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double min_eig(const Matrix& S) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(S);
  return es.eigenvalues().minCoeff();
}

SystemModel scalar_model(double a, double b, std::vector<double> f = {}) {
  std::vector<Matrix> F;
  for (double v : f) F.push_back(Matrix::Constant(1, 1, v));
  return {Matrix::Constant(1, 1, a), Matrix::Constant(1, 1, b), {}, F,
          Matrix::Constant(1, 1, 1.0)};
}

const CostWeights kUnit1{Matrix::Identity(1, 1), Matrix::Identity(1, 1)};

std::string criterion1_vectorization() {
  Rng rng(1001);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng.next_u64() % 4);
    const int m = 1 + static_cast<int>(rng.next_u64() % 4);
    const int q1 = static_cast<int>(rng.next_u64() % 3);
    const int q2 = static_cast<int>(rng.next_u64() % 3);
    const auto sys = testutil::random_admissible_system(rng, n, m, q1, q2);
    const PolicyGain K{testutil::random_matrix(rng, m, n)};
    const Matrix P = testutil::random_symmetric(rng, n, 2.0);

    const Vector lhs = vec(lyap_op(K, P, sys.model));
    const Vector rhs = bigA(K, sys.model) * vec(P);
    const double scale = std::max(1.0, rhs.norm());
    if ((lhs - rhs).norm() > 1e-10 * scale)
      return "Lyapunov vectorization identity failed at trial " + std::to_string(trial);

    const Matrix D = duplication_matrix(n);
    const Matrix Dp = pinv(D);
    const double mscale = std::max(1.0, P.norm());
    if ((vec(P) - D * svec(P)).norm() > 1e-10 * mscale)
      return "vec = D svec failed at trial " + std::to_string(trial);
    if ((svec(P) - Dp * vec(P)).norm() > 1e-10 * mscale)
      return "svec = D^+ vec failed at trial " + std::to_string(trial);
  }
  return "";
}

std::string criterion2_closed_form() {
  const double p_star = std::sqrt(2.0) - 1.0;
  const SystemModel scal = scalar_model(-1.0, 1.0);

  const PiTrace pi = standard_pi({Matrix::Zero(1, 1)}, scal, kUnit1);
  if (std::abs(pi.iterations.back().value(0, 0) - p_star) > 1e-10)
    return "standard_pi misses the quadratic-formula value";
  const Matrix oracle = riccati_oracle(scal, kUnit1);
  if (std::abs(oracle(0, 0) - p_star) > 1e-10) return "riccati_oracle misses sqrt(2)-1";
  if (std::abs(oracle(0, 0) - pi.iterations.back().value(0, 0)) > 1e-10)
    return "oracle and standard_pi disagree";

  for (double f : {0.1, 0.5}) {
    const SystemModel noisy = scalar_model(-1.0, 1.0, {f});
    const PiTrace tr = standard_pi({Matrix::Zero(1, 1)}, noisy, kUnit1);
    const double expect = testutil::scalar_riccati_bisection(-1.0, 1.0, 0.0, f, 1.0, 1.0);
    if (std::abs(tr.iterations.back().value(0, 0) - expect) > 1e-8)
      return "input-noise case f=" + std::to_string(f) + " misses the bisection oracle";
  }
  return "";
}

std::string criterion3_monotone_pi() {
  Rng rng(1003);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 2 + static_cast<int>(rng.next_u64() % 3);
    const int m = 1 + static_cast<int>(rng.next_u64() % 2);
    const int q1 = static_cast<int>(rng.next_u64() % 2);
    const int q2 = static_cast<int>(rng.next_u64() % 2);
    const auto sys = testutil::random_admissible_system(rng, n, m, q1, q2);
    const PiTrace tr = standard_pi(sys.k0, sys.model, sys.weights, 20, 1e-11, false);

    for (const auto& rec : tr.iterations)
      if (!rec.admissible) return "non-admissible iterate at trial " + std::to_string(trial);
    for (size_t i = 0; i + 1 < tr.iterations.size(); ++i)
      if (min_eig(tr.iterations[i].value - tr.iterations[i + 1].value) < -1e-8)
        return "Loewner monotonicity violated at trial " + std::to_string(trial);
    if (!(tr.final_residual < 1e-8))
      return "residual " + std::to_string(tr.final_residual) + " at trial " +
             std::to_string(trial) + " after " + std::to_string(tr.iterations.size()) +
             " iterations";
  }
  return "";
}

std::string criterion4_exact_data() {
  const auto sys = testutil::two_state_noisy();
  const DataMatrices data = exact_data_matrices(sys.model, sys.weights);
  Rng rng(1004);
  const PolicyGain K{testutil::random_matrix(rng, 1, 2, 0.3)};

  const OdeOperators ops = ode_operators(data, K);
  const Matrix Dn = duplication_matrix(2);
  if (((ops.T1 - bigA(K, sys.model)) * Dn).norm() > 1e-10)
    return "model-implied T1 differs from the vectorized Lyapunov operator";
  const Vector t2 = vec(Matrix(sys.weights.Q + K.K.transpose() * sys.weights.R * K.K));
  if ((ops.T2 - t2).norm() > 1e-10) return "model-implied T2 differs from vec(Q + K^T R K)";

  const Matrix S = sys.weights.Q + K.K.transpose() * sys.weights.R * K.K;
  const Matrix P_lyap = solve_generalized_lyapunov(K, S, sys.model);
  const Matrix P_ode = policy_evaluation_ode(data, K, 100.0);
  if ((P_ode - P_lyap).norm() > 1e-6)
    return "ODE policy evaluation at s_f=100 misses the Lyapunov solution by " +
           std::to_string((P_ode - P_lyap).norm());

  OlsbpiOptions opt;
  opt.iterations = 10;
  opt.s_f = 100.0;
  const OlsbpiResult learned = run_olsbpi(data, sys.k0, opt);
  const PiTrace exact = standard_pi(sys.k0, sys.model, sys.weights, 10, 0.0, false);
  for (size_t i = 0; i < exact.iterations.size(); ++i) {
    if ((learned.gains[i] - exact.iterations[i].gain).norm() > 1e-6)
      return "exact-data gain diverges from standard_pi at iteration " + std::to_string(i + 1);
  }
  return "";
}

std::string criterion5_robustness() {
  const auto sys = testutil::two_state_noisy();

  DisturbanceSpec decaying;
  decaying.mode = DisturbanceSpec::Mode::decaying;
  decaying.magnitude = 1e-2;
  decaying.seed = 5;
  const PiTrace tr = robust_pi(sys.k0, sys.model, sys.weights, decaying, 60);
  if (tr.nonadmissible_at != -1) return "decaying run destabilized";
  if (!(tr.iterations.back().value_error < 1e-6))
    return "decaying disturbance: terminal error " +
           std::to_string(tr.iterations.back().value_error);

  std::vector<double> medians;
  for (double mag : {1e-4, 1e-3, 1e-2}) {
    std::vector<double> finals;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      DisturbanceSpec spec;
      spec.mode = DisturbanceSpec::Mode::constant;
      spec.magnitude = mag;
      spec.seed = seed;
      const PiTrace run = robust_pi(sys.k0, sys.model, sys.weights, spec, 40);
      if (run.nonadmissible_at != -1) continue;
      const double err = run.iterations.back().value_error;
      if (!std::isfinite(err)) return "non-finite terminal error in the sweep";
      finals.push_back(err);
    }
    if (finals.empty()) return "no completed runs at magnitude " + std::to_string(mag);
    medians.push_back(median(finals));
  }
  if (!(medians[0] <= medians[1] && medians[1] <= medians[2]))
    return "median terminal error not monotone: " + std::to_string(medians[0]) + ", " +
           std::to_string(medians[1]) + ", " + std::to_string(medians[2]);
  return "";
}

std::string criterion6_ito_consistency() {
  const auto sys = testutil::two_state_additive();
  Rng rng(1006);
  const Matrix P = testutil::random_symmetric(rng, 2);
  const Vector theta_true = svec(theta_of_p(P, sys.model, sys.weights).M);

  int residual_improved = 0;
  int left_wins = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    SimConfig cfg;
    cfg.dt = 1e-3;
    cfg.t_f = 4000.0;
    cfg.sigma_u = 1.0;
    cfg.seed = 9000 + seed;
    const Trajectory traj = simulate(sys.model, sys.k0, cfg);

    const DataMatrices d4000 = build_data_matrices(traj, sys.weights);
    const DataMatrices d1000 =
        build_data_matrices(testutil::trajectory_prefix(traj, 1000.0), sys.weights);
    const auto residual = [&](const DataMatrices& d) {
      return (d.psi * theta_true - d.zeta * svec(P) - d.xi).norm();
    };
    if (residual(d4000) < residual(d1000)) ++residual_improved;

    const Matrix zeta_trap = testutil::trapezoid_zeta(traj, d4000.t_f);
    const Matrix psi_inv = pinv(d4000.psi);
    const double err_left = (psi_inv * (d4000.zeta * svec(P) + d4000.xi) - theta_true).norm();
    const double err_trap = (psi_inv * (zeta_trap * svec(P) + d4000.xi) - theta_true).norm();
    if (err_left < err_trap) ++left_wins;
  }
  if (residual_improved < 8)
    return "consistency residual improved in only " + std::to_string(residual_improved) +
           "/10 seeds";
  if (left_wins < 8)
    return "left-endpoint beat trapezoid in only " + std::to_string(left_wins) + "/10 seeds";
  return "";
}

std::string criterion7_end_to_end() {
  const auto sys = testutil::two_state_noisy();
  const PiTrace truth = standard_pi(sys.k0, sys.model, sys.weights);
  const double K_norm = truth.iterations.back().gain.norm();
  const double J_opt = truth.iterations.back().cost;

  int good = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    SimConfig cfg;
    cfg.dt = 1e-3;
    cfg.t_f = 2000.0;
    cfg.sigma_u = 1.0;
    cfg.seed = 5000 + seed;
    const Trajectory traj = simulate(sys.model, sys.k0, cfg);
    const DataMatrices data = build_data_matrices(traj, sys.weights);
    if (!(data.cond_psi < 1e8))
      return "cond_psi " + std::to_string(data.cond_psi) + " at seed " + std::to_string(seed);

    OlsbpiOptions opt;
    opt.iterations = 10;
    opt.s_f = 100.0;
    try {
      const OlsbpiResult learned = run_olsbpi(data, sys.k0, opt);
      const auto records = diagnose(learned, sys.model, sys.weights);
      for (const auto& rec : records)
        if (rec.admissible && rec.cost < J_opt - 1e-9)
          return "cost dropped below the optimum at seed " + std::to_string(seed);
      if (records.back().admissible && records.back().gain_error / K_norm < 0.1) ++good;
    } catch (const Error&) {
      // counts as a failed seed
    }
  }
  if (good < 16) return "relative gain error < 0.1 in only " + std::to_string(good) + "/20 seeds";
  return "";
}

std::string criterion8_pendulum() {
  PendulumPreset preset = preset_triple_pendulum(OLSBPI_REPO_DATA_DIR);
  std::vector<double> initial_gain_err, final_gain_err, initial_cost_err, final_cost_err;

  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SimConfig cfg;
    cfg.dt = 1e-3;
    cfg.t_f = 510.0;
    cfg.sigma_u = 100.0;
    cfg.seed = seed;
    const Trajectory traj = simulate(preset.model, preset.initial_gain, cfg);
    const DataMatrices data = build_data_matrices(traj, preset.weights);

    OlsbpiOptions opt;
    opt.iterations = 10;
    opt.s_f = 100.0;
    opt.ode.rank_tol = 1e-13;
    const OlsbpiResult learned = run_olsbpi(data, preset.initial_gain, opt);
    if (learned.gains.size() != 10)
      return "seed " + std::to_string(seed) + " did not complete 10 iterations";

    const auto records = diagnose(learned, preset.model, preset.weights);
    for (const auto& rec : records)
      if (!rec.admissible)
        return "non-admissible learned gain at seed " + std::to_string(seed) + " iteration " +
               std::to_string(rec.index);
    initial_gain_err.push_back(records.front().gain_error);
    final_gain_err.push_back(records.back().gain_error);
    initial_cost_err.push_back(records.front().cost_error);
    final_cost_err.push_back(records.back().cost_error);
  }

  if (!(median(final_gain_err) * 10.0 <= median(initial_gain_err)))
    return "gain error decreased only " +
           std::to_string(median(initial_gain_err) / median(final_gain_err)) + "x (need >= 10x)";
  if (!(median(final_cost_err) * 10.0 <= median(initial_cost_err)))
    return "cost error decreased only " +
           std::to_string(median(initial_cost_err) / median(final_cost_err)) + "x (need >= 10x)";
  return "";
}

std::string criterion9_determinism() {
  const fs::path base = fs::temp_directory_path() / "olsbpi_acceptance_det";
  fs::remove_all(base);
  fs::create_directories(base);

  const auto run_once = [&](const std::string& sub) {
    const fs::path out = base / sub;
    const std::string cmd = std::string("OLSBPI_DATA_DIR='") + OLSBPI_REPO_DATA_DIR + "' '" +
                            OLSBPI_CLI_PATH + "' bench-pendulum --seed 42 --quiet --out '" +
                            out.string() + "'";
    return std::system(cmd.c_str());
  };
  if (run_once("a") != 0) return "first bench-pendulum run failed";
  if (run_once("b") != 0) return "second bench-pendulum run failed";

  const auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  const std::string a = slurp(base / "a" / "report.csv");
  const std::string b = slurp(base / "b" / "report.csv");
  fs::remove_all(base);
  if (a.empty()) return "report.csv missing";
  if (a != b) return "report.csv differs between identical runs";
  return "";
}

}  // namespace

int main(int argc, char** argv) {
  const int only = argc > 1 ? std::atoi(argv[1]) : 0;

  const std::vector<Criterion> criteria = {
      {1, "vectorization algebra identities (200 random instances)", 5.0,
       criterion1_vectorization},
      {2, "scalar closed-form and bisection oracles", 1.0, criterion2_closed_form},
      {3, "policy-iteration monotone convergence on 25 random systems", 30.0,
       criterion3_monotone_pi},
      {4, "exact-data equivalence of the data-driven loop", 10.0, criterion4_exact_data},
      {5, "robustness to decaying and bounded disturbances", 60.0, criterion5_robustness},
      {6, "Ito convention and ergodic consistency", 120.0, criterion6_ito_consistency},
      {7, "end-to-end learning on the 2-state benchmark (20 seeds)", 300.0,
       criterion7_end_to_end},
      {8, "learning benchmark on the bundled 6-state model (5 seeds)", 600.0,
       criterion8_pendulum},
      {9, "byte-identical reports for identical seeds", 0.0, criterion9_determinism},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    if (only != 0 && c.id != only) continue;
    const auto start = std::chrono::steady_clock::now();
    std::string detail;
    try {
      detail = c.run();
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (detail.empty() && c.time_limit_s > 0.0 && secs > c.time_limit_s)
      detail = "exceeded the " + std::to_string(c.time_limit_s) + "s runtime bound";
    if (detail.empty()) {
      std::printf("[PASS] criterion %d: %s (%.1fs)\n", c.id, c.name.c_str(), secs);
    } else {
      std::printf("[FAIL] criterion %d: %s (%.1fs) -- %s\n", c.id, c.name.c_str(), secs,
                  detail.c_str());
      ++failures;
    }
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
