#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ctdesign/kinetics.hpp"
#include "ctdesign/rng.hpp"

using namespace ctdesign;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

}  // namespace

TEST_CASE("design validation enforces window, order and spacing") {
  CHECK_NOTHROW(validate_design(vec({0.25, 1.0, 2.0}), 0.25, 30.0, 0.25));
  CHECK_THROWS_AS(validate_design(vec({1.0, 0.5}), 0.0, 30.0, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(validate_design(vec({1.0, 1.0}), 0.0, 30.0, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(validate_design(vec({0.1, 1.0}), 0.25, 30.0, 0.25),
                  std::invalid_argument);
  CHECK_THROWS_AS(validate_design(vec({1.0, 31.0}), 0.25, 30.0, 0.25),
                  std::invalid_argument);
  CHECK_THROWS_AS(validate_design(vec({1.0, 1.1}), 0.25, 30.0, 0.25),
                  std::invalid_argument);
  CHECK_THROWS_AS(validate_design(Eigen::VectorXd(), 0.0, 1.0, 0.0),
                  std::invalid_argument);
}

TEST_CASE("ssa is deterministic given the seed") {
  const ModelSpec m = si_model();
  const Eigen::VectorXd theta = vec({std::exp(-1.1), std::exp(-4.5)});
  const Eigen::VectorXd times = vec({0.5, 1.0, 2.0, 4.0, 8.0});
  const Trajectory a = simulate_ssa(m, theta, times, 77);
  const Trajectory b = simulate_ssa(m, theta, times, 77);
  const Trajectory c = simulate_ssa(m, theta, times, 78);
  CHECK(a.obs == b.obs);
  CHECK(a.obs != c.obs);
}

TEST_CASE("death model ssa mean follows the analytic infection curve") {
  // E[I(t)] = N (1 - exp(-beta1 t)); at beta1 = exp(-0.48), t = 1 this is
  // 23.070034825893938 with per-draw sd 3.524982934502628.
  const ModelSpec m = death_model();
  const double beta1 = std::exp(-0.48);
  const Eigen::VectorXd theta = vec({beta1});
  const Eigen::VectorXd times = vec({1.0, 3.0});
  const int reps = 20000;
  double sum1 = 0.0, sum3 = 0.0;
  for (int r = 0; r < reps; ++r) {
    const Trajectory t = simulate_ssa(m, theta, times, derive_seed(11, {(std::uint64_t)r}));
    sum1 += t.obs(0, 0);
    sum3 += t.obs(1, 0);
  }
  const double mean1 = 50.0 * (1.0 - std::exp(-beta1));
  const double mean3 = 50.0 * (1.0 - std::exp(-3.0 * beta1));
  CHECK(mean1 == doctest::Approx(23.070034825893938).epsilon(1e-12));
  const double se1 = 3.524982934502628 / std::sqrt(double(reps));
  CHECK(std::abs(sum1 / reps - mean1) < 5.0 * se1);
  CHECK(std::abs(sum3 / reps - mean3) < 5.0 * 2.8 / std::sqrt(double(reps)));
}

TEST_CASE("death and si paths are monotone and bounded") {
  const Eigen::VectorXd times = vec({0.5, 1.5, 3.0, 6.0, 12.0});
  for (const char* name : {"death", "si"}) {
    const ModelSpec m = builtin_model(name);
    const Eigen::VectorXd theta =
        m.n_params() == 1 ? vec({0.6}) : vec({0.33, 0.011});
    for (int r = 0; r < 1000; ++r) {
      const Trajectory t = simulate_ssa(m, theta, times, derive_seed(3, {(std::uint64_t)r}));
      int prev = 0;
      for (Eigen::Index k = 0; k < times.size(); ++k) {
        const int i = t.obs(k, 0);
        CHECK(i >= prev);
        CHECK(i <= 50);
        prev = i;
      }
    }
  }
}

TEST_CASE("death model absorbs at full infection") {
  const ModelSpec m = death_model();
  const Eigen::VectorXd times = vec({200.0, 201.0});
  const Trajectory t = simulate_ssa(m, vec({0.6}), times, 9);
  CHECK(t.obs(0, 0) == 50);
  CHECK(t.obs(1, 0) == 50);
}

TEST_CASE("sir recovered count never decreases and population is conserved") {
  const ModelSpec m = sir_model();
  const Eigen::VectorXd theta = vec({std::exp(-0.09), std::exp(-1.63)});
  const Eigen::VectorXd times = vec({1.0, 2.0, 4.0, 8.0, 16.0, 30.0});
  for (int r = 0; r < 500; ++r) {
    const Trajectory t = simulate_ssa(m, theta, times, derive_seed(21, {(std::uint64_t)r}));
    int prev_r = 0;
    for (Eigen::Index k = 0; k < times.size(); ++k) {
      const int i = t.obs(k, 0), rec = t.obs(k, 1);
      CHECK(i >= 0);
      CHECK(rec >= prev_r);
      CHECK(i + rec <= 50);
      prev_r = rec;
    }
  }
}

TEST_CASE("seir records infected and recovered only") {
  const ModelSpec m = seir_model();
  CHECK(m.n_observed() == 2);
  CHECK(m.species[m.observed[0]] == "I");
  CHECK(m.species[m.observed[1]] == "R");
  const Eigen::VectorXd theta =
      vec({std::exp(0.44), std::exp(-0.69), std::exp(-1.31)});
  const Trajectory t = simulate_ssa(m, theta, vec({2.0, 10.0, 30.0}), 4);
  for (Eigen::Index k = 0; k < 3; ++k) {
    CHECK(t.obs(k, 0) + t.obs(k, 1) <= 50);
    CHECK(t.obs(k, 0) >= 0);
  }
}

TEST_CASE("tau leap single step increment is clamped poisson") {
  // One step of length tau from I = 0 fires Poisson(beta1 N tau) infections,
  // capped at N.
  const ModelSpec m = death_model();
  const double beta1 = std::exp(-0.48), tau = 0.05;
  const double lambda = beta1 * 50.0 * tau;
  const Eigen::VectorXd times = vec({tau});
  const int reps = 40000;
  double sum = 0.0, sumsq = 0.0;
  for (int r = 0; r < reps; ++r) {
    const Trajectory t =
        simulate_tau_leap(m, vec({beta1}), times, tau, derive_seed(13, {(std::uint64_t)r}));
    const double k = t.obs(0, 0);
    REQUIRE(k <= 50);
    sum += k;
    sumsq += k * k;
  }
  const double mean = sum / reps, var = sumsq / reps - mean * mean;
  CHECK(std::abs(mean - lambda) < 5.0 * std::sqrt(lambda / reps));
  CHECK(var == doctest::Approx(lambda).epsilon(0.05));
}

TEST_CASE("tau leap rejects a tau larger than the smallest gap") {
  const ModelSpec m = death_model();
  CHECK_THROWS_AS(simulate_tau_leap(m, vec({0.6}), vec({1.0, 1.2}), 0.5, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(simulate_tau_leap(m, vec({0.6}), vec({1.0}), 0.0, 1),
                  std::invalid_argument);
}

TEST_CASE("tau leap agrees with ssa on si means") {
  const ModelSpec m = si_model();
  const Eigen::VectorXd theta = vec({std::exp(-1.1), std::exp(-4.5)});
  const Eigen::VectorXd times = vec({1.0, 3.0, 6.0, 10.0});
  const int reps = 8000;
  Eigen::VectorXd ssa_mean = Eigen::VectorXd::Zero(4), tau_mean = ssa_mean,
                  ssa_sq = ssa_mean, tau_sq = ssa_mean;
  for (int r = 0; r < reps; ++r) {
    const Trajectory a = simulate_ssa(m, theta, times, derive_seed(31, {(std::uint64_t)r}));
    const Trajectory b =
        simulate_tau_leap(m, theta, times, 0.05, derive_seed(37, {(std::uint64_t)r}));
    for (Eigen::Index k = 0; k < 4; ++k) {
      ssa_mean[k] += a.obs(k, 0);
      tau_mean[k] += b.obs(k, 0);
      ssa_sq[k] += a.obs(k, 0) * a.obs(k, 0);
      tau_sq[k] += b.obs(k, 0) * b.obs(k, 0);
    }
  }
  for (Eigen::Index k = 0; k < 4; ++k) {
    const double ma = ssa_mean[k] / reps, mb = tau_mean[k] / reps;
    const double va = ssa_sq[k] / reps - ma * ma, vb = tau_sq[k] / reps - mb * mb;
    const double se = std::sqrt((va + vb) / reps);
    CHECK(std::abs(ma - mb) < 4.0 * se + 0.05 * std::abs(ma));
  }
}

TEST_CASE("lv tau leap stays finite and nonnegative around carrying capacity") {
  const ModelSpec m = lv_model();
  const Eigen::VectorXd theta =
      vec({std::exp(6.87), std::exp(0.01), std::exp(-5.03), std::exp(-0.69)});
  Eigen::VectorXd times(10);
  for (int k = 0; k < 10; ++k) times[k] = 1.2 * (k + 1);
  int max_prey = 0;
  for (int r = 0; r < 200; ++r) {
    const Trajectory t =
        simulate_tau_leap(m, theta, times, 0.05, derive_seed(55, {(std::uint64_t)r}));
    for (Eigen::Index k = 0; k < times.size(); ++k) {
      CHECK(t.obs(k, 0) >= 0);
      CHECK(t.obs(k, 1) >= 0);
      max_prey = std::max(max_prey, t.obs(k, 0));
    }
  }
  // Logistic prey growth keeps the population near K ~ 963.
  CHECK(max_prey < 3000);
  CHECK(max_prey > 100);
}

TEST_CASE("simulate dispatches on the backend options") {
  const ModelSpec m = death_model();
  SimOptions ssa_opts, tau_opts;
  tau_opts.use_tau_leap = true;
  tau_opts.tau = 0.05;
  const Eigen::VectorXd times = vec({1.0, 2.0});
  const Trajectory a = simulate(m, vec({0.6}), times, ssa_opts, 5);
  const Trajectory b = simulate_ssa(m, vec({0.6}), times, 5);
  CHECK(a.obs == b.obs);
  const Trajectory c = simulate(m, vec({0.6}), times, tau_opts, 5);
  const Trajectory d = simulate_tau_leap(m, vec({0.6}), times, 0.05, 5);
  CHECK(c.obs == d.obs);
}
