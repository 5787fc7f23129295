#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "ctdesign/laplace.hpp"
#include "ctdesign/rng.hpp"

using namespace ctdesign;

namespace {

// Conjugate bench: prior N(mu0, D0), data s | phi ~ N(A phi, Sigma).
struct Conjugate {
  Eigen::MatrixXd a{2, 2};
  Eigen::MatrixXd sigma{2, 2};
  ParamPrior prior;
  Eigen::VectorXd s_obs{2};

  Conjugate() {
    a << 1.0, 0.4, -0.3, 1.1;
    sigma << 0.09, 0.02, 0.02, 0.04;
    prior.mu.resize(2);
    prior.sd.resize(2);
    prior.mu << 0.2, -0.3;
    prior.sd << 0.5, 0.8;
    s_obs << 0.5, -0.2;
  }

  Eigen::MatrixXd d0() const {
    return prior.sd.array().square().matrix().asDiagonal();
  }
  Eigen::MatrixXd posterior_precision() const {
    return a.transpose() * sigma.inverse() * a + d0().inverse();
  }
  Eigen::MatrixXd posterior_cov() const {
    return posterior_precision().inverse();
  }
  Eigen::VectorXd posterior_mean() const {
    return posterior_cov() * (a.transpose() * sigma.inverse() * s_obs +
                              d0().inverse() * prior.mu);
  }
  double log_evidence() const {
    const Eigen::MatrixXd marginal = sigma + a * d0() * a.transpose();
    return mvn_logpdf(s_obs, a * prior.mu, marginal);
  }
  AnalyticGaussianSurface surface() const {
    return AnalyticGaussianSurface(a, sigma, s_obs);
  }
};

LaplaceOptions tight_options() {
  LaplaceOptions opts;
  opts.nm.x_tol = 1e-7;
  opts.nm.f_tol = 1e-12;
  opts.nm.max_iter = 2000;
  return opts;
}

}  // namespace

TEST_CASE("mvn log density matches hand values") {
  Eigen::VectorXd x(1), m(1);
  Eigen::MatrixXd c(1, 1);
  x << 0.0;
  m << 0.0;
  c << 1.0;
  CHECK(mvn_logpdf(x, m, c) == doctest::Approx(-0.9189385332046727).epsilon(1e-12));
  c << -1.0;
  CHECK(mvn_logpdf(x, m, c) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("nelder mead maximizes a quadratic") {
  const auto f = [](const Eigen::VectorXd& x) {
    return -(x[0] - 1.0) * (x[0] - 1.0) - 2.0 * (x[1] - 2.0) * (x[1] - 2.0);
  };
  NmOptions opts;
  opts.x_tol = 1e-6;
  opts.f_tol = 1e-10;
  opts.max_iter = 1000;
  Eigen::VectorXd x0(2);
  x0 << -3.0, 5.0;
  const NmResult r = nelder_mead_maximize(f, x0, opts);
  CHECK(r.converged);
  CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(r.x[1] == doctest::Approx(2.0).epsilon(1e-4));
  CHECK(r.f == doctest::Approx(0.0).epsilon(1e-7));
}

TEST_CASE("nelder mead climbs the rosenbrock valley") {
  const auto f = [](const Eigen::VectorXd& x) {
    const double a = 1.0 - x[0];
    const double b = x[1] - x[0] * x[0];
    return -(a * a + 100.0 * b * b);
  };
  NmOptions opts;
  opts.x_tol = 1e-8;
  opts.f_tol = 1e-12;
  opts.max_iter = 5000;
  Eigen::VectorXd x0(2);
  x0 << -1.2, 1.0;
  const NmResult r = nelder_mead_maximize(f, x0, opts);
  CHECK(r.converged);
  CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(r.x[1] == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("nelder mead terminates on flat objectives") {
  const auto f = [](const Eigen::VectorXd&) { return 3.5; };
  NmOptions opts;
  Eigen::VectorXd x0(3);
  x0 << 0.0, 1.0, -1.0;
  const NmResult r = nelder_mead_maximize(f, x0, opts);
  CHECK(r.converged);
  CHECK(r.f == doctest::Approx(3.5));
  CHECK(r.iterations < 100);
}

TEST_CASE("laplace fit is exact on the conjugate surface") {
  const Conjugate bench;
  const AnalyticGaussianSurface surface = bench.surface();
  const LaplaceFit fit = laplace_fit(surface, bench.prior, tight_options());

  REQUIRE(fit.pass);
  CHECK(fit.converged);
  const Eigen::VectorXd mean = bench.posterior_mean();
  const Eigen::MatrixXd cov = bench.posterior_cov();
  CHECK((fit.mode - mean).norm() < 1e-3 * mean.norm());
  CHECK((fit.cov - cov).norm() < 1e-3 * cov.norm());
  CHECK(fit.log_evidence ==
        doctest::Approx(bench.log_evidence()).epsilon(1e-6));
}

TEST_CASE("laplace evidence agrees with direct quadrature") {
  const Conjugate bench;
  const AnalyticGaussianSurface surface = bench.surface();
  const LaplaceFit fit = laplace_fit(surface, bench.prior, tight_options());

  const Eigen::VectorXd mean = bench.posterior_mean();
  const Eigen::VectorXd sd = bench.posterior_cov().diagonal().cwiseSqrt();
  const int grid = 501;
  const double span = 8.0;
  const double hx = 2.0 * span * sd[0] / (grid - 1);
  const double hy = 2.0 * span * sd[1] / (grid - 1);
  double log_shift = fit.logpost_at_mode;
  double total = 0.0;
  Eigen::VectorXd phi(2);
  for (int i = 0; i < grid; ++i) {
    phi[0] = mean[0] - span * sd[0] + i * hx;
    for (int j = 0; j < grid; ++j) {
      phi[1] = mean[1] - span * sd[1] + j * hy;
      const double lp =
          surface.log_density(phi) + bench.prior.logpdf_phi(phi);
      const double wx = (i == 0 || i == grid - 1) ? 0.5 : 1.0;
      const double wy = (j == 0 || j == grid - 1) ? 0.5 : 1.0;
      total += wx * wy * std::exp(lp - log_shift);
    }
  }
  const double quadrature = std::log(total) + log_shift + std::log(hx * hy);
  CHECK(fit.log_evidence == doctest::Approx(quadrature).epsilon(1e-5));
  CHECK(bench.log_evidence() == doctest::Approx(quadrature).epsilon(1e-5));
}

TEST_CASE("laplace fit on a simulated surface approaches the conjugate answer") {
  const Conjugate bench;
  const Eigen::MatrixXd chol =
      Eigen::LLT<Eigen::MatrixXd>(bench.sigma).matrixL();
  const Eigen::MatrixXd a = bench.a;
  SummarySimulator sim = [a, chol](const Eigen::VectorXd& phi,
                                   std::uint64_t seed) {
    CounterRng rng(seed);
    Eigen::VectorXd z(2);
    z << rng.next_normal(), rng.next_normal();
    return Eigen::VectorXd(a * phi + chol * z);
  };
  const McSynlikSurface surface(sim, bench.s_obs, 2, 3000, 1500, 0.1, 17);
  LaplaceOptions opts;
  opts.nm.x_tol = 1e-4;
  opts.nm.max_iter = 600;
  const LaplaceFit fit = laplace_fit(surface, bench.prior, opts);

  REQUIRE(fit.pass);
  CHECK((fit.mode - bench.posterior_mean()).cwiseAbs().maxCoeff() < 0.02);
  CHECK((fit.cov - bench.posterior_cov()).norm() <
        0.2 * bench.posterior_cov().norm());
  CHECK(std::abs(fit.log_evidence - bench.log_evidence()) < 0.1);
  CHECK(fit.r2.minCoeff() > 0.1);
}

TEST_CASE("non positive definite curvature fails the fit") {
  class Saddle final : public SynlikSurface {
   public:
    int dim() const override { return 2; }
    double log_density(const Eigen::VectorXd& phi) const override {
      return -0.5 * phi.squaredNorm();
    }
    Curvature curvature_at(const Eigen::VectorXd&) const override {
      Eigen::MatrixXd h = Eigen::MatrixXd::Identity(2, 2);
      h(0, 0) = 25.0;  // positive curvature overwhelms the prior
      return {h, Eigen::VectorXd()};
    }
  };
  ParamPrior prior;
  prior.mu = Eigen::VectorXd::Zero(2);
  prior.sd = Eigen::VectorXd::Constant(2, 1.0);
  const LaplaceFit fit = laplace_fit(Saddle(), prior, {});
  CHECK_FALSE(fit.pass);
  CHECK(fit.log_evidence == -std::numeric_limits<double>::infinity());
}

TEST_CASE("screening failure marks the fit unusable but keeps the numbers") {
  // second parameter has no effect on the summaries
  Eigen::MatrixXd a(2, 2);
  a << 1.0, 0.0, -0.3, 0.0;
  Eigen::MatrixXd sigma(2, 2);
  sigma << 9e-4, 2e-4, 2e-4, 4e-4;
  const Eigen::MatrixXd chol = Eigen::LLT<Eigen::MatrixXd>(sigma).matrixL();
  SummarySimulator sim = [a, chol](const Eigen::VectorXd& phi,
                                   std::uint64_t seed) {
    CounterRng rng(seed);
    Eigen::VectorXd z(2);
    z << rng.next_normal(), rng.next_normal();
    return Eigen::VectorXd(a * phi + chol * z);
  };
  ParamPrior prior;
  prior.mu = Eigen::VectorXd::Zero(2);
  prior.sd = Eigen::VectorXd::Constant(2, 0.5);
  Eigen::VectorXd s_obs(2);
  s_obs << 0.1, -0.05;
  const McSynlikSurface surface(sim, s_obs, 2, 400, 400, 0.1, 3);
  const LaplaceFit fit = laplace_fit(surface, prior, {});
  CHECK_FALSE(fit.pass);
  CHECK(fit.r2[1] < 0.1);
  CHECK(std::isfinite(fit.log_evidence));

  LaplaceOptions no_screen;
  no_screen.screen = false;
  CHECK(laplace_fit(surface, prior, no_screen).pass);
}

TEST_CASE("posterior model probabilities") {
  Eigen::VectorXd le(2), uniform(2);
  le << 0.0, -std::log(3.0);
  uniform << 0.5, 0.5;
  const Eigen::VectorXd p = posterior_model_probs(le, uniform);
  CHECK(p[0] == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(p[1] == doctest::Approx(0.25).epsilon(1e-12));

  // prior weighting and normalization with -inf entries
  Eigen::VectorXd le2(3), prior2(3);
  le2 << -1000.0, -1000.0, -std::numeric_limits<double>::infinity();
  prior2 << 0.9, 0.05, 0.05;
  const Eigen::VectorXd p2 = posterior_model_probs(le2, prior2);
  CHECK(p2.sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p2[0] == doctest::Approx(0.9 / 0.95).epsilon(1e-9));
  CHECK(p2[2] == doctest::Approx(0.0));

  Eigen::VectorXd all_bad(2);
  all_bad << -std::numeric_limits<double>::infinity(),
      -std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(posterior_model_probs(all_bad, uniform), std::runtime_error);
}

TEST_CASE("importance correction recovers the conjugate posterior") {
  const Conjugate bench;
  const AnalyticGaussianSurface surface = bench.surface();
  const LaplaceFit fit = laplace_fit(surface, bench.prior, tight_options());
  const LisResult lis = lis_posterior(surface, bench.prior, fit, 4000, 1.2, 5);

  const Eigen::VectorXd mean = bench.posterior_mean();
  const Eigen::MatrixXd cov = bench.posterior_cov();
  CHECK(lis.ess > 2000.0);
  CHECK((lis.mean - mean).cwiseAbs().maxCoeff() < 0.02);
  CHECK((lis.cov - cov).norm() < 0.1 * cov.norm());
  const double logdet_true = -std::log(cov.determinant());
  CHECK(lis.logdet_precision == doctest::Approx(logdet_true).epsilon(0.05));

  // a wildly inflated proposal wastes samples
  const LisResult wide = lis_posterior(surface, bench.prior, fit, 4000, 5.0, 5);
  CHECK(wide.ess < lis.ess);

  // deterministic given the seed
  const LisResult again = lis_posterior(surface, bench.prior, fit, 4000, 1.2, 5);
  CHECK(again.mean == lis.mean);
  CHECK(again.ess == lis.ess);
}
