#include "ctdesign/laplace.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "ctdesign/rng.hpp"

namespace ctdesign {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

double mvn_logpdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                  const Eigen::MatrixXd& cov) {
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(cov);
  if (ldlt.info() != Eigen::Success || (ldlt.vectorD().array() <= 0.0).any())
    return kNegInf;
  const Eigen::VectorXd d = x - mean;
  const double quad = d.dot(ldlt.solve(d));
  const double logdet = ldlt.vectorD().array().log().sum();
  return -0.5 * (logdet + quad + x.size() * std::log(2.0 * M_PI));
}

NmResult nelder_mead_maximize(const std::function<double(const Eigen::VectorXd&)>& f,
                              const Eigen::VectorXd& x0, const NmOptions& opts) {
  const int q = static_cast<int>(x0.size());
  Eigen::VectorXd step = opts.step;
  if (step.size() == 0) step = Eigen::VectorXd::Constant(q, 0.1);
  if (step.size() != q) throw std::invalid_argument("step dimension mismatch");

  std::vector<Eigen::VectorXd> xs(q + 1, x0);
  std::vector<double> fs(q + 1);
  for (int i = 1; i <= q; ++i) xs[i][i - 1] += step[i - 1];
  for (int i = 0; i <= q; ++i) fs[i] = f(xs[i]);

  std::vector<int> order(q + 1);
  NmResult result;
  int iter = 0;
  for (; iter < opts.max_iter; ++iter) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return fs[a] > fs[b]; });
    const int best = order[0], worst = order[q];
    const int second_worst = order[q - 1];

    double spread_x = 0.0;
    for (int i = 0; i <= q; ++i)
      spread_x = std::max(spread_x,
                          (xs[i] - xs[best]).cwiseAbs().maxCoeff());
    const double spread_f = fs[best] - fs[worst];
    if (spread_x <= opts.x_tol && spread_f <= opts.f_tol) {
      result.converged = true;
      break;
    }

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(q);
    for (int i = 0; i <= q; ++i)
      if (i != worst) centroid += xs[i];
    centroid /= q;

    const Eigen::VectorXd reflected = centroid + (centroid - xs[worst]);
    const double f_r = f(reflected);
    if (f_r > fs[best]) {
      const Eigen::VectorXd expanded = centroid + 2.0 * (centroid - xs[worst]);
      const double f_e = f(expanded);
      if (f_e > f_r) {
        xs[worst] = expanded;
        fs[worst] = f_e;
      } else {
        xs[worst] = reflected;
        fs[worst] = f_r;
      }
      continue;
    }
    if (f_r > fs[second_worst]) {
      xs[worst] = reflected;
      fs[worst] = f_r;
      continue;
    }
    const bool outside = f_r > fs[worst];
    Eigen::VectorXd contracted;
    if (outside)
      contracted = centroid + 0.5 * (reflected - centroid);
    else
      contracted = centroid - 0.5 * (centroid - xs[worst]);
    const double f_c = f(contracted);
    if (f_c > (outside ? f_r : fs[worst])) {
      xs[worst] = contracted;
      fs[worst] = f_c;
      continue;
    }
    for (int i = 0; i <= q; ++i) {
      if (i == best) continue;
      xs[i] = xs[best] + 0.5 * (xs[i] - xs[best]);
      fs[i] = f(xs[i]);
    }
  }

  int best = 0;
  for (int i = 1; i <= q; ++i)
    if (fs[i] > fs[best]) best = i;
  result.x = xs[best];
  result.f = fs[best];
  result.iterations = iter;
  return result;
}

McSynlikSurface::McSynlikSurface(SummarySimulator sim, Eigen::VectorXd s_obs,
                                 int dim, int n, int n_loc, double perturb_sd,
                                 std::uint64_t seed)
    : sim_(std::move(sim)),
      s_obs_(std::move(s_obs)),
      n_(n),
      n_loc_(n_loc),
      perturb_sd_(perturb_sd),
      crn_seed_(derive_seed(seed, {0x63726eull})),
      curv_seed_(derive_seed(seed, {0x63757276ull})),
      dim_(dim) {
  if (dim_ < 1) throw std::invalid_argument("surface dimension must be positive");
}

double McSynlikSurface::log_density(const Eigen::VectorXd& phi) const {
  return synlik_logpdf(fit_synlik(sim_, phi, n_, crn_seed_), s_obs_);
}

SynlikSurface::Curvature McSynlikSurface::curvature_at(
    const Eigen::VectorXd& phi) const {
  const SynlikFit fit = fit_synlik(sim_, phi, n_, crn_seed_);
  const LocalRegression reg =
      local_jacobian(sim_, phi, n_loc_, perturb_sd_, curv_seed_);
  Curvature c;
  c.hessian = gauss_newton_data_hessian(reg, fit);
  c.r2 = reg.r2;
  return c;
}

AnalyticGaussianSurface::AnalyticGaussianSurface(Eigen::MatrixXd a,
                                                 Eigen::MatrixXd cov,
                                                 Eigen::VectorXd s_obs)
    : a_(std::move(a)), cov_(std::move(cov)), s_obs_(std::move(s_obs)) {
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(cov_);
  data_hessian_ = -a_.transpose() * ldlt.solve(a_);
}

double AnalyticGaussianSurface::log_density(const Eigen::VectorXd& phi) const {
  return mvn_logpdf(s_obs_, a_ * phi, cov_);
}

SynlikSurface::Curvature AnalyticGaussianSurface::curvature_at(
    const Eigen::VectorXd&) const {
  return {data_hessian_, Eigen::VectorXd()};
}

ExactLikelihoodSurface::ExactLikelihoodSurface(ModelSpec model, Trajectory traj,
                                               double fd_step)
    : model_(std::move(model)), traj_(std::move(traj)), fd_step_(fd_step) {}

double ExactLikelihoodSurface::log_density(const Eigen::VectorXd& phi) const {
  return exact_log_likelihood(model_, phi.array().exp(), traj_);
}

SynlikSurface::Curvature ExactLikelihoodSurface::curvature_at(
    const Eigen::VectorXd& phi) const {
  const int q = dim();
  const double h = fd_step_;
  Curvature c;
  c.hessian.resize(q, q);
  const double f0 = log_density(phi);
  for (int i = 0; i < q; ++i) {
    Eigen::VectorXd up = phi, down = phi;
    up[i] += h;
    down[i] -= h;
    c.hessian(i, i) = (log_density(up) - 2.0 * f0 + log_density(down)) / (h * h);
    for (int j = i + 1; j < q; ++j) {
      Eigen::VectorXd pp = phi, pm = phi, mp = phi, mm = phi;
      pp[i] += h; pp[j] += h;
      pm[i] += h; pm[j] -= h;
      mp[i] -= h; mp[j] += h;
      mm[i] -= h; mm[j] -= h;
      const double mixed = (log_density(pp) - log_density(pm) -
                            log_density(mp) + log_density(mm)) /
                           (4.0 * h * h);
      c.hessian(i, j) = mixed;
      c.hessian(j, i) = mixed;
    }
  }
  return c;
}

LaplaceFit laplace_fit(const SynlikSurface& surface, const ParamPrior& prior,
                       const LaplaceOptions& opts) {
  const int q = surface.dim();
  if (q != prior.dim())
    throw std::invalid_argument("surface and prior dimensions differ");
  const auto objective = [&](const Eigen::VectorXd& phi) {
    return surface.log_density(phi) + prior.logpdf_phi(phi);
  };

  NmOptions nm = opts.nm;
  if (nm.step.size() == 0) nm.step = 0.5 * prior.sd;

  const auto attempt = [&](const Eigen::VectorXd& start) {
    const NmResult run = nelder_mead_maximize(objective, start, nm);
    LaplaceFit fit;
    fit.mode = run.x;
    fit.converged = run.converged;
    fit.iterations = run.iterations;
    fit.logpost_at_mode = run.f;
    fit.data_logdensity = run.f - prior.logpdf_phi(run.x);

    const SynlikSurface::Curvature curv = surface.curvature_at(fit.mode);
    fit.r2 = curv.r2;
    Eigen::MatrixXd neg_hess = -curv.hessian;
    neg_hess.diagonal() += prior.sd.array().square().inverse().matrix();

    const Eigen::LDLT<Eigen::MatrixXd> ldlt(neg_hess);
    const bool spd = ldlt.info() == Eigen::Success &&
                     (ldlt.vectorD().array() > 0.0).all();
    if (!spd) {
      fit.cov = Eigen::MatrixXd::Zero(q, q);
      fit.log_evidence = kNegInf;
      fit.pass = false;
      return fit;
    }
    fit.cov = ldlt.solve(Eigen::MatrixXd::Identity(q, q));
    const double logdet_cov = -ldlt.vectorD().array().log().sum();
    fit.log_evidence = 0.5 * q * std::log(2.0 * M_PI) + 0.5 * logdet_cov +
                       fit.logpost_at_mode;
    fit.pass = run.converged;
    if (opts.screen && fit.r2.size() > 0)
      fit.pass = fit.pass && fit.r2.minCoeff() >= r2_threshold(q);
    return fit;
  };

  LaplaceFit fit = attempt(prior.mu);
  if (!fit.pass) {
    LaplaceFit retry = attempt(prior.mu + prior.sd);
    retry.iterations += fit.iterations;
    if (retry.pass || retry.logpost_at_mode > fit.logpost_at_mode) {
      fit = std::move(retry);
    } else {
      fit.iterations = retry.iterations;
    }
  }
  return fit;
}

double laplace_logpdf(const LaplaceFit& fit, const Eigen::VectorXd& phi) {
  return mvn_logpdf(phi, fit.mode, fit.cov);
}

Eigen::VectorXd posterior_model_probs(const Eigen::VectorXd& log_evidences,
                                      const Eigen::VectorXd& model_prior) {
  if (log_evidences.size() != model_prior.size())
    throw std::invalid_argument("evidence/prior size mismatch");
  double best = kNegInf;
  for (Eigen::Index k = 0; k < log_evidences.size(); ++k)
    if (model_prior[k] > 0.0) best = std::max(best, log_evidences[k]);
  if (best == kNegInf)
    throw std::runtime_error("no model has finite evidence");
  Eigen::VectorXd w(log_evidences.size());
  for (Eigen::Index k = 0; k < w.size(); ++k) {
    w[k] = log_evidences[k] == kNegInf
               ? 0.0
               : model_prior[k] * std::exp(log_evidences[k] - best);
  }
  return w / w.sum();
}

LisResult lis_posterior(const SynlikSurface& surface, const ParamPrior& prior,
                        const LaplaceFit& fit, int n_is, double inflation,
                        std::uint64_t seed) {
  const int q = surface.dim();
  if (n_is < q + 2) throw std::invalid_argument("lis needs more points");
  const Eigen::MatrixXd proposal_cov = inflation * fit.cov;
  const Eigen::LLT<Eigen::MatrixXd> llt(proposal_cov);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("importance proposal covariance is not PD");
  const Eigen::MatrixXd chol = llt.matrixL();

  Eigen::MatrixXd points(n_is, q);
  Eigen::VectorXd logw(n_is);
  for (int i = 0; i < n_is; ++i) {
    CounterRng rng(derive_seed(seed, {0x6c6973ull, static_cast<std::uint64_t>(i)}));
    Eigen::VectorXd z(q);
    for (int j = 0; j < q; ++j) z[j] = rng.next_normal();
    const Eigen::VectorXd x = fit.mode + chol * z;
    points.row(i) = x.transpose();
    logw[i] = surface.log_density(x) + prior.logpdf_phi(x) -
              mvn_logpdf(x, fit.mode, proposal_cov);
  }

  const double top = logw.maxCoeff();
  Eigen::VectorXd w = (logw.array() - top).exp();
  w /= w.sum();

  LisResult out;
  out.ess = 1.0 / w.squaredNorm();
  out.mean = points.transpose() * w;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(q, q);
  for (int i = 0; i < n_is; ++i) {
    const Eigen::VectorXd d = points.row(i).transpose() - out.mean;
    cov += w[i] * d * d.transpose();
  }
  out.cov = cov;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(cov);
  if (ldlt.info() != Eigen::Success || (ldlt.vectorD().array() <= 0.0).any())
    throw std::runtime_error("importance covariance collapsed");
  out.logdet_precision = -ldlt.vectorD().array().log().sum();
  return out;
}

}  // namespace ctdesign
