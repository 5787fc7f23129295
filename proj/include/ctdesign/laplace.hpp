#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <memory>

#include "ctdesign/exact.hpp"
#include "ctdesign/sampling.hpp"
#include "ctdesign/synlik.hpp"

namespace ctdesign {

//! Multivariate normal log density; returns -inf when cov is not positive
//! definite.
double mvn_logpdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                  const Eigen::MatrixXd& cov);

struct NmOptions {
  int max_iter = 500;
  double x_tol = 1e-3;
  double f_tol = 1e-3;
  Eigen::VectorXd step;  //!< initial simplex edge per coordinate
};

struct NmResult {
  Eigen::VectorXd x;
  double f = 0.0;
  int iterations = 0;
  bool converged = false;
};

//! Derivative-free simplex maximization (reflection/expansion/contraction/
//! shrink).  Converges when both the vertex spread and the objective
//! spread fall below the tolerances.
NmResult nelder_mead_maximize(const std::function<double(const Eigen::VectorXd&)>& f,
                              const Eigen::VectorXd& x0, const NmOptions& opts);

//! A log-parameter data log-density surface the Laplace machinery can
//! search and differentiate.  Implementations are deterministic.
class SynlikSurface {
 public:
  struct Curvature {
    Eigen::MatrixXd hessian;  //!< data-term Hessian at the point
    Eigen::VectorXd r2;       //!< screening statistics, empty when untestable
  };

  virtual ~SynlikSurface() = default;
  virtual int dim() const = 0;
  virtual double log_density(const Eigen::VectorXd& phi) const = 0;
  virtual Curvature curvature_at(const Eigen::VectorXd& phi) const = 0;
};

//! Synthetic-likelihood surface: Gaussian fits from n simulations with a
//! construction-time seed, so repeat evaluations share the same noise.
class McSynlikSurface final : public SynlikSurface {
 public:
  McSynlikSurface(SummarySimulator sim, Eigen::VectorXd s_obs, int dim, int n,
                  int n_loc, double perturb_sd, std::uint64_t seed);

  int dim() const override { return dim_; }
  double log_density(const Eigen::VectorXd& phi) const override;
  Curvature curvature_at(const Eigen::VectorXd& phi) const override;

 private:
  SummarySimulator sim_;
  Eigen::VectorXd s_obs_;
  int n_, n_loc_;
  double perturb_sd_;
  std::uint64_t crn_seed_, curv_seed_;
  int dim_ = 0;
};

//! Exact linear-Gaussian surface: summaries are N(A phi, cov).  Used as a
//! conjugate surrogate with closed-form posteriors.
class AnalyticGaussianSurface final : public SynlikSurface {
 public:
  AnalyticGaussianSurface(Eigen::MatrixXd a, Eigen::MatrixXd cov,
                          Eigen::VectorXd s_obs);

  int dim() const override { return static_cast<int>(a_.cols()); }
  double log_density(const Eigen::VectorXd& phi) const override;
  Curvature curvature_at(const Eigen::VectorXd& phi) const override;

 private:
  Eigen::MatrixXd a_, cov_;
  Eigen::VectorXd s_obs_;
  Eigen::MatrixXd data_hessian_;
};

//! Exact observed-data likelihood surface for finite-state models, with
//! central finite-difference curvature.
class ExactLikelihoodSurface final : public SynlikSurface {
 public:
  ExactLikelihoodSurface(ModelSpec model, Trajectory traj, double fd_step = 5e-3);

  int dim() const override { return model_.n_params(); }
  double log_density(const Eigen::VectorXd& phi) const override;
  Curvature curvature_at(const Eigen::VectorXd& phi) const override;

 private:
  ModelSpec model_;
  Trajectory traj_;
  double fd_step_;
};

struct LaplaceOptions {
  NmOptions nm;
  bool screen = true;  //!< apply the reverse-regression R^2 gate
};

//! Gaussian posterior approximation at the synthetic (or exact) mode.
struct LaplaceFit {
  Eigen::VectorXd mode;        //!< log-parameter scale
  Eigen::MatrixXd cov;
  double log_evidence = 0.0;
  double logpost_at_mode = 0.0;
  double data_logdensity = 0.0;
  Eigen::VectorXd r2;
  bool pass = false;
  bool converged = false;
  int iterations = 0;
};

//! Mode search from the prior mean (one restart a standard deviation away
//! if the first run fails to converge), curvature at the mode, and the
//! Laplace evidence (q/2) log 2 pi + log |cov|/2 + log posterior(mode).
LaplaceFit laplace_fit(const SynlikSurface& surface, const ParamPrior& prior,
                       const LaplaceOptions& opts);

//! Log density of the fitted Gaussian posterior.
double laplace_logpdf(const LaplaceFit& fit, const Eigen::VectorXd& phi);

//! Posterior model probabilities from per-model log evidences; tolerates
//! -inf entries.
Eigen::VectorXd posterior_model_probs(const Eigen::VectorXd& log_evidences,
                                      const Eigen::VectorXd& model_prior);

//! Self-normalized importance correction of a Laplace fit, proposing from
//! the fit with inflated covariance.
struct LisResult {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  double ess = 0.0;                //!< effective sample size
  double logdet_precision = 0.0;   //!< -log det of the weighted covariance
};

LisResult lis_posterior(const SynlikSurface& surface, const ParamPrior& prior,
                        const LaplaceFit& fit, int n_is, double inflation,
                        std::uint64_t seed);

}  // namespace ctdesign
