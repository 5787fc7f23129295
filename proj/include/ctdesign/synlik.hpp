#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>

#include "ctdesign/kinetics.hpp"
#include "ctdesign/sampling.hpp"
#include "ctdesign/summaries.hpp"

namespace ctdesign {

//! Draw one summary vector at log-parameters phi.  Implementations must be
//! pure in (phi, seed) so fixing the seed gives common random numbers
//! across phi.
using SummarySimulator =
    std::function<Eigen::VectorXd(const Eigen::VectorXd& phi, std::uint64_t seed)>;

//! Simulator backed by a kinetic model: simulate a trajectory at
//! theta = exp(phi) and summarize it.
SummarySimulator make_summary_simulator(const ModelSpec& model,
                                        const Eigen::VectorXd& times,
                                        const SummaryScheme& scheme,
                                        const SimOptions& sim);

//! Moment estimates of the summary distribution at one parameter point.
struct SynlikFit {
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma;  //!< sample covariance plus stabilizing ridge
  double ridge = 0.0;
  int n = 0;
};

//! Estimate (mu, sigma) from n simulated summaries.  Simulation j uses a
//! seed derived from (seed, j), so the same seed reuses the same underlying
//! randomness at every phi.
SynlikFit fit_synlik(const SummarySimulator& sim, const Eigen::VectorXd& phi,
                     int n, std::uint64_t seed);

//! Gaussian log density of the observed summary under the fit.
double synlik_logpdf(const SynlikFit& fit, const Eigen::VectorXd& s_obs);

//! Local linear response of the summaries to the log-parameters, estimated
//! from simulations at randomly perturbed phi.
struct LocalRegression {
  Eigen::MatrixXd jacobian;  //!< d mean(summary) / d phi, dim_s x q
  Eigen::VectorXd r2;        //!< reverse-regression R^2 per parameter
};

LocalRegression local_jacobian(const SummarySimulator& sim,
                               const Eigen::VectorXd& phi, int n_loc,
                               double perturb_sd, std::uint64_t seed);

//! Gauss-Newton data-term curvature -J' sigma^{-1} J.
Eigen::MatrixXd gauss_newton_data_hessian(const LocalRegression& reg,
                                          const SynlikFit& at_mode);

//! Curvature of the synthetic log posterior at the mode: the data term is
//! the Gauss-Newton form -J' sigma^{-1} J and the prior contributes
//! -diag(1/sd^2).
Eigen::MatrixXd gauss_newton_hessian(const LocalRegression& reg,
                                     const SynlikFit& at_mode,
                                     const ParamPrior& prior);

//! Minimum acceptable reverse-regression R^2: single-parameter models must
//! explain most of the perturbation, larger models only need a weak signal
//! per parameter.
double r2_threshold(int n_params);

}  // namespace ctdesign
