#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "ctdesign/laplace.hpp"
#include "ctdesign/sampling.hpp"
#include "ctdesign/summaries.hpp"

namespace ctdesign {

enum class UtilityKind { Sigp, Nsel, Sigm, Sigt };

const char* utility_name(UtilityKind kind);
UtilityKind utility_from_name(const std::string& name);

//! Information gain on the parameters: approximate posterior log density
//! minus prior log density at the data-generating log parameters.
double u_sigp(const ParamPrior& prior, const LaplaceFit& fit,
              const Eigen::VectorXd& phi_true);

//! Negative squared error of the posterior mode on the log scale.
double u_nsel(const LaplaceFit& fit, const Eigen::VectorXd& phi_true);

//! Information gain on the model indicator at the data-generating model.
//! The posterior probability is floored at 1e-300 before taking logs.
double u_sigm(const Eigen::VectorXd& model_posterior,
              const Eigen::VectorXd& model_prior, int m_true);

//! Joint gain: parameter and model components of one evaluation.
double u_sigt(double sigp_value, double sigm_value);

//! One simulated observation.  Surfaces are fit to the summary vector; the
//! trajectory is kept for exact-likelihood oracles and diagnostics.
struct Dataset {
  Eigen::VectorXd s_obs;
  std::shared_ptr<const Trajectory> traj;
};

//! Callbacks tying the estimator to a model suite.  `observe` draws a
//! dataset from model m at log parameters phi; `make_surface` builds the
//! data log-density surface under candidate model k for that dataset.
//! Both must be pure in their seed arguments.
//!
//! Models whose per-observation conditional quantile functions are
//! computable can set `observe_quantile` and `data_dims` (one uniform per
//! observation) instead; the estimator then extends its point set to
//! cover the observation noise, so low-discrepancy batches stratify the
//! data alongside the parameters.  When unset, observation noise always
//! comes from the seeded counter stream.
struct UtilityProblem {
  Eigen::VectorXd model_prior;
  std::vector<ParamPrior> priors;
  std::function<Dataset(int m, const Eigen::VectorXd& phi, std::uint64_t seed)>
      observe;
  std::function<std::unique_ptr<SynlikSurface>(int k, const Dataset& data,
                                               std::uint64_t seed)>
      make_surface;
  int data_dims = 0;
  std::function<Dataset(int m, const Eigen::VectorXd& phi,
                        const Eigen::VectorXd& u, std::uint64_t seed)>
      observe_quantile;

  int n_models() const { return static_cast<int>(priors.size()); }
};

struct SynlikSettings {
  int n = 500;
  int n_loc = 200;
  //! Log-scale spread of the local regression cloud.  Matches the order of
  //! the default prior sds; much smaller values drown the regression signal
  //! in simulation noise and fail the R^2 screen even at informative designs.
  double perturb_sd = 0.3;
};

//! Problem over kinetic models observed at the given design times.  All
//! models share one summary scheme so their evidences compare like for
//! like; the models must therefore observe the same number of species.
UtilityProblem make_ctmc_problem(std::vector<ModelSpec> models,
                                 std::vector<ParamPrior> priors,
                                 Eigen::VectorXd model_prior,
                                 const Eigen::VectorXd& times,
                                 const SummaryScheme& scheme,
                                 const SynlikSettings& synlik = {},
                                 const SimOptions& sim = {});

struct DrawRecord {
  int model = 0;
  int draw = 0;
  double value = 0.0;  //!< utility after substitution
  bool substituted = false;
};

struct UtilityEstimate {
  double value = 0.0;
  double se = 0.0;
  int q = 0;
  int n_substituted = 0;
  Sampler method = Sampler::Rqmc;
  Eigen::VectorXd per_model;        //!< per-model batch means
  std::vector<DrawRecord> records;  //!< per-draw audit trail, draw order
};

struct EuOptions {
  int q_draws = 1000;
  Sampler method = Sampler::Rqmc;
  LaplaceOptions laplace;
  int threads = 1;
};

//! Expected utility of a design by Monte Carlo or randomized quasi-Monte
//! Carlo over the prior predictive.  Evaluations whose fits fail screening
//! are replaced by the minimum successfully evaluated utility in the call;
//! throws std::runtime_error when every evaluation fails.
UtilityEstimate expected_utility(const UtilityProblem& problem,
                                 UtilityKind kind, const EuOptions& opts,
                                 std::uint64_t seed);

}  // namespace ctdesign
