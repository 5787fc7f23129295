#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "ctdesign/kinetics.hpp"

namespace ctdesign {

namespace detail {

struct SobolRow {
  int degree;
  int poly;           //!< inner coefficients, low bit = coeff of x^(degree-1)
  std::uint32_t m[9];
};
extern const SobolRow kSobolRows[63];

}  // namespace detail

enum class Sampler { Mc, Rqmc };

//! Unscrambled Sobol points in natural index order, dimension 0 being the
//! van der Corput sequence.  Supports up to 64 dimensions with 32 output
//! bits per coordinate; values are (z + 0.5) / 2^32 so they never touch
//! the interval endpoints.
Eigen::MatrixXd sobol_points(int dim, int n);

//! Sobol points with per-dimension Owen (nested uniform) scrambling driven
//! by a hash of the bit prefix.  Deterministic given the seed.
Eigen::MatrixXd sobol_owen(int dim, int n, std::uint64_t seed);

//! Plain pseudo-random uniforms with the same shape contract; row j depends
//! only on (seed, j).
Eigen::MatrixXd mc_uniforms(int dim, int n, std::uint64_t seed);

//! Uniform batch dispatcher for the two estimator flavours.
Eigen::MatrixXd sample_batch(Sampler method, int dim, int n, std::uint64_t seed);

//! Independent log-normal priors: log theta_j ~ N(mu_j, sd_j^2).
struct ParamPrior {
  Eigen::VectorXd mu;  //!< log-scale means
  Eigen::VectorXd sd;  //!< log-scale standard deviations

  int dim() const { return static_cast<int>(mu.size()); }
  //! Map a uniform vector through the componentwise quantile transform.
  Eigen::VectorXd sample_phi(const Eigen::VectorXd& u) const;
  Eigen::VectorXd sample_theta(const Eigen::VectorXd& u) const;
  double logpdf_phi(const Eigen::VectorXd& phi) const;
};

//! Default priors matching the built-in models.
ParamPrior default_prior(const std::string& model_name);

//! Draw Q parameter vectors from the prior and one trajectory each.
std::vector<Trajectory> prior_predictive(const ModelSpec& model,
                                         const ParamPrior& prior,
                                         const Eigen::VectorXd& times, int q,
                                         Sampler method, const SimOptions& sim,
                                         std::uint64_t seed);

}  // namespace ctdesign
