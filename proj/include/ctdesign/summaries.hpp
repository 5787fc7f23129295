#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "ctdesign/kinetics.hpp"
#include "ctdesign/sampling.hpp"

namespace ctdesign {

enum class Stat { Mean, Median, Variance, LogVariance, Max };

std::string stat_name(Stat s);
Stat stat_from_name(const std::string& name);

//! The statistics applied to each observed species, species-major: the
//! summary vector is [species0 stats..., species1 stats..., ...].
struct SummaryScheme {
  std::vector<Stat> stats;

  int dim(int n_observed) const {
    return n_observed * static_cast<int>(stats.size());
  }
};

//! Scheme used in the worked studies: count models use (mean, variance),
//! epidemic compartment models add the median, the predator-prey model
//! uses (mean, log variance, max).
SummaryScheme default_scheme(const std::string& model_name);

//! Reduce a trajectory to its summary vector.  Variances use the n-1
//! denominator (zero for singleton series); log variance is
//! log(variance + 0.5) so constant series stay finite; medians of even
//! length series take the midpoint.
Eigen::VectorXd summarize(const Trajectory& traj, const SummaryScheme& scheme);

//! Rank-correlation screen of the summaries against the parameters under
//! the prior predictive.
struct InformativenessReport {
  Eigen::MatrixXd spearman_abs;      //!< n_params x summary_dim, |rho|
  Eigen::VectorXd best_per_param;    //!< max over summaries per parameter
  std::vector<int> weak_params;      //!< parameters with no summary above the threshold
  double threshold = 0.0;

  bool pass() const { return weak_params.empty(); }
};

InformativenessReport informativeness(const ModelSpec& model,
                                      const ParamPrior& prior,
                                      const Eigen::VectorXd& times,
                                      const SummaryScheme& scheme, int q,
                                      double threshold, const SimOptions& sim,
                                      std::uint64_t seed);

}  // namespace ctdesign
