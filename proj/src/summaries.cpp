#include "ctdesign/summaries.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ctdesign/rng.hpp"
#include "ctdesign/stats.hpp"

namespace ctdesign {

std::string stat_name(Stat s) {
  switch (s) {
    case Stat::Mean: return "mean";
    case Stat::Median: return "median";
    case Stat::Variance: return "variance";
    case Stat::LogVariance: return "log_variance";
    case Stat::Max: return "max";
  }
  throw std::logic_error("unreachable");
}

Stat stat_from_name(const std::string& name) {
  for (Stat s : {Stat::Mean, Stat::Median, Stat::Variance, Stat::LogVariance,
                 Stat::Max})
    if (stat_name(s) == name) return s;
  throw std::invalid_argument("unknown summary statistic: " + name);
}

SummaryScheme default_scheme(const std::string& model_name) {
  if (model_name == "death" || model_name == "si")
    return {{Stat::Mean, Stat::Variance}};
  if (model_name == "sir" || model_name == "seir")
    return {{Stat::Mean, Stat::Median, Stat::Variance}};
  if (model_name == "lv") return {{Stat::Mean, Stat::LogVariance, Stat::Max}};
  throw std::invalid_argument("no default summaries for model: " + model_name);
}

Eigen::VectorXd summarize(const Trajectory& traj, const SummaryScheme& scheme) {
  const int n_obs = static_cast<int>(traj.obs.cols());
  const int n_stats = static_cast<int>(scheme.stats.size());
  if (n_stats == 0) throw std::invalid_argument("empty summary scheme");
  Eigen::VectorXd out(n_obs * n_stats);
  for (int c = 0; c < n_obs; ++c) {
    const Eigen::VectorXd series = traj.obs.col(c).cast<double>();
    for (int s = 0; s < n_stats; ++s) {
      double value = 0.0;
      switch (scheme.stats[s]) {
        case Stat::Mean:
          value = series.mean();
          break;
        case Stat::Median: {
          std::vector<double> v(series.data(), series.data() + series.size());
          value = median(std::move(v));
          break;
        }
        case Stat::Variance:
          value = sample_variance(series);
          break;
        case Stat::LogVariance:
          value = std::log(sample_variance(series) + 0.5);
          break;
        case Stat::Max:
          value = series.maxCoeff();
          break;
      }
      out[c * n_stats + s] = value;
    }
  }
  return out;
}

InformativenessReport informativeness(const ModelSpec& model,
                                      const ParamPrior& prior,
                                      const Eigen::VectorXd& times,
                                      const SummaryScheme& scheme, int q,
                                      double threshold, const SimOptions& sim,
                                      std::uint64_t seed) {
  if (q < 10) throw std::invalid_argument("informativeness needs q >= 10");
  const int n_params = prior.dim();
  const int dim_s = scheme.dim(model.n_observed());

  Eigen::MatrixXd phis(q, n_params), summaries(q, dim_s);
  const Eigen::MatrixXd u = mc_uniforms(n_params, q, derive_seed(seed, {0x696e66ull}));
  for (int j = 0; j < q; ++j) {
    const Eigen::VectorXd phi = prior.sample_phi(u.row(j).transpose());
    const Trajectory traj =
        simulate(model, phi.array().exp(), times, sim,
                 derive_seed(seed, {0x696e6674ull, static_cast<std::uint64_t>(j)}));
    phis.row(j) = phi.transpose();
    summaries.row(j) = summarize(traj, scheme).transpose();
  }

  InformativenessReport report;
  report.threshold = threshold;
  report.spearman_abs.resize(n_params, dim_s);
  report.best_per_param = Eigen::VectorXd::Zero(n_params);
  for (int p = 0; p < n_params; ++p) {
    for (int s = 0; s < dim_s; ++s) {
      report.spearman_abs(p, s) = std::abs(spearman(phis.col(p), summaries.col(s)));
      report.best_per_param[p] =
          std::max(report.best_per_param[p], report.spearman_abs(p, s));
    }
    if (report.best_per_param[p] < threshold) report.weak_params.push_back(p);
  }
  return report;
}

}  // namespace ctdesign
