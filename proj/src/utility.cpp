#include "ctdesign/utility.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "ctdesign/rng.hpp"
#include "ctdesign/stats.hpp"

namespace ctdesign {

namespace {

constexpr std::uint64_t kThetaTag = 0x7468657461ull;
constexpr std::uint64_t kObsTag = 0x6f6273ull;
constexpr std::uint64_t kFitTag = 0x666974ull;

constexpr double kProbFloor = 1e-300;

}  // namespace

const char* utility_name(UtilityKind kind) {
  switch (kind) {
    case UtilityKind::Sigp: return "sigp";
    case UtilityKind::Nsel: return "nsel";
    case UtilityKind::Sigm: return "sigm";
    case UtilityKind::Sigt: return "sigt";
  }
  throw std::invalid_argument("unknown utility kind");
}

UtilityKind utility_from_name(const std::string& name) {
  if (name == "sigp") return UtilityKind::Sigp;
  if (name == "nsel") return UtilityKind::Nsel;
  if (name == "sigm") return UtilityKind::Sigm;
  if (name == "sigt") return UtilityKind::Sigt;
  throw std::invalid_argument("unknown utility name: " + name);
}

double u_sigp(const ParamPrior& prior, const LaplaceFit& fit,
              const Eigen::VectorXd& phi_true) {
  return laplace_logpdf(fit, phi_true) - prior.logpdf_phi(phi_true);
}

double u_nsel(const LaplaceFit& fit, const Eigen::VectorXd& phi_true) {
  return -(phi_true - fit.mode).squaredNorm();
}

double u_sigm(const Eigen::VectorXd& model_posterior,
              const Eigen::VectorXd& model_prior, int m_true) {
  return std::log(std::max(model_posterior[m_true], kProbFloor)) -
         std::log(model_prior[m_true]);
}

double u_sigt(double sigp_value, double sigm_value) {
  return sigp_value + sigm_value;
}

UtilityProblem make_ctmc_problem(std::vector<ModelSpec> models,
                                 std::vector<ParamPrior> priors,
                                 Eigen::VectorXd model_prior,
                                 const Eigen::VectorXd& times,
                                 const SummaryScheme& scheme,
                                 const SynlikSettings& synlik,
                                 const SimOptions& sim) {
  if (models.empty() || models.size() != priors.size() ||
      static_cast<Eigen::Index>(models.size()) != model_prior.size())
    throw std::invalid_argument("model/prior counts differ");
  for (std::size_t k = 0; k < models.size(); ++k) {
    if (priors[k].dim() != models[k].n_params())
      throw std::invalid_argument("prior dimension mismatch for " +
                                  models[k].name);
    if (models[k].n_observed() != models[0].n_observed())
      throw std::invalid_argument("models must observe the same species count");
  }

  struct Shared {
    std::vector<ModelSpec> models;
    std::vector<ParamPrior> priors;
    Eigen::VectorXd times;
    SummaryScheme scheme;
    SynlikSettings synlik;
    SimOptions sim;
    std::vector<SummarySimulator> sims;
  };
  auto shared = std::make_shared<Shared>();
  shared->models = std::move(models);
  shared->priors = priors;
  shared->times = times;
  shared->scheme = scheme;
  shared->synlik = synlik;
  shared->sim = sim;
  for (const ModelSpec& model : shared->models)
    shared->sims.push_back(
        make_summary_simulator(model, times, scheme, sim));

  UtilityProblem problem;
  problem.model_prior = std::move(model_prior);
  problem.priors = std::move(priors);
  problem.observe = [shared](int m, const Eigen::VectorXd& phi,
                             std::uint64_t seed) {
    const Eigen::VectorXd theta = phi.array().exp();
    auto traj = std::make_shared<Trajectory>(
        simulate(shared->models[m], theta, shared->times, shared->sim, seed));
    Dataset data;
    data.s_obs = summarize(*traj, shared->scheme);
    data.traj = std::move(traj);
    return data;
  };
  problem.make_surface = [shared](int k, const Dataset& data,
                                  std::uint64_t seed) {
    return std::unique_ptr<SynlikSurface>(new McSynlikSurface(
        shared->sims[k], data.s_obs, shared->priors[k].dim(),
        shared->synlik.n, shared->synlik.n_loc, shared->synlik.perturb_sd,
        seed));
  };
  return problem;
}

namespace {

struct Cell {
  double value = 0.0;
  bool ok = false;
};

Cell evaluate_draw(const UtilityProblem& problem, UtilityKind kind, int m,
                   int j, const Eigen::VectorXd& phi,
                   const Eigen::VectorXd* u_obs, const LaplaceOptions& laplace,
                   std::uint64_t seed) {
  const std::uint64_t obs_seed =
      derive_seed(seed, {kObsTag, std::uint64_t(m), std::uint64_t(j)});
  const Dataset data = u_obs
                           ? problem.observe_quantile(m, phi, *u_obs, obs_seed)
                           : problem.observe(m, phi, obs_seed);
  const int k_models = problem.n_models();
  const bool all_models =
      kind == UtilityKind::Sigm || kind == UtilityKind::Sigt;

  Cell cell;
  if (!all_models) {
    const auto surface = problem.make_surface(
        m, data,
        derive_seed(seed, {kFitTag, std::uint64_t(m), std::uint64_t(j),
                           std::uint64_t(m)}));
    const LaplaceFit fit = laplace_fit(*surface, problem.priors[m], laplace);
    if (!fit.pass) return cell;
    cell.ok = true;
    cell.value = kind == UtilityKind::Sigp
                     ? u_sigp(problem.priors[m], fit, phi)
                     : u_nsel(fit, phi);
    return cell;
  }

  Eigen::VectorXd log_evidence(k_models);
  double sigp_component = 0.0;
  for (int k = 0; k < k_models; ++k) {
    const auto surface = problem.make_surface(
        k, data,
        derive_seed(seed, {kFitTag, std::uint64_t(m), std::uint64_t(j),
                           std::uint64_t(k)}));
    const LaplaceFit fit = laplace_fit(*surface, problem.priors[k], laplace);
    if (!fit.pass) return cell;
    log_evidence[k] = fit.log_evidence;
    if (k == m && kind == UtilityKind::Sigt)
      sigp_component = u_sigp(problem.priors[m], fit, phi);
  }
  const Eigen::VectorXd posterior =
      posterior_model_probs(log_evidence, problem.model_prior);
  const double sigm_component = u_sigm(posterior, problem.model_prior, m);
  cell.ok = true;
  cell.value = kind == UtilityKind::Sigm
                   ? sigm_component
                   : u_sigt(sigp_component, sigm_component);
  return cell;
}

}  // namespace

UtilityEstimate expected_utility(const UtilityProblem& problem,
                                 UtilityKind kind, const EuOptions& opts,
                                 std::uint64_t seed) {
  const int k_models = problem.n_models();
  const int q_draws = opts.q_draws;
  if (k_models < 1) throw std::invalid_argument("no models");
  if (problem.model_prior.size() != k_models ||
      (problem.model_prior.array() <= 0.0).any())
    throw std::invalid_argument("model prior must be positive per model");
  if (q_draws < 2) throw std::invalid_argument("need at least two draws");
  const bool quantile_obs =
      problem.data_dims > 0 && problem.observe_quantile != nullptr;
  if ((!problem.observe && !quantile_obs) || !problem.make_surface)
    throw std::invalid_argument("problem callbacks not set");

  const Eigen::VectorXd model_prior =
      problem.model_prior / problem.model_prior.sum();

  std::vector<Eigen::MatrixXd> phis(k_models), u_obs(k_models);
  for (int m = 0; m < k_models; ++m) {
    const int qdim = problem.priors[m].dim();
    const int dims = qdim + (quantile_obs ? problem.data_dims : 0);
    const Eigen::MatrixXd u =
        sample_batch(opts.method, dims, q_draws,
                     derive_seed(seed, {kThetaTag, std::uint64_t(m)}));
    phis[m].resize(q_draws, qdim);
    for (int j = 0; j < q_draws; ++j)
      phis[m].row(j) =
          problem.priors[m]
              .sample_phi(u.row(j).head(qdim).transpose())
              .transpose();
    if (quantile_obs) u_obs[m] = u.rightCols(problem.data_dims);
  }

  const int total = k_models * q_draws;
  std::vector<Cell> cells(total);
  const auto run_cell = [&](int idx) {
    const int m = idx / q_draws;
    const int j = idx % q_draws;
    const Eigen::VectorXd tail =
        quantile_obs ? Eigen::VectorXd(u_obs[m].row(j).transpose())
                     : Eigen::VectorXd();
    cells[idx] =
        evaluate_draw(problem, kind, m, j, phis[m].row(j).transpose(),
                      quantile_obs ? &tail : nullptr, opts.laplace, seed);
  };
  if (opts.threads > 1) {
    std::atomic<int> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    const int n_threads = std::min(opts.threads, total);
    pool.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t)
      pool.emplace_back([&] {
        try {
          for (int idx = next.fetch_add(1);
               idx < total && !failed.load(std::memory_order_relaxed);
               idx = next.fetch_add(1))
            run_cell(idx);
        } catch (...) {
          const std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          failed.store(true, std::memory_order_relaxed);
        }
      });
    for (std::thread& t : pool) t.join();
    if (error) std::rethrow_exception(error);
  } else {
    for (int idx = 0; idx < total; ++idx) run_cell(idx);
  }

  double minimum = std::numeric_limits<double>::infinity();
  int n_ok = 0;
  for (const Cell& cell : cells) {
    if (!cell.ok) continue;
    ++n_ok;
    minimum = std::min(minimum, cell.value);
  }
  if (n_ok == 0)
    throw std::runtime_error("every utility evaluation was screened out");

  UtilityEstimate est;
  est.q = q_draws;
  est.method = opts.method;
  est.per_model.resize(k_models);
  est.records.reserve(total);

  double se_sq = 0.0;
  for (int m = 0; m < k_models; ++m) {
    Eigen::VectorXd values(q_draws);
    for (int j = 0; j < q_draws; ++j) {
      const Cell& cell = cells[m * q_draws + j];
      const double value = cell.ok ? cell.value : minimum;
      values[j] = value;
      if (!cell.ok) ++est.n_substituted;
      est.records.push_back({m, j, value, !cell.ok});
    }
    est.per_model[m] = values.mean();
    est.value += model_prior[m] * est.per_model[m];
    se_sq += model_prior[m] * model_prior[m] * sample_variance(values) /
             q_draws;
  }
  est.se = std::sqrt(se_sq);
  return est;
}

}  // namespace ctdesign
