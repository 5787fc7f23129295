#include <CLI11.hpp>
#include <json.hpp>

#include <Eigen/Core>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "ctdesign/config.hpp"
#include "ctdesign/csv.hpp"
#include "ctdesign/kinetics.hpp"
#include "ctdesign/laplace.hpp"
#include "ctdesign/optimizer.hpp"
#include "ctdesign/rng.hpp"
#include "ctdesign/sampling.hpp"
#include "ctdesign/stats.hpp"
#include "ctdesign/summaries.hpp"
#include "ctdesign/utility.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ctdesign;

namespace {

constexpr std::uint64_t kSimTag = 0x73696d;
constexpr std::uint64_t kRepTag = 0x726570;
constexpr std::uint64_t kValTag = 0x76616c;
constexpr std::uint64_t kDiagTag = 0x64696167;

Eigen::VectorXd read_design(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open design file '" + path + "'");
  std::vector<double> vals;
  std::string tok;
  const auto flush = [&vals](std::string& t) {
    if (t.empty()) return;
    try {
      std::size_t pos = 0;
      const double v = std::stod(t, &pos);
      if (pos == t.size()) vals.push_back(v);
    } catch (const std::exception&) {
      // non-numeric token, e.g. a header; skip it
    }
    t.clear();
  };
  char c;
  while (in.get(c)) {
    if (c == ',' || c == ';' || c == ' ' || c == '\t' || c == '\r' || c == '\n')
      flush(tok);
    else
      tok += c;
  }
  flush(tok);
  if (vals.empty())
    throw ConfigError("design file '" + path + "' contains no numbers");
  return Eigen::Map<Eigen::VectorXd>(vals.data(),
                                     static_cast<Eigen::Index>(vals.size()));
}

Eigen::VectorXd resolve_design(const RunConfig& cfg, const std::string& path) {
  if (path.empty()) return equally_spaced(cfg.space);
  const Eigen::VectorXd times = read_design(path);
  try {
    validate_design(times, cfg.space.t_lo, cfg.space.t_hi, cfg.space.min_gap);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("design '" + path + "': " + e.what());
  }
  return times;
}

json design_json(const Eigen::VectorXd& times) {
  json a = json::array();
  for (Eigen::Index i = 0; i < times.size(); ++i) a.push_back(times[i]);
  return a;
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << j.dump(2) << "\n";
}

//! Static partition-free work queue; rethrows the first worker exception.
template <typename Body>
void parallel_for(int n, int threads, Body&& body) {
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= n || failed.load()) return;
        try {
          body(i);
        } catch (...) {
          const std::lock_guard<std::mutex> lock(error_mu);
          if (!error) error = std::current_exception();
          failed.store(true);
          return;
        }
      }
    });
  for (std::thread& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

int cmd_simulate(const RunConfig& cfg, const Eigen::VectorXd& times) {
  fs::create_directories(cfg.out_dir);
  for (std::size_t m = 0; m < cfg.models.size(); ++m) {
    const ModelSpec spec = cfg.models[m].build();
    const std::vector<Trajectory> trajs = prior_predictive(
        spec, cfg.models[m].prior, times, cfg.estimator.q_draws,
        cfg.estimator.method, cfg.sim,
        derive_seed(cfg.seed, {kSimTag, static_cast<std::uint64_t>(m)}));
    const std::string base =
        cfg.out_dir + "/" + std::to_string(m) + "_" + spec.name;

    std::ofstream tf(base + "_trajectories.csv", std::ios::binary);
    std::vector<std::string> header = {"draw", "time"};
    for (int o : spec.observed) header.push_back(spec.species[o]);
    csv::write_row(tf, header);
    for (std::size_t j = 0; j < trajs.size(); ++j)
      for (Eigen::Index t = 0; t < times.size(); ++t) {
        std::vector<std::string> row = {csv::number(static_cast<int>(j)),
                                        csv::number(times[t])};
        for (int o = 0; o < spec.n_observed(); ++o)
          row.push_back(csv::number(trajs[j].obs(t, o)));
        csv::write_row(tf, row);
      }

    std::ofstream bf(base + "_bands.csv", std::ios::binary);
    header = {"time"};
    for (int o : spec.observed) {
      header.push_back(spec.species[o] + "_q10");
      header.push_back(spec.species[o] + "_q50");
      header.push_back(spec.species[o] + "_q90");
    }
    csv::write_row(bf, header);
    for (Eigen::Index t = 0; t < times.size(); ++t) {
      std::vector<std::string> row = {csv::number(times[t])};
      for (int o = 0; o < spec.n_observed(); ++o) {
        std::vector<double> col(trajs.size());
        for (std::size_t j = 0; j < trajs.size(); ++j)
          col[j] = static_cast<double>(trajs[j].obs(t, o));
        row.push_back(csv::number(quantile(col, 0.1)));
        row.push_back(csv::number(quantile(col, 0.5)));
        row.push_back(csv::number(quantile(col, 0.9)));
      }
      csv::write_row(bf, row);
    }
  }
  std::cout << "simulate: " << cfg.models.size() << " models, "
            << cfg.estimator.q_draws << " draws each -> " << cfg.out_dir
            << "\n";
  return 0;
}

int cmd_evaluate(const RunConfig& cfg, const Eigen::VectorXd& times,
                 int repeats) {
  fs::create_directories(cfg.out_dir);
  const UtilityProblem problem = cfg.problem(times);
  const EuOptions opts = cfg.eu_options();

  json out;
  out["utility"] = utility_name(cfg.utility);
  out["method"] = sampler_name(cfg.estimator.method);
  out["q"] = cfg.estimator.q_draws;
  out["design"] = design_json(times);
  if (repeats <= 1) {
    const UtilityEstimate est =
        expected_utility(problem, cfg.utility, opts, cfg.seed);
    out["value"] = est.value;
    out["se"] = est.se;
    out["n_substituted"] = est.n_substituted;
    json per = json::array();
    for (Eigen::Index m = 0; m < est.per_model.size(); ++m)
      per.push_back(est.per_model[m]);
    out["per_model"] = std::move(per);
  } else {
    json runs = json::array();
    Eigen::VectorXd values(repeats);
    int substituted = 0;
    for (int r = 0; r < repeats; ++r) {
      const UtilityEstimate est = expected_utility(
          problem, cfg.utility, opts,
          derive_seed(cfg.seed, {kRepTag, static_cast<std::uint64_t>(r)}));
      runs.push_back({{"value", est.value},
                      {"se", est.se},
                      {"n_substituted", est.n_substituted}});
      values[r] = est.value;
      substituted += est.n_substituted;
    }
    out["runs"] = std::move(runs);
    out["value"] = values.mean();
    out["repeat_mean"] = values.mean();
    out["repeat_sd"] = std::sqrt(sample_variance(values));
    out["n_substituted"] = substituted;
  }
  const std::string path = cfg.out_dir + "/evaluate.json";
  write_json(path, out);
  std::cout << "evaluate: " << utility_name(cfg.utility) << " = "
            << out["value"].get<double>();
  if (out.contains("se")) std::cout << " (se " << out["se"].get<double>() << ")";
  if (out.contains("repeat_sd"))
    std::cout << " (sd " << out["repeat_sd"].get<double>() << " over "
              << repeats << " runs)";
  std::cout << " -> " << path << "\n";
  return 0;
}

int cmd_optimize(const RunConfig& cfg, const Eigen::VectorXd& d0) {
  fs::create_directories(cfg.out_dir);
  const DesignObjective objective = [&cfg](const Eigen::VectorXd& times, int q,
                                           std::uint64_t seed) {
    const UtilityProblem problem = cfg.problem(times);
    EuOptions opts = cfg.eu_options();
    opts.q_draws = q;
    return expected_utility(problem, cfg.utility, opts, seed);
  };
  const OptResult res = ace_optimize(objective, cfg.space, d0, cfg.ace, cfg.seed);

  std::ofstream df(cfg.out_dir + "/design.csv", std::ios::binary);
  csv::write_row(df, {"time"});
  for (Eigen::Index i = 0; i < res.design.size(); ++i)
    csv::write_row(df, {csv::number(res.design[i])});

  json out;
  out["utility"] = utility_name(cfg.utility);
  out["value"] = res.utility.value;
  out["se"] = res.utility.se;
  out["n_substituted"] = res.utility.n_substituted;
  out["design"] = design_json(res.design);
  out["n_emulator_evals"] = res.n_emulator_evals;
  out["n_test_evals"] = res.n_test_evals;
  json hist = json::array();
  for (const ExchangeTrace& e : res.trace)
    hist.push_back({{"sweep", e.sweep},
                    {"coord", e.coord},
                    {"proposed", e.proposed},
                    {"accepted", e.accepted},
                    {"u_proposed", e.u_proposed},
                    {"u_current", e.u_current}});
  out["exchanges"] = std::move(hist);
  write_json(cfg.out_dir + "/trace.json", out);
  std::cout << "optimize: " << utility_name(cfg.utility) << " = "
            << res.utility.value << " (se " << res.utility.se << ") -> "
            << cfg.out_dir << "/design.csv\n";
  return 0;
}

struct ValRow {
  bool ok = false;
  double pmp = 0.0;
  double logdet = 0.0;
  double ess = 0.0;
};

int cmd_validate(const RunConfig& cfg, const std::vector<std::string>& paths,
                 int repeats) {
  const int R = repeats > 0 ? repeats : cfg.validation.replicates;
  fs::create_directories(cfg.out_dir);
  std::ofstream all(cfg.out_dir + "/validation.csv", std::ios::binary);
  csv::write_row(all, {"design", "model", "replicate", "ok", "pmp_true",
                       "logdet_precision", "ess"});
  std::ofstream sum(cfg.out_dir + "/validation_summary.csv", std::ios::binary);
  csv::write_row(sum, {"design", "model", "replicates", "n_ok",
                       "median_pmp_true", "median_logdet_precision"});

  for (std::size_t d = 0; d < paths.size(); ++d) {
    const Eigen::VectorXd times = resolve_design(cfg, paths[d]);
    const UtilityProblem problem = cfg.problem(times);
    const int K = problem.n_models();
    const std::string id = fs::path(paths[d]).stem().string();

    for (int m = 0; m < K; ++m) {
      std::vector<ValRow> rows(R);
      parallel_for(R, cfg.threads, [&](int r) {
        const std::uint64_t cell = derive_seed(
            cfg.seed, {kValTag, static_cast<std::uint64_t>(d),
                       static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(r)});
        const ParamPrior& gen_prior = problem.priors[m];
        const Eigen::MatrixXd u =
            sample_batch(Sampler::Mc, gen_prior.dim(), 1, derive_seed(cell, {0}));
        const Eigen::VectorXd phi = gen_prior.sample_phi(u.row(0).transpose());
        const Dataset data = problem.observe(m, phi, derive_seed(cell, {1}));

        Eigen::VectorXd evidence(K);
        std::unique_ptr<SynlikSurface> gen_surface;
        LaplaceFit gen_fit;
        bool all_pass = true;
        LaplaceOptions lo;
        lo.screen = cfg.estimator.screen;
        for (int k = 0; k < K; ++k) {
          auto surface = problem.make_surface(
              k, data, derive_seed(cell, {2, static_cast<std::uint64_t>(k)}));
          const LaplaceFit fit = laplace_fit(*surface, problem.priors[k], lo);
          all_pass = all_pass && fit.pass;
          evidence[k] = fit.log_evidence;
          if (k == m) {
            gen_surface = std::move(surface);
            gen_fit = fit;
          }
        }
        if (!all_pass) return;
        ValRow& row = rows[r];
        row.pmp = posterior_model_probs(evidence, problem.model_prior)[m];
        try {
          const LisResult lis = lis_posterior(
              *gen_surface, gen_prior, gen_fit,
              cfg.validation.importance_samples, cfg.validation.inflation,
              derive_seed(cell, {3}));
          row.logdet = lis.logdet_precision;
          row.ess = lis.ess;
        } catch (const std::exception&) {
          return;  // recorded as a failed replicate
        }
        row.ok = true;
      });

      std::vector<double> pmps, logdets;
      for (int r = 0; r < R; ++r) {
        const ValRow& row = rows[r];
        std::vector<std::string> fields = {id, cfg.models[m].name,
                                           csv::number(r),
                                           row.ok ? "1" : "0"};
        if (row.ok) {
          fields.push_back(csv::number(row.pmp));
          fields.push_back(csv::number(row.logdet));
          fields.push_back(csv::number(row.ess));
          pmps.push_back(row.pmp);
          logdets.push_back(row.logdet);
        } else {
          fields.insert(fields.end(), {"", "", ""});
        }
        csv::write_row(all, fields);
      }
      std::vector<std::string> line = {id, cfg.models[m].name,
                                       csv::number(R),
                                       csv::number(static_cast<int>(pmps.size()))};
      if (!pmps.empty()) {
        line.push_back(csv::number(median(pmps)));
        line.push_back(csv::number(median(logdets)));
      } else {
        line.insert(line.end(), {"", ""});
      }
      csv::write_row(sum, line);
    }
  }
  std::cout << "validate: " << paths.size() << " designs x " << R
            << " replicates per model -> " << cfg.out_dir
            << "/validation.csv\n";
  return 0;
}

int cmd_diagnose(const RunConfig& cfg, const Eigen::VectorXd& times) {
  fs::create_directories(cfg.out_dir);
  const SummaryScheme scheme = cfg.scheme();
  std::ofstream corr(cfg.out_dir + "/correlations.csv", std::ios::binary);
  csv::write_row(corr, {"model", "parameter", "summary", "pearson",
                        "spearman_abs"});
  std::ofstream scat(cfg.out_dir + "/scatter.csv", std::ios::binary);
  csv::write_row(scat, {"model", "draw", "parameter", "log_value", "summary",
                        "summary_value"});

  for (std::size_t m = 0; m < cfg.models.size(); ++m) {
    const ModelSpec spec = cfg.models[m].build();
    const int q = cfg.estimator.q_draws;
    const std::vector<Trajectory> trajs = prior_predictive(
        spec, cfg.models[m].prior, times, q, cfg.estimator.method, cfg.sim,
        derive_seed(cfg.seed, {kDiagTag, static_cast<std::uint64_t>(m)}));

    const int dim = scheme.dim(spec.n_observed());
    Eigen::MatrixXd phi(q, spec.n_params());
    Eigen::MatrixXd s(q, dim);
    for (int j = 0; j < q; ++j) {
      phi.row(j) = trajs[j].theta.array().log().matrix().transpose();
      s.row(j) = summarize(trajs[j], scheme).transpose();
    }

    std::vector<std::string> labels(dim);
    for (int o = 0; o < spec.n_observed(); ++o)
      for (std::size_t k = 0; k < scheme.stats.size(); ++k)
        labels[o * scheme.stats.size() + k] =
            spec.species[spec.observed[o]] + "_" + stat_name(scheme.stats[k]);

    for (int p = 0; p < spec.n_params(); ++p)
      for (int i = 0; i < dim; ++i)
        csv::write_row(corr,
                       {spec.name, spec.params[p], labels[i],
                        csv::number(pearson(phi.col(p), s.col(i))),
                        csv::number(std::abs(spearman(phi.col(p), s.col(i))))});

    for (int j = 0; j < q; ++j)
      for (int p = 0; p < spec.n_params(); ++p)
        for (int i = 0; i < dim; ++i)
          csv::write_row(scat, {spec.name, csv::number(j), spec.params[p],
                                csv::number(phi(j, p)), labels[i],
                                csv::number(s(j, i))});
  }
  std::cout << "diagnose: " << cfg.models.size() << " models -> "
            << cfg.out_dir << "/correlations.csv\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian design of observation schedules for stochastic kinetic models"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> designs;
  std::uint64_t seed = 0;
  std::string out_dir;
  int repeats = 0;
  int threads = 0;

  app.add_option("--config", config_path, "JSON run configuration file");
  app.add_option("--design", designs,
                 "design file(s); omitted means the equally spaced design");
  auto* seed_opt = app.add_option("--seed", seed, "master seed override");
  auto* out_opt = app.add_option("--out", out_dir, "output directory override");
  app.add_option("--repeats", repeats,
                 "re-evaluations (evaluate) or replicates per model (validate)");
  auto* threads_opt = app.add_option("--threads", threads, "worker threads");

  CLI::App* c_sim =
      app.add_subcommand("simulate", "prior-predictive draws and quantile bands");
  CLI::App* c_eval =
      app.add_subcommand("evaluate", "expected utility of one design");
  CLI::App* c_opt =
      app.add_subcommand("optimize", "coordinate-exchange design search");
  CLI::App* c_val = app.add_subcommand(
      "validate", "posterior recovery study over replicate datasets");
  CLI::App* c_diag = app.add_subcommand(
      "diagnose", "summary-statistic informativeness diagnostics");
  for (CLI::App* sub : {c_sim, c_eval, c_opt, c_val, c_diag}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  RunConfig cfg;
  try {
    if (config_path.empty()) throw ConfigError("--config is required");
    cfg = load_config(config_path);
    if (seed_opt->count() > 0) cfg.seed = seed;
    if (out_opt->count() > 0) cfg.out_dir = out_dir;
    if (threads_opt->count() > 0) {
      if (threads < 1) throw ConfigError("threads must be at least 1");
      cfg.threads = threads;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  try {
    const auto single_design = [&]() -> Eigen::VectorXd {
      if (designs.size() > 1)
        throw ConfigError("this command takes a single --design file");
      return resolve_design(cfg, designs.empty() ? std::string() : designs[0]);
    };
    if (c_sim->parsed()) return cmd_simulate(cfg, single_design());
    if (c_eval->parsed()) return cmd_evaluate(cfg, single_design(), repeats);
    if (c_opt->parsed()) return cmd_optimize(cfg, single_design());
    if (c_val->parsed()) {
      if (designs.empty())
        throw ConfigError("validate needs at least one --design file");
      return cmd_validate(cfg, designs, repeats);
    }
    if (c_diag->parsed()) return cmd_diagnose(cfg, single_design());
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
