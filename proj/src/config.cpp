#include "ctdesign/config.hpp"

#include <fstream>
#include <initializer_list>

namespace ctdesign {

using nlohmann::json;

ModelSpec ModelEntry::build() const {
  const bool counts = population >= 0 || infected >= 0;
  const bool lv = prey >= 0 || predators >= 0;
  if (name == "lv") {
    if (counts) throw ConfigError("model '" + name + "': population/infected do not apply");
    return lv_model(prey < 0 ? 90 : prey, predators < 0 ? 35 : predators);
  }
  if (lv) throw ConfigError("model '" + name + "': prey/predators apply only to 'lv'");
  const int pop = population < 0 ? 50 : population;
  if (name == "death") return death_model(pop, infected < 0 ? 0 : infected);
  if (name == "si") return si_model(pop, infected < 0 ? 0 : infected);
  if (name == "sir") return sir_model(pop, infected < 0 ? 5 : infected);
  if (name == "seir") return seir_model(pop, infected < 0 ? 5 : infected);
  throw ConfigError("unknown model '" + name + "'");
}

std::string sampler_name(Sampler method) {
  return method == Sampler::Mc ? "mc" : "rqmc";
}

Sampler sampler_from_name(const std::string& name) {
  if (name == "mc") return Sampler::Mc;
  if (name == "rqmc") return Sampler::Rqmc;
  throw ConfigError("estimator.method must be 'mc' or 'rqmc', got '" + name + "'");
}

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* key : allowed)
      if (it.key() == key) {
        known = true;
        break;
      }
    if (!known) throw ConfigError(where + ": unknown field '" + it.key() + "'");
  }
}

Eigen::VectorXd parse_vector(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty())
    throw ConfigError(where + " must be a non-empty array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  Eigen::Index i = 0;
  for (const auto& e : j) {
    if (!e.is_number()) throw ConfigError(where + " must contain only numbers");
    v[i++] = e.get<double>();
  }
  return v;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

double req_number(const json& o, const char* key, const std::string& where) {
  if (!o.contains(key) || !o.at(key).is_number())
    throw ConfigError(where + "." + key + " must be a number");
  return o.at(key).get<double>();
}

double num_field(const json& o, const char* key, double fallback,
                 const std::string& where) {
  if (!o.contains(key)) return fallback;
  if (!o.at(key).is_number())
    throw ConfigError(where + "." + key + " must be a number");
  return o.at(key).get<double>();
}

int int_field(const json& o, const char* key, int fallback,
              const std::string& where) {
  if (!o.contains(key)) return fallback;
  if (!o.at(key).is_number_integer())
    throw ConfigError(where + "." + key + " must be an integer");
  return o.at(key).get<int>();
}

bool bool_field(const json& o, const char* key, bool fallback,
                const std::string& where) {
  if (!o.contains(key)) return fallback;
  if (!o.at(key).is_boolean())
    throw ConfigError(where + "." + key + " must be true or false");
  return o.at(key).get<bool>();
}

ModelEntry parse_model(const json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  check_keys(j, {"name", "prior_mu", "prior_sd", "population", "infected",
                 "prey", "predators"},
             where);
  if (!j.contains("name") || !j.at("name").is_string())
    throw ConfigError(where + ".name is required");
  ModelEntry entry;
  entry.name = j.at("name").get<std::string>();
  entry.population = int_field(j, "population", -1, where);
  entry.infected = int_field(j, "infected", -1, where);
  entry.prey = int_field(j, "prey", -1, where);
  entry.predators = int_field(j, "predators", -1, where);
  if (j.contains("population") && entry.population < 1)
    throw ConfigError(where + ".population must be at least 1");
  if (j.contains("infected") && entry.infected < 0)
    throw ConfigError(where + ".infected must be nonnegative");
  if (entry.population >= 0 && entry.infected > entry.population)
    throw ConfigError(where + ".infected exceeds the population");
  if (j.contains("prey") && entry.prey < 0)
    throw ConfigError(where + ".prey must be nonnegative");
  if (j.contains("predators") && entry.predators < 0)
    throw ConfigError(where + ".predators must be nonnegative");

  const ModelSpec spec = entry.build();
  const bool has_mu = j.contains("prior_mu");
  const bool has_sd = j.contains("prior_sd");
  if (has_mu != has_sd)
    throw ConfigError(where + ": prior_mu and prior_sd come as a pair");
  if (has_mu) {
    entry.prior.mu = parse_vector(j.at("prior_mu"), where + ".prior_mu");
    entry.prior.sd = parse_vector(j.at("prior_sd"), where + ".prior_sd");
    if (entry.prior.sd.size() != entry.prior.mu.size())
      throw ConfigError(where + ": prior_mu and prior_sd lengths differ");
    if ((entry.prior.sd.array() <= 0.0).any())
      throw ConfigError(where + ".prior_sd must be positive");
    if (entry.prior.dim() != spec.n_params())
      throw ConfigError(where + ".prior_mu length " +
                        std::to_string(entry.prior.dim()) + " but '" +
                        entry.name + "' has " +
                        std::to_string(spec.n_params()) + " parameters");
  } else {
    entry.prior = default_prior(entry.name);
  }
  return entry;
}

}  // namespace

SummaryScheme RunConfig::scheme() const {
  if (stats.empty()) return default_scheme(models.front().name);
  return SummaryScheme{stats};
}

Eigen::VectorXd RunConfig::normalized_model_prior() const {
  const int k = static_cast<int>(models.size());
  if (model_prior.size() == 0)
    return Eigen::VectorXd::Constant(k, 1.0 / static_cast<double>(k));
  return model_prior / model_prior.sum();
}

UtilityProblem RunConfig::problem(const Eigen::VectorXd& times) const {
  std::vector<ModelSpec> specs;
  std::vector<ParamPrior> priors;
  specs.reserve(models.size());
  priors.reserve(models.size());
  for (const ModelEntry& entry : models) {
    specs.push_back(entry.build());
    priors.push_back(entry.prior);
  }
  return make_ctmc_problem(std::move(specs), std::move(priors),
                           normalized_model_prior(), times, scheme(),
                           estimator.synlik, sim);
}

EuOptions RunConfig::eu_options() const {
  EuOptions opts;
  opts.q_draws = estimator.q_draws;
  opts.method = estimator.method;
  opts.laplace.screen = estimator.screen;
  opts.threads = threads;
  return opts;
}

RunConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");
  check_keys(j,
             {"models", "model_prior", "space", "summaries", "utility",
              "estimator", "simulation", "ace", "validation", "seed",
              "out_dir", "threads"},
             "config");
  RunConfig cfg;

  if (!j.contains("models") || !j.at("models").is_array() ||
      j.at("models").empty())
    throw ConfigError("models must be a non-empty array");
  const json& ms = j.at("models");
  for (std::size_t i = 0; i < ms.size(); ++i)
    cfg.models.push_back(
        parse_model(ms[i], "models[" + std::to_string(i) + "]"));

  if (j.contains("model_prior")) {
    cfg.model_prior = parse_vector(j.at("model_prior"), "model_prior");
    if (cfg.model_prior.size() != static_cast<Eigen::Index>(cfg.models.size()))
      throw ConfigError("model_prior length must match the number of models");
    if ((cfg.model_prior.array() <= 0.0).any())
      throw ConfigError("model_prior weights must be positive");
  }

  if (!j.contains("space") || !j.at("space").is_object())
    throw ConfigError("space is required");
  const json& sp = j.at("space");
  check_keys(sp, {"t_lo", "t_hi", "size", "min_gap"}, "space");
  cfg.space.t_lo = req_number(sp, "t_lo", "space");
  cfg.space.t_hi = req_number(sp, "t_hi", "space");
  if (!sp.contains("size")) throw ConfigError("space.size must be an integer");
  cfg.space.size = int_field(sp, "size", 1, "space");
  cfg.space.min_gap = num_field(sp, "min_gap", 0.0, "space");
  try {
    cfg.space.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("space: ") + e.what());
  }

  if (j.contains("summaries")) {
    const json& su = j.at("summaries");
    if (!su.is_array() || su.empty())
      throw ConfigError("summaries must be a non-empty array of names");
    for (std::size_t i = 0; i < su.size(); ++i) {
      if (!su[i].is_string())
        throw ConfigError("summaries[" + std::to_string(i) +
                          "] must be a string");
      try {
        cfg.stats.push_back(stat_from_name(su[i].get<std::string>()));
      } catch (const std::invalid_argument& e) {
        throw ConfigError("summaries[" + std::to_string(i) + "]: " + e.what());
      }
    }
  }

  if (j.contains("utility")) {
    if (!j.at("utility").is_string())
      throw ConfigError("utility must be a string");
    try {
      cfg.utility = utility_from_name(j.at("utility").get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("utility: ") + e.what());
    }
  }

  if (j.contains("estimator")) {
    const json& es = j.at("estimator");
    if (!es.is_object()) throw ConfigError("estimator must be an object");
    check_keys(es, {"q", "method", "n", "n_loc", "perturb_sd", "screen"},
               "estimator");
    cfg.estimator.q_draws = int_field(es, "q", cfg.estimator.q_draws, "estimator");
    if (es.contains("method")) {
      if (!es.at("method").is_string())
        throw ConfigError("estimator.method must be a string");
      cfg.estimator.method = sampler_from_name(es.at("method").get<std::string>());
    }
    cfg.estimator.synlik.n = int_field(es, "n", cfg.estimator.synlik.n, "estimator");
    cfg.estimator.synlik.n_loc =
        int_field(es, "n_loc", cfg.estimator.synlik.n_loc, "estimator");
    cfg.estimator.synlik.perturb_sd =
        num_field(es, "perturb_sd", cfg.estimator.synlik.perturb_sd, "estimator");
    cfg.estimator.screen = bool_field(es, "screen", true, "estimator");
    if (cfg.estimator.q_draws < 1)
      throw ConfigError("estimator.q must be at least 1");
    if (cfg.estimator.synlik.n < 2)
      throw ConfigError("estimator.n must be at least 2");
    if (cfg.estimator.synlik.n_loc < 2)
      throw ConfigError("estimator.n_loc must be at least 2");
    if (cfg.estimator.synlik.perturb_sd <= 0.0)
      throw ConfigError("estimator.perturb_sd must be positive");
  }

  if (j.contains("simulation")) {
    const json& si = j.at("simulation");
    if (!si.is_object()) throw ConfigError("simulation must be an object");
    check_keys(si, {"tau_leap", "tau"}, "simulation");
    cfg.sim.use_tau_leap = bool_field(si, "tau_leap", false, "simulation");
    cfg.sim.tau = num_field(si, "tau", cfg.sim.tau, "simulation");
    if (cfg.sim.tau <= 0.0) throw ConfigError("simulation.tau must be positive");
  }

  if (j.contains("ace")) {
    const json& ac = j.at("ace");
    if (!ac.is_object()) throw ConfigError("ace must be an object");
    check_keys(ac, {"q_emulator", "q_test", "candidates", "sweeps", "dense_grid"},
               "ace");
    cfg.ace.q_emulator = int_field(ac, "q_emulator", cfg.ace.q_emulator, "ace");
    cfg.ace.q_test = int_field(ac, "q_test", cfg.ace.q_test, "ace");
    cfg.ace.candidates = int_field(ac, "candidates", cfg.ace.candidates, "ace");
    cfg.ace.sweeps = int_field(ac, "sweeps", cfg.ace.sweeps, "ace");
    cfg.ace.dense_grid = int_field(ac, "dense_grid", cfg.ace.dense_grid, "ace");
    if (cfg.ace.q_emulator < 2) throw ConfigError("ace.q_emulator must be at least 2");
    if (cfg.ace.q_test < 2) throw ConfigError("ace.q_test must be at least 2");
    if (cfg.ace.candidates < 5) throw ConfigError("ace.candidates must be at least 5");
    if (cfg.ace.sweeps < 0) throw ConfigError("ace.sweeps must be nonnegative");
    if (cfg.ace.dense_grid < 2) throw ConfigError("ace.dense_grid must be at least 2");
  }

  if (j.contains("validation")) {
    const json& va = j.at("validation");
    if (!va.is_object()) throw ConfigError("validation must be an object");
    check_keys(va, {"replicates", "importance_samples", "inflation"}, "validation");
    cfg.validation.replicates =
        int_field(va, "replicates", cfg.validation.replicates, "validation");
    cfg.validation.importance_samples = int_field(
        va, "importance_samples", cfg.validation.importance_samples, "validation");
    cfg.validation.inflation =
        num_field(va, "inflation", cfg.validation.inflation, "validation");
    if (cfg.validation.replicates < 1)
      throw ConfigError("validation.replicates must be at least 1");
    if (cfg.validation.importance_samples < 2)
      throw ConfigError("validation.importance_samples must be at least 2");
    if (cfg.validation.inflation <= 0.0)
      throw ConfigError("validation.inflation must be positive");
  }

  if (j.contains("seed")) {
    if (!j.at("seed").is_number_integer() ||
        (j.at("seed").is_number_integer() && !j.at("seed").is_number_unsigned() &&
         j.at("seed").get<long long>() < 0))
      throw ConfigError("seed must be a nonnegative integer");
    cfg.seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("out_dir")) {
    if (!j.at("out_dir").is_string())
      throw ConfigError("out_dir must be a string");
    cfg.out_dir = j.at("out_dir").get<std::string>();
  }
  cfg.threads = int_field(j, "threads", 1, "config");
  if (cfg.threads < 1) throw ConfigError("threads must be at least 1");

  return cfg;
}

json config_to_json(const RunConfig& config) {
  json j;
  json ms = json::array();
  for (const ModelEntry& entry : config.models) {
    json e;
    e["name"] = entry.name;
    e["prior_mu"] = vector_to_json(entry.prior.mu);
    e["prior_sd"] = vector_to_json(entry.prior.sd);
    if (entry.population >= 0) e["population"] = entry.population;
    if (entry.infected >= 0) e["infected"] = entry.infected;
    if (entry.prey >= 0) e["prey"] = entry.prey;
    if (entry.predators >= 0) e["predators"] = entry.predators;
    ms.push_back(std::move(e));
  }
  j["models"] = std::move(ms);
  if (config.model_prior.size() > 0)
    j["model_prior"] = vector_to_json(config.model_prior);
  j["space"] = {{"t_lo", config.space.t_lo},
                {"t_hi", config.space.t_hi},
                {"size", config.space.size},
                {"min_gap", config.space.min_gap}};
  if (!config.stats.empty()) {
    json su = json::array();
    for (Stat s : config.stats) su.push_back(stat_name(s));
    j["summaries"] = std::move(su);
  }
  j["utility"] = utility_name(config.utility);
  j["estimator"] = {{"q", config.estimator.q_draws},
                    {"method", sampler_name(config.estimator.method)},
                    {"n", config.estimator.synlik.n},
                    {"n_loc", config.estimator.synlik.n_loc},
                    {"perturb_sd", config.estimator.synlik.perturb_sd},
                    {"screen", config.estimator.screen}};
  j["simulation"] = {{"tau_leap", config.sim.use_tau_leap}, {"tau", config.sim.tau}};
  j["ace"] = {{"q_emulator", config.ace.q_emulator},
              {"q_test", config.ace.q_test},
              {"candidates", config.ace.candidates},
              {"sweeps", config.ace.sweeps},
              {"dense_grid", config.ace.dense_grid}};
  j["validation"] = {{"replicates", config.validation.replicates},
                     {"importance_samples", config.validation.importance_samples},
                     {"inflation", config.validation.inflation}};
  j["seed"] = config.seed;
  j["out_dir"] = config.out_dir;
  j["threads"] = config.threads;
  return j;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse: ") + e.what());
  }
  return config_from_json(j);
}

}  // namespace ctdesign
