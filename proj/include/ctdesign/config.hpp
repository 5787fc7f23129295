#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctdesign/kinetics.hpp"
#include "ctdesign/optimizer.hpp"
#include "ctdesign/sampling.hpp"
#include "ctdesign/summaries.hpp"
#include "ctdesign/utility.hpp"

namespace ctdesign {

//! Malformed or inconsistent run configuration.  The message names the
//! offending field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

//! One candidate model.  Negative counts select the factory defaults;
//! an empty prior mean selects the model's default prior.
struct ModelEntry {
  std::string name;
  ParamPrior prior;
  int population = -1;  //!< count models and epidemics
  int infected = -1;
  int prey = -1;  //!< predator-prey only
  int predators = -1;

  ModelSpec build() const;
};

struct EstimatorConfig {
  int q_draws = 1000;
  Sampler method = Sampler::Rqmc;
  SynlikSettings synlik;
  bool screen = true;
};

struct ValidationConfig {
  int replicates = 1000;       //!< synthetic datasets per generating model
  int importance_samples = 2000;
  double inflation = 1.2;
};

struct RunConfig {
  std::vector<ModelEntry> models;
  Eigen::VectorXd model_prior;  //!< normalized; empty means uniform
  DesignSpace space;
  std::vector<Stat> stats;  //!< empty means the first model's default scheme
  UtilityKind utility = UtilityKind::Sigp;
  EstimatorConfig estimator;
  SimOptions sim;
  AceOptions ace;
  ValidationConfig validation;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  int threads = 1;

  SummaryScheme scheme() const;
  Eigen::VectorXd normalized_model_prior() const;
  //! Utility problem over the candidate set at the given observation times.
  UtilityProblem problem(const Eigen::VectorXd& times) const;
  EuOptions eu_options() const;
};

std::string sampler_name(Sampler method);
Sampler sampler_from_name(const std::string& name);

RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& config);

//! Parse a JSON config file.  Syntax and schema problems both surface as
//! ConfigError.
RunConfig load_config(const std::string& path);

}  // namespace ctdesign
