#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "ctdesign/config.hpp"

using namespace ctdesign;
using nlohmann::json;

namespace {

json minimal() {
  return json{{"models", json::array({json{{"name", "death"}}})},
              {"space", {{"t_lo", 0.25}, {"t_hi", 10.0}, {"size", 4}, {"min_gap", 0.1}}}};
}

json rich() {
  json j = minimal();
  j["models"] = json::array(
      {json{{"name", "sir"},
            {"population", 40},
            {"infected", 4},
            {"prior_mu", {-0.1, -1.5}},
            {"prior_sd", {0.2, 0.3}}},
       json{{"name", "seir"}}});
  j["model_prior"] = {0.7, 0.3};
  j["summaries"] = {"mean", "median", "variance"};
  j["utility"] = "sigt";
  j["estimator"] = {{"q", 256},     {"method", "mc"},       {"n", 120},
                    {"n_loc", 80},  {"perturb_sd", 0.15},   {"screen", false}};
  j["simulation"] = {{"tau_leap", true}, {"tau", 0.02}};
  j["ace"] = {{"q_emulator", 64}, {"q_test", 256}, {"candidates", 8},
              {"sweeps", 3},      {"dense_grid", 50}};
  j["validation"] = {{"replicates", 20}, {"importance_samples", 100}, {"inflation", 1.5}};
  j["seed"] = 42;
  j["out_dir"] = "scratch";
  j["threads"] = 2;
  return j;
}

}  // namespace

TEST_CASE("minimal config fills documented defaults") {
  const RunConfig cfg = config_from_json(minimal());
  REQUIRE(cfg.models.size() == 1);
  CHECK(cfg.models[0].name == "death");
  CHECK(cfg.models[0].prior.mu[0] == doctest::Approx(-0.48));
  CHECK(cfg.models[0].prior.sd[0] == doctest::Approx(0.3));
  CHECK(cfg.utility == UtilityKind::Sigp);
  CHECK(cfg.estimator.q_draws == 1000);
  CHECK(cfg.estimator.method == Sampler::Rqmc);
  CHECK(cfg.estimator.synlik.n == 500);
  CHECK(cfg.estimator.screen);
  CHECK_FALSE(cfg.sim.use_tau_leap);
  CHECK(cfg.seed == 1);
  CHECK(cfg.threads == 1);
  CHECK(cfg.normalized_model_prior()[0] == doctest::Approx(1.0));
  const SummaryScheme scheme = cfg.scheme();
  REQUIRE(scheme.stats.size() == 2);
  CHECK(scheme.stats[0] == Stat::Mean);
  CHECK(scheme.stats[1] == Stat::Variance);
}

TEST_CASE("every field survives a parse-serialize-parse round trip") {
  const RunConfig first = config_from_json(rich());
  const json dumped = config_to_json(first);
  const RunConfig second = config_from_json(dumped);
  CHECK(config_to_json(second) == dumped);

  CHECK(second.models[0].population == 40);
  CHECK(second.models[0].infected == 4);
  CHECK(second.models[1].name == "seir");
  CHECK(second.model_prior[0] == doctest::Approx(0.7));
  CHECK(second.utility == UtilityKind::Sigt);
  CHECK(second.estimator.q_draws == 256);
  CHECK(second.estimator.method == Sampler::Mc);
  CHECK_FALSE(second.estimator.screen);
  CHECK(second.sim.use_tau_leap);
  CHECK(second.ace.candidates == 8);
  CHECK(second.validation.inflation == doctest::Approx(1.5));
  CHECK(second.seed == 42);
  CHECK(second.threads == 2);
  REQUIRE(second.stats.size() == 3);
  CHECK(second.stats[1] == Stat::Median);
}

TEST_CASE("defaulted priors serialize explicitly so round trips are stable") {
  const RunConfig cfg = config_from_json(minimal());
  const json dumped = config_to_json(cfg);
  REQUIRE(dumped["models"][0].contains("prior_mu"));
  CHECK(dumped["models"][0]["prior_mu"][0].get<double>() == doctest::Approx(-0.48));
  CHECK(config_to_json(config_from_json(dumped)) == dumped);
}

TEST_CASE("model prior normalizes and defaults to uniform") {
  json j = minimal();
  j["models"].push_back(json{{"name", "si"}});
  RunConfig cfg = config_from_json(j);
  CHECK(cfg.normalized_model_prior()[0] == doctest::Approx(0.5));
  j["model_prior"] = {3.0, 1.0};
  cfg = config_from_json(j);
  CHECK(cfg.normalized_model_prior()[0] == doctest::Approx(0.75));
  CHECK(cfg.normalized_model_prior()[1] == doctest::Approx(0.25));
}

TEST_CASE("schema violations name the offending field") {
  json j = minimal();
  j["models"][0].erase("name");
  CHECK_THROWS_WITH_AS(config_from_json(j), doctest::Contains("models[0].name"),
                       ConfigError);

  j = minimal();
  j["models"][0]["name"] = "weibull";
  CHECK_THROWS_WITH_AS(config_from_json(j), doctest::Contains("weibull"),
                       ConfigError);

  j = minimal();
  j["models"][0]["prior_mu"] = {0.1};
  CHECK_THROWS_WITH_AS(config_from_json(j), doctest::Contains("pair"), ConfigError);

  j = minimal();
  j["models"][0]["prior_mu"] = {0.1, 0.2};
  j["models"][0]["prior_sd"] = {0.5, 0.5};
  CHECK_THROWS_WITH_AS(config_from_json(j), doctest::Contains("1 parameters"),
                       ConfigError);

  j = minimal();
  j["models"][0]["prior_mu"] = {0.1};
  j["models"][0]["prior_sd"] = {-0.5};
  CHECK_THROWS_WITH_AS(config_from_json(j), doctest::Contains("prior_sd"),
                       ConfigError);

  j = minimal();
  j["models"][0]["prey"] = 10;
  CHECK_THROWS_WITH_AS(config_from_json(j), doctest::Contains("prey"), ConfigError);

  j = minimal();
  j["typo_field"] = 1;
  CHECK_THROWS_WITH_AS(config_from_json(j), doctest::Contains("typo_field"),
                       ConfigError);

  j = minimal();
  j["space"]["t_hi"] = 0.1;
  CHECK_THROWS_WITH_AS(config_from_json(j), doctest::Contains("space"), ConfigError);

  j = minimal();
  j["model_prior"] = {0.5, 0.5};
  CHECK_THROWS_WITH_AS(config_from_json(j), doctest::Contains("model_prior"),
                       ConfigError);

  j = minimal();
  j["model_prior"] = {0.0};
  CHECK_THROWS_WITH_AS(config_from_json(j), doctest::Contains("positive"),
                       ConfigError);

  j = minimal();
  j["summaries"] = {"mean", "mode"};
  CHECK_THROWS_WITH_AS(config_from_json(j), doctest::Contains("summaries[1]"),
                       ConfigError);

  j = minimal();
  j["utility"] = "kl";
  CHECK_THROWS_WITH_AS(config_from_json(j), doctest::Contains("utility"),
                       ConfigError);

  j = minimal();
  j["estimator"] = {{"q", 0}};
  CHECK_THROWS_WITH_AS(config_from_json(j), doctest::Contains("estimator.q"),
                       ConfigError);

  j = minimal();
  j["estimator"] = {{"method", "qmc"}};
  CHECK_THROWS_WITH_AS(config_from_json(j), doctest::Contains("method"),
                       ConfigError);

  j = minimal();
  j["simulation"] = {{"tau", -1.0}};
  CHECK_THROWS_WITH_AS(config_from_json(j), doctest::Contains("tau"), ConfigError);

  j = minimal();
  j["ace"] = {{"candidates", 3}};
  CHECK_THROWS_WITH_AS(config_from_json(j), doctest::Contains("candidates"),
                       ConfigError);

  j = minimal();
  j["threads"] = 0;
  CHECK_THROWS_WITH_AS(config_from_json(j), doctest::Contains("threads"),
                       ConfigError);

  j = minimal();
  j["seed"] = -3;
  CHECK_THROWS_WITH_AS(config_from_json(j), doctest::Contains("seed"), ConfigError);

  j = minimal();
  j["models"] = json::array();
  CHECK_THROWS_WITH_AS(config_from_json(j), doctest::Contains("models"),
                       ConfigError);
}

TEST_CASE("count overrides are range checked") {
  json j = minimal();
  j["models"][0]["population"] = 0;
  CHECK_THROWS_AS(config_from_json(j), ConfigError);

  j = minimal();
  j["models"][0]["population"] = 10;
  j["models"][0]["infected"] = 11;
  CHECK_THROWS_WITH_AS(config_from_json(j), doctest::Contains("exceeds"),
                       ConfigError);

  j = minimal();
  j["models"][0]["name"] = "lv";
  j["models"][0]["population"] = 50;
  CHECK_THROWS_WITH_AS(config_from_json(j), doctest::Contains("population"),
                       ConfigError);
}

TEST_CASE("problem construction wires priors and observations together") {
  json j = minimal();
  j["models"].push_back(json{{"name", "si"}});
  const RunConfig cfg = config_from_json(j);
  Eigen::VectorXd times(3);
  times << 1.0, 2.0, 3.0;
  const UtilityProblem problem = cfg.problem(times);
  REQUIRE(problem.n_models() == 2);
  CHECK(problem.priors[0].dim() == 1);
  CHECK(problem.priors[1].dim() == 2);
  const Dataset data = problem.observe(1, problem.priors[1].mu, 99);
  CHECK(data.s_obs.size() == cfg.scheme().dim(1));
  REQUIRE(data.traj);
  CHECK(data.traj->times.size() == 3);
}

TEST_CASE("bundled presets load, validate, and round trip") {
  const std::string dir = CTDESIGN_CONFIG_DIR;
  const RunConfig death_si = load_config(dir + "/death_si.json");
  REQUIRE(death_si.models.size() == 2);
  CHECK(death_si.models[0].name == "death");
  CHECK(death_si.models[1].name == "si");
  CHECK(death_si.utility == UtilityKind::Sigt);

  const RunConfig fmd = load_config(dir + "/fmd.json");
  REQUIRE(fmd.models.size() == 2);
  CHECK(fmd.models[0].name == "sir");
  CHECK(fmd.models[0].population == 50);
  CHECK(fmd.models[0].infected == 5);
  CHECK(fmd.space.t_lo == 0.25);
  CHECK(fmd.space.t_hi == 30.0);
  CHECK(fmd.space.size == 20);
  CHECK(fmd.space.min_gap == 0.25);

  const RunConfig lv = load_config(dir + "/lv.json");
  REQUIRE(lv.models.size() == 1);
  CHECK(lv.models[0].prey == 90);
  CHECK(lv.models[0].predators == 35);
  CHECK(lv.sim.use_tau_leap);
  CHECK(lv.scheme().stats.size() == 3);

  for (const RunConfig* cfg : {&death_si, &fmd, &lv}) {
    const json dumped = config_to_json(*cfg);
    CHECK(config_to_json(config_from_json(dumped)) == dumped);
  }
}

TEST_CASE("load_config reports unreadable and malformed files") {
  CHECK_THROWS_WITH_AS(load_config("/nonexistent/run.json"),
                       doctest::Contains("cannot open"), ConfigError);
  const std::string path = "bad_config_for_test.json";
  {
    std::ofstream out(path);
    out << "{ not json";
  }
  CHECK_THROWS_WITH_AS(load_config(path), doctest::Contains("parse"), ConfigError);
  std::remove(path.c_str());

  {
    std::ofstream out(path);
    out << minimal().dump();
  }
  const RunConfig cfg = load_config(path);
  CHECK(cfg.models[0].name == "death");
  std::remove(path.c_str());
}
