#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace ctdesign {

//! One reaction channel: a propensity and the state change it applies.
struct Reaction {
  //! Rate as a function of (parameters on natural scale, species counts).
  //! Implementations must be nonnegative at every feasible state.
  std::function<double(const Eigen::VectorXd&, const std::vector<int>&)> propensity;
  std::vector<int> change;
};

//! A continuous-time Markov jump process over integer species counts.
struct ModelSpec {
  std::string name;
  std::vector<std::string> species;
  std::vector<std::string> params;
  std::vector<Reaction> reactions;
  std::vector<int> init;       //!< state at time zero
  std::vector<int> cap;        //!< per-species upper bound, -1 if unbounded
  std::vector<int> observed;   //!< indices of species recorded at design times

  int n_species() const { return static_cast<int>(species.size()); }
  int n_params() const { return static_cast<int>(params.size()); }
  int n_observed() const { return static_cast<int>(observed.size()); }
};

//! Observed species counts at the design times, plus the parameters that
//! generated them.
struct Trajectory {
  Eigen::VectorXd times;   //!< design times, strictly increasing
  Eigen::MatrixXi obs;     //!< times.size() x n_observed counts
  Eigen::VectorXd theta;   //!< generating parameters, natural scale
};

//! Closed-population pure birth process for the infected count: one
//! parameter, infection rate theta[0] * (N - I).
ModelSpec death_model(int population = 50, int init_infected = 0);

//! Infection rate (theta[0] + theta[1] * I) * (N - I).
ModelSpec si_model(int population = 50, int init_infected = 0);

//! Susceptible-infected-recovered: infection theta[0]*S*I/N, recovery
//! theta[1]*I.  Records (I, R).
ModelSpec sir_model(int population = 50, int init_infected = 5);

//! Adds an exposed stage: exposure theta[0]*S*I/N, progression theta[1]*E,
//! recovery theta[2]*I.  Records (I, R).
ModelSpec seir_model(int population = 50, int init_infected = 5);

//! Predator-prey model with logistic prey growth: prey birth theta[1]*x,
//! prey death theta[1]*x^2/theta[0], predation theta[2]*x*y (prey eaten,
//! predator born), predator death theta[3]*y.  Parameter order (K, a, b, c).
ModelSpec lv_model(int init_prey = 90, int init_predators = 35);

//! Look up one of the built-in models by name.
ModelSpec builtin_model(const std::string& name);

//! Validate a design against a window: strictly increasing times inside
//! [t_lo, t_hi] with consecutive gaps >= min_gap.  Throws invalid_argument.
void validate_design(const Eigen::VectorXd& times, double t_lo, double t_hi,
                     double min_gap);

//! Exact stochastic simulation (Gillespie).  Deterministic given the seed;
//! records the state at each design time.
Trajectory simulate_ssa(const ModelSpec& model, const Eigen::VectorXd& theta,
                        const Eigen::VectorXd& times, std::uint64_t seed);

//! Explicit tau-leaping with Poisson counts per channel and post-leap
//! clamping to feasible bounds.  Steps are shortened to land exactly on
//! design times.  Requires 0 < tau <= smallest design gap.
Trajectory simulate_tau_leap(const ModelSpec& model, const Eigen::VectorXd& theta,
                             const Eigen::VectorXd& times, double tau,
                             std::uint64_t seed);

//! Simulation backend selector used by the higher-level estimators.
struct SimOptions {
  bool use_tau_leap = false;
  double tau = 0.05;
};

Trajectory simulate(const ModelSpec& model, const Eigen::VectorXd& theta,
                    const Eigen::VectorXd& times, const SimOptions& opts,
                    std::uint64_t seed);

}  // namespace ctdesign
