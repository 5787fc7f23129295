#include "ctdesign/kinetics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ctdesign/rng.hpp"

namespace ctdesign {

namespace {

Reaction make_reaction(
    std::function<double(const Eigen::VectorXd&, const std::vector<int>&)> rate,
    std::vector<int> change) {
  return Reaction{std::move(rate), std::move(change)};
}

void record_row(const ModelSpec& model, const std::vector<int>& x,
                Eigen::MatrixXi& obs, Eigen::Index row) {
  for (int j = 0; j < model.n_observed(); ++j) obs(row, j) = x[model.observed[j]];
}

void clamp_state(const ModelSpec& model, std::vector<int>& x) {
  for (int i = 0; i < model.n_species(); ++i) {
    if (x[i] < 0) x[i] = 0;
    if (model.cap[i] >= 0 && x[i] > model.cap[i]) x[i] = model.cap[i];
  }
}

}  // namespace

ModelSpec death_model(int population, int init_infected) {
  const double n = population;
  ModelSpec m;
  m.name = "death";
  m.species = {"I"};
  m.params = {"beta1"};
  m.reactions.push_back(make_reaction(
      [n](const Eigen::VectorXd& th, const std::vector<int>& x) {
        return th[0] * (n - x[0]);
      },
      {+1}));
  m.init = {init_infected};
  m.cap = {population};
  m.observed = {0};
  return m;
}

ModelSpec si_model(int population, int init_infected) {
  const double n = population;
  ModelSpec m;
  m.name = "si";
  m.species = {"I"};
  m.params = {"beta1", "beta2"};
  m.reactions.push_back(make_reaction(
      [n](const Eigen::VectorXd& th, const std::vector<int>& x) {
        return (th[0] + th[1] * x[0]) * (n - x[0]);
      },
      {+1}));
  m.init = {init_infected};
  m.cap = {population};
  m.observed = {0};
  return m;
}

ModelSpec sir_model(int population, int init_infected) {
  const double n = population;
  ModelSpec m;
  m.name = "sir";
  m.species = {"S", "I", "R"};
  m.params = {"beta", "alpha"};
  m.reactions.push_back(make_reaction(
      [n](const Eigen::VectorXd& th, const std::vector<int>& x) {
        return th[0] * x[0] * x[1] / n;
      },
      {-1, +1, 0}));
  m.reactions.push_back(make_reaction(
      [](const Eigen::VectorXd& th, const std::vector<int>& x) {
        return th[1] * x[1];
      },
      {0, -1, +1}));
  m.init = {population - init_infected, init_infected, 0};
  m.cap = {population, population, population};
  m.observed = {1, 2};
  return m;
}

ModelSpec seir_model(int population, int init_infected) {
  const double n = population;
  ModelSpec m;
  m.name = "seir";
  m.species = {"S", "E", "I", "R"};
  m.params = {"beta", "alphaE", "alphaI"};
  m.reactions.push_back(make_reaction(
      [n](const Eigen::VectorXd& th, const std::vector<int>& x) {
        return th[0] * x[0] * x[2] / n;
      },
      {-1, +1, 0, 0}));
  m.reactions.push_back(make_reaction(
      [](const Eigen::VectorXd& th, const std::vector<int>& x) {
        return th[1] * x[1];
      },
      {0, -1, +1, 0}));
  m.reactions.push_back(make_reaction(
      [](const Eigen::VectorXd& th, const std::vector<int>& x) {
        return th[2] * x[2];
      },
      {0, 0, -1, +1}));
  m.init = {population - init_infected, 0, init_infected, 0};
  m.cap = {population, population, population, population};
  m.observed = {2, 3};
  return m;
}

ModelSpec lv_model(int init_prey, int init_predators) {
  ModelSpec m;
  m.name = "lv";
  m.species = {"X", "Y"};
  m.params = {"K", "a", "b", "c"};
  // Prey births a*x and deaths a*x^2/K combine to the logistic drift
  // a*x*(1 - x/K) around the carrying capacity K.
  m.reactions.push_back(make_reaction(
      [](const Eigen::VectorXd& th, const std::vector<int>& x) {
        return th[1] * x[0];
      },
      {+1, 0}));
  m.reactions.push_back(make_reaction(
      [](const Eigen::VectorXd& th, const std::vector<int>& x) {
        return th[1] * x[0] * (x[0] / th[0]);
      },
      {-1, 0}));
  m.reactions.push_back(make_reaction(
      [](const Eigen::VectorXd& th, const std::vector<int>& x) {
        return th[2] * x[0] * x[1];
      },
      {-1, +1}));
  m.reactions.push_back(make_reaction(
      [](const Eigen::VectorXd& th, const std::vector<int>& x) {
        return th[3] * x[1];
      },
      {0, -1}));
  m.init = {init_prey, init_predators};
  m.cap = {-1, -1};
  m.observed = {0, 1};
  return m;
}

ModelSpec builtin_model(const std::string& name) {
  if (name == "death") return death_model();
  if (name == "si") return si_model();
  if (name == "sir") return sir_model();
  if (name == "seir") return seir_model();
  if (name == "lv") return lv_model();
  throw std::invalid_argument("unknown model: " + name);
}

void validate_design(const Eigen::VectorXd& times, double t_lo, double t_hi,
                     double min_gap) {
  if (times.size() == 0) throw std::invalid_argument("design is empty");
  for (Eigen::Index i = 0; i < times.size(); ++i) {
    if (!(times[i] >= t_lo && times[i] <= t_hi))
      throw std::invalid_argument("design time outside the window");
    if (i > 0) {
      if (!(times[i] > times[i - 1]))
        throw std::invalid_argument("design times must be strictly increasing");
      if (times[i] - times[i - 1] < min_gap - 1e-12)
        throw std::invalid_argument("design gap below the minimum spacing");
    }
  }
}

Trajectory simulate_ssa(const ModelSpec& model, const Eigen::VectorXd& theta,
                        const Eigen::VectorXd& times, std::uint64_t seed) {
  const Eigen::Index L = times.size();
  const int R = static_cast<int>(model.reactions.size());
  Trajectory out;
  out.times = times;
  out.theta = theta;
  out.obs.resize(L, model.n_observed());

  std::vector<int> x = model.init;
  std::vector<double> a(R);
  CounterRng rng(seed);
  double t = 0.0;
  Eigen::Index k = 0;
  while (k < L) {
    double total = 0.0;
    for (int r = 0; r < R; ++r) {
      double rate = model.reactions[r].propensity(theta, x);
      a[r] = rate > 0.0 ? rate : 0.0;
      total += a[r];
    }
    if (total <= 0.0) break;
    const double t_next = t + rng.next_exponential(total);
    while (k < L && times[k] < t_next) record_row(model, x, out.obs, k++);
    if (k >= L) break;
    int r = R - 1;
    if (R > 1) {
      double target = rng.next_unit() * total;
      double cum = 0.0;
      for (int i = 0; i < R; ++i) {
        cum += a[i];
        if (target <= cum) { r = i; break; }
      }
    }
    for (int i = 0; i < model.n_species(); ++i) x[i] += model.reactions[r].change[i];
    clamp_state(model, x);
    t = t_next;
  }
  while (k < L) record_row(model, x, out.obs, k++);
  return out;
}

Trajectory simulate_tau_leap(const ModelSpec& model, const Eigen::VectorXd& theta,
                             const Eigen::VectorXd& times, double tau,
                             std::uint64_t seed) {
  const Eigen::Index L = times.size();
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
  for (Eigen::Index i = 1; i < L; ++i)
    if (times[i] - times[i - 1] < tau - 1e-12)
      throw std::invalid_argument("tau exceeds the smallest design gap");

  const int R = static_cast<int>(model.reactions.size());
  Trajectory out;
  out.times = times;
  out.theta = theta;
  out.obs.resize(L, model.n_observed());

  std::vector<int> x = model.init;
  std::vector<double> rates(R);
  CounterRng rng(seed);
  double t = 0.0;
  for (Eigen::Index k = 0; k < L; ++k) {
    while (t < times[k] - 1e-12) {
      const double step = std::min(tau, times[k] - t);
      for (int r = 0; r < R; ++r) {
        const double rate = model.reactions[r].propensity(theta, x);
        rates[r] = rate > 0.0 ? rate : 0.0;
      }
      for (int r = 0; r < R; ++r) {
        if (rates[r] <= 0.0) continue;
        const long n_fires = rng.next_poisson(rates[r] * step);
        if (n_fires == 0) continue;
        for (int i = 0; i < model.n_species(); ++i)
          x[i] += static_cast<int>(n_fires) * model.reactions[r].change[i];
      }
      clamp_state(model, x);
      t += step;
    }
    t = times[k];
    record_row(model, x, out.obs, k);
  }
  return out;
}

Trajectory simulate(const ModelSpec& model, const Eigen::VectorXd& theta,
                    const Eigen::VectorXd& times, const SimOptions& opts,
                    std::uint64_t seed) {
  return opts.use_tau_leap ? simulate_tau_leap(model, theta, times, opts.tau, seed)
                           : simulate_ssa(model, theta, times, seed);
}

}  // namespace ctdesign
