#include "ctdesign/exact.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace ctdesign {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::uint64_t state_key(const std::vector<int>& x) {
  std::uint64_t h = 1469598103934665603ull;
  for (int v : x) {
    h ^= static_cast<std::uint64_t>(v) + 0x9E3779B9u;
    h *= 1099511628211ull;
  }
  return h;
}

struct StateIndex {
  std::unordered_map<std::uint64_t, int> map;
  bool insert(const std::vector<int>& x, int idx) {
    return map.emplace(state_key(x), idx).second;
  }
  int find(const std::vector<int>& x) const {
    auto it = map.find(state_key(x));
    return it == map.end() ? -1 : it->second;
  }
};

bool feasible(const ModelSpec& model, const std::vector<int>& x) {
  for (int i = 0; i < model.n_species(); ++i) {
    if (x[i] < 0) return false;
    if (model.cap[i] >= 0 && x[i] > model.cap[i]) return false;
  }
  return true;
}

//! Poisson(rate) weights on the log scale, consumed in index order.
struct PoissonWeights {
  double log_rate, rate;
  explicit PoissonWeights(double r) : log_rate(std::log(r)), rate(r) {}
  double weight(int k) const {
    return std::exp(k * log_rate - rate - std::lgamma(k + 1.0));
  }
};

std::vector<int> state_from_observation(const ModelSpec& model,
                                        const Eigen::MatrixXi& obs,
                                        Eigen::Index row) {
  if (model.name == "death" || model.name == "si") return {obs(row, 0)};
  if (model.name == "sir") {
    const int population = std::accumulate(model.init.begin(), model.init.end(), 0);
    const int i = obs(row, 0), r = obs(row, 1);
    return {population - i - r, i, r};
  }
  throw std::invalid_argument(
      "exact likelihood needs an observation map that determines the state; "
      "model '" + model.name + "' is not supported");
}

}  // namespace

int ExactChain::index_of(const std::vector<int>& x) const {
  for (int i = 0; i < n_states(); ++i)
    if (states[i] == x) return i;
  return -1;
}

ExactChain build_exact_chain(const ModelSpec& model, const Eigen::VectorXd& theta) {
  for (int c : model.cap)
    if (c < 0)
      throw std::invalid_argument("exact chain requires a capped state space");

  ExactChain chain;
  StateIndex index;
  chain.states.push_back(model.init);
  index.insert(model.init, 0);
  for (std::size_t head = 0; head < chain.states.size(); ++head) {
    const std::vector<int> x = chain.states[head];
    for (const Reaction& rx : model.reactions) {
      if (rx.propensity(theta, x) <= 0.0) continue;
      std::vector<int> y = x;
      for (int i = 0; i < model.n_species(); ++i) y[i] += rx.change[i];
      if (!feasible(model, y)) continue;
      if (index.find(y) < 0) {
        index.insert(y, static_cast<int>(chain.states.size()));
        chain.states.push_back(std::move(y));
      }
    }
  }
  if (chain.states.size() > 200000)
    throw std::invalid_argument("exact chain state space too large");

  const int n = chain.n_states();
  std::vector<double> exit(n, 0.0);
  std::vector<std::vector<std::pair<int, double>>> jumps(n);
  for (int s = 0; s < n; ++s) {
    const std::vector<int>& x = chain.states[s];
    for (const Reaction& rx : model.reactions) {
      const double rate = rx.propensity(theta, x);
      if (rate <= 0.0) continue;
      std::vector<int> y = x;
      for (int i = 0; i < model.n_species(); ++i) y[i] += rx.change[i];
      if (!feasible(model, y)) continue;
      const int t = index.find(y);
      jumps[s].push_back({t, rate});
      exit[s] += rate;
    }
  }
  double max_exit = 0.0;
  for (double e : exit) max_exit = std::max(max_exit, e);
  chain.lambda = 1.05 * max_exit;

  chain.kernel.resize(n);
  if (chain.lambda > 0.0) {
    for (int s = 0; s < n; ++s) {
      chain.kernel[s].push_back({s, 1.0 - exit[s] / chain.lambda});
      for (const auto& [t, rate] : jumps[s])
        chain.kernel[s].push_back({t, rate / chain.lambda});
    }
  }
  return chain;
}

double exact_transition_log_prob(const ExactChain& chain, int from, int to,
                                 double dt) {
  if (dt < 0.0) throw std::invalid_argument("dt must be nonnegative");
  if (chain.lambda == 0.0 || dt == 0.0)
    return from == to ? 0.0 : kNegInf;

  const int n = chain.n_states();
  const double rate = chain.lambda * dt;
  const PoissonWeights pois(rate);
  const int max_terms =
      static_cast<int>(rate + 60.0 * std::sqrt(rate + 1.0) + 100.0);

  Eigen::VectorXd w = Eigen::VectorXd::Zero(n), next(n);
  w[from] = 1.0;
  double prob = 0.0, cum = 0.0;
  for (int k = 0; k <= max_terms; ++k) {
    const double pk = pois.weight(k);
    prob += pk * w[to];
    cum += pk;
    if (cum >= 1.0 - 1e-12) break;
    next.setZero();
    for (int s = 0; s < n; ++s) {
      if (w[s] == 0.0) continue;
      for (const auto& [t, p] : chain.kernel[s]) next[t] += w[s] * p;
    }
    w.swap(next);
  }
  return prob > 0.0 ? std::log(prob) : kNegInf;
}

Eigen::MatrixXd exact_transition_matrix(const ModelSpec& model,
                                        const Eigen::VectorXd& theta, double dt) {
  if (dt < 0.0) throw std::invalid_argument("dt must be nonnegative");
  const ExactChain chain = build_exact_chain(model, theta);
  const int n = chain.n_states();
  if (chain.lambda == 0.0 || dt == 0.0)
    return Eigen::MatrixXd::Identity(n, n);

  const double rate = chain.lambda * dt;
  const PoissonWeights pois(rate);
  const int max_terms =
      static_cast<int>(rate + 60.0 * std::sqrt(rate + 1.0) + 100.0);

  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd result = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd next(n, n);
  double cum = 0.0;
  for (int k = 0; k <= max_terms; ++k) {
    const double pk = pois.weight(k);
    result += pk * power;
    cum += pk;
    if (cum >= 1.0 - 1e-12) break;
    next.setZero();
    for (int s = 0; s < n; ++s) {
      for (const auto& [t, p] : chain.kernel[s]) next.row(s) += p * power.row(t);
    }
    power.swap(next);
  }
  return result;
}

double exact_log_likelihood(const ModelSpec& model, const Eigen::VectorXd& theta,
                            const Trajectory& traj) {
  const ExactChain chain = build_exact_chain(model, theta);
  StateIndex index;
  for (int i = 0; i < chain.n_states(); ++i) index.insert(chain.states[i], i);

  double loglik = 0.0;
  int prev = index.find(model.init);
  double t_prev = 0.0;
  for (Eigen::Index k = 0; k < traj.times.size(); ++k) {
    const std::vector<int> target = state_from_observation(model, traj.obs, k);
    const int cur = index.find(target);
    if (cur < 0) return kNegInf;
    loglik += exact_transition_log_prob(chain, prev, cur, traj.times[k] - t_prev);
    if (loglik == kNegInf) return kNegInf;
    prev = cur;
    t_prev = traj.times[k];
  }
  return loglik;
}

}  // namespace ctdesign
