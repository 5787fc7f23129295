#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "ctdesign/kinetics.hpp"

namespace ctdesign {

//! Finite state space reachable from the model's initial state, with the
//! uniformized jump kernel rows used by the exact transition computations.
struct ExactChain {
  std::vector<std::vector<int>> states;
  std::vector<std::vector<std::pair<int, double>>> kernel;  //!< rows of I + Q/lambda
  double lambda = 0.0;                                      //!< uniformization rate

  int n_states() const { return static_cast<int>(states.size()); }
  int index_of(const std::vector<int>& x) const;
};

//! Enumerate the reachable states (breadth-first over the reaction moves)
//! and build the uniformized kernel at the given parameters.  Requires a
//! model whose species are all capped.
ExactChain build_exact_chain(const ModelSpec& model, const Eigen::VectorXd& theta);

//! Transition probability matrix over the reachable states after time dt,
//! computed by uniformization with Poisson tail mass below 1e-12.
Eigen::MatrixXd exact_transition_matrix(const ModelSpec& model,
                                        const Eigen::VectorXd& theta, double dt);

//! Log probability of the single transition from -> to over dt.  Returns
//! -inf for impossible transitions.
double exact_transition_log_prob(const ExactChain& chain, int from, int to,
                                 double dt);

//! Exact observed-data log likelihood: the product of transition
//! probabilities along the recorded states, starting from the model's
//! initial state at time zero.  Supported for models whose observation map
//! determines the full state (death, si, sir).
double exact_log_likelihood(const ModelSpec& model, const Eigen::VectorXd& theta,
                            const Trajectory& traj);

}  // namespace ctdesign
