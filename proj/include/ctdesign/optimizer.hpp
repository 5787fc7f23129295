#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <vector>

#include "ctdesign/utility.hpp"

namespace ctdesign {

//! Constrained schedule space: size points in [t_lo, t_hi], consecutive
//! points at least min_gap apart.
struct DesignSpace {
  double t_lo = 0.0;
  double t_hi = 1.0;
  int size = 1;
  double min_gap = 0.0;

  void validate() const;
};

//! size points uniformly spaced from t_lo to t_hi inclusive.
Eigen::VectorXd equally_spaced(const DesignSpace& space);

//! 1-D Gaussian-process regression with a squared-exponential kernel.
//! Lengthscale is the median pairwise distance of the inputs, signal
//! variance the sample variance of the outputs, and the nugget is floored
//! at 1e-6 or the residual variance of a cubic polynomial fit, whichever
//! is larger.
class GpEmulator {
 public:
  GpEmulator(const Eigen::VectorXd& xs, const Eigen::VectorXd& ys);

  double operator()(double x) const;  //!< posterior mean
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  double nugget() const { return nugget_; }

 private:
  Eigen::VectorXd xs_, alpha_;
  double mean_ = 0.0;
  double lengthscale_ = 1.0;
  double signal_var_ = 0.0;
  double nugget_ = 0.0;
  double lo_ = 0.0, hi_ = 0.0;
};

//! Estimate of the expected utility of a schedule, at a caller-chosen draw
//! count and seed.  Must be pure in (times, q_draws, seed).
using DesignObjective = std::function<UtilityEstimate(
    const Eigen::VectorXd& times, int q_draws, std::uint64_t seed)>;

struct AceOptions {
  int q_emulator = 500;  //!< draws per candidate evaluation
  int q_test = 5000;     //!< draws for the paired acceptance test
  int candidates = 20;   //!< candidate grid size per coordinate
  int sweeps = 10;
  int dense_grid = 200;  //!< emulator argmax resolution
};

struct ExchangeTrace {
  int sweep = 0;
  int coord = 0;
  double proposed = 0.0;  //!< proposed coordinate value
  bool accepted = false;
  double u_proposed = 0.0;  //!< paired test estimate for the proposal
  double u_current = 0.0;   //!< paired test estimate before the decision
};

struct OptResult {
  Eigen::VectorXd design;
  UtilityEstimate utility;  //!< test-seed estimate at the final design
  std::vector<ExchangeTrace> trace;
  int n_emulator_evals = 0;
  int n_test_evals = 0;
};

//! Approximate coordinate exchange: per coordinate, profile the utility on
//! a candidate grid between the neighbouring points, smooth it with the
//! 1-D emulator, and accept the emulator argmax iff it beats the current
//! design on common-random-number test draws.  One test seed is shared by
//! the whole run, so accepted utilities are nondecreasing by construction.
OptResult ace_optimize(const DesignObjective& objective,
                       const DesignSpace& space, const Eigen::VectorXd& d0,
                       const AceOptions& opts, std::uint64_t seed);

}  // namespace ctdesign
