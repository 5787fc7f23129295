#include "ctdesign/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "ctdesign/kinetics.hpp"
#include "ctdesign/rng.hpp"
#include "ctdesign/stats.hpp"

namespace ctdesign {

namespace {

constexpr std::uint64_t kTestTag = 0x74657374ull;
constexpr std::uint64_t kCandTag = 0x63616e64ull;

}  // namespace

void DesignSpace::validate() const {
  if (size < 1) throw std::invalid_argument("design needs at least one point");
  if (min_gap < 0.0) throw std::invalid_argument("negative minimum spacing");
  if (!(t_lo < t_hi)) throw std::invalid_argument("empty design window");
  if (t_hi - t_lo < (size - 1) * min_gap)
    throw std::invalid_argument("window too small for the spacing constraint");
}

Eigen::VectorXd equally_spaced(const DesignSpace& space) {
  space.validate();
  Eigen::VectorXd d(space.size);
  if (space.size == 1) {
    d[0] = space.t_lo;
    return d;
  }
  const double step = (space.t_hi - space.t_lo) / (space.size - 1);
  for (int i = 0; i < space.size; ++i) d[i] = space.t_lo + i * step;
  d[space.size - 1] = space.t_hi;
  return d;
}

GpEmulator::GpEmulator(const Eigen::VectorXd& xs, const Eigen::VectorXd& ys) {
  const int n = static_cast<int>(xs.size());
  if (n < 5 || ys.size() != n)
    throw std::invalid_argument("emulator needs at least five points");
  lo_ = xs.minCoeff();
  hi_ = xs.maxCoeff();

  std::vector<double> dists;
  dists.reserve(n * (n - 1) / 2);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) dists.push_back(std::abs(xs[i] - xs[j]));
  lengthscale_ = median(std::move(dists));
  if (lengthscale_ <= 0.0)
    throw std::invalid_argument("emulator inputs are degenerate");

  mean_ = ys.mean();
  signal_var_ = sample_variance(ys);

  // cubic polynomial residuals set the noise floor
  const double x_mid = 0.5 * (lo_ + hi_);
  const double x_scale = std::max(hi_ - lo_, 1e-12);
  Eigen::MatrixXd v(n, 4);
  for (int i = 0; i < n; ++i) {
    const double t = (xs[i] - x_mid) / x_scale;
    v(i, 0) = 1.0;
    v(i, 1) = t;
    v(i, 2) = t * t;
    v(i, 3) = t * t * t;
  }
  const Eigen::VectorXd coef = v.colPivHouseholderQr().solve(ys);
  const double rss = (ys - v * coef).squaredNorm();
  const double resid_var = n > 4 ? rss / (n - 4) : 0.0;
  nugget_ = std::max(1e-6, resid_var);

  Eigen::MatrixXd k(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double r = (xs[i] - xs[j]) / lengthscale_;
      k(i, j) = signal_var_ * std::exp(-0.5 * r * r);
    }
    k(i, i) += nugget_;
  }
  xs_ = xs;
  alpha_ = Eigen::LLT<Eigen::MatrixXd>(k).solve(
      (ys.array() - mean_).matrix().eval());
}

double GpEmulator::operator()(double x) const {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < xs_.size(); ++i) {
    const double r = (x - xs_[i]) / lengthscale_;
    acc += alpha_[i] * signal_var_ * std::exp(-0.5 * r * r);
  }
  return mean_ + acc;
}

OptResult ace_optimize(const DesignObjective& objective,
                       const DesignSpace& space, const Eigen::VectorXd& d0,
                       const AceOptions& opts, std::uint64_t seed) {
  space.validate();
  if (d0.size() != space.size)
    throw std::invalid_argument("initial design size mismatch");
  validate_design(d0, space.t_lo, space.t_hi, space.min_gap);
  if (opts.candidates < 5)
    throw std::invalid_argument("need at least five candidates per coordinate");

  const std::uint64_t test_seed = derive_seed(seed, {kTestTag});

  OptResult result;
  result.design = d0;
  UtilityEstimate current = objective(d0, opts.q_test, test_seed);
  ++result.n_test_evals;

  for (int sweep = 0; sweep < opts.sweeps; ++sweep) {
    for (int coord = 0; coord < space.size; ++coord) {
      const double lo = coord == 0 ? space.t_lo
                                   : result.design[coord - 1] + space.min_gap;
      const double hi = coord == space.size - 1
                            ? space.t_hi
                            : result.design[coord + 1] - space.min_gap;
      const double width = hi - lo;
      if (!(width > 1e-9)) continue;

      const std::uint64_t cand_seed = derive_seed(
          seed, {kCandTag, std::uint64_t(sweep), std::uint64_t(coord)});
      Eigen::VectorXd xs(opts.candidates), ys(opts.candidates);
      Eigen::VectorXd candidate = result.design;
      for (int c = 0; c < opts.candidates; ++c) {
        xs[c] = lo + (c + 0.5) * width / opts.candidates;
        candidate[coord] = xs[c];
        validate_design(candidate, space.t_lo, space.t_hi, space.min_gap);
        ys[c] = objective(candidate, opts.q_emulator, cand_seed).value;
        ++result.n_emulator_evals;
      }

      const GpEmulator emulator(xs, ys);
      double best_x = xs[0];
      double best_mean = -std::numeric_limits<double>::infinity();
      for (int g = 0; g < opts.dense_grid; ++g) {
        const double x = lo + (g + 0.5) * width / opts.dense_grid;
        const double m = emulator(x);
        if (m > best_mean) {
          best_mean = m;
          best_x = x;
        }
      }

      Eigen::VectorXd proposal = result.design;
      proposal[coord] = best_x;
      validate_design(proposal, space.t_lo, space.t_hi, space.min_gap);
      const UtilityEstimate tested = objective(proposal, opts.q_test, test_seed);
      ++result.n_test_evals;

      ExchangeTrace step;
      step.sweep = sweep;
      step.coord = coord;
      step.proposed = best_x;
      step.u_proposed = tested.value;
      step.u_current = current.value;
      step.accepted = tested.value > current.value;
      result.trace.push_back(step);
      if (step.accepted) {
        result.design = std::move(proposal);
        current = tested;
      }
    }
  }
  result.utility = std::move(current);
  return result;
}

}  // namespace ctdesign
