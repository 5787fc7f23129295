#include "ctdesign/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ctdesign {

Eigen::VectorXd average_ranks(const Eigen::VectorXd& x) {
  const Eigen::Index n = x.size();
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index i, Eigen::Index j) { return x[i] < x[j]; });
  Eigen::VectorXd ranks(n);
  Eigen::Index i = 0;
  while (i < n) {
    Eigen::Index j = i;
    while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
    const double r = 0.5 * (i + j) + 1.0;
    for (Eigen::Index k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size() || a.size() < 2)
    throw std::invalid_argument("pearson needs two equal-length samples");
  const double ma = a.mean(), mb = b.mean();
  const Eigen::VectorXd da = a.array() - ma, db = b.array() - mb;
  const double denom = std::sqrt(da.squaredNorm() * db.squaredNorm());
  if (denom == 0.0) return 0.0;
  return da.dot(db) / denom;
}

double spearman(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return pearson(average_ranks(a), average_ranks(b));
}

double ks_two_sample_pvalue(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty())
    throw std::invalid_argument("ks test needs nonempty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  const double ne = std::sqrt(na * nb / (na + nb));
  const double lambda = (ne + 0.12 + 0.11 / ne) * d;
  double p = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    p += 2.0 * sign * term;
    sign = -sign;
    if (term < 1e-12) break;
  }
  return std::clamp(p, 0.0, 1.0);
}

double median(std::vector<double> x) {
  if (x.empty()) throw std::invalid_argument("median of an empty sample");
  const std::size_t n = x.size();
  std::nth_element(x.begin(), x.begin() + n / 2, x.end());
  double hi = x[n / 2];
  if (n % 2 == 1) return hi;
  std::nth_element(x.begin(), x.begin() + n / 2 - 1, x.end());
  return 0.5 * (x[n / 2 - 1] + hi);
}

double sample_variance(const Eigen::VectorXd& x) {
  const Eigen::Index n = x.size();
  if (n < 2) return 0.0;
  const double m = x.mean();
  return (x.array() - m).square().sum() / static_cast<double>(n - 1);
}

double quantile(std::vector<double> x, double p) {
  if (x.empty()) throw std::invalid_argument("quantile of an empty sample");
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("quantile level outside [0, 1]");
  std::sort(x.begin(), x.end());
  const double h = p * static_cast<double>(x.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= x.size()) return x.back();
  const double w = h - static_cast<double>(lo);
  return (1.0 - w) * x[lo] + w * x[lo + 1];
}

}  // namespace ctdesign
