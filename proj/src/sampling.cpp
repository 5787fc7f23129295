#include "ctdesign/sampling.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

#include "ctdesign/rng.hpp"

namespace ctdesign {

namespace {

constexpr int kMaxDim = 64;
constexpr double kScale = 0x1.0p-32;

//! 32 direction integers for one dimension, v[k] paired with bit k of the
//! point index.
void direction_vectors(int d, std::uint32_t v[32]) {
  if (d == 0) {
    for (int k = 0; k < 32; ++k) v[k] = 1u << (31 - k);
    return;
  }
  const detail::SobolRow& row = detail::kSobolRows[d - 1];
  const int s = row.degree;
  for (int k = 0; k < s && k < 32; ++k) v[k] = row.m[k] << (31 - k);
  for (int k = s; k < 32; ++k) {
    v[k] = v[k - s] ^ (v[k - s] >> s);
    for (int l = 1; l < s; ++l)
      if ((row.poly >> (s - l - 1)) & 1) v[k] ^= v[k - l];
  }
}

std::uint32_t sobol_bits(const std::uint32_t v[32], std::uint32_t index) {
  std::uint32_t z = 0;
  while (index != 0) {
    z ^= v[std::countr_zero(index)];
    index &= index - 1;
  }
  return z;
}

//! Nested uniform scramble: walking the bits from the top, flip each bit
//! by a hash of the (level, prefix) node so every dyadic subtree gets an
//! independent swap.
std::uint32_t owen_scramble_bits(std::uint32_t z, std::uint64_t key) {
  std::uint32_t out = z;
  for (int b = 31; b >= 0; --b) {
    const int depth = 31 - b;
    const std::uint64_t node =
        (std::uint64_t(1) << depth) | (std::uint64_t(z) >> (b + 1));
    if (mix64(key ^ (node + kGolden)) & 1) out ^= 1u << b;
  }
  return out;
}

void check_dims(int dim, int n) {
  if (dim < 1 || dim > kMaxDim)
    throw std::invalid_argument("sobol dimension must be in [1, 64]");
  if (n < 0) throw std::invalid_argument("negative batch size");
}

}  // namespace

Eigen::MatrixXd sobol_points(int dim, int n) {
  check_dims(dim, n);
  Eigen::MatrixXd out(n, dim);
  std::uint32_t v[32];
  for (int d = 0; d < dim; ++d) {
    direction_vectors(d, v);
    for (int i = 0; i < n; ++i)
      out(i, d) = (sobol_bits(v, static_cast<std::uint32_t>(i)) + 0.5) * kScale;
  }
  return out;
}

Eigen::MatrixXd sobol_owen(int dim, int n, std::uint64_t seed) {
  check_dims(dim, n);
  Eigen::MatrixXd out(n, dim);
  std::uint32_t v[32];
  for (int d = 0; d < dim; ++d) {
    direction_vectors(d, v);
    const std::uint64_t key =
        derive_seed(seed, {0x736f626f6cull, static_cast<std::uint64_t>(d)});
    for (int i = 0; i < n; ++i) {
      const std::uint32_t z = sobol_bits(v, static_cast<std::uint32_t>(i));
      out(i, d) = (owen_scramble_bits(z, key) + 0.5) * kScale;
    }
  }
  return out;
}

Eigen::MatrixXd mc_uniforms(int dim, int n, std::uint64_t seed) {
  check_dims(dim, n);
  Eigen::MatrixXd out(n, dim);
  for (int i = 0; i < n; ++i) {
    CounterRng rng(derive_seed(seed, {0x6d63ull, static_cast<std::uint64_t>(i)}));
    for (int d = 0; d < dim; ++d) out(i, d) = rng.next_unit();
  }
  return out;
}

Eigen::MatrixXd sample_batch(Sampler method, int dim, int n, std::uint64_t seed) {
  return method == Sampler::Rqmc ? sobol_owen(dim, n, seed)
                                 : mc_uniforms(dim, n, seed);
}

Eigen::VectorXd ParamPrior::sample_phi(const Eigen::VectorXd& u) const {
  if (u.size() != mu.size())
    throw std::invalid_argument("uniform vector has the wrong dimension");
  Eigen::VectorXd phi(mu.size());
  for (Eigen::Index j = 0; j < mu.size(); ++j)
    phi[j] = mu[j] + sd[j] * norm_quantile(u[j]);
  return phi;
}

Eigen::VectorXd ParamPrior::sample_theta(const Eigen::VectorXd& u) const {
  return sample_phi(u).array().exp();
}

double ParamPrior::logpdf_phi(const Eigen::VectorXd& phi) const {
  if (phi.size() != mu.size())
    throw std::invalid_argument("parameter vector has the wrong dimension");
  double lp = 0.0;
  for (Eigen::Index j = 0; j < mu.size(); ++j) {
    const double z = (phi[j] - mu[j]) / sd[j];
    lp += -0.5 * z * z - std::log(sd[j]) - 0.5 * std::log(2.0 * M_PI);
  }
  return lp;
}

ParamPrior default_prior(const std::string& model_name) {
  auto make = [](std::initializer_list<double> mu, std::initializer_list<double> sd) {
    ParamPrior p;
    p.mu.resize(static_cast<Eigen::Index>(mu.size()));
    p.sd.resize(static_cast<Eigen::Index>(sd.size()));
    Eigen::Index i = 0;
    for (double v : mu) p.mu[i++] = v;
    i = 0;
    for (double v : sd) p.sd[i++] = v;
    return p;
  };
  if (model_name == "death") return make({-0.48}, {0.3});
  if (model_name == "si") return make({-1.1, -4.5}, {0.4, 0.63});
  if (model_name == "sir") return make({-0.09, -1.63}, {0.19, 0.32});
  if (model_name == "seir") return make({0.44, -0.69, -1.31}, {0.16, 0.2, 0.38});
  if (model_name == "lv") return make({6.87, 0.01, -5.03, -0.69}, {0.2, 0.12, 0.12, 0.16});
  throw std::invalid_argument("no default prior for model: " + model_name);
}

std::vector<Trajectory> prior_predictive(const ModelSpec& model,
                                         const ParamPrior& prior,
                                         const Eigen::VectorXd& times, int q,
                                         Sampler method, const SimOptions& sim,
                                         std::uint64_t seed) {
  const Eigen::MatrixXd u =
      sample_batch(method, prior.dim(), q, derive_seed(seed, {0x7468657461ull}));
  std::vector<Trajectory> out;
  out.reserve(q);
  for (int j = 0; j < q; ++j) {
    const Eigen::VectorXd theta = prior.sample_theta(u.row(j).transpose());
    out.push_back(simulate(model, theta, times, sim,
                           derive_seed(seed, {0x7472616aull, static_cast<std::uint64_t>(j)})));
  }
  return out;
}

}  // namespace ctdesign
