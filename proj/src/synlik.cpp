#include "ctdesign/synlik.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <cmath>
#include <stdexcept>

#include "ctdesign/rng.hpp"

namespace ctdesign {

SummarySimulator make_summary_simulator(const ModelSpec& model,
                                        const Eigen::VectorXd& times,
                                        const SummaryScheme& scheme,
                                        const SimOptions& sim) {
  return [model, times, scheme, sim](const Eigen::VectorXd& phi,
                                     std::uint64_t seed) {
    return summarize(simulate(model, phi.array().exp(), times, sim, seed), scheme);
  };
}

SynlikFit fit_synlik(const SummarySimulator& sim, const Eigen::VectorXd& phi,
                     int n, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("fit_synlik needs n >= 2");
  Eigen::MatrixXd draws;
  for (int j = 0; j < n; ++j) {
    const Eigen::VectorXd s =
        sim(phi, derive_seed(seed, {0x73796eull, static_cast<std::uint64_t>(j)}));
    if (j == 0) draws.resize(n, s.size());
    draws.row(j) = s.transpose();
  }
  SynlikFit fit;
  fit.n = n;
  fit.mu = draws.colwise().mean();
  const Eigen::MatrixXd centered = draws.rowwise() - fit.mu.transpose();
  fit.sigma = centered.transpose() * centered / double(n - 1);
  const double dim = static_cast<double>(fit.sigma.rows());
  fit.ridge = std::max(1e-8, 1e-6 * fit.sigma.trace() / dim);
  fit.sigma.diagonal().array() += fit.ridge;
  return fit;
}

double synlik_logpdf(const SynlikFit& fit, const Eigen::VectorXd& s_obs) {
  if (s_obs.size() != fit.mu.size())
    throw std::invalid_argument("summary dimension mismatch");
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(fit.sigma);
  if (ldlt.info() != Eigen::Success || (ldlt.vectorD().array() <= 0.0).any())
    return -std::numeric_limits<double>::infinity();
  const Eigen::VectorXd diff = s_obs - fit.mu;
  const double quad = diff.dot(ldlt.solve(diff));
  const double logdet = ldlt.vectorD().array().log().sum();
  const double dim = static_cast<double>(fit.mu.size());
  return -0.5 * (logdet + quad + dim * std::log(2.0 * M_PI));
}

LocalRegression local_jacobian(const SummarySimulator& sim,
                               const Eigen::VectorXd& phi, int n_loc,
                               double perturb_sd, std::uint64_t seed) {
  const int q = static_cast<int>(phi.size());
  if (n_loc < q + 2) throw std::invalid_argument("local_jacobian needs n_loc > q + 1");
  const double spread = std::max(perturb_sd, 1e-6);

  Eigen::MatrixXd deltas(n_loc, q);
  Eigen::MatrixXd responses;
  for (int i = 0; i < n_loc; ++i) {
    CounterRng rng(derive_seed(seed, {0x706572ull, static_cast<std::uint64_t>(i)}));
    for (int j = 0; j < q; ++j) deltas(i, j) = spread * rng.next_normal();
    const Eigen::VectorXd s =
        sim(phi + deltas.row(i).transpose(),
            derive_seed(seed, {0x6c6f63ull, static_cast<std::uint64_t>(i)}));
    if (i == 0) responses.resize(n_loc, s.size());
    responses.row(i) = s.transpose();
  }
  const int dim_s = static_cast<int>(responses.cols());

  // forward fit: each summary on [1, delta]
  Eigen::MatrixXd x(n_loc, q + 1);
  x.col(0).setOnes();
  x.rightCols(q) = deltas;
  const Eigen::MatrixXd coef = x.colPivHouseholderQr().solve(responses);

  LocalRegression reg;
  reg.jacobian = coef.bottomRows(q).transpose();

  // reverse fit: each parameter perturbation on [1, summaries]
  Eigen::MatrixXd z(n_loc, dim_s + 1);
  z.col(0).setOnes();
  z.rightCols(dim_s) = responses;
  const auto zqr = z.colPivHouseholderQr();
  reg.r2.resize(q);
  for (int j = 0; j < q; ++j) {
    const Eigen::VectorXd target = deltas.col(j);
    const Eigen::VectorXd fitted = z * zqr.solve(target);
    const double mean = target.mean();
    const double tss = (target.array() - mean).square().sum();
    const double rss = (target - fitted).squaredNorm();
    reg.r2[j] = tss > 0.0 ? std::max(0.0, 1.0 - rss / tss) : 0.0;
  }
  return reg;
}

Eigen::MatrixXd gauss_newton_data_hessian(const LocalRegression& reg,
                                          const SynlikFit& at_mode) {
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(at_mode.sigma);
  return -reg.jacobian.transpose() * ldlt.solve(reg.jacobian);
}

Eigen::MatrixXd gauss_newton_hessian(const LocalRegression& reg,
                                     const SynlikFit& at_mode,
                                     const ParamPrior& prior) {
  Eigen::MatrixXd hess = gauss_newton_data_hessian(reg, at_mode);
  hess.diagonal() -= prior.sd.array().square().inverse().matrix();
  return hess;
}

double r2_threshold(int n_params) { return n_params == 1 ? 0.7 : 0.1; }

}  // namespace ctdesign
