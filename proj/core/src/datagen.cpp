#include "bvs/datagen.hpp"

#include <cmath>
#include <random>
#include <string>

#include "bvs/errors.hpp"
#include "bvs/rng.hpp"

namespace bvs {

std::vector<double> default_coefficients(std::size_t k) {
  std::vector<double> beta(k, 1.0);
  const std::size_t zeros = (2 * k) / 5;
  for (std::size_t i = 0; i < zeros; ++i) beta[i] = 0.0;
  return beta;
}

std::vector<int> contiguous_groups(std::size_t p, std::size_t q) {
  if (q == 0 || p < q) throw InputError("need p >= q >= 1 to form non-empty groups");
  const std::size_t block = p / q;
  std::vector<int> map(p);
  for (std::size_t j = 0; j < p; ++j) {
    map[j] = static_cast<int>(std::min(j / block, q - 1));
  }
  return map;
}

void check_sim_spec(const SimSpec& spec) {
  if (spec.n < 1 || spec.p < 1 || spec.q < 1) throw InputError("n, p and q must be >= 1");
  if (spec.p < spec.q) throw InputError("p must be at least q so every group is non-empty");
  if (!(spec.rho >= 0.0 && spec.rho < 1.0)) throw InputError("rho must lie in [0, 1)");
  if (!spec.beta_u.empty() && spec.beta_u.size() != spec.q) {
    throw InputError("beta_u must have q entries");
  }
  if (!spec.beta_z.empty() && spec.beta_z.size() != spec.r) {
    throw InputError("beta_z must have r entries");
  }
  if (!spec.beta_x.empty() && spec.beta_x.size() != spec.p) {
    throw InputError("beta_x must have p entries");
  }
}

Simulation simulate(const SimSpec& spec) {
  check_sim_spec(spec);
  const auto n = static_cast<Eigen::Index>(spec.n);
  const auto p = static_cast<Eigen::Index>(spec.p);
  const auto q = static_cast<Eigen::Index>(spec.q);
  const auto r = static_cast<Eigen::Index>(spec.r);
  const auto group_map = contiguous_groups(spec.p, spec.q);

  CoefVector beta;
  const auto bu = spec.beta_u.empty() ? default_coefficients(spec.q) : spec.beta_u;
  const auto bz = spec.beta_z.empty() ? default_coefficients(spec.r) : spec.beta_z;
  beta.beta_u = Eigen::Map<const Eigen::VectorXd>(bu.data(), q);
  beta.beta_z = Eigen::Map<const Eigen::VectorXd>(bz.data(), r);
  if (spec.beta_x.empty()) {
    beta.beta_x = Eigen::VectorXd::Zero(p);
    for (Eigen::Index j = 0; j < p; ++j) {
      const int g = group_map[static_cast<std::size_t>(j)];
      const bool last_of_group =
          j + 1 == p || group_map[static_cast<std::size_t>(j) + 1] != g;
      if (last_of_group && beta.beta_u(g) != 0.0) beta.beta_x(j) = 1.0;
    }
  } else {
    beta.beta_x = Eigen::Map<const Eigen::VectorXd>(spec.beta_x.data(), p);
  }

  Theta truth = Theta::zeros(spec.q, spec.p);
  for (Eigen::Index k = 0; k < q; ++k) truth.gamma[static_cast<std::size_t>(k)] = beta.beta_u(k) != 0.0;
  for (Eigen::Index j = 0; j < p; ++j) {
    if (beta.beta_x(j) != 0.0) {
      truth.eta[static_cast<std::size_t>(j)] = 1;
      truth.gamma[static_cast<std::size_t>(group_map[static_cast<std::size_t>(j)])] = 1;
    }
  }

  // One-factor construction of Sigma = (1 - rho) I + rho 11^T over [X U Z].
  Rng rng = make_stream(spec.seed, 0xda7a, 0);
  std::normal_distribution<double> normal;
  const double shared_scale = std::sqrt(spec.rho);
  const double own_scale = std::sqrt(1.0 - spec.rho);
  Eigen::MatrixXd x(n, p), u(n, q), z(n, r);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double shared = normal(rng);
    for (Eigen::Index j = 0; j < p; ++j) x(i, j) = shared_scale * shared + own_scale * normal(rng);
    for (Eigen::Index k = 0; k < q; ++k) u(i, k) = shared_scale * shared + own_scale * normal(rng);
    for (Eigen::Index l = 0; l < r; ++l) z(i, l) = shared_scale * shared + own_scale * normal(rng);
    const double lin = x.row(i).dot(beta.beta_x) + u.row(i).dot(beta.beta_u) +
                       z.row(i).dot(beta.beta_z);
    y(i) = uniform01(rng) < cdf(spec.link, lin) ? 1.0 : 0.0;
  }
  return {Dataset(std::move(y), std::move(x), std::move(u), std::move(z), group_map),
          std::move(truth), std::move(beta)};
}

}  // namespace bvs
