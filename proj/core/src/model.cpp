#include "bvs/model.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "bvs/errors.hpp"

namespace bvs {

namespace {

void check_binary(const Eigen::VectorXd& y) {
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y(i) != 0.0 && y(i) != 1.0) {
      throw InputError("response entry " + std::to_string(i) + " is not 0/1");
    }
  }
}

void check_dims(const Eigen::VectorXd& beta, const Theta& theta, const Dataset& data) {
  check_theta(theta, data);
  const auto d = active_dim(theta, data.r());
  if (static_cast<std::size_t>(beta.size()) != d) {
    throw InputError("active coefficient vector has length " + std::to_string(beta.size()) +
                     ", expected " + std::to_string(d));
  }
}

}  // namespace

Dataset::Dataset(Eigen::VectorXd y, Eigen::MatrixXd x, Eigen::MatrixXd u, Eigen::MatrixXd z,
                 std::vector<int> group_map)
    : y_(std::move(y)),
      x_(std::move(x)),
      u_(std::move(u)),
      z_(std::move(z)),
      group_map_(std::move(group_map)) {
  const auto n = y_.size();
  if (x_.rows() != n || u_.rows() != n || z_.rows() != n) {
    throw InputError("design matrices must all have " + std::to_string(n) + " rows");
  }
  if (x_.cols() < 1) throw InputError("need at least one individual variable (p >= 1)");
  if (u_.cols() < 1) throw InputError("need at least one group (q >= 1)");
  if (static_cast<Eigen::Index>(group_map_.size()) != x_.cols()) {
    throw InputError("group map has " + std::to_string(group_map_.size()) +
                     " entries, expected p = " + std::to_string(x_.cols()));
  }
  check_binary(y_);

  const auto q = static_cast<int>(u_.cols());
  group_sizes_.assign(static_cast<std::size_t>(q), 0);
  for (std::size_t j = 0; j < group_map_.size(); ++j) {
    const int g = group_map_[j];
    if (g < 0 || g >= q) {
      throw InputError("variable " + std::to_string(j) + " maps to group " + std::to_string(g) +
                       " outside [0, " + std::to_string(q) + ")");
    }
    ++group_sizes_[static_cast<std::size_t>(g)];
  }
  for (int k = 0; k < q; ++k) {
    if (group_sizes_[static_cast<std::size_t>(k)] == 0) {
      throw InputError("group " + std::to_string(k) + " has no variables");
    }
  }

  design_.resize(n, z_.cols() + u_.cols() + x_.cols());
  design_ << z_, u_, x_;
}

bool Dataset::operator==(const Dataset& other) const {
  return y_ == other.y_ && x_ == other.x_ && u_ == other.u_ && z_ == other.z_ &&
         group_map_ == other.group_map_;
}

Theta Theta::zeros(std::size_t q, std::size_t p) {
  return {std::vector<std::uint8_t>(q, 0), std::vector<std::uint8_t>(p, 0)};
}

Theta Theta::ones(std::size_t q, std::size_t p) {
  return {std::vector<std::uint8_t>(q, 1), std::vector<std::uint8_t>(p, 1)};
}

bool satisfies_constraint(const Theta& theta, std::span<const int> group_map) {
  for (std::size_t j = 0; j < theta.eta.size(); ++j) {
    if (theta.eta[j] && !theta.gamma[static_cast<std::size_t>(group_map[j])]) return false;
  }
  return true;
}

std::size_t active_dim(const Theta& theta, std::size_t r) {
  std::size_t d = r;
  for (auto g : theta.gamma) d += g;
  for (auto e : theta.eta) d += e;
  return d;
}

std::vector<int> active_indices(const Theta& theta, std::size_t r) {
  std::vector<int> idx;
  idx.reserve(active_dim(theta, r));
  const int q = static_cast<int>(theta.gamma.size());
  for (int l = 0; l < static_cast<int>(r); ++l) idx.push_back(l);
  for (int k = 0; k < q; ++k) {
    if (theta.gamma[static_cast<std::size_t>(k)]) idx.push_back(static_cast<int>(r) + k);
  }
  for (int j = 0; j < static_cast<int>(theta.eta.size()); ++j) {
    if (theta.eta[static_cast<std::size_t>(j)]) idx.push_back(static_cast<int>(r) + q + j);
  }
  return idx;
}

void check_theta(const Theta& theta, const Dataset& data) {
  if (theta.gamma.size() != data.q() || theta.eta.size() != data.p()) {
    throw InputError("theta has shape (" + std::to_string(theta.gamma.size()) + ", " +
                     std::to_string(theta.eta.size()) + "), expected (" +
                     std::to_string(data.q()) + ", " + std::to_string(data.p()) + ")");
  }
  if (!satisfies_constraint(theta, data.group_map())) {
    throw InputError("theta violates the bi-level constraint");
  }
}

PriorConfig PriorConfig::uniform(std::size_t q, std::size_t p, double p_gamma, double p_eta,
                                 double sigma2, Link link) {
  return {sigma2, std::vector<double>(q, p_gamma), std::vector<double>(p, p_eta), link};
}

void check_prior(const PriorConfig& prior, const Dataset& data) {
  if (!(prior.sigma2 > 0.0) || !std::isfinite(prior.sigma2)) {
    throw InputError("prior variance sigma2 must be positive and finite");
  }
  if (prior.p_gamma.size() != data.q() || prior.p_eta.size() != data.p()) {
    throw InputError("prior probability vectors do not match (q, p)");
  }
  auto inside = [](double v) { return v > 0.0 && v < 1.0; };
  for (double v : prior.p_gamma) {
    if (!inside(v)) throw InputError("group inclusion probabilities must lie in (0,1)");
  }
  for (double v : prior.p_eta) {
    if (!inside(v)) throw InputError("variable inclusion probabilities must lie in (0,1)");
  }
}

double log_likelihood(const CoefVector& beta, const Theta& theta, const Dataset& data,
                      Link link) {
  check_theta(theta, data);
  if (static_cast<std::size_t>(beta.beta_x.size()) != data.p() ||
      static_cast<std::size_t>(beta.beta_u.size()) != data.q() ||
      static_cast<std::size_t>(beta.beta_z.size()) != data.r()) {
    throw InputError("coefficient blocks do not match dataset dimensions");
  }
  Eigen::VectorXd masked(data.full_dim());
  const auto r = static_cast<Eigen::Index>(data.r());
  const auto q = static_cast<Eigen::Index>(data.q());
  masked.head(r) = beta.beta_z;
  for (Eigen::Index k = 0; k < q; ++k) {
    masked(r + k) = theta.gamma[static_cast<std::size_t>(k)] ? beta.beta_u(k) : 0.0;
  }
  for (Eigen::Index j = 0; j < beta.beta_x.size(); ++j) {
    masked(r + q + j) = theta.eta[static_cast<std::size_t>(j)] ? beta.beta_x(j) : 0.0;
  }
  const Eigen::VectorXd eta = data.design() * masked;
  double total = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const double s = data.y()(i) > 0.5 ? 1.0 : -1.0;
    total += log_cdf(link, s * eta(i));
  }
  return total;
}

double log_prior_theta(const Theta& theta, const PriorConfig& prior,
                       std::span<const int> group_map) {
  if (theta.gamma.size() != prior.p_gamma.size() || theta.eta.size() != prior.p_eta.size() ||
      group_map.size() != theta.eta.size()) {
    throw InputError("theta / prior / group map dimensions disagree");
  }
  if (!satisfies_constraint(theta, group_map)) return -std::numeric_limits<double>::infinity();
  double lp = 0.0;
  for (std::size_t k = 0; k < theta.gamma.size(); ++k) {
    lp += theta.gamma[k] ? std::log(prior.p_gamma[k]) : std::log1p(-prior.p_gamma[k]);
  }
  for (std::size_t j = 0; j < theta.eta.size(); ++j) {
    if (!theta.gamma[static_cast<std::size_t>(group_map[j])]) continue;
    lp += theta.eta[j] ? std::log(prior.p_eta[j]) : std::log1p(-prior.p_eta[j]);
  }
  return lp;
}

Eigen::MatrixXd gather_columns(const Dataset& data, std::span<const int> indices) {
  Eigen::MatrixXd out(data.design().rows(), static_cast<Eigen::Index>(indices.size()));
  for (std::size_t c = 0; c < indices.size(); ++c) {
    out.col(static_cast<Eigen::Index>(c)) = data.design().col(indices[c]);
  }
  return out;
}

double neg_log_posterior(const Eigen::MatrixXd& active_design, const Eigen::VectorXd& y,
                         const Eigen::VectorXd& beta, Link link, double sigma2) {
  const auto d = static_cast<double>(beta.size());
  double h = 0.5 * beta.squaredNorm() / sigma2 +
             0.5 * d * std::log(2.0 * std::numbers::pi * sigma2);
  if (y.size() == 0) return h;
  const Eigen::VectorXd eta = active_design * beta;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const double s = y(i) > 0.5 ? 1.0 : -1.0;
    h -= log_cdf(link, s * eta(i));
  }
  return h;
}

double neg_log_posterior_derivatives(const Eigen::MatrixXd& active_design,
                                     const Eigen::VectorXd& y, const Eigen::VectorXd& beta,
                                     Link link, double sigma2, Eigen::VectorXd& gradient,
                                     Eigen::MatrixXd& hessian) {
  const auto d = beta.size();
  const auto n = y.size();
  double h = 0.5 * beta.squaredNorm() / sigma2 +
             0.5 * static_cast<double>(d) * std::log(2.0 * std::numbers::pi * sigma2);
  gradient = beta / sigma2;
  hessian = Eigen::MatrixXd::Identity(d, d) / sigma2;
  if (n == 0 || d == 0) {
    for (Eigen::Index i = 0; i < n; ++i) h -= log_cdf(link, 0.0);
    return h;
  }

  const Eigen::VectorXd eta = active_design * beta;
  Eigen::VectorXd score(n);
  Eigen::VectorXd root_w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s = y(i) > 0.5 ? 1.0 : -1.0;
    const auto t = log_cdf_terms(link, s * eta(i));
    h -= t.value;
    score(i) = s * t.d1;
    root_w(i) = std::sqrt(-t.d2);
  }
  gradient.noalias() -= active_design.transpose() * score;
  const Eigen::MatrixXd weighted = root_w.asDiagonal() * active_design;
  hessian.selfadjointView<Eigen::Lower>().rankUpdate(weighted.transpose());
  for (Eigen::Index c = 1; c < d; ++c) {
    for (Eigen::Index rr = 0; rr < c; ++rr) hessian(rr, c) = hessian(c, rr);
  }
  return h;
}

double neg_log_posterior_h(const Eigen::VectorXd& beta_active, const Theta& theta,
                           const Dataset& data, const PriorConfig& prior) {
  check_dims(beta_active, theta, data);
  const auto idx = active_indices(theta, data.r());
  return neg_log_posterior(gather_columns(data, idx), data.y(), beta_active, prior.link,
                           prior.sigma2);
}

GradHess grad_hess_h(const Eigen::VectorXd& beta_active, const Theta& theta,
                     const Dataset& data, const PriorConfig& prior) {
  check_dims(beta_active, theta, data);
  const auto idx = active_indices(theta, data.r());
  GradHess out;
  neg_log_posterior_derivatives(gather_columns(data, idx), data.y(), beta_active, prior.link,
                                prior.sigma2, out.gradient, out.hessian);
  return out;
}

}  // namespace bvs
