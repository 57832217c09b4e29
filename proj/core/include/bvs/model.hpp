#pragma once

// Bi-level binary regression: data, indicator and prior types, plus exact
// likelihood / prior / negative log-posterior evaluations.
//
// Coefficients of an indicator configuration theta are laid out in a fixed
// canonical order: the always-included z-block, then the u-block of the
// selected groups (group order), then the x-block of the selected variables
// (variable order). The same order indexes the columns of Dataset::design().

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "bvs/link.hpp"

namespace bvs {

// Response y plus design blocks X (individual), U (group), Z (always included).
// group_map is 0-based in memory (the file format is 1-based).
// n = 0 is accepted and stands for a flat likelihood.
class Dataset {
 public:
  Dataset(Eigen::VectorXd y, Eigen::MatrixXd x, Eigen::MatrixXd u, Eigen::MatrixXd z,
          std::vector<int> group_map);

  std::size_t n() const { return static_cast<std::size_t>(y_.size()); }
  std::size_t p() const { return static_cast<std::size_t>(x_.cols()); }
  std::size_t q() const { return static_cast<std::size_t>(u_.cols()); }
  std::size_t r() const { return static_cast<std::size_t>(z_.cols()); }
  // r + q + p: dimension of the full model.
  std::size_t full_dim() const { return r() + q() + p(); }

  const Eigen::VectorXd& y() const { return y_; }
  const Eigen::MatrixXd& x() const { return x_; }
  const Eigen::MatrixXd& u() const { return u_; }
  const Eigen::MatrixXd& z() const { return z_; }
  const std::vector<int>& group_map() const { return group_map_; }
  const std::vector<int>& group_sizes() const { return group_sizes_; }

  // [Z U X], n x (r+q+p), canonical column order.
  const Eigen::MatrixXd& design() const { return design_; }

  bool operator==(const Dataset& other) const;

 private:
  Eigen::VectorXd y_;
  Eigen::MatrixXd x_, u_, z_;
  std::vector<int> group_map_;
  std::vector<int> group_sizes_;
  Eigen::MatrixXd design_;
};

// Indicator pair: gamma over groups, eta over individual variables.
struct Theta {
  std::vector<std::uint8_t> gamma;
  std::vector<std::uint8_t> eta;

  static Theta zeros(std::size_t q, std::size_t p);
  static Theta ones(std::size_t q, std::size_t p);

  bool operator==(const Theta&) const = default;
};

// True iff eta[j] = 1 implies gamma[group_map[j]] = 1 for every j.
bool satisfies_constraint(const Theta& theta, std::span<const int> group_map);

// Number of active coefficients: r + sum(gamma) + sum(eta).
std::size_t active_dim(const Theta& theta, std::size_t r);

// Indices into the canonical full coefficient vector of the active coordinates.
std::vector<int> active_indices(const Theta& theta, std::size_t r);

// Throws InputError if theta has the wrong shape or breaks the bi-level constraint.
void check_theta(const Theta& theta, const Dataset& data);

struct PriorConfig {
  double sigma2 = 1.0;
  std::vector<double> p_gamma;
  std::vector<double> p_eta;
  Link link = Link::probit;

  static PriorConfig uniform(std::size_t q, std::size_t p, double p_gamma, double p_eta,
                             double sigma2 = 1.0, Link link = Link::probit);
};

// sigma2 > 0, probabilities strictly inside (0,1), lengths matching data.
void check_prior(const PriorConfig& prior, const Dataset& data);

struct CoefVector {
  Eigen::VectorXd beta_x;
  Eigen::VectorXd beta_u;
  Eigen::VectorXd beta_z;
};

// sum_i log P(Y_i = y_i | beta, theta) with the masked linear predictor.
double log_likelihood(const CoefVector& beta, const Theta& theta, const Dataset& data,
                      Link link);

// Bernoulli spike-and-slab prior on theta; -inf iff the constraint is violated.
double log_prior_theta(const Theta& theta, const PriorConfig& prior,
                       std::span<const int> group_map);

// h(beta_active) = -log L(beta, theta) - log N(beta_active; 0, sigma2 I).
double neg_log_posterior_h(const Eigen::VectorXd& beta_active, const Theta& theta,
                           const Dataset& data, const PriorConfig& prior);

struct GradHess {
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
};

GradHess grad_hess_h(const Eigen::VectorXd& beta_active, const Theta& theta,
                     const Dataset& data, const PriorConfig& prior);

// Columns of data.design() at the given canonical indices.
Eigen::MatrixXd gather_columns(const Dataset& data, std::span<const int> indices);

// Kernels over an already gathered active design. These are what the
// marginal-likelihood evaluators call in their inner loops.
double neg_log_posterior(const Eigen::MatrixXd& active_design, const Eigen::VectorXd& y,
                         const Eigen::VectorXd& beta, Link link, double sigma2);

// Value, gradient and Hessian in one pass; returns the value.
double neg_log_posterior_derivatives(const Eigen::MatrixXd& active_design,
                                     const Eigen::VectorXd& y, const Eigen::VectorXd& beta,
                                     Link link, double sigma2, Eigen::VectorXd& gradient,
                                     Eigen::MatrixXd& hessian);

}  // namespace bvs
