#pragma once

// Global independent proposal over (gamma, eta): nested logistic regressions
// for the group indicators, then conditionally independent Bernoulli draws for
// the variables of selected groups. Calibrated on a weighted particle sample.

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "bvs/model.hpp"
#include "bvs/rng.hpp"

namespace bvs {

struct WeightedThetaSample {
  std::span<const Theta> thetas;
  std::span<const double> weights;  // nonnegative, sums to 1
};

struct ProposalParams {
  // Lower triangular: b(k,k) intercept, b(k,i) coefficient on gamma_i for i < k.
  Eigen::MatrixXd b;
  std::vector<std::uint8_t> active_regression;
  std::vector<double> marginal_gamma;  // used where active_regression[k] == 0
  std::vector<double> c;               // P(eta_j = 1 | gamma_g(j) = 1)
  double kappa = 1e-2;                 // every rate is clipped to [kappa, 1 - kappa]
  std::vector<int> group_map;

  std::size_t q() const { return marginal_gamma.size(); }
  std::size_t p() const { return c.size(); }
};

// 1/N bounded to [1e-6, 1e-2].
double clipping_constant(std::size_t particle_count);

struct ProposalFitOptions {
  double ridge = 1e-4;
  int max_newton_iter = 25;
};

// Weighted fit. fallback_c[j] is used when no particle selects the group of j.
ProposalParams fit_proposal(const WeightedThetaSample& sample, std::span<const int> group_map,
                            std::span<const double> fallback_c,
                            const ProposalFitOptions& options = {});

// Proposal equal to the prior (no interactions), clipped with `kappa`.
ProposalParams prior_proposal(const PriorConfig& prior, std::span<const int> group_map,
                              double kappa);

// P(gamma_k = 1 | gamma_{1:k-1}) under params, clipped.
double gamma_rate(const ProposalParams& params, std::size_t k,
                  std::span<const std::uint8_t> gamma);

struct ProposalDraw {
  Theta theta;
  double log_q;
};

ProposalDraw sample_proposal(const ProposalParams& params, Rng& rng);

// Exact log density; -inf iff theta breaks the bi-level constraint.
double log_q(const Theta& theta, const ProposalParams& params);

}  // namespace bvs
