#include "bvs/proposal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <Eigen/Cholesky>

#include "bvs/errors.hpp"

namespace bvs {

namespace {

double logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double clip(double v, double kappa) { return std::clamp(v, kappa, 1.0 - kappa); }

double log_bernoulli(bool outcome, double rate) {
  return outcome ? std::log(rate) : std::log1p(-rate);
}

// Weighted ridge logistic regression of `response` on [1, predictors], with
// row weights scaled to total mass N. Returns (intercept, slopes...).
Eigen::VectorXd fit_logistic(const Eigen::MatrixXd& features, const Eigen::VectorXd& response,
                             const Eigen::VectorXd& mass, double ridge, int max_iter) {
  const auto k = features.cols();
  Eigen::VectorXd coef = Eigen::VectorXd::Zero(k);
  auto objective = [&](const Eigen::VectorXd& b) {
    const Eigen::VectorXd lin = features * b;
    double f = ridge * b.squaredNorm();
    for (Eigen::Index n = 0; n < lin.size(); ++n) {
      if (mass(n) == 0.0) continue;
      // -[y log s(x) + (1-y) log s(-x)] = log(1 + e^x) - y x
      const double x = lin(n);
      const double softplus = x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
      f += mass(n) * (softplus - response(n) * x);
    }
    return f;
  };

  double f = objective(coef);
  for (int iter = 0; iter < max_iter; ++iter) {
    const Eigen::VectorXd lin = features * coef;
    Eigen::VectorXd resid(lin.size());
    Eigen::VectorXd curv(lin.size());
    for (Eigen::Index n = 0; n < lin.size(); ++n) {
      const double s = logistic(lin(n));
      resid(n) = mass(n) * (s - response(n));
      curv(n) = mass(n) * s * (1.0 - s);
    }
    const Eigen::VectorXd grad = features.transpose() * resid + 2.0 * ridge * coef;
    if (grad.lpNorm<Eigen::Infinity>() < 1e-10) break;
    Eigen::MatrixXd hess = features.transpose() * curv.asDiagonal() * features;
    hess.diagonal().array() += 2.0 * ridge;
    const Eigen::VectorXd step = hess.llt().solve(grad);
    double t = 1.0;
    Eigen::VectorXd candidate = coef - step;
    double fc = objective(candidate);
    for (int halving = 0; halving < 40 && fc > f; ++halving) {
      t *= 0.5;
      candidate = coef - t * step;
      fc = objective(candidate);
    }
    if (fc > f) break;
    coef = candidate;
    f = fc;
  }
  return coef;
}

}  // namespace

double clipping_constant(std::size_t particle_count) {
  if (particle_count == 0) return 1e-2;
  return std::clamp(1.0 / static_cast<double>(particle_count), 1e-6, 1e-2);
}

ProposalParams fit_proposal(const WeightedThetaSample& sample, std::span<const int> group_map,
                            std::span<const double> fallback_c,
                            const ProposalFitOptions& options) {
  const auto count = sample.thetas.size();
  if (count == 0 || sample.weights.size() != count) {
    throw InputError("proposal fit needs a non-empty sample with one weight per particle");
  }
  const double total = std::accumulate(sample.weights.begin(), sample.weights.end(), 0.0);
  if (!(total > 0.0)) throw InputError("proposal fit: all particle weights are zero");

  const auto q = sample.thetas.front().gamma.size();
  const auto p = sample.thetas.front().eta.size();
  if (group_map.size() != p || fallback_c.size() != p) {
    throw InputError("proposal fit: group map / fallback rates do not match p");
  }

  ProposalParams params;
  params.kappa = clipping_constant(count);
  params.group_map.assign(group_map.begin(), group_map.end());
  params.b = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(q));
  params.active_regression.assign(q, 0);
  params.marginal_gamma.assign(q, 0.5);
  params.c.assign(p, 0.5);

  const auto rows = static_cast<Eigen::Index>(count);
  Eigen::VectorXd mass(rows);
  for (Eigen::Index n = 0; n < rows; ++n) {
    mass(n) = sample.weights[static_cast<std::size_t>(n)] / total * static_cast<double>(count);
  }
  const double kappa = params.kappa;

  std::vector<int> predictors;  // non-degenerate groups seen so far
  for (std::size_t k = 0; k < q; ++k) {
    double freq = 0.0;
    Eigen::VectorXd response(rows);
    for (Eigen::Index n = 0; n < rows; ++n) {
      response(n) = sample.thetas[static_cast<std::size_t>(n)].gamma[k];
      freq += mass(n) * response(n);
    }
    freq /= static_cast<double>(count);
    if (freq <= kappa || freq >= 1.0 - kappa) {
      params.marginal_gamma[k] = clip(freq, kappa);
      continue;
    }
    params.active_regression[k] = 1;
    params.marginal_gamma[k] = clip(freq, kappa);

    Eigen::MatrixXd features(rows, static_cast<Eigen::Index>(predictors.size()) + 1);
    for (Eigen::Index n = 0; n < rows; ++n) {
      const auto& gamma = sample.thetas[static_cast<std::size_t>(n)].gamma;
      features(n, 0) = 1.0;
      for (std::size_t c = 0; c < predictors.size(); ++c) {
        features(n, static_cast<Eigen::Index>(c) + 1) =
            gamma[static_cast<std::size_t>(predictors[c])];
      }
    }
    const Eigen::VectorXd coef =
        fit_logistic(features, response, mass, options.ridge, options.max_newton_iter);
    const auto kk = static_cast<Eigen::Index>(k);
    params.b(kk, kk) = coef(0);
    for (std::size_t c = 0; c < predictors.size(); ++c) {
      params.b(kk, predictors[c]) = coef(static_cast<Eigen::Index>(c) + 1);
    }
    predictors.push_back(static_cast<int>(k));
  }

  std::vector<double> selected(p, 0.0);
  std::vector<double> included(p, 0.0);
  for (std::size_t n = 0; n < count; ++n) {
    const auto& th = sample.thetas[n];
    const double w = sample.weights[n];
    for (std::size_t j = 0; j < p; ++j) {
      if (!th.gamma[static_cast<std::size_t>(group_map[j])]) continue;
      selected[j] += w;
      if (th.eta[j]) included[j] += w;
    }
  }
  for (std::size_t j = 0; j < p; ++j) {
    params.c[j] = clip(selected[j] > 0.0 ? included[j] / selected[j] : fallback_c[j], kappa);
  }
  return params;
}

ProposalParams prior_proposal(const PriorConfig& prior, std::span<const int> group_map,
                              double kappa) {
  const auto q = prior.p_gamma.size();
  ProposalParams params;
  params.kappa = kappa;
  params.group_map.assign(group_map.begin(), group_map.end());
  params.b = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(q));
  params.active_regression.assign(q, 0);
  params.marginal_gamma.resize(q);
  for (std::size_t k = 0; k < q; ++k) params.marginal_gamma[k] = clip(prior.p_gamma[k], kappa);
  params.c.resize(prior.p_eta.size());
  for (std::size_t j = 0; j < params.c.size(); ++j) params.c[j] = clip(prior.p_eta[j], kappa);
  return params;
}

double gamma_rate(const ProposalParams& params, std::size_t k,
                  std::span<const std::uint8_t> gamma) {
  if (!params.active_regression[k]) return params.marginal_gamma[k];
  const auto kk = static_cast<Eigen::Index>(k);
  double lin = params.b(kk, kk);
  for (std::size_t i = 0; i < k; ++i) {
    if (gamma[i]) lin += params.b(kk, static_cast<Eigen::Index>(i));
  }
  return clip(logistic(lin), params.kappa);
}

ProposalDraw sample_proposal(const ProposalParams& params, Rng& rng) {
  ProposalDraw draw{Theta::zeros(params.q(), params.p()), 0.0};
  auto& theta = draw.theta;
  for (std::size_t k = 0; k < params.q(); ++k) {
    const double rate = gamma_rate(params, k, theta.gamma);
    const bool on = bernoulli(rng, rate);
    theta.gamma[k] = on;
    draw.log_q += log_bernoulli(on, rate);
  }
  for (std::size_t j = 0; j < params.p(); ++j) {
    if (!theta.gamma[static_cast<std::size_t>(params.group_map[j])]) continue;
    const bool on = bernoulli(rng, params.c[j]);
    theta.eta[j] = on;
    draw.log_q += log_bernoulli(on, params.c[j]);
  }
  return draw;
}

double log_q(const Theta& theta, const ProposalParams& params) {
  if (theta.gamma.size() != params.q() || theta.eta.size() != params.p()) {
    throw InputError("theta shape does not match proposal parameters");
  }
  double lq = 0.0;
  for (std::size_t k = 0; k < params.q(); ++k) {
    lq += log_bernoulli(theta.gamma[k], gamma_rate(params, k, theta.gamma));
  }
  for (std::size_t j = 0; j < params.p(); ++j) {
    if (!theta.gamma[static_cast<std::size_t>(params.group_map[j])]) {
      if (theta.eta[j]) return -std::numeric_limits<double>::infinity();
      continue;
    }
    lq += log_bernoulli(theta.eta[j], params.c[j]);
  }
  return lq;
}

}  // namespace bvs
