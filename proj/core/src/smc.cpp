#include "bvs/smc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "bvs/errors.hpp"
#include "bvs/parallel.hpp"

namespace bvs {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(std::span<const double> v) {
  double m = kNegInf;
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

double incremental_ess(const ParticleSystem& system, double delta) {
  std::vector<double> lw(system.size());
  for (std::size_t n = 0; n < lw.size(); ++n) {
    lw[n] = system.log_weights[n] + delta * system.log_L[n];
  }
  return ess(lw);
}

void fill_inclusion(const ParticleSystem& system, std::size_t q, std::size_t p,
                    SmcResult& result) {
  result.gamma_incl.assign(q, 0.0);
  result.eta_incl.assign(p, 0.0);
  for (std::size_t n = 0; n < system.size(); ++n) {
    const double w = std::exp(system.log_weights[n]);
    const auto& th = system.thetas[n];
    for (std::size_t k = 0; k < q; ++k) {
      if (th.gamma[k]) result.gamma_incl[k] += w;
    }
    for (std::size_t j = 0; j < p; ++j) {
      if (th.eta[j]) result.eta_incl[j] += w;
    }
  }
  for (auto& v : result.gamma_incl) v = std::clamp(v, 0.0, 1.0);
  for (auto& v : result.eta_incl) v = std::clamp(v, 0.0, 1.0);
}

}  // namespace

void check_config(const SmcConfig& config) {
  if (config.ancestors == 0 || config.chain_length == 0) {
    throw InputError("M and P must be positive");
  }
  if (config.n_particles != config.ancestors * config.chain_length) {
    throw InputError("N (" + std::to_string(config.n_particles) + ") must equal M * P (" +
                     std::to_string(config.ancestors) + " * " +
                     std::to_string(config.chain_length) + ")");
  }
  if (!(config.ess_ratio > 0.0 && config.ess_ratio < 1.0)) {
    throw InputError("ESS ratio must lie in (0,1)");
  }
  if (!(config.bisection_tol > 0.0)) throw InputError("bisection tolerance must be positive");
  if (config.max_stages < 1) throw InputError("max_stages must be at least 1");
  if (config.marglik_method == MarglikMethod::quadrature) {
    throw InputError("the sampler supports the la and ala evaluators only");
  }
}

double ess(std::span<const double> log_weights) {
  double m = kNegInf;
  for (double x : log_weights) m = std::max(m, x);
  if (!std::isfinite(m)) throw NumericalError("ESS undefined: no finite log weight");
  double s1 = 0.0;
  double s2 = 0.0;
  for (double x : log_weights) {
    const double w = std::exp(x - m);
    s1 += w;
    s2 += w * w;
  }
  return s1 * s1 / s2;
}

ParticleSystem init_particles(const PriorConfig& prior, std::span<const int> group_map,
                              const SmcConfig& config, const MarginalLikelihood& marglik,
                              Rng& rng) {
  const auto q = prior.p_gamma.size();
  const auto p = prior.p_eta.size();
  const auto count = config.n_particles;
  ParticleSystem system;
  system.thetas.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    Theta th = Theta::zeros(q, p);
    for (std::size_t k = 0; k < q; ++k) th.gamma[k] = bernoulli(rng, prior.p_gamma[k]);
    for (std::size_t j = 0; j < p; ++j) {
      if (th.gamma[static_cast<std::size_t>(group_map[j])]) {
        th.eta[j] = bernoulli(rng, prior.p_eta[j]);
      }
    }
    system.thetas.push_back(std::move(th));
  }
  system.log_prior.resize(count);
  system.log_L.resize(count);
  parallel_for(count, config.workers, [&](std::size_t n) {
    system.log_prior[n] = log_prior_theta(system.thetas[n], prior, group_map);
    system.log_L[n] = marglik(system.thetas[n]);
  });
  system.log_weights.assign(count, -std::log(static_cast<double>(count)));
  system.lambda = 0.0;
  system.stage = 0;
  return system;
}

double adapt_lambda(const ParticleSystem& system, const SmcConfig& config) {
  const double remaining = 1.0 - system.lambda;
  if (!(remaining > 0.0)) throw InputError("lambda is already 1");
  const double target = config.ess_ratio * static_cast<double>(system.size());
  if (incremental_ess(system, remaining) >= target) return 1.0;

  double lo = 0.0;
  double hi = remaining;
  for (int iter = 0; iter < config.bisection_max_iter && hi - lo > config.bisection_tol; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (incremental_ess(system, mid) >= target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double delta = lo > 0.0 ? lo : hi;
  return std::min(1.0, system.lambda + delta);
}

double reweight(ParticleSystem& system, double lambda_next) {
  const double delta = lambda_next - system.lambda;
  if (!(delta > 0.0)) throw InputError("reweight needs lambda_next > lambda");
  const double before = log_sum_exp(system.log_weights);
  for (std::size_t n = 0; n < system.size(); ++n) {
    system.log_weights[n] += delta * system.log_L[n];
  }
  const double after = log_sum_exp(system.log_weights);
  if (!std::isfinite(after)) throw NumericalError("all incremental weights vanished");
  for (auto& lw : system.log_weights) lw -= after;
  system.lambda = lambda_next;
  return after - before;
}

std::vector<std::size_t> resample_ancestors(std::span<const double> log_weights,
                                            std::size_t count, Rng& rng) {
  const auto n = log_weights.size();
  if (n == 0) throw InputError("cannot resample from an empty sample");
  std::vector<double> cumulative(n);
  double m = kNegInf;
  for (double x : log_weights) m = std::max(m, x);
  double running = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    running += std::exp(log_weights[i] - m);
    cumulative[i] = running;
  }
  std::vector<std::size_t> out(count);
  for (auto& a : out) {
    const double u = uniform01(rng) * running;
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    a = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), n - 1);
  }
  return out;
}

bool metropolis_move(ChainState& state, const ProposalParams& params, double lambda,
                     const PriorConfig& prior, std::span<const int> group_map,
                     const MarginalLikelihood& marglik, Rng& rng) {
  auto draw = sample_proposal(params, rng);
  const double u = uniform01(rng);
  const double proposed_prior = log_prior_theta(draw.theta, prior, group_map);
  if (!std::isfinite(proposed_prior)) return false;
  const double proposed_L = marglik(draw.theta);
  const double log_ratio = (proposed_prior + lambda * proposed_L + state.log_q) -
                           (state.log_prior + lambda * state.log_L + draw.log_q);
  if (!(std::log(u) <= log_ratio)) return false;
  state.theta = std::move(draw.theta);
  state.log_L = proposed_L;
  state.log_prior = proposed_prior;
  state.log_q = draw.log_q;
  return true;
}

StageReport waste_free_stage(ParticleSystem& system, const SmcConfig& config,
                             const PriorConfig& prior, std::span<const int> group_map,
                             const MarginalLikelihood& marglik) {
  const auto start = std::chrono::steady_clock::now();
  const int stage = system.stage + 1;
  const auto M = config.ancestors;
  const auto P = config.chain_length;

  Rng stage_rng = make_stream(config.seed, static_cast<std::uint64_t>(stage), 0);
  const auto ancestors = resample_ancestors(system.log_weights, M, stage_rng);

  std::vector<double> weights(system.size());
  for (std::size_t n = 0; n < weights.size(); ++n) weights[n] = std::exp(system.log_weights[n]);
  const auto params =
      fit_proposal({system.thetas, weights}, group_map, prior.p_eta);

  ParticleSystem next;
  next.thetas.resize(M * P);
  next.log_L.resize(M * P);
  next.log_prior.resize(M * P);
  std::vector<std::uint64_t> accepted(M, 0);

  parallel_for(M, config.workers, [&](std::size_t m) {
    Rng rng = make_stream(config.seed, static_cast<std::uint64_t>(stage), m + 1);
    const auto a = ancestors[m];
    ChainState state{system.thetas[a], system.log_L[a], system.log_prior[a], 0.0};
    state.log_q = log_q(state.theta, params);
    const std::size_t base = m * P;
    next.thetas[base] = state.theta;
    next.log_L[base] = state.log_L;
    next.log_prior[base] = state.log_prior;
    for (std::size_t s = 1; s < P; ++s) {
      if (metropolis_move(state, params, system.lambda, prior, group_map, marglik, rng)) {
        ++accepted[m];
      }
      next.thetas[base + s] = state.theta;
      next.log_L[base + s] = state.log_L;
      next.log_prior[base + s] = state.log_prior;
    }
  });

  next.log_weights.assign(M * P, -std::log(static_cast<double>(M * P)));
  next.lambda = system.lambda;
  next.stage = stage;
  system = std::move(next);

  StageReport report;
  report.accepted = std::accumulate(accepted.begin(), accepted.end(), std::uint64_t{0});
  report.acceptance_rate =
      P > 1 ? static_cast<double>(report.accepted) / static_cast<double>((P - 1) * M) : 0.0;
  report.lambda_next = adapt_lambda(system, config);
  report.log_evidence_increment = reweight(system, report.lambda_next);
  report.wall_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

SmcResult run(const Dataset& data, const PriorConfig& prior, const SmcConfig& config,
              const StageObserver& observer) {
  check_config(config);
  const MarginalLikelihood marglik(data, prior, config.marglik_method);
  return run(data, prior, config, marglik, observer);
}

SmcResult run(const Dataset& data, const PriorConfig& prior, const SmcConfig& config,
              const MarginalLikelihood& marglik, const StageObserver& observer) {
  auto checked = config;
  checked.marglik_method = marglik.method();
  check_config(checked);
  check_prior(prior, data);
  const auto& group_map = data.group_map();

  SmcResult result;
  const auto evals_before = marglik.evaluations();
  const auto calls_before = marglik.calls();
  auto finish = [&](const ParticleSystem& system) {
    fill_inclusion(system, data.q(), data.p(), result);
    result.marglik_evals = marglik.evaluations() - evals_before;
    result.marglik_calls = marglik.calls() - calls_before;
    if (config.keep_final_particles) {
      result.final_thetas = system.thetas;
      result.final_weights.resize(system.size());
      for (std::size_t n = 0; n < system.size(); ++n) {
        result.final_weights[n] = std::exp(system.log_weights[n]);
      }
    }
  };

  Rng init_rng = make_stream(config.seed, 0, 0);
  auto system = init_particles(prior, group_map, config, marglik, init_rng);
  result.lambda_schedule.push_back(system.lambda);
  if (observer) observer(system);

  while (system.lambda < 1.0) {
    if (system.stage >= config.max_stages) {
      finish(system);
      throw SmcRunError("tempering did not reach lambda = 1 within " +
                            std::to_string(config.max_stages) + " stages (lambda = " +
                            std::to_string(system.lambda) + ")",
                        std::move(result));
    }
    const auto report = waste_free_stage(system, config, prior, group_map, marglik);
    result.lambda_schedule.push_back(report.lambda_next);
    result.acceptance_rates.push_back(report.acceptance_rate);
    result.stage_wall_times_s.push_back(report.wall_s);
    result.log_evidence += report.log_evidence_increment;
    if (observer) observer(system);
  }
  finish(system);
  return result;
}

}  // namespace bvs
