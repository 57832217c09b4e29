#pragma once

// Tempering waste-free SMC over bi-level indicator configurations.
//
// Each stage resamples M ancestors from the current weighted sample, fits the
// independent proposal on that weighted sample, runs every ancestor through
// P - 1 independent-Metropolis steps targeting p(theta) L(theta)^lambda, keeps
// all M * P states, then picks the next exponent by bisection on the ESS of the
// incremental weights and reweights.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "bvs/marglik.hpp"
#include "bvs/model.hpp"
#include "bvs/proposal.hpp"
#include "bvs/rng.hpp"

namespace bvs {

struct SmcConfig {
  std::size_t n_particles = 25000;  // N
  std::size_t ancestors = 125;      // M
  std::size_t chain_length = 200;   // P, N = M * P
  double ess_ratio = 0.5;
  double bisection_tol = 1e-8;
  int bisection_max_iter = 60;
  std::uint64_t seed = 0;
  MarglikMethod marglik_method = MarglikMethod::ala;
  int max_stages = 500;
  int workers = 1;
  bool keep_final_particles = false;
};

void check_config(const SmcConfig& config);

struct ParticleSystem {
  std::vector<Theta> thetas;
  std::vector<double> log_L;
  std::vector<double> log_prior;
  std::vector<double> log_weights;  // normalised: logsumexp == 0
  double lambda = 0.0;
  int stage = 0;

  std::size_t size() const { return thetas.size(); }
};

struct SmcResult {
  std::vector<double> gamma_incl;
  std::vector<double> eta_incl;
  std::vector<double> lambda_schedule;  // starts at 0
  std::vector<double> acceptance_rates;
  double log_evidence = 0.0;
  std::vector<double> stage_wall_times_s;
  std::uint64_t marglik_evals = 0;  // uncached evaluations
  std::uint64_t marglik_calls = 0;
  // Filled when SmcConfig::keep_final_particles is set.
  std::vector<Theta> final_thetas;
  std::vector<double> final_weights;

  std::size_t stage_count() const { return acceptance_rates.size(); }
};

// Thrown when the schedule does not reach lambda = 1 within max_stages.
class SmcRunError : public std::runtime_error {
 public:
  SmcRunError(const std::string& what, SmcResult partial)
      : std::runtime_error(what), partial_(std::move(partial)) {}
  const SmcResult& partial() const noexcept { return partial_; }

 private:
  SmcResult partial_;
};

// ESS = (sum w)^2 / sum w^2 from log weights, max-shifted.
double ess(std::span<const double> log_weights);

// N iid draws from the hierarchical prior, uniform weights, lambda = 0.
ParticleSystem init_particles(const PriorConfig& prior, std::span<const int> group_map,
                              const SmcConfig& config, const MarginalLikelihood& marglik,
                              Rng& rng);

// Next exponent in (lambda, 1] targeting ESS = ess_ratio * N.
double adapt_lambda(const ParticleSystem& system, const SmcConfig& config);

// Multiplies weights by L^(lambda_next - lambda) and normalises.
// Returns the log-evidence increment log sum_n W_n L_n^delta.
double reweight(ParticleSystem& system, double lambda_next);

// M iid multinomial draws from normalised log weights.
std::vector<std::size_t> resample_ancestors(std::span<const double> log_weights,
                                            std::size_t count, Rng& rng);

struct ChainState {
  Theta theta;
  double log_L = 0.0;
  double log_prior = 0.0;
  double log_q = 0.0;  // under the proposal currently in use
};

// One independent Metropolis step targeting p(theta) L(theta)^lambda.
// Updates `state` on acceptance and returns whether it moved.
bool metropolis_move(ChainState& state, const ProposalParams& params, double lambda,
                     const PriorConfig& prior, std::span<const int> group_map,
                     const MarginalLikelihood& marglik, Rng& rng);

struct StageReport {
  double lambda_next = 0.0;
  double acceptance_rate = 0.0;
  std::uint64_t accepted = 0;
  double log_evidence_increment = 0.0;
  double wall_s = 0.0;
};

StageReport waste_free_stage(ParticleSystem& system, const SmcConfig& config,
                             const PriorConfig& prior, std::span<const int> group_map,
                             const MarginalLikelihood& marglik);

using StageObserver = std::function<void(const ParticleSystem&)>;

// Builds a MarginalLikelihood of config.marglik_method and runs to lambda = 1.
SmcResult run(const Dataset& data, const PriorConfig& prior, const SmcConfig& config,
              const StageObserver& observer = {});

// Same, with a caller-provided evaluator (its method overrides the config's).
SmcResult run(const Dataset& data, const PriorConfig& prior, const SmcConfig& config,
              const MarginalLikelihood& marglik, const StageObserver& observer = {});

}  // namespace bvs
