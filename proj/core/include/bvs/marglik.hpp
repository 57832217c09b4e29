#pragma once

// Marginal likelihood log L(theta) = log \int L(beta, theta) p(beta) dbeta:
//  - LA: second-order expansion at the MAP (Newton-Raphson),
//  - ALA: the same expansion at zero, using a one-off full-model gradient and
//    Hessian so that each evaluation no longer touches the n observations,
//  - quadrature: Gauss-Hermite ground truth for d_theta <= 3.

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "bvs/model.hpp"

namespace bvs {

enum class MarglikMethod { la, ala, quadrature };

std::string_view to_string(MarglikMethod method);
MarglikMethod parse_marglik_method(std::string_view name);

// Gradient and Hessian of h at beta = 0 for the full model (all indicators on),
// prior terms included.
struct AlaCache {
  Eigen::VectorXd g_full;
  Eigen::MatrixXd h_full;
  double h0_per_obs_total = 0.0;  // -log L(0) = n log 2
  double sigma2 = 1.0;
  std::size_t r = 0;
};

AlaCache precompute_ala(const Dataset& data, const PriorConfig& prior);

double ala_log_marginal(const Theta& theta, const AlaCache& cache);

struct NewtonOptions {
  double grad_tol = 1e-8;  // infinity norm
  int max_iter = 50;
};

struct ModeFit {
  Eigen::VectorXd beta_hat;
  Eigen::MatrixXd hess_at_mode;
  Eigen::LLT<Eigen::MatrixXd> hess_chol;
  double h_at_mode = 0.0;
  int iterations = 0;
};

// Minimises h_theta from beta = 0 with full Newton steps, halved while h increases.
// Throws NumericalError (trace = gradient norms) when max_iter is exhausted.
ModeFit newton_raphson_map(const Theta& theta, const Dataset& data, const PriorConfig& prior,
                           const NewtonOptions& options = {});

double la_log_marginal(const Theta& theta, const Dataset& data, const PriorConfig& prior,
                       const NewtonOptions& options = {});

struct QuadratureOptions {
  int initial_nodes = 8;
  int max_nodes = 128;
  double tol = 1e-9;  // stop when two successive node counts agree on the log scale
};

// Tensor Gauss-Hermite quadrature centred and scaled at the mode. d_theta <= 3.
double quadrature_log_marginal(const Theta& theta, const Dataset& data,
                               const PriorConfig& prior, const QuadratureOptions& options = {});

// Gauss-Hermite rule for weight exp(-t^2).
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
GaussHermiteRule gauss_hermite(int count);

// 2 * sum(log diag(L)).
double log_det(const Eigen::LLT<Eigen::MatrixXd>& chol);

// Concurrent-safe memo of log L(theta), keyed by the packed indicator bits.
// Duplicate computation is possible; stored values are never overwritten.
class MarglikMemo {
 public:
  explicit MarglikMemo(std::size_t max_entries = std::size_t{1} << 22);
  ~MarglikMemo();
  MarglikMemo(const MarglikMemo&) = delete;
  MarglikMemo& operator=(const MarglikMemo&) = delete;

  std::optional<double> find(const Theta& theta) const;
  void insert(const Theta& theta, double value);
  std::size_t size() const;

 private:
  struct Shard;
  std::unique_ptr<Shard[]> shards_;
  std::size_t max_entries_;
  std::atomic<std::size_t> size_{0};
};

// The evaluator handed to the sampler and the enumeration oracle. data must
// outlive the evaluator. Thread-safe.
class MarginalLikelihood {
 public:
  MarginalLikelihood(const Dataset& data, PriorConfig prior, MarglikMethod method,
                     bool memoize = true);

  double operator()(const Theta& theta) const;

  MarglikMethod method() const { return method_; }
  const PriorConfig& prior() const { return prior_; }
  const Dataset& data() const { return data_; }
  const AlaCache* ala_cache() const { return ala_ ? &*ala_ : nullptr; }

  // Evaluations that missed the memo (i.e. actually computed).
  std::uint64_t evaluations() const { return evaluations_.load(); }
  std::uint64_t calls() const { return calls_.load(); }

 private:
  double compute(const Theta& theta) const;

  const Dataset& data_;
  PriorConfig prior_;
  MarglikMethod method_;
  std::optional<AlaCache> ala_;
  std::unique_ptr<MarglikMemo> memo_;
  mutable std::atomic<std::uint64_t> evaluations_{0};
  mutable std::atomic<std::uint64_t> calls_{0};
};

}  // namespace bvs
