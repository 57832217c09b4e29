#include "bvs/marglik.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <string>
#include <unordered_map>

#include <Eigen/Eigenvalues>

#include "bvs/errors.hpp"

namespace bvs {

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

ModeFit fit_mode(const Eigen::MatrixXd& design, const Eigen::VectorXd& y, Link link,
                 double sigma2, const NewtonOptions& options) {
  const auto d = design.cols();
  ModeFit fit;
  fit.beta_hat = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd grad;
  double h = neg_log_posterior_derivatives(design, y, fit.beta_hat, link, sigma2, grad,
                                           fit.hess_at_mode);
  std::vector<double> trace;
  for (int iter = 0;; ++iter) {
    const double gnorm = d == 0 ? 0.0 : grad.lpNorm<Eigen::Infinity>();
    trace.push_back(gnorm);
    if (gnorm <= options.grad_tol) {
      fit.hess_chol.compute(fit.hess_at_mode);
      if (fit.hess_chol.info() != Eigen::Success) {
        throw NumericalError("Hessian at the mode is not positive definite", trace);
      }
      fit.h_at_mode = h;
      fit.iterations = iter;
      return fit;
    }
    if (iter >= options.max_iter) {
      throw NumericalError("Newton-Raphson did not converge in " +
                               std::to_string(options.max_iter) + " iterations",
                           std::move(trace));
    }
    Eigen::LLT<Eigen::MatrixXd> chol(fit.hess_at_mode);
    if (chol.info() != Eigen::Success) {
      throw NumericalError("Hessian is not positive definite during Newton-Raphson", trace);
    }
    const Eigen::VectorXd step = chol.solve(grad);
    const double slack = 1e-10 * (1.0 + std::abs(h));
    double t = 1.0;
    Eigen::VectorXd candidate = fit.beta_hat - step;
    for (int halving = 0; halving < 60; ++halving) {
      if (neg_log_posterior(design, y, candidate, link, sigma2) <= h + slack) break;
      t *= 0.5;
      candidate = fit.beta_hat - t * step;
    }
    fit.beta_hat = candidate;
    h = neg_log_posterior_derivatives(design, y, fit.beta_hat, link, sigma2, grad,
                                      fit.hess_at_mode);
  }
}

double la_from_design(const Eigen::MatrixXd& design, const Eigen::VectorXd& y, Link link,
                      double sigma2, const NewtonOptions& options) {
  const auto fit = fit_mode(design, y, link, sigma2, options);
  const auto d = static_cast<double>(design.cols());
  const double ld = design.cols() == 0 ? 0.0 : log_det(fit.hess_chol);
  return -fit.h_at_mode + 0.5 * d * kLog2Pi - 0.5 * ld;
}

double log_sum_exp(const std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

// log \int exp(-h) over R^d with a tensor rule of `count` nodes per axis, in the
// coordinates beta = mode + sqrt(2) L^{-T} t.
double tensor_gauss_hermite(const Eigen::MatrixXd& design, const Eigen::VectorXd& y, Link link,
                            double sigma2, const ModeFit& fit, int count) {
  const auto d = static_cast<int>(design.cols());
  const auto rule = gauss_hermite(count);
  std::size_t points = 1;
  for (int a = 0; a < d; ++a) points *= static_cast<std::size_t>(count);

  // Columns of `scale` map t to the beta offset.
  const Eigen::MatrixXd lower = fit.hess_chol.matrixL();
  const Eigen::MatrixXd scale =
      std::numbers::sqrt2 *
      lower.transpose().triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(d, d));

  std::vector<double> terms;
  terms.reserve(points);
  constexpr std::size_t kBatch = 4096;
  Eigen::MatrixXd betas(d, static_cast<Eigen::Index>(kBatch));
  std::vector<double> log_w(kBatch);
  std::vector<int> digit(static_cast<std::size_t>(d), 0);

  for (std::size_t start = 0; start < points; start += kBatch) {
    const std::size_t len = std::min(kBatch, points - start);
    for (std::size_t b = 0; b < len; ++b) {
      Eigen::VectorXd t(d);
      double lw = 0.0;
      for (int a = 0; a < d; ++a) {
        const auto node = static_cast<std::size_t>(digit[static_cast<std::size_t>(a)]);
        t(a) = rule.nodes[node];
        lw += std::log(rule.weights[node]) + t(a) * t(a);
      }
      betas.col(static_cast<Eigen::Index>(b)) = fit.beta_hat + scale * t;
      log_w[b] = lw;
      for (int a = 0; a < d; ++a) {
        auto& dg = digit[static_cast<std::size_t>(a)];
        if (++dg < count) break;
        dg = 0;
      }
    }
    const Eigen::MatrixXd eta = design * betas.leftCols(static_cast<Eigen::Index>(len));
    for (std::size_t b = 0; b < len; ++b) {
      const auto col = static_cast<Eigen::Index>(b);
      double h = 0.5 * betas.col(col).squaredNorm() / sigma2;
      for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double s = y(i) > 0.5 ? 1.0 : -1.0;
        h -= log_cdf(link, s * eta(i, col));
      }
      terms.push_back(log_w[b] - h);
    }
  }
  // Gaussian normalising constant of the prior and the Jacobian of the map.
  return log_sum_exp(terms) - 0.5 * d * std::log(2.0 * std::numbers::pi * sigma2) +
         0.5 * d * std::log(2.0) - 0.5 * log_det(fit.hess_chol);
}

std::size_t theta_words(const Theta& theta) {
  return (theta.gamma.size() + theta.eta.size() + 63) / 64;
}

std::vector<std::uint64_t> pack(const Theta& theta) {
  std::vector<std::uint64_t> key(theta_words(theta), 0);
  std::size_t bit = 0;
  auto put = [&](std::uint8_t v) {
    if (v) key[bit / 64] |= std::uint64_t{1} << (bit % 64);
    ++bit;
  };
  for (auto g : theta.gamma) put(g);
  for (auto e : theta.eta) put(e);
  return key;
}

struct KeyHash {
  std::size_t operator()(const std::vector<std::uint64_t>& key) const noexcept {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL;
    for (auto w : key) {
      h ^= w + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
      h *= 0xbf58476d1ce4e5b9ULL;
      h ^= h >> 31;
    }
    return static_cast<std::size_t>(h);
  }
};

constexpr std::size_t kShards = 64;

}  // namespace

std::string_view to_string(MarglikMethod method) {
  switch (method) {
    case MarglikMethod::la: return "la";
    case MarglikMethod::ala: return "ala";
    case MarglikMethod::quadrature: return "quadrature";
  }
  return "?";
}

MarglikMethod parse_marglik_method(std::string_view name) {
  if (name == "la" || name == "LA") return MarglikMethod::la;
  if (name == "ala" || name == "ALA") return MarglikMethod::ala;
  if (name == "quadrature") return MarglikMethod::quadrature;
  throw InputError("unknown marginal likelihood method '" + std::string(name) + "'");
}

double log_det(const Eigen::LLT<Eigen::MatrixXd>& chol) {
  return 2.0 * chol.matrixLLT().diagonal().array().log().sum();
}

GaussHermiteRule gauss_hermite(int count) {
  if (count < 1) throw InputError("Gauss-Hermite rule needs at least one node");
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(count, count);
  for (int k = 1; k < count; ++k) {
    jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(0.5 * k);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  GaussHermiteRule rule;
  rule.nodes.resize(static_cast<std::size_t>(count));
  rule.weights.resize(static_cast<std::size_t>(count));
  const double mass = std::sqrt(std::numbers::pi);
  for (int i = 0; i < count; ++i) {
    rule.nodes[static_cast<std::size_t>(i)] = eig.eigenvalues()(i);
    const double v0 = eig.eigenvectors()(0, i);
    rule.weights[static_cast<std::size_t>(i)] = mass * v0 * v0;
  }
  return rule;
}

AlaCache precompute_ala(const Dataset& data, const PriorConfig& prior) {
  check_prior(prior, data);
  AlaCache cache;
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(data.full_dim()));
  const double h = neg_log_posterior_derivatives(data.design(), data.y(), zero, prior.link,
                                                 prior.sigma2, cache.g_full, cache.h_full);
  cache.sigma2 = prior.sigma2;
  cache.r = data.r();
  cache.h0_per_obs_total =
      h - 0.5 * static_cast<double>(data.full_dim()) * std::log(2.0 * std::numbers::pi * prior.sigma2);
  return cache;
}

double ala_log_marginal(const Theta& theta, const AlaCache& cache) {
  const auto idx = active_indices(theta, cache.r);
  const auto d = static_cast<Eigen::Index>(idx.size());
  if (static_cast<Eigen::Index>(cache.r + theta.gamma.size() + theta.eta.size()) !=
      cache.g_full.size()) {
    throw InputError("theta shape does not match the ALA cache");
  }
  const double h_zero = cache.h0_per_obs_total +
                        0.5 * static_cast<double>(d) * std::log(2.0 * std::numbers::pi * cache.sigma2);
  if (d == 0) return -h_zero;

  Eigen::VectorXd g(d);
  Eigen::MatrixXd h(d, d);
  for (Eigen::Index a = 0; a < d; ++a) {
    g(a) = cache.g_full(idx[static_cast<std::size_t>(a)]);
    for (Eigen::Index b = 0; b <= a; ++b) {
      h(a, b) = cache.h_full(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
    }
  }
  Eigen::LLT<Eigen::MatrixXd> chol(h);  // reads the lower triangle only
  if (chol.info() != Eigen::Success) {
    throw NumericalError("ALA Hessian submatrix is not positive definite");
  }
  const Eigen::VectorXd half_solved = chol.matrixL().solve(g);
  return -h_zero + 0.5 * half_solved.squaredNorm() + 0.5 * static_cast<double>(d) * kLog2Pi -
         0.5 * log_det(chol);
}

ModeFit newton_raphson_map(const Theta& theta, const Dataset& data, const PriorConfig& prior,
                           const NewtonOptions& options) {
  check_theta(theta, data);
  const auto idx = active_indices(theta, data.r());
  return fit_mode(gather_columns(data, idx), data.y(), prior.link, prior.sigma2, options);
}

double la_log_marginal(const Theta& theta, const Dataset& data, const PriorConfig& prior,
                       const NewtonOptions& options) {
  check_theta(theta, data);
  const auto idx = active_indices(theta, data.r());
  return la_from_design(gather_columns(data, idx), data.y(), prior.link, prior.sigma2, options);
}

double quadrature_log_marginal(const Theta& theta, const Dataset& data,
                               const PriorConfig& prior, const QuadratureOptions& options) {
  check_theta(theta, data);
  const auto idx = active_indices(theta, data.r());
  if (idx.size() > 3) {
    throw UnsupportedError("quadrature supports at most 3 active coefficients, got " +
                           std::to_string(idx.size()));
  }
  const Eigen::MatrixXd design = gather_columns(data, idx);
  if (idx.empty()) {
    return -neg_log_posterior(design, data.y(), Eigen::VectorXd(), prior.link, prior.sigma2);
  }
  const auto fit = fit_mode(design, data.y(), prior.link, prior.sigma2, {});
  double previous = tensor_gauss_hermite(design, data.y(), prior.link, prior.sigma2, fit,
                                         options.initial_nodes);
  std::vector<double> trace{previous};
  for (int count = 2 * options.initial_nodes; count <= options.max_nodes; count *= 2) {
    const double current =
        tensor_gauss_hermite(design, data.y(), prior.link, prior.sigma2, fit, count);
    trace.push_back(current);
    if (std::abs(current - previous) <= options.tol) return current;
    previous = current;
  }
  throw NumericalError("Gauss-Hermite quadrature did not stabilise", std::move(trace));
}

struct MarglikMemo::Shard {
  mutable std::mutex mutex;
  std::unordered_map<std::vector<std::uint64_t>, double, KeyHash> values;
};

MarglikMemo::MarglikMemo(std::size_t max_entries)
    : shards_(std::make_unique<Shard[]>(kShards)), max_entries_(max_entries) {}

MarglikMemo::~MarglikMemo() = default;

std::optional<double> MarglikMemo::find(const Theta& theta) const {
  const auto key = pack(theta);
  const auto& shard = shards_[KeyHash{}(key) % kShards];
  std::lock_guard lock(shard.mutex);
  const auto it = shard.values.find(key);
  if (it == shard.values.end()) return std::nullopt;
  return it->second;
}

void MarglikMemo::insert(const Theta& theta, double value) {
  if (size_.load(std::memory_order_relaxed) >= max_entries_) return;
  auto key = pack(theta);
  auto& shard = shards_[KeyHash{}(key) % kShards];
  std::lock_guard lock(shard.mutex);
  if (shard.values.emplace(std::move(key), value).second) {
    size_.fetch_add(1, std::memory_order_relaxed);
  }
}

std::size_t MarglikMemo::size() const { return size_.load(); }

MarginalLikelihood::MarginalLikelihood(const Dataset& data, PriorConfig prior,
                                       MarglikMethod method, bool memoize)
    : data_(data), prior_(std::move(prior)), method_(method) {
  check_prior(prior_, data_);
  if (method_ == MarglikMethod::ala) ala_ = precompute_ala(data_, prior_);
  if (memoize) memo_ = std::make_unique<MarglikMemo>();
}

double MarginalLikelihood::operator()(const Theta& theta) const {
  calls_.fetch_add(1, std::memory_order_relaxed);
  if (memo_) {
    if (auto hit = memo_->find(theta)) return *hit;
  }
  const double value = compute(theta);
  evaluations_.fetch_add(1, std::memory_order_relaxed);
  if (memo_) memo_->insert(theta, value);
  return value;
}

double MarginalLikelihood::compute(const Theta& theta) const {
  switch (method_) {
    case MarglikMethod::ala: return ala_log_marginal(theta, *ala_);
    case MarglikMethod::la: return la_log_marginal(theta, data_, prior_);
    case MarglikMethod::quadrature: return quadrature_log_marginal(theta, data_, prior_);
  }
  throw InputError("unknown marginal likelihood method");
}

}  // namespace bvs
