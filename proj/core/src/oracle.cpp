#include "bvs/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "bvs/errors.hpp"
#include "bvs/parallel.hpp"

namespace bvs {

std::size_t count_valid_configurations(std::span<const int> group_sizes) {
  constexpr auto kMax = std::numeric_limits<std::size_t>::max();
  std::size_t total = 1;
  for (int size : group_sizes) {
    if (size >= 63) return kMax;
    const std::size_t factor = (std::size_t{1} << size) + 1;
    if (total > kMax / factor) return kMax;
    total *= factor;
  }
  return total;
}

EnumeratedPosterior enumerate_posterior(const MarginalLikelihood& marglik, int workers,
                                        std::size_t cap) {
  const auto& data = marglik.data();
  const auto& prior = marglik.prior();
  const auto expected = count_valid_configurations(data.group_sizes());
  if (expected > cap) {
    throw UnsupportedError("enumeration needs " +
                           (expected == std::numeric_limits<std::size_t>::max()
                                ? std::string("more than 2^64")
                                : std::to_string(expected)) +
                           " configurations, cap is " + std::to_string(cap));
  }

  EnumeratedPosterior post;
  post.configs.reserve(expected);
  for_each_valid_theta(data.q(), data.group_map(),
                       [&](const Theta& th) { post.configs.push_back(th); });

  const auto count = post.configs.size();
  post.log_post.resize(count);
  parallel_for(count, workers, [&](std::size_t i) {
    post.log_post[i] = log_prior_theta(post.configs[i], prior, data.group_map()) +
                       marglik(post.configs[i]);
  });

  const double m = *std::max_element(post.log_post.begin(), post.log_post.end());
  double total = 0.0;
  post.probs.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    post.probs[i] = std::exp(post.log_post[i] - m);
    total += post.probs[i];
  }
  post.gamma_incl.assign(data.q(), 0.0);
  post.eta_incl.assign(data.p(), 0.0);
  for (std::size_t i = 0; i < count; ++i) {
    post.probs[i] /= total;
    const auto& th = post.configs[i];
    for (std::size_t k = 0; k < data.q(); ++k) {
      if (th.gamma[k]) post.gamma_incl[k] += post.probs[i];
    }
    for (std::size_t j = 0; j < data.p(); ++j) {
      if (th.eta[j]) post.eta_incl[j] += post.probs[i];
    }
  }
  return post;
}

EnumeratedPosterior enumerate_posterior(const Dataset& data, const PriorConfig& prior,
                                        MarglikMethod method, int workers, std::size_t cap) {
  const auto expected = count_valid_configurations(data.group_sizes());
  if (expected > cap) {
    throw UnsupportedError("enumeration needs " + std::to_string(expected) +
                           " configurations, cap is " + std::to_string(cap));
  }
  const MarginalLikelihood marglik(data, prior, method, false);
  return enumerate_posterior(marglik, workers, cap);
}

CompareReport compare(const EnumeratedPosterior& enumerated, const SmcResult& result) {
  if (enumerated.gamma_incl.size() != result.gamma_incl.size() ||
      enumerated.eta_incl.size() != result.eta_incl.size()) {
    throw InputError("enumerated posterior and sampler result have different dimensions");
  }
  CompareReport report;
  report.gamma_gap.resize(result.gamma_incl.size());
  report.eta_gap.resize(result.eta_incl.size());
  for (std::size_t k = 0; k < report.gamma_gap.size(); ++k) {
    report.gamma_gap[k] = result.gamma_incl[k] - enumerated.gamma_incl[k];
    report.max_gamma_gap = std::max(report.max_gamma_gap, std::abs(report.gamma_gap[k]));
  }
  for (std::size_t j = 0; j < report.eta_gap.size(); ++j) {
    report.eta_gap[j] = result.eta_incl[j] - enumerated.eta_incl[j];
    report.max_eta_gap = std::max(report.max_eta_gap, std::abs(report.eta_gap[j]));
  }
  report.max_abs_gap = std::max(report.max_gamma_gap, report.max_eta_gap);

  if (!result.final_thetas.empty()) {
    auto key = [](const Theta& th) {
      std::vector<std::uint8_t> k(th.gamma);
      k.insert(k.end(), th.eta.begin(), th.eta.end());
      return k;
    };
    std::map<std::vector<std::uint8_t>, double> mass;
    for (std::size_t i = 0; i < enumerated.configs.size(); ++i) {
      mass[key(enumerated.configs[i])] += enumerated.probs[i];
    }
    for (std::size_t n = 0; n < result.final_thetas.size(); ++n) {
      mass[key(result.final_thetas[n])] -= result.final_weights[n];
    }
    double tv = 0.0;
    for (const auto& [k, v] : mass) tv += std::abs(v);
    report.total_variation = 0.5 * tv;
  }
  return report;
}

}  // namespace bvs
