#pragma once

// Exact posterior over the constrained indicator space by enumeration, for
// small instances; the reference the sampler is checked against.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "bvs/marglik.hpp"
#include "bvs/model.hpp"
#include "bvs/smc.hpp"

namespace bvs {

struct EnumeratedPosterior {
  std::vector<Theta> configs;
  std::vector<double> log_post;  // unnormalised log p(theta) + log L(theta)
  std::vector<double> probs;
  std::vector<double> gamma_incl;
  std::vector<double> eta_incl;
};

// prod_k (1 + 2^{p_k}); saturates at SIZE_MAX.
std::size_t count_valid_configurations(std::span<const int> group_sizes);

inline constexpr std::size_t kEnumerationCap = 1'000'000;

// Visits every theta with eta_j <= gamma_g(j): gamma as a binary counter
// (group 0 fastest), and for each gamma the eta bits of the selected groups.
template <typename Visit>
void for_each_valid_theta(std::size_t q, std::span<const int> group_map, Visit&& visit);

// Throws UnsupportedError when the configuration count exceeds `cap`.
EnumeratedPosterior enumerate_posterior(const MarginalLikelihood& marglik, int workers = 1,
                                        std::size_t cap = kEnumerationCap);

EnumeratedPosterior enumerate_posterior(const Dataset& data, const PriorConfig& prior,
                                        MarglikMethod method, int workers = 1,
                                        std::size_t cap = kEnumerationCap);

struct CompareReport {
  std::vector<double> gamma_gap;  // smc - enumerated
  std::vector<double> eta_gap;
  double max_gamma_gap = 0.0;
  double max_eta_gap = 0.0;
  double max_abs_gap = 0.0;
  std::optional<double> total_variation;  // needs final particles in the result
};

CompareReport compare(const EnumeratedPosterior& enumerated, const SmcResult& result);

template <typename Visit>
void for_each_valid_theta(std::size_t q, std::span<const int> group_map, Visit&& visit) {
  const auto p = group_map.size();
  Theta theta = Theta::zeros(q, p);
  std::vector<std::size_t> free_vars;
  for (;;) {
    free_vars.clear();
    for (std::size_t j = 0; j < p; ++j) {
      theta.eta[j] = 0;
      if (theta.gamma[static_cast<std::size_t>(group_map[j])]) free_vars.push_back(j);
    }
    for (;;) {
      visit(static_cast<const Theta&>(theta));
      std::size_t i = 0;
      for (; i < free_vars.size(); ++i) {
        auto& bit = theta.eta[free_vars[i]];
        bit ^= 1;
        if (bit) break;
      }
      if (i == free_vars.size()) break;
    }
    std::size_t k = 0;
    for (; k < q; ++k) {
      theta.gamma[k] ^= 1;
      if (theta.gamma[k]) break;
    }
    if (k == q) break;
  }
}

}  // namespace bvs
