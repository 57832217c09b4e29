#pragma once

// Synthetic bi-level designs: rows of [X U Z] drawn jointly from an
// equicorrelated Gaussian, responses from the chosen link.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "bvs/link.hpp"
#include "bvs/model.hpp"

namespace bvs {

struct SimSpec {
  std::size_t n = 2500;
  std::size_t p = 50;
  std::size_t q = 5;
  std::size_t r = 5;
  double rho = 0.5;
  // Empty means default_coefficients(q) / default_coefficients(r).
  std::vector<double> beta_u;
  std::vector<double> beta_z;
  // Empty means: zero except the last variable of each active group (set to 1).
  std::vector<double> beta_x;
  Link link = Link::probit;
  std::uint64_t seed = 1;
};

// floor(2k/5) zeros followed by ones; (0,0,1,1,1) for k = 5.
std::vector<double> default_coefficients(std::size_t k);

// Contiguous blocks of p / q variables, remainder to the last group (0-based).
std::vector<int> contiguous_groups(std::size_t p, std::size_t q);

void check_sim_spec(const SimSpec& spec);

struct Simulation {
  Dataset data;
  Theta truth;  // gamma_k = 1 iff group k carries signal; eta_j = 1 iff beta_x_j != 0
  CoefVector beta;
};

Simulation simulate(const SimSpec& spec);

}  // namespace bvs
