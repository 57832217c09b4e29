#include <cmath>
#include <map>

#include "bvs/oracle.hpp"
#include "bvs/proposal.hpp"
#include "doctest.h"

using namespace bvs;

namespace {

std::vector<double> uniform_weights(std::size_t n) { return std::vector<double>(n, 1.0 / static_cast<double>(n)); }

double exp_sum_over_space(const ProposalParams& params) {
  double total = 0.0;
  for_each_valid_theta(params.q(), params.group_map, [&](const Theta& th) { total += std::exp(log_q(th, params)); });
  return total;
}

}  // namespace

TEST_CASE("clipping constant") {
  CHECK(clipping_constant(10) == 1e-2);
  CHECK(clipping_constant(1000) == doctest::Approx(1e-3));
  CHECK(clipping_constant(100000000) == 1e-6);
}

TEST_CASE("fit on a degenerate sample") {
  const std::vector<int> gm{0, 0, 1, 2};
  const std::vector<double> fallback(4, 0.5);
  const Theta th{{1, 0, 1}, {1, 0, 0, 1}};
  const std::vector<Theta> thetas(500, th);
  const auto w = uniform_weights(thetas.size());
  const auto params = fit_proposal({thetas, w}, gm, fallback);
  const double kappa = clipping_constant(500);
  CHECK(params.kappa == kappa);
  for (std::size_t k = 0; k < 3; ++k) CHECK_FALSE(params.active_regression[k]);
  CHECK(params.marginal_gamma[0] == doctest::Approx(1 - kappa));
  CHECK(params.marginal_gamma[1] == doctest::Approx(kappa));
  CHECK(params.c[0] == doctest::Approx(1 - kappa));
  CHECK(params.c[1] == doctest::Approx(kappa));
  CHECK(params.c[2] == 0.5);  // group 1 never selected
  CHECK(std::isfinite(log_q(th, params)));
  CHECK(exp_sum_over_space(params) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("independent groups give a near-zero interaction") {
  Rng rng = make_stream(21, 0, 0);
  const std::vector<int> gm{0, 1};
  std::vector<Theta> thetas;
  for (int i = 0; i < 10000; ++i) {
    Theta th = Theta::zeros(2, 2);
    th.gamma = {bernoulli(rng, 0.5), bernoulli(rng, 0.5)};
    thetas.push_back(th);
  }
  const auto w = uniform_weights(thetas.size());
  const auto params = fit_proposal({thetas, w}, gm, std::vector<double>(2, 0.5));
  REQUIRE(params.active_regression[1]);
  CHECK(std::abs(params.b(1, 0)) < 0.1);
  CHECK(std::abs(params.b(1, 1)) < 0.1);
}

TEST_CASE("dependent groups are captured by the nested regression") {
  Rng rng = make_stream(22, 0, 0);
  const std::vector<int> gm{0, 1};
  std::vector<Theta> thetas;
  for (int i = 0; i < 20000; ++i) {
    Theta th = Theta::zeros(2, 2);
    const auto g0 = bernoulli(rng, 0.5);
    th.gamma = {g0, bernoulli(rng, g0 ? 0.9 : 0.2)};
    thetas.push_back(th);
  }
  const auto w = uniform_weights(thetas.size());
  const auto params = fit_proposal({thetas, w}, gm, std::vector<double>(2, 0.5));
  const std::vector<std::uint8_t> off{0, 0}, on{1, 0};
  CHECK(gamma_rate(params, 1, off) == doctest::Approx(0.2).epsilon(0.1));
  CHECK(gamma_rate(params, 1, on) == doctest::Approx(0.9).epsilon(0.03));
}

TEST_CASE("variable rates are weighted conditional frequencies") {
  const std::vector<int> gm{0, 0};
  const std::vector<Theta> thetas{
      Theta{{1}, {1, 0}}, Theta{{1}, {0, 0}}, Theta{{0}, {0, 0}}, Theta{{1}, {1, 1}}};
  SUBCASE("uniform weights") {
    const auto w = uniform_weights(4);
    const auto params = fit_proposal({thetas, w}, gm, std::vector<double>(2, 0.3));
    CHECK(params.c[0] == doctest::Approx(2.0 / 3.0));
    CHECK(params.c[1] == doctest::Approx(1.0 / 3.0));
  }
  SUBCASE("one included and one excluded at equal weight") {
    const std::vector<double> w{0.25, 0.25, 0.5, 0.0};
    const auto params = fit_proposal({thetas, w}, gm, std::vector<double>(2, 0.3));
    CHECK(params.c[0] == doctest::Approx(0.5));
    CHECK(params.c[1] == doctest::Approx(clipping_constant(4)));
  }
}

TEST_CASE("clipping keeps every configuration reachable") {
  const std::vector<int> gm{0, 1, 2, 3, 4};
  const std::vector<Theta> thetas(1000, Theta::zeros(5, 5));
  const auto w = uniform_weights(1000);
  const auto params = fit_proposal({thetas, w}, gm, std::vector<double>(5, 0.5));
  CHECK(params.kappa == doctest::Approx(1e-3));
  const double p_zero = std::exp(log_q(Theta::zeros(5, 5), params));
  CHECK(p_zero >= 0.995);
  CHECK(p_zero < 1.0);
  CHECK(std::isfinite(log_q(Theta::ones(5, 5), params)));
}

TEST_CASE("zero coefficients give fair coins") {
  ProposalParams params;
  params.b = Eigen::MatrixXd::Zero(3, 3);
  params.active_regression = {1, 1, 1};
  params.marginal_gamma = {0.5, 0.5, 0.5};
  params.c = {0.5, 0.5, 0.5};
  params.group_map = {0, 1, 2};
  params.kappa = 1e-6;
  Rng rng = make_stream(3, 3, 3);
  std::vector<double> counts(3, 0.0);
  const int draws = 40000;
  for (int i = 0; i < draws; ++i) {
    const auto d = sample_proposal(params, rng);
    for (std::size_t k = 0; k < 3; ++k) counts[k] += d.theta.gamma[k];
  }
  const double se = std::sqrt(0.25 / draws);
  for (double c : counts) CHECK(std::abs(c / draws - 0.5) < 4 * se);
}

TEST_CASE("log_q") {
  SUBCASE("prior proposal value") {
    auto prior = PriorConfig::uniform(1, 1, 0.4, 0.7);
    const auto params = prior_proposal(prior, std::vector<int>{0}, 1e-3);
    CHECK(log_q(Theta{{1}, {0}}, params) == doctest::Approx(std::log(0.4) + std::log(0.3)));
    CHECK(log_q(Theta{{0}, {0}}, params) == doctest::Approx(std::log(0.6)));
    CHECK(log_q(Theta{{0}, {1}}, params) == -std::numeric_limits<double>::infinity());
  }
  SUBCASE("normalised over the constrained space") {
    Rng rng = make_stream(4, 0, 0);
    const std::vector<int> gm{0, 0, 1};
    std::vector<Theta> thetas;
    std::vector<double> w;
    for (int i = 0; i < 300; ++i) {
      Theta th = Theta::zeros(2, 3);
      th.gamma = {bernoulli(rng, 0.6), bernoulli(rng, 0.3)};
      if (th.gamma[1]) th.gamma[0] = bernoulli(rng, 0.9);
      for (std::size_t j = 0; j < 3; ++j) {
        if (th.gamma[static_cast<std::size_t>(gm[j])]) th.eta[j] = bernoulli(rng, 0.4);
      }
      thetas.push_back(th);
      w.push_back(uniform01(rng));
    }
    double total = 0;
    for (double x : w) total += x;
    for (double& x : w) x /= total;
    const auto params = fit_proposal({thetas, w}, gm, std::vector<double>(3, 0.5));
    CHECK(exp_sum_over_space(params) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("sampled frequencies match the density") {
    ProposalParams params;
    params.b = Eigen::MatrixXd::Zero(2, 2);
    params.b(0, 0) = 0.3;
    params.b(1, 1) = -0.4;
    params.b(1, 0) = 1.1;
    params.active_regression = {1, 1};
    params.marginal_gamma = {0.5, 0.5};
    params.c = {0.35, 0.8};
    params.group_map = {0, 1};
    params.kappa = 1e-6;

    Rng rng = make_stream(5, 0, 0);
    std::map<std::pair<std::vector<std::uint8_t>, std::vector<std::uint8_t>>, int> counts;
    for (int i = 0; i < 2000; ++i) {
      const auto d = sample_proposal(params, rng);
      REQUIRE(d.log_q == log_q(d.theta, params));
    }
    const int draws = 1000000;
    for (int i = 0; i < draws; ++i) {
      auto d = sample_proposal(params, rng);
      ++counts[{std::move(d.theta.gamma), std::move(d.theta.eta)}];
    }
    int checked = 0;
    for_each_valid_theta(2, params.group_map, [&](const Theta& th) {
      const double prob = std::exp(log_q(th, params));
      const double freq = counts[{th.gamma, th.eta}] / static_cast<double>(draws);
      const double se = std::sqrt(prob * (1 - prob) / draws);
      CHECK(std::abs(freq - prob) < 3 * se);
      ++checked;
    });
    CHECK(checked == 9);
  }
}
