// Acceptance checks. Prints one [PASS]/[FAIL] line per criterion and exits
// nonzero if any fails. Pass criterion names (AC1..AC6) to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "bvs/datagen.hpp"
#include "bvs/marglik.hpp"
#include "bvs/oracle.hpp"
#include "bvs/proposal.hpp"
#include "bvs/smc.hpp"
#include "support/oracles.hpp"

using namespace bvs;

namespace {

// AC1
constexpr double kOracleGapTol = 0.02;
constexpr std::size_t kOracleN = 25000, kOracleM = 125, kOracleP = 200;
// AC2
constexpr std::size_t kFigN = 2500, kFigM = 25, kFigP = 100;
constexpr int kFigSeeds = 10;
constexpr double kActiveFloor = 0.9, kInactiveCeil = 0.1;
// AC3
constexpr double kAlaFlatTol = 0.20;
constexpr double kLaGrowthFloor = 10.0;
// AC4
constexpr double kFdRelTol = 1e-4;
constexpr int kFdInstances = 100;
constexpr double kLaAlaSymTol = 1e-9;
constexpr double kProposalSumTol = 1e-12;
// AC5
constexpr int kInvariantRuns = 10;
constexpr double kWeightSumTol = 1e-12;
// AC6
constexpr int kStabilitySeeds = 10;
constexpr double kMedianIqrCeil = 0.05;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int workers() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

SmcConfig make_config(std::size_t n, std::size_t m, std::size_t p, std::uint64_t seed,
                      MarglikMethod method) {
  SmcConfig c;
  c.n_particles = n;
  c.ancestors = m;
  c.chain_length = p;
  c.ess_ratio = 0.5;
  c.seed = seed;
  c.marglik_method = method;
  c.workers = workers();
  return c;
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

// Linear-interpolation quantile of a sorted copy.
double quantile(std::vector<double> v, double prob) {
  std::sort(v.begin(), v.end());
  const double pos = prob * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

Dataset flat_dataset(std::size_t p, std::size_t q, std::size_t r) {
  return Dataset(Eigen::VectorXd(0), Eigen::MatrixXd(0, static_cast<Eigen::Index>(p)),
                 Eigen::MatrixXd(0, static_cast<Eigen::Index>(q)),
                 Eigen::MatrixXd(0, static_cast<Eigen::Index>(r)), contiguous_groups(p, q));
}

Outcome oracle_equivalence() {
  std::vector<std::pair<std::string, Dataset>> instances;
  for (std::uint64_t s = 1; s <= 5; ++s) {
    instances.emplace_back("random#" + std::to_string(s), testing::random_dataset(1000 + s, 200, 4, 2, 1));
  }
  instances.emplace_back("flat", flat_dataset(4, 2, 1));

  double worst = 0.0;
  std::string worst_name;
  for (const auto& [name, data] : instances) {
    const auto prior = PriorConfig::uniform(2, 4, 0.5, 0.5);
    for (auto method : {MarglikMethod::la, MarglikMethod::ala}) {
      const MarginalLikelihood marglik(data, prior, method);
      const auto exact = enumerate_posterior(marglik);
      const auto res = run(data, prior, make_config(kOracleN, kOracleM, kOracleP, 7, method), marglik);
      const double gap = compare(exact, res).max_abs_gap;
      std::cerr << "  AC1 " << name << " " << to_string(method) << " gap=" << gap << '\n';
      if (gap > worst) {
        worst = gap;
        worst_name = name + "/" + std::string(to_string(method));
      }
    }
  }
  return {worst < kOracleGapTol, "max |gap| over 12 runs = " + fmt(worst) + " (" + worst_name +
                                     ") vs " + fmt(kOracleGapTol)};
}

Outcome inclusion_pattern() {
  struct Cell {
    std::vector<double> active_group, inactive_group, active_var;
  };
  const std::vector<std::size_t> ns{100, 500, 2500};
  std::map<std::pair<std::size_t, MarglikMethod>, Cell> cells;
  for (auto n : ns) {
    for (int s = 1; s <= kFigSeeds; ++s) {
      SimSpec spec;
      spec.n = n;
      spec.p = 50;
      spec.seed = static_cast<std::uint64_t>(s);
      const auto sim = simulate(spec);
      const auto prior = PriorConfig::uniform(spec.q, spec.p, 0.5, 0.5);
      for (auto method : {MarglikMethod::la, MarglikMethod::ala}) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto res =
            run(sim.data, prior, make_config(kFigN, kFigM, kFigP, static_cast<std::uint64_t>(s), method));
        auto& cell = cells[{n, method}];
        for (std::size_t k = 0; k < spec.q; ++k) {
          (sim.truth.gamma[k] ? cell.active_group : cell.inactive_group).push_back(res.gamma_incl[k]);
        }
        for (std::size_t j = 0; j < spec.p; ++j) {
          if (sim.truth.eta[j]) cell.active_var.push_back(res.eta_incl[j]);
        }
        std::cerr << "  AC2 n=" << n << " seed=" << s << " " << to_string(method) << " wall="
                  << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()
                  << "s\n";
      }
    }
  }

  bool pass = true;
  std::ostringstream detail;
  for (auto method : {MarglikMethod::la, MarglikMethod::ala}) {
    const auto& c = cells[{2500, method}];
    const double a = mean(c.active_group), i = mean(c.inactive_group);
    pass = pass && a > kActiveFloor && i < kInactiveCeil;
    detail << "n=2500 " << to_string(method) << ": active " << fmt(a) << ", inactive " << fmt(i) << "; ";
  }
  for (std::size_t n : {std::size_t{100}, std::size_t{500}}) {
    const double la = mean(cells[{n, MarglikMethod::la}].active_var);
    const double ala = mean(cells[{n, MarglikMethod::ala}].active_var);
    pass = pass && ala <= la;
    detail << "n=" << n << " active vars ala " << fmt(ala) << " <= la " << fmt(la) << "; ";
  }
  detail << "N=" << kFigN << ", " << kFigSeeds << " seeds";
  return {pass, detail.str()};
}

// Mean seconds per evaluation, best of `repeats` passes over `thetas`.
double per_eval_seconds(const MarginalLikelihood& marglik, const std::vector<Theta>& thetas,
                        int repeats) {
  double best = std::numeric_limits<double>::infinity();
  volatile double sink = 0.0;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    for (const auto& th : thetas) sink = sink + marglik(th);
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    best = std::min(best, dt / static_cast<double>(thetas.size()));
  }
  return best;
}

Outcome cost_scaling() {
  const std::vector<std::size_t> ns{500, 5000, 50000};
  const auto prior = PriorConfig::uniform(5, 50, 0.5, 0.5);
  const auto params = prior_proposal(prior, contiguous_groups(50, 5), 1e-6);
  Rng rng = make_stream(3, 0, 0);
  std::vector<Theta> thetas;
  for (int i = 0; i < 4000; ++i) thetas.push_back(sample_proposal(params, rng).theta);
  const std::vector<Theta> la_thetas(thetas.begin(), thetas.begin() + 20);

  std::vector<Simulation> sims;
  std::vector<std::unique_ptr<MarginalLikelihood>> ala;
  for (auto n : ns) {
    SimSpec spec;
    spec.n = n;
    spec.p = 50;
    spec.seed = 5;
    sims.push_back(simulate(spec));
  }
  for (const auto& sim : sims) {
    ala.push_back(std::make_unique<MarginalLikelihood>(sim.data, prior, MarglikMethod::ala, false));
  }
  // Interleaved rounds so machine-level slowdowns hit every n alike.
  std::vector<double> ala_t(ns.size(), std::numeric_limits<double>::infinity());
  for (int round = 0; round < 40; ++round) {
    for (std::size_t i = 0; i < ns.size(); ++i) {
      ala_t[i] = std::min(ala_t[i], per_eval_seconds(*ala[i], thetas, 1));
    }
  }
  std::vector<double> la_t;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    const MarginalLikelihood la(sims[i].data, prior, MarglikMethod::la, false);
    la_t.push_back(per_eval_seconds(la, la_thetas, ns[i] > 5000 ? 1 : 3));
  }
  const auto [lo, hi] = std::minmax_element(ala_t.begin(), ala_t.end());
  const double spread = (*hi - *lo) / *lo;
  const double growth = la_t.back() / la_t.front();
  std::ostringstream d;
  d << "ALA per-eval us " << fmt(ala_t[0] * 1e6) << "/" << fmt(ala_t[1] * 1e6) << "/"
    << fmt(ala_t[2] * 1e6) << " spread " << fmt(100 * spread, 3) << "% < 20%; LA ms "
    << fmt(la_t[0] * 1e3) << "/" << fmt(la_t[1] * 1e3) << "/" << fmt(la_t[2] * 1e3)
    << " growth x" << fmt(growth, 3) << " >= " << kLaGrowthFloor;
  return {spread < kAlaFlatTol && growth >= kLaGrowthFloor, d.str()};
}

Outcome numerical_suite() {
  std::vector<std::string> failures;
  // Gradient and Hessian against central differences.
  double worst = 0.0;
  Rng rng = make_stream(4, 0, 0);
  std::normal_distribution<double> normal;
  for (int i = 0; i < kFdInstances; ++i) {
    const auto link = i % 2 == 0 ? Link::probit : Link::logit;
    const auto data = testing::random_dataset(4000 + i, 40, 5, 2, 1, 0.8, link);
    const auto prior = PriorConfig::uniform(2, 5, 0.5, 0.5, 0.5 + i % 3, link);
    const auto theta = testing::random_theta(rng, data, 0.7);
    const auto d = active_dim(theta, data.r());
    Eigen::VectorXd beta(d);
    for (Eigen::Index c = 0; c < beta.size(); ++c) beta(c) = 0.5 * normal(rng);
    const auto gh = grad_hess_h(beta, theta, data, prior);
    testing::ScalarField f = [&](const Eigen::VectorXd& b) { return testing::naive_h(b, theta, data, prior); };
    const auto g_fd = testing::fd_gradient(f, beta, 1e-5);
    const auto h_fd = testing::fd_hessian(f, beta, 1e-4);
    const double rg = (gh.gradient - g_fd).cwiseAbs().maxCoeff() / std::max(1.0, g_fd.cwiseAbs().maxCoeff());
    const double rh = (gh.hessian - h_fd).cwiseAbs().maxCoeff() / std::max(1.0, h_fd.cwiseAbs().maxCoeff());
    worst = std::max({worst, rg, rh});
  }
  if (!(worst < kFdRelTol)) failures.push_back("FD rel err " + fmt(worst));

  // LA error shrinks with n on nested designs (d = 1 and d = 2).
  const auto big = testing::random_dataset(4200, 800, 2, 1, 0, 0.9);
  const Dataset small(big.y().head(50), big.x().topRows(50), big.u().topRows(50),
                      big.z().topRows(50), big.group_map());
  const auto prior = PriorConfig::uniform(1, 2, 0.5, 0.5);
  std::string la_note;
  for (const Theta& th : {Theta{{1}, {0, 0}}, Theta{{1}, {1, 0}}}) {
    const double e_small = std::abs(la_log_marginal(th, small, prior) - quadrature_log_marginal(th, small, prior));
    const double e_big = std::abs(la_log_marginal(th, big, prior) - quadrature_log_marginal(th, big, prior));
    la_note += " " + fmt(e_small, 2) + "->" + fmt(e_big, 2);
    if (!(e_big < e_small)) failures.push_back("LA error did not shrink");
  }

  // LA = ALA where the mode is the origin.
  const auto half = testing::random_dataset(4300, 60, 4, 2, 1);
  Eigen::VectorXd y(120);
  y << Eigen::VectorXd::Ones(60), Eigen::VectorXd::Zero(60);
  const Dataset sym(y, (Eigen::MatrixXd(120, 4) << half.x(), half.x()).finished(),
                    (Eigen::MatrixXd(120, 2) << half.u(), half.u()).finished(),
                    (Eigen::MatrixXd(120, 1) << half.z(), half.z()).finished(), half.group_map());
  const auto sym_prior = PriorConfig::uniform(2, 4, 0.5, 0.5);
  const auto cache = precompute_ala(sym, sym_prior);
  double sym_gap = 0.0;
  for_each_valid_theta(2, sym.group_map(), [&](const Theta& th) {
    sym_gap = std::max(sym_gap, std::abs(la_log_marginal(th, sym, sym_prior) - ala_log_marginal(th, cache)));
  });
  if (!(sym_gap < kLaAlaSymTol)) failures.push_back("LA/ALA symmetric gap " + fmt(sym_gap));

  // Proposal mass sums to one.
  std::vector<Theta> sample;
  std::vector<double> w;
  const std::vector<int> gm{0, 0, 1, 2, 2};
  for (int i = 0; i < 400; ++i) {
    Theta th = Theta::zeros(3, 5);
    for (auto& g : th.gamma) g = bernoulli(rng, 0.5);
    if (th.gamma[0]) th.gamma[2] = bernoulli(rng, 0.8);
    for (std::size_t j = 0; j < 5; ++j) {
      if (th.gamma[static_cast<std::size_t>(gm[j])]) th.eta[j] = bernoulli(rng, 0.3);
    }
    sample.push_back(th);
    w.push_back(0.1 + uniform01(rng));
  }
  const double wsum = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& x : w) x /= wsum;
  const auto params = fit_proposal({sample, w}, gm, std::vector<double>(5, 0.5));
  double mass = 0.0;
  for_each_valid_theta(3, gm, [&](const Theta& th) { mass += std::exp(log_q(th, params)); });
  if (!(std::abs(mass - 1.0) < kProposalSumTol)) failures.push_back("proposal mass " + fmt(mass, 17));

  // ESS closed forms.
  const std::vector<double> eq(7, -1.3), skew{0.0, 0.0, std::log(2.0)};
  const double e1 = ess(eq), e2 = ess(skew);
  if (std::abs(e1 - 7.0) > 1e-12 || std::abs(e2 - 8.0 / 3.0) > 1e-12) failures.push_back("ESS");

  std::ostringstream d;
  d << "FD worst rel " << fmt(worst, 3) << "; LA err" << la_note << "; LA-ALA sym " << fmt(sym_gap, 3)
    << "; proposal mass-1 " << fmt(mass - 1.0, 3) << "; ESS " << fmt(e1, 12) << ", " << fmt(e2, 12);
  for (const auto& f : failures) d << " | FAILED: " << f;
  return {failures.empty(), d.str()};
}

Outcome invariants() {
  std::size_t particles_checked = 0, violations = 0;
  double worst_weight = 0.0;
  bool schedules_ok = true;
  bool identical = true;
  for (int r = 0; r < kInvariantRuns; ++r) {
    const auto data = testing::random_dataset(5000 + r, 300, 9, 3, 1, 0.9);
    const auto prior = PriorConfig::uniform(3, 9, 0.5, 0.5);
    const auto method = r % 2 == 0 ? MarglikMethod::la : MarglikMethod::ala;
    auto config = make_config(kOracleN, kOracleM, kOracleP, 100 + r, method);
    config.workers = 1;
    double last = -1.0;
    const auto res = run(data, prior, config, [&](const ParticleSystem& s) {
      for (const auto& th : s.thetas) {
        ++particles_checked;
        if (!satisfies_constraint(th, data.group_map())) ++violations;
      }
      double total = 0.0;
      for (double lw : s.log_weights) total += std::exp(lw);
      worst_weight = std::max(worst_weight, std::abs(total - 1.0));
      if (!(s.lambda > last)) schedules_ok = false;
      last = s.lambda;
    });
    if (res.lambda_schedule.back() != 1.0) schedules_ok = false;
    for (std::size_t t = 1; t < res.lambda_schedule.size(); ++t) {
      if (!(res.lambda_schedule[t] > res.lambda_schedule[t - 1])) schedules_ok = false;
    }
    if (r < 3) {
      auto multi = config;
      multi.workers = 4;
      const auto other = run(data, prior, multi);
      identical = identical && other.gamma_incl == res.gamma_incl && other.eta_incl == res.eta_incl &&
                  other.lambda_schedule == res.lambda_schedule &&
                  other.acceptance_rates == res.acceptance_rates && other.log_evidence == res.log_evidence;
    }
  }
  std::ostringstream d;
  d << violations << " constraint violations in " << particles_checked << " particle-stages; max |sum W - 1| "
    << fmt(worst_weight, 3) << "; schedules " << (schedules_ok ? "increasing to 1" : "BROKEN")
    << "; workers 1 vs 4 " << (identical ? "bit-identical" : "DIFFER");
  return {violations == 0 && worst_weight <= kWeightSumTol && schedules_ok && identical, d.str()};
}

Outcome stability() {
  SimSpec spec;
  spec.n = 1500;
  spec.p = 50;
  spec.seed = 6;
  const auto sim = simulate(spec);
  const auto prior = PriorConfig::uniform(spec.q, spec.p, 0.5, 0.5);
  std::vector<std::vector<double>> per_var(spec.p);
  for (int s = 1; s <= kStabilitySeeds; ++s) {
    const auto res = run(sim.data, prior,
                         make_config(kOracleN, kOracleM, kOracleP, 600 + s, MarglikMethod::ala));
    for (std::size_t j = 0; j < spec.p; ++j) per_var[j].push_back(res.eta_incl[j]);
  }
  std::vector<double> iqr;
  for (const auto& v : per_var) iqr.push_back(quantile(v, 0.75) - quantile(v, 0.25));
  const double med = quantile(iqr, 0.5);
  std::ostringstream d;
  d << "per-variable IQR min " << fmt(*std::min_element(iqr.begin(), iqr.end()), 3) << ", median "
    << fmt(med, 3) << ", q90 " << fmt(quantile(iqr, 0.9), 3) << ", max "
    << fmt(*std::max_element(iqr.begin(), iqr.end()), 3) << "; median < " << kMedianIqrCeil;
  return {med < kMedianIqrCeil, d.str()};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::pair<std::string, std::function<Outcome()>>>> criteria{
      {"AC1", {"oracle equivalence", oracle_equivalence}},
      {"AC2", {"qualitative inclusion pattern", inclusion_pattern}},
      {"AC3", {"evaluation cost scaling", cost_scaling}},
      {"AC4", {"numerical correctness", numerical_suite}},
      {"AC5", {"sampler invariants", invariants}},
      {"AC6", {"replicate stability", stability}},
  };
  std::vector<std::string> selected(argv + 1, argv + argc);
  int failed = 0;
  for (const auto& [id, entry] : criteria) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), id) == selected.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = entry.second();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << (out.pass ? "[PASS] " : "[FAIL] ") << id << " " << entry.first << ": " << out.detail
              << " (" << fmt(secs, 3) << " s)" << std::endl;
    if (!out.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
