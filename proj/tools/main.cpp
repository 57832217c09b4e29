#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bvs/datagen.hpp"
#include "bvs/dataset_io.hpp"
#include "bvs/errors.hpp"
#include "bvs/oracle.hpp"
#include "bvs/serialize.hpp"
#include "bvs/smc.hpp"

namespace fs = std::filesystem;

namespace {

enum ExitCode : int { kOk = 0, kUsage = 2, kSamplerFailure = 3, kOracleCap = 4 };

struct SimulateArgs {
  bvs::SimSpec spec;
  std::string link = "probit";
  std::string out;
};

struct SamplerArgs {
  std::string method = "ala";
  std::size_t n_particles = 25000;
  std::size_t ancestors = 125;
  std::size_t chain_length = 200;
  double ess_ratio = 0.5;
  std::uint64_t seed = 0;
  int workers = 1;
  int max_stages = 500;
};

struct PriorArgs {
  double sigma2 = 1.0;
  double p_gamma = 0.5;
  double p_eta = 0.5;
  std::string link = "probit";
};

struct RunArgs {
  std::string data;
  std::string out;
  SamplerArgs sampler;
  PriorArgs prior;
};

struct OracleArgs {
  std::string data;
  std::string out;
  bool smc = false;
  bool flat = false;
  std::size_t p = 0;
  std::size_t q = 0;
  std::size_t r = 0;
  std::size_t cap = bvs::kEnumerationCap;
  SamplerArgs sampler;
  PriorArgs prior;
};

struct BenchArgs {
  std::vector<std::size_t> grid_n{500};
  std::vector<std::size_t> grid_p{50};
  std::string method = "both";
  std::string kind = "eval";
  int reps = 3;
  std::size_t evals = 200;
  std::uint64_t seed = 1;
  std::string out;
  SamplerArgs sampler;
};

void add_sampler_flags(CLI::App* cmd, SamplerArgs& s) {
  cmd->add_option("--method", s.method, "Marginal likelihood: la or ala")
      ->check(CLI::IsMember({"la", "ala"}))
      ->capture_default_str();
  cmd->add_option("--N", s.n_particles, "Particles (must equal M * P)")->capture_default_str();
  cmd->add_option("--M", s.ancestors, "Resampled ancestors per stage")->capture_default_str();
  cmd->add_option("--P", s.chain_length, "Chain length per ancestor")->capture_default_str();
  cmd->add_option("--ess-ratio", s.ess_ratio, "Target ESS / N")->capture_default_str();
  cmd->add_option("--seed", s.seed, "RNG seed")->capture_default_str();
  cmd->add_option("--workers", s.workers, "Worker threads")
      ->envname("BVS_WORKERS")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--max-stages", s.max_stages, "Stage limit")->capture_default_str();
}

void add_prior_flags(CLI::App* cmd, PriorArgs& p) {
  cmd->add_option("--sigma2", p.sigma2, "Slab variance")->capture_default_str();
  cmd->add_option("--p-gamma", p.p_gamma, "Prior group inclusion rate")->capture_default_str();
  cmd->add_option("--p-eta", p.p_eta, "Prior within-group inclusion rate")->capture_default_str();
  cmd->add_option("--link", p.link, "probit or logit")
      ->check(CLI::IsMember({"probit", "logit"}))
      ->capture_default_str();
}

bvs::SmcConfig to_config(const SamplerArgs& s) {
  bvs::SmcConfig c;
  c.n_particles = s.n_particles;
  c.ancestors = s.ancestors;
  c.chain_length = s.chain_length;
  c.ess_ratio = s.ess_ratio;
  c.seed = s.seed;
  c.marglik_method = bvs::parse_marglik_method(s.method);
  c.workers = s.workers;
  c.max_stages = s.max_stages;
  return c;
}

bvs::PriorConfig to_prior(const PriorArgs& p, std::size_t q, std::size_t pvars) {
  return bvs::PriorConfig::uniform(q, pvars, p.p_gamma, p.p_eta, p.sigma2,
                                   bvs::parse_link(p.link));
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text << '\n';
    return;
  }
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  std::ofstream out(target);
  if (!out) throw bvs::InputError("cannot write " + path);
  out << text << '\n';
}

int cmd_simulate(SimulateArgs& a) {
  a.spec.link = bvs::parse_link(a.link);
  const auto sim = bvs::simulate(a.spec);
  const fs::path dir(a.out);
  fs::create_directories(dir);
  bvs::write_dataset(sim.data, dir / "data.csv");
  std::cout << bvs::theta_json(sim.truth) << '\n';
  return kOk;
}

int cmd_run(const RunArgs& a) {
  const auto data = bvs::read_dataset(a.data);
  const auto config = to_config(a.sampler);
  bvs::check_config(config);
  const auto prior = to_prior(a.prior, data.q(), data.p());
  bvs::check_prior(prior, data);
  try {
    const auto result = bvs::run(data, prior, config);
    write_text(a.out, bvs::smc_result_json(result, config, prior));
    if (!a.out.empty() && a.out != "-") {
      double wall = 0.0;
      for (double t : result.stage_wall_times_s) wall += t;
      std::cout << "stages=" << result.stage_count() << " log_evidence=" << result.log_evidence
                << " marglik_evals=" << result.marglik_evals << " wall_s=" << wall << '\n';
    }
  } catch (const bvs::SmcRunError& e) {
    write_text(a.out, bvs::smc_failure_json(e.partial(), config, prior, e.what()));
    std::cerr << "sampler failure: " << e.what() << '\n';
    return kSamplerFailure;
  }
  return kOk;
}

int cmd_oracle(const OracleArgs& a) {
  std::optional<bvs::Dataset> loaded;
  if (!a.data.empty()) loaded = bvs::read_dataset(a.data);
  std::size_t p = loaded ? loaded->p() : a.p;
  std::size_t q = loaded ? loaded->q() : a.q;
  std::size_t r = loaded ? loaded->r() : a.r;
  if (!loaded && !a.flat) throw bvs::InputError("--data is required unless --flat is given");
  if (!loaded && (p == 0 || q == 0)) throw bvs::InputError("--flat without --data needs --p and --q");

  // Flat likelihood: keep the dimensions, drop every observation.
  const auto group_map = loaded ? loaded->group_map() : bvs::contiguous_groups(p, q);
  const bvs::Dataset data =
      a.flat ? bvs::Dataset(Eigen::VectorXd(0), Eigen::MatrixXd(0, static_cast<Eigen::Index>(p)),
                            Eigen::MatrixXd(0, static_cast<Eigen::Index>(q)),
                            Eigen::MatrixXd(0, static_cast<Eigen::Index>(r)), group_map)
             : *loaded;

  const auto config = to_config(a.sampler);
  if (a.smc) bvs::check_config(config);
  const auto prior = to_prior(a.prior, q, p);
  bvs::check_prior(prior, data);
  const bvs::MarginalLikelihood marglik(data, prior, config.marglik_method);
  const auto truth = bvs::enumerate_posterior(marglik, config.workers, a.cap);

  std::optional<bvs::SmcResult> smc;
  bvs::CompareReport report;
  if (a.smc) {
    auto cfg = config;
    cfg.keep_final_particles = true;
    try {
      smc = bvs::run(data, prior, cfg, marglik);
    } catch (const bvs::SmcRunError& e) {
      write_text(a.out, bvs::smc_failure_json(e.partial(), config, prior, e.what()));
      std::cerr << "sampler failure: " << e.what() << '\n';
      return kSamplerFailure;
    }
    report = bvs::compare(truth, *smc);
  }
  write_text(a.out, bvs::compare_report_json(report, truth, smc ? &*smc : nullptr, prior));
  if (!a.out.empty() && a.out != "-") {
    std::cout << "configurations=" << truth.configs.size();
    if (smc) std::cout << " max_abs_gap=" << report.max_abs_gap;
    std::cout << '\n';
  }
  return kOk;
}

double time_evaluations(const bvs::MarginalLikelihood& marglik, const std::vector<bvs::Theta>& thetas) {
  volatile double sink = 0.0;
  const auto start = std::chrono::steady_clock::now();
  for (const auto& th : thetas) sink = sink + marglik(th);
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

int cmd_bench(const BenchArgs& a) {
  if (a.kind != "eval" && a.kind != "smc") throw bvs::InputError("--kind must be eval or smc");
  std::vector<std::string> methods;
  if (a.method == "both") {
    methods = {"ala", "la"};
  } else {
    methods = {a.method};
  }
  if (a.reps < 1) throw bvs::InputError("--reps must be positive");
  if (a.kind == "smc") bvs::check_config(to_config(a.sampler));

  std::ostringstream csv;
  csv << "n,p,method,rep,seed,stage_count,wall_s,marglik_evals\n";
  for (auto n : a.grid_n) {
    for (auto p : a.grid_p) {
      for (int rep = 0; rep < a.reps; ++rep) {
        bvs::SimSpec spec;
        spec.n = n;
        spec.p = p;
        spec.seed = a.seed + static_cast<std::uint64_t>(rep);
        const auto sim = bvs::simulate(spec);
        const auto prior = bvs::PriorConfig::uniform(spec.q, p, 0.5, 0.5);
        for (const auto& name : methods) {
          const auto method = bvs::parse_marglik_method(name);
          std::size_t stages = 0;
          double wall = 0.0;
          std::uint64_t evals = 0;
          if (a.kind == "eval") {
            const bvs::MarginalLikelihood marglik(sim.data, prior, method, false);
            bvs::Rng rng = bvs::make_stream(spec.seed, 0xbe, 0);
            const auto params = bvs::prior_proposal(prior, sim.data.group_map(), 1e-6);
            std::vector<bvs::Theta> thetas;
            for (std::size_t i = 0; i < a.evals; ++i) {
              thetas.push_back(bvs::sample_proposal(params, rng).theta);
            }
            wall = time_evaluations(marglik, thetas);
            evals = a.evals;
          } else {
            auto config = to_config(a.sampler);
            config.marglik_method = method;
            config.seed = spec.seed;
            const auto result = bvs::run(sim.data, prior, config);
            for (double t : result.stage_wall_times_s) wall += t;
            stages = result.stage_count();
            evals = result.marglik_evals;
          }
          csv << n << ',' << p << ',' << name << ',' << rep << ',' << spec.seed << ',' << stages
              << ',' << wall << ',' << evals << '\n';
          std::cerr << "n=" << n << " p=" << p << " method=" << name << " rep=" << rep
                    << " wall_s=" << wall << '\n';
        }
      }
    }
  }
  auto text = csv.str();
  text.pop_back();
  write_text(a.out, text);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bi-level Bayesian variable selection for binary regression"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Write a synthetic dataset and print its true model");
  simulate->add_option("--n", sim.spec.n, "Observations")->capture_default_str();
  simulate->add_option("--p", sim.spec.p, "Individual variables")->capture_default_str();
  simulate->add_option("--q", sim.spec.q, "Groups")->capture_default_str();
  simulate->add_option("--r", sim.spec.r, "Always-included covariates")->capture_default_str();
  simulate->add_option("--rho", sim.spec.rho, "Equicorrelation of the covariates")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  simulate->add_option("--link", sim.link, "probit or logit")
      ->check(CLI::IsMember({"probit", "logit"}))
      ->capture_default_str();
  simulate->add_option("--seed", sim.spec.seed, "RNG seed")->capture_default_str();
  simulate->add_option("--out", sim.out, "Output directory (data.csv + data.json)")->required();

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run the sampler on a dataset");
  run_cmd->add_option("--data", run.data, "Dataset CSV (sidecar JSON next to it)")->required();
  run_cmd->add_option("--out", run.out, "Result JSON path ('-' for stdout)")->capture_default_str();
  add_sampler_flags(run_cmd, run.sampler);
  add_prior_flags(run_cmd, run.prior);

  OracleArgs oracle;
  auto* oracle_cmd = app.add_subcommand("oracle", "Exact posterior by enumeration, optionally against the sampler");
  oracle_cmd->add_option("--data", oracle.data, "Dataset CSV");
  oracle_cmd->add_flag("--smc", oracle.smc, "Also run the sampler and report the gaps");
  oracle_cmd->add_flag("--flat", oracle.flat, "Drop all observations (posterior = prior)");
  oracle_cmd->add_option("--p", oracle.p, "Variables, for --flat without --data");
  oracle_cmd->add_option("--q", oracle.q, "Groups, for --flat without --data");
  oracle_cmd->add_option("--r", oracle.r, "Fixed covariates, for --flat without --data");
  oracle_cmd->add_option("--cap", oracle.cap, "Enumeration limit")->capture_default_str();
  oracle_cmd->add_option("--out", oracle.out, "Report JSON path ('-' for stdout)");
  add_sampler_flags(oracle_cmd, oracle.sampler);
  add_prior_flags(oracle_cmd, oracle.prior);

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Time LA and ALA on simulated designs");
  bench_cmd->add_option("--grid-n", bench.grid_n, "Sample sizes")->delimiter(',')->capture_default_str();
  bench_cmd->add_option("--grid-p", bench.grid_p, "Variable counts")->delimiter(',')->capture_default_str();
  bench_cmd->add_option("--method", bench.method, "la, ala or both")
      ->check(CLI::IsMember({"la", "ala", "both"}))
      ->capture_default_str();
  bench_cmd->add_option("--kind", bench.kind, "eval: per-model evaluation time; smc: full runs")
      ->check(CLI::IsMember({"eval", "smc"}))
      ->capture_default_str();
  bench_cmd->add_option("--reps", bench.reps, "Replicates per grid point")->capture_default_str();
  bench_cmd->add_option("--evals", bench.evals, "Models timed per replicate (eval kind)")
      ->capture_default_str();
  bench_cmd->add_option("--seed", bench.seed, "Seed of the first replicate")->capture_default_str();
  bench_cmd->add_option("--N", bench.sampler.n_particles, "Particles (smc kind)")->capture_default_str();
  bench_cmd->add_option("--M", bench.sampler.ancestors, "Ancestors (smc kind)")->capture_default_str();
  bench_cmd->add_option("--P", bench.sampler.chain_length, "Chain length (smc kind)")->capture_default_str();
  bench_cmd->add_option("--workers", bench.sampler.workers, "Worker threads (smc kind)")
      ->envname("BVS_WORKERS")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--out", bench.out, "CSV path ('-' for stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*simulate) return cmd_simulate(sim);
    if (*run_cmd) return cmd_run(run);
    if (*oracle_cmd) return cmd_oracle(oracle);
    if (*bench_cmd) return cmd_bench(bench);
  } catch (const bvs::UnsupportedError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kOracleCap;
  } catch (const bvs::InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const bvs::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kSamplerFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kSamplerFailure;
  }
  return kUsage;
}
