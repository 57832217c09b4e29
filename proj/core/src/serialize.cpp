#include "bvs/serialize.hpp"

#include "json.hpp"

namespace bvs {

namespace {

nlohmann::json bits(const std::vector<std::uint8_t>& v) {
  auto out = nlohmann::json::array();
  for (auto b : v) out.push_back(static_cast<int>(b));
  return out;
}

nlohmann::json prior_json(const PriorConfig& prior) {
  return {{"sigma2", prior.sigma2},
          {"p_gamma", prior.p_gamma},
          {"p_eta", prior.p_eta},
          {"link", std::string(to_string(prior.link))}};
}

nlohmann::json smc_result_object(const SmcResult& result, const SmcConfig& config,
                                 const PriorConfig& prior) {
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["gamma_incl"] = result.gamma_incl;
  j["eta_incl"] = result.eta_incl;
  j["lambda_schedule"] = result.lambda_schedule;
  j["acceptance_rates"] = result.acceptance_rates;
  j["log_evidence"] = result.log_evidence;
  j["stage_count"] = result.stage_count();
  j["marglik_evals"] = result.marglik_evals;
  j["marglik_calls"] = result.marglik_calls;
  j["config"] = {{"N", config.n_particles},
                 {"M", config.ancestors},
                 {"P", config.chain_length},
                 {"ess_ratio", config.ess_ratio},
                 {"bisection_tol", config.bisection_tol},
                 {"seed", config.seed},
                 {"method", std::string(to_string(config.marglik_method))},
                 {"max_stages", config.max_stages},
                 {"prior", prior_json(prior)}};
  j["timing"] = {{"workers", config.workers},
                 {"stage_wall_times_s", result.stage_wall_times_s}};
  return j;
}

}  // namespace

std::string smc_result_json(const SmcResult& result, const SmcConfig& config,
                            const PriorConfig& prior, int indent) {
  return smc_result_object(result, config, prior).dump(indent);
}

std::string smc_failure_json(const SmcResult& partial, const SmcConfig& config,
                             const PriorConfig& prior, const std::string& message, int indent) {
  auto j = smc_result_object(partial, config, prior);
  j["error"] = message;
  return j.dump(indent);
}

std::string theta_json(const Theta& theta) {
  return nlohmann::json{{"gamma", bits(theta.gamma)}, {"eta", bits(theta.eta)}}.dump();
}

std::string compare_report_json(const CompareReport& report, const EnumeratedPosterior& truth,
                                const SmcResult* smc, const PriorConfig& prior, int indent) {
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["configurations"] = truth.configs.size();
  j["enumerated"] = {{"gamma_incl", truth.gamma_incl}, {"eta_incl", truth.eta_incl}};
  j["prior"] = prior_json(prior);
  if (smc != nullptr) {
    j["smc"] = {{"gamma_incl", smc->gamma_incl},
                {"eta_incl", smc->eta_incl},
                {"stage_count", smc->stage_count()},
                {"lambda_schedule", smc->lambda_schedule}};
    j["gamma_gap"] = report.gamma_gap;
    j["eta_gap"] = report.eta_gap;
    j["max_gamma_gap"] = report.max_gamma_gap;
    j["max_eta_gap"] = report.max_eta_gap;
    j["max_abs_gap"] = report.max_abs_gap;
    j["total_variation"] =
        report.total_variation ? nlohmann::json(*report.total_variation) : nlohmann::json();
  }
  return j.dump(indent);
}

}  // namespace bvs
