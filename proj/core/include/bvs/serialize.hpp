#pragma once

#include <string>

#include "bvs/model.hpp"
#include "bvs/oracle.hpp"
#include "bvs/smc.hpp"

namespace bvs {

inline constexpr int kSchemaVersion = 1;

// {"schema_version", "gamma_incl", "eta_incl", "lambda_schedule", "acceptance_rates",
//  "log_evidence", "stage_count", "marglik_evals", "marglik_calls", "config", "timing"}
// Everything outside "timing" is a function of data, prior, config and seed.
std::string smc_result_json(const SmcResult& result, const SmcConfig& config,
                            const PriorConfig& prior, int indent = 2);

// Same layout for a run that stopped early, plus "error".
std::string smc_failure_json(const SmcResult& partial, const SmcConfig& config,
                             const PriorConfig& prior, const std::string& message,
                             int indent = 2);

// {"gamma": [...], "eta": [...]}
std::string theta_json(const Theta& theta);

std::string compare_report_json(const CompareReport& report, const EnumeratedPosterior& truth,
                                const SmcResult* smc, const PriorConfig& prior, int indent = 2);

}  // namespace bvs
