#pragma once

#include <string_view>

namespace bvs {

enum class Link { probit, logit };

std::string_view to_string(Link link);
Link parse_link(std::string_view name);

// Standard normal density and log-CDF. log_normal_cdf stays finite for any
// finite argument (continued-fraction Mills ratio in the far left tail).
double normal_pdf(double x);
double log_normal_cdf(double x);

// Derivatives of m -> log F(m) for the chosen link.
struct LogCdfTerms {
  double value;  // log F(m)
  double d1;     // d/dm log F(m)
  double d2;     // d^2/dm^2 log F(m), always <= 0
};

LogCdfTerms log_cdf_terms(Link link, double m);

// log F(m) only; cheaper than log_cdf_terms when derivatives are not needed.
double log_cdf(Link link, double m);

// F(m).
double cdf(Link link, double m);

}  // namespace bvs
