#include "bvs/link.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "bvs/errors.hpp"

namespace bvs {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // 0.5 * log(2*pi)
constexpr double kTailCut = -8.0;

// Mills ratio R(t) = Phi(-t) / phi(t) for t >= 8, by backward evaluation of
// R(t) = 1 / (t + 1 / (t + 2 / (t + 3 / (t + ...)))).
double mills_ratio_tail(double t) {
  double f = t;
  for (int k = 60; k >= 1; --k) f = t + k / f;
  return 1.0 / f;
}

double logistic(double m) {
  if (m >= 0) return 1.0 / (1.0 + std::exp(-m));
  const double e = std::exp(m);
  return e / (1.0 + e);
}

double log_logistic(double m) {
  if (m >= 0) return -std::log1p(std::exp(-m));
  return m - std::log1p(std::exp(m));
}

}  // namespace

std::string_view to_string(Link link) {
  return link == Link::probit ? "probit" : "logit";
}

Link parse_link(std::string_view name) {
  if (name == "probit") return Link::probit;
  if (name == "logit") return Link::logit;
  throw InputError("unknown link '" + std::string(name) + "' (expected probit or logit)");
}

double normal_pdf(double x) { return std::exp(-0.5 * x * x - kLogSqrt2Pi); }

double log_normal_cdf(double x) {
  if (x < kTailCut) {
    const double t = -x;
    return -0.5 * x * x - kLogSqrt2Pi + std::log(mills_ratio_tail(t));
  }
  if (x > 0) return std::log1p(-0.5 * std::erfc(x / std::numbers::sqrt2));
  return std::log(0.5 * std::erfc(-x / std::numbers::sqrt2));
}

LogCdfTerms log_cdf_terms(Link link, double m) {
  if (link == Link::logit) {
    const double f = logistic(m);
    const double fc = logistic(-m);
    return {log_logistic(m), fc, -f * fc};
  }
  if (m < kTailCut) {
    const double t = -m;
    const double r = mills_ratio_tail(t);
    const double lambda = 1.0 / r;
    // lambda + m = (1 - t R) / R, kept in this form to limit cancellation.
    const double shifted = (1.0 - t * r) / r;
    return {-0.5 * m * m - kLogSqrt2Pi + std::log(r), lambda, -lambda * shifted};
  }
  const double phi = normal_pdf(m);
  const double big_phi = 0.5 * std::erfc(-m / std::numbers::sqrt2);
  const double lambda = phi / big_phi;
  return {log_normal_cdf(m), lambda, -lambda * (lambda + m)};
}

double log_cdf(Link link, double m) {
  return link == Link::probit ? log_normal_cdf(m) : log_logistic(m);
}

double cdf(Link link, double m) {
  return link == Link::probit ? 0.5 * std::erfc(-m / std::numbers::sqrt2) : logistic(m);
}

}  // namespace bvs
