#include "uwb/gating.hpp"

#include <cmath>
#include <string>

#include "uwb/errors.hpp"

namespace uwb::gating {

namespace {

// Series expansion, converges fast for x < a + 1.
double gamma_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int n = 0; n < 500; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Lentz continued fraction for Q(a, x), good for x >= a + 1.
double gamma_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 500; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double gammainc_lower(double a, double x) {
  if (x < 0.0 || a <= 0.0)
    raise(ErrorCode::config_error, "gammainc_lower: bad arguments");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return gamma_series(a, x);
  return 1.0 - gamma_cf(a, x);
}

double chi2_cdf(double x, int dof) {
  if (dof < 1) raise(ErrorCode::config_error, "chi2_cdf: dof must be >= 1");
  if (x <= 0.0) return 0.0;
  return gammainc_lower(0.5 * dof, 0.5 * x);
}

double chi2_threshold(double confidence, int dof) {
  if (!(confidence > 0.0 && confidence < 1.0))
    raise(ErrorCode::config_error,
          "chi2_threshold: confidence must be in (0, 1)");
  if (dof < 1)
    raise(ErrorCode::config_error, "chi2_threshold: dof must be >= 1");

  double lo = 0.0;
  double hi = 1.0;
  while (chi2_cdf(hi, dof) < confidence) {
    hi *= 2.0;
    if (hi > 1e12)
      raise(ErrorCode::internal_error, "chi2_threshold: no bracket");
  }
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (chi2_cdf(mid, dof) < confidence)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-12 * (1.0 + hi)) break;
  }
  return 0.5 * (lo + hi);
}

GateConfig make_gate(double confidence, int dof) {
  GateConfig cfg;
  cfg.confidence = confidence;
  cfg.dof = dof;
  cfg.threshold_gamma = chi2_threshold(confidence, dof);
  return cfg;
}

bool chi2_test(double bias, double sigma, const GateConfig& cfg) {
  if (sigma <= 0.0)
    raise(ErrorCode::degenerate_sigma, "chi2_test: sigma <= 0");
  const double q = (bias / sigma) * (bias / sigma);
  return q <= cfg.threshold_gamma;
}

bool nis_test(double innovation, double innovation_variance,
              const GateConfig& cfg) {
  if (innovation_variance <= 0.0)
    raise(ErrorCode::degenerate_sigma, "nis_test: variance <= 0");
  return (innovation * innovation) / innovation_variance <=
         cfg.threshold_gamma;
}

}  // namespace uwb::gating
