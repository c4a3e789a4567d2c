#include "uwb/twr.hpp"

#include <cassert>
#include <cmath>

namespace uwb::twr {

double ss_twr_tof(const TwrIntervals& iv) {
  return 0.5 * (iv.dt41 - iv.dt32);
}

double ds_twr_tof(const TwrIntervals& iv) {
  if (iv.dt53 <= 0.0)
    raise(ErrorCode::degenerate_interval, "ds_twr_tof: dt53 <= 0");
  return 0.5 * (iv.dt41 - (iv.dt64 / iv.dt53) * iv.dt32);
}

double expected_ss_bias(const SkewPair& sk, double tof_ns, double dt32_ns) {
  return sk.gamma_i * tof_ns + 0.5 * (sk.gamma_i - sk.gamma_j) * dt32_ns;
}

double expected_ds_bias(double gamma_i, double tof_ns) {
  return gamma_i * tof_ns;
}

double var_ss(const SkewPair& sk) {
  const double a = 1.0 + sk.gamma_i;
  const double b = 1.0 + sk.gamma_j;
  return 0.5 * sk.noise_var_R * (a * a + b * b);
}

double var_ds(const SkewPair& sk, double dt32_ns, double dt53_ns) {
  if (dt53_ns <= 0.0)
    raise(ErrorCode::degenerate_interval, "var_ds: dt53 <= 0");
  const double a = 1.0 + sk.gamma_i;
  const double r = dt32_ns / dt53_ns;
  return a * a * sk.noise_var_R * (1.0 + r + r * r);
}

double total_uncertainty(double T_s, double dt32_s, double dt53_s,
                         double R_ns2) {
  if (dt53_s <= 0.0)
    raise(ErrorCode::degenerate_interval, "total_uncertainty: dt53 <= 0");
  const double r = dt32_s / dt53_s;
  return (T_s + dt53_s) * R_ns2 * (1.0 + r + r * r);
}

double optimal_delay(double T_s, double dt32_s) {
  if (T_s <= 0.0 || dt32_s <= 0.0)
    raise(ErrorCode::config_error, "optimal_delay: T and dt32 must be > 0");

  // f(x) = x^3 - a x - b with a, b > 0: one sign change, so exactly one
  // positive root. f(dt32) = -3 T dt32^2 < 0 and f(10(T+dt32)) > 0 bracket it.
  const double a = dt32_s * (T_s + dt32_s);
  const double b = 2.0 * dt32_s * dt32_s * T_s;
  auto f = [&](double x) { return x * x * x - a * x - b; };
  auto df = [&](double x) { return 3.0 * x * x - a; };

  double lo = dt32_s;
  double hi = 10.0 * (T_s + dt32_s);
  if (!(f(lo) < 0.0 && f(hi) > 0.0))
    raise(ErrorCode::no_positive_root, "optimal_delay: bracket failed");

  double x = std::cbrt(b);  // exact root when a -> 0
  if (x <= lo || x >= hi) x = 0.5 * (lo + hi);

  for (int it = 0; it < 200; ++it) {
    const double fx = f(x);
    if (fx > 0.0)
      hi = x;
    else
      lo = x;
    const double d = df(x);
    double next = (d != 0.0) ? x - fx / d : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);  // safeguard
    if (std::abs(next - x) <= 1e-18 + 1e-15 * x) {
      x = next;
      break;
    }
    x = next;
  }
  assert(f(lo) <= 0.0 && f(hi) >= 0.0);
  return x;
}

}  // namespace uwb::twr
