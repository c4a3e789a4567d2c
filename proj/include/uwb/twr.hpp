#pragma once

#include "uwb/errors.hpp"

namespace uwb::twr {

// Protocol arithmetic is carried out in nanoseconds, double precision.
// Reply intervals sit at 1e5-1e6 ns while times of flight are 1-100 ns, so
// a double (~15.9 significant digits) leaves ~9 digits of headroom below
// the interval scale; interval differences therefore resolve ToF to well
// under 1e-6 ns before measurement noise enters.

/// Measured interval set of one two-way-ranging exchange, all in ns of the
/// owning tag's clock. dt41/dt64 belong to the initiator, dt32/dt53 to the
/// responder. dt53/dt64 are only meaningful for double-sided exchanges.
struct TwrIntervals {
  double dt41 = 0.0;  ///< initiator: first poll to first response reception
  double dt32 = 0.0;  ///< responder: first reception to first response
  double dt53 = 0.0;  ///< responder: first response to second response
  double dt64 = 0.0;  ///< initiator: between the two response receptions

  /// Clock-rate ratio estimate K = dt64/dt53 (DS only).
  double clock_ratio() const {
    if (dt53 <= 0.0)
      raise(ErrorCode::degenerate_interval, "clock_ratio: dt53 <= 0");
    return dt64 / dt53;
  }
};

/// Clock-skew pair and timestamp noise level of one ranging pair.
struct SkewPair {
  double gamma_i = 0.0;     ///< initiator skew, dimensionless parts
  double gamma_j = 0.0;     ///< responder skew, dimensionless parts
  double noise_var_R = 0.0; ///< per-timestamp white noise variance, ns^2
};

/// Single-sided ToF: (dt41 - dt32)/2. May be negative under noise.
double ss_twr_tof(const TwrIntervals& iv);

/// Double-sided ToF: (dt41 - (dt64/dt53) dt32)/2.
/// Throws DegenerateInterval when dt53 <= 0.
double ds_twr_tof(const TwrIntervals& iv);

/// Expected SS-TWR error: gamma_i*tof + (gamma_i - gamma_j)/2 * dt32.
double expected_ss_bias(const SkewPair& sk, double tof_ns, double dt32_ns);

/// Expected DS-TWR error: gamma_i*tof.
double expected_ds_bias(double gamma_i, double tof_ns);

/// SS-TWR measurement variance, ns^2: R/2 * [(1+g_i)^2 + (1+g_j)^2].
double var_ss(const SkewPair& sk);

/// DS-TWR measurement variance, ns^2:
/// (1+g_i)^2 R [1 + dt32/dt53 + (dt32/dt53)^2].
double var_ds(const SkewPair& sk, double dt32_ns, double dt53_ns);

/// Per-second uncertainty of a DS-TWR stream (inverse information),
/// (T + dt53) * R * [1 + dt32/dt53 + (dt32/dt53)^2]. T, dt32, dt53 in
/// seconds, R in ns^2.
double total_uncertainty(double T_s, double dt32_s, double dt53_s, double R_ns2);

/// Second-response delay minimizing total_uncertainty: the unique positive
/// root of x^3 - dt32(T+dt32)x - 2 dt32^2 T = 0. Inputs and result in
/// seconds.
double optimal_delay(double T_s, double dt32_s);

}  // namespace uwb::twr
