#pragma once

namespace uwb::gating {

/// Regularized lower incomplete gamma P(a, x); the chi-squared CDF is
/// P(k/2, x/2).
double gammainc_lower(double a, double x);

/// Chi-squared CDF with dof degrees of freedom.
double chi2_cdf(double x, int dof);

/// Chi-squared quantile by bisection on the CDF, accurate to ~1e-10.
double chi2_threshold(double confidence, int dof);

struct GateConfig {
  double confidence = 0.95;
  int dof = 1;
  double threshold_gamma = 0.0;
};

/// Binds the threshold to (confidence, dof).
GateConfig make_gate(double confidence, int dof = 1);

/// Ground-truth gate: accept iff bias^2/sigma^2 <= gamma.
/// Throws DegenerateSigma when sigma <= 0.
bool chi2_test(double bias, double sigma, const GateConfig& cfg);

/// Filter gate: accept iff nu^2/S <= gamma, with S the innovation variance
/// (state uncertainty already folded in by the caller).
bool nis_test(double innovation, double innovation_variance,
              const GateConfig& cfg);

}  // namespace uwb::gating
