#pragma once

// Distribution functions needed by the evaluation statistics.

namespace drivesafe::special {

/// Regularized incomplete beta I_x(a, b), a, b > 0, x in [0, 1].
[[nodiscard]] double incomplete_beta(double a, double b, double x);
/// x with I_x(a, b) = p; p in [0, 1].
[[nodiscard]] double incomplete_beta_inverse(double a, double b, double p);
/// Quantile of Beta(a, b); same as incomplete_beta_inverse.
[[nodiscard]] double beta_quantile(double p, double a, double b);

[[nodiscard]] double normal_cdf(double z);
/// Standard normal quantile, p in (0, 1).
[[nodiscard]] double normal_quantile(double p);

/// CDF and upper tail of the F(d1, d2) distribution.
[[nodiscard]] double f_cdf(double f, double d1, double d2);
[[nodiscard]] double f_survival(double f, double d1, double d2);

}  // namespace drivesafe::special
