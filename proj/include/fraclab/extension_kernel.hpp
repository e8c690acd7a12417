#pragma once
// Mode-level check of the extension isometry: the s-harmonic extension of an
// eigenfunction phi_j is phi_j(x) theta_s(sqrt(lambda_j) y), and its weighted
// energy on the half cylinder equals lambda_j^s once scaled by k_s.

#include "fraclab/quadrature.hpp"
#include "fraclab/spectral_core.hpp"

namespace fraclab {

/// k_s = 2^{2s-1} Gamma(s) / Gamma(1-s), 0 < s < 1.
double ks_constant(double s);

/// theta_s(t) = (2^{1-s}/Gamma(s)) t^s K_s(t), on a log-spaced panel grid.
struct ExtensionProfile {
  double s = 0.5;
  double prefactor = 1.0;  // 2^{1-s}/Gamma(s)
  double t_max = 0.0;      // theta_s(t_max) < 1e-12
  Vector<double> breaks;   // panel breakpoints in t, log-spaced on (0, t_max]

  static ExtensionProfile make(double s, int panels_per_decade = 4);

  double theta(double t) const;
  /// d theta / dt = -(2^{1-s}/Gamma(s)) t^s K_{1-s}(t).
  double theta_prime(double t) const;
  /// Leading coefficient c in theta'(t) ~ -c t^{2s-1} as t -> 0.
  double small_t_slope() const;
};

/// k_s int_0^inf y^{1-2s} [lambda theta'(sqrt(lambda) y)^2 + lambda theta(sqrt(lambda) y)^2] dy,
/// integrated in y on composite Gauss-Legendre panels refined until successive
/// levels agree to 1e-12. Throws std::runtime_error if refinement is exhausted.
double mode_extension_energy(double lambda_j, const FractionalParams& params);

/// I(s) = int_0^inf t^{1-2s} (theta'^2 + theta^2) dt.
double universal_integral(double s);

}  // namespace fraclab
