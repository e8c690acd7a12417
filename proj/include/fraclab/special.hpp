#pragma once

namespace fraclab {

/// Gamma function for positive arguments.
double gamma_fn(double x);

/// Modified Bessel function of the second kind K_nu(t), t > 0, any real
/// order (K is even in nu). Relative accuracy ~1e-14 for |nu| <= 1.
double bessel_k(double nu, double t);

}  // namespace fraclab
