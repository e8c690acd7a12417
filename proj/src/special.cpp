#include "fraclab/special.hpp"

#include <cmath>
#include <stdexcept>

namespace fraclab {

double gamma_fn(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) throw std::domain_error("gamma_fn: argument must be positive and finite");
  return std::tgamma(x);
}

double bessel_k(double nu, double t) {
  if (!(t > 0.0)) throw std::domain_error("bessel_k: argument must be > 0");
  return std::cyl_bessel_k(std::abs(nu), t);
}

}  // namespace fraclab
