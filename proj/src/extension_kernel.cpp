#include "fraclab/extension_kernel.hpp"

#include "fraclab/special.hpp"

#include <cmath>
#include <stdexcept>

namespace fraclab {

namespace {

constexpr double kTailStart = 1e-10;
constexpr double kRelTol = 1e-12;
constexpr int kMaxLevels = 6;
constexpr int kPointsPerPanel = 20;

void check_order(double s) {
  if (!(s > 0.0 && s < 1.0)) throw std::invalid_argument("s must lie in (0, 1)");
}

// Integral over y in (y_lo, inf) for one refinement level; the part below
// y_lo uses the small-argument expansion of the profile.
double energy_at_level(const ExtensionProfile& prof, double lambda, int level) {
  const double s = prof.s;
  const double root = std::sqrt(lambda);
  const double t_lo = prof.breaks(0);
  const Eigen::Index panels = (prof.breaks.size() - 1) << level;
  Vector<double> breaks(panels + 1);
  const double log_lo = std::log(t_lo), log_hi = std::log(prof.t_max);
  for (Eigen::Index i = 0; i <= panels; ++i)
    breaks(i) = std::exp(log_lo + (log_hi - log_lo) * double(i) / double(panels)) / root;
  breaks(0) = t_lo / root;
  breaks(panels) = prof.t_max / root;
  const auto rule = composite_gauss_legendre<double>(breaks, kPointsPerPanel);

  double body = 0.0;
  for (Eigen::Index k = 0; k < rule.size(); ++k) {
    const double y = rule.nodes(k);
    const double t = root * y;
    const double dth = prof.theta_prime(t);
    const double th = prof.theta(t);
    body += rule.weights(k) * std::pow(y, 1.0 - 2.0 * s) * (lambda * dth * dth + lambda * th * th);
  }
  // Below t_lo: theta ~ 1 and theta' ~ -c t^{2s-1}; the y-integral equals
  // lambda^s times the t-integral.
  const double c = prof.small_t_slope();
  const double tail_t = c * c * std::pow(t_lo, 2.0 * s) / (2.0 * s) + std::pow(t_lo, 2.0 - 2.0 * s) / (2.0 - 2.0 * s);
  return body + std::pow(lambda, s) * tail_t;
}

}  // namespace

double ks_constant(double s) {
  check_order(s);
  return std::pow(2.0, 2.0 * s - 1.0) * gamma_fn(s) / gamma_fn(1.0 - s);
}

ExtensionProfile ExtensionProfile::make(double s, int panels_per_decade) {
  check_order(s);
  if (panels_per_decade < 1) throw std::invalid_argument("panels_per_decade must be >= 1");
  ExtensionProfile p;
  p.s = s;
  p.prefactor = std::pow(2.0, 1.0 - s) / gamma_fn(s);
  double t = 1.0;
  while (p.theta(t) >= 1e-12 || std::abs(p.theta_prime(t)) >= 1e-12) t += 1.0;
  p.t_max = t;
  const double decades = std::log10(p.t_max / kTailStart);
  const int panels = static_cast<int>(std::ceil(decades * panels_per_decade));
  p.breaks.resize(panels + 1);
  for (int i = 0; i <= panels; ++i)
    p.breaks(i) = kTailStart * std::pow(p.t_max / kTailStart, double(i) / double(panels));
  p.breaks(0) = kTailStart;
  p.breaks(panels) = p.t_max;
  return p;
}

double ExtensionProfile::theta(double t) const {
  if (t <= 0.0) return 1.0;
  return prefactor * std::pow(t, s) * bessel_k(s, t);
}

double ExtensionProfile::theta_prime(double t) const {
  if (t <= 0.0) throw std::domain_error("theta_prime: t must be > 0");
  return -prefactor * std::pow(t, s) * bessel_k(1.0 - s, t);
}

double ExtensionProfile::small_t_slope() const {
  // K_{1-s}(t) ~ Gamma(1-s)/2 (2/t)^{1-s}
  return prefactor * gamma_fn(1.0 - s) * std::pow(2.0, -s);
}

double mode_extension_energy(double lambda_j, const FractionalParams& params) {
  if (!(lambda_j > 0.0) || !std::isfinite(lambda_j)) throw std::invalid_argument("mode_extension_energy: lambda must be > 0");
  const ExtensionProfile prof = ExtensionProfile::make(params.s);
  double prev = energy_at_level(prof, lambda_j, 0);
  for (int level = 1; level <= kMaxLevels; ++level) {
    const double cur = energy_at_level(prof, lambda_j, level);
    if (std::abs(cur - prev) <= kRelTol * std::abs(cur)) return params.ks * cur;
    prev = cur;
  }
  throw std::runtime_error("mode_extension_energy: quadrature refinement exhausted without convergence");
}

double universal_integral(double s) {
  const ExtensionProfile prof = ExtensionProfile::make(s);
  double prev = energy_at_level(prof, 1.0, 0);
  for (int level = 1; level <= kMaxLevels; ++level) {
    const double cur = energy_at_level(prof, 1.0, level);
    if (std::abs(cur - prev) <= kRelTol * std::abs(cur)) return cur;
    prev = cur;
  }
  throw std::runtime_error("universal_integral: quadrature refinement exhausted without convergence");
}

}  // namespace fraclab
