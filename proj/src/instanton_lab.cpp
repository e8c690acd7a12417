#include "fraclab/instanton_lab.hpp"

#include "fraclab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace fraclab {

double cutoff(double t) {
  if (t <= 0.5) return 1.0;
  if (t >= 1.0) return 0.0;
  // Smooth step built from exp(-1/x), flat to all orders at both ends.
  const double x = 2.0 - 2.0 * t;
  const double a = std::exp(-1.0 / x), b = std::exp(-1.0 / (1.0 - x));
  return a / (a + b);
}

double TruncatedInstanton::radial(double r) const {
  const double phi = cutoff(r / rho);
  if (phi == 0.0) return 0.0;
  const double k = decay();
  return phi * std::pow(eps, k) / std::pow(eps * eps + r * r, k);
}

double TruncatedInstanton::operator()(const Point& x) const { return radial((x - center).norm()); }

void TruncatedInstanton::validate(const MixedRectangleDomain& domain) const {
  if (center.size() != domain.dim()) throw std::invalid_argument("instanton: center has wrong dimension");
  if (!(s > 0.5 && s < 1.0)) throw std::invalid_argument("instanton: s must lie in (1/2, 1)");
  if (!(eps > 0.0) || !(rho > 0.0)) throw std::invalid_argument("instanton: eps and rho must be > 0");
  if (!(eps < rho / 4.0)) throw std::invalid_argument("instanton: eps must be < rho/4");
  if (!domain.on_neumann_boundary(center, 1e-12)) throw std::invalid_argument("instanton: center must lie on a Neumann face");
  if (!(domain.distance_to_dirichlet(center) > rho))
    throw std::invalid_argument("instanton: support touches a Dirichlet face");
}

double default_rho(const MixedRectangleDomain& domain, const Point& center) {
  return 0.25 * domain.distance_to_dirichlet(center);
}

std::vector<double> eps_sweep(double rho, int first, int last) {
  std::vector<double> out;
  for (int k = first; k <= last; ++k) out.push_back(std::ldexp(rho, -k));
  return out;
}

Vector<double> instanton_samples(const TruncatedInstanton& inst, const EigenBasis& basis) {
  Vector<double> out(basis.grid_size());
  for (Eigen::Index g = 0; g < out.size(); ++g) out(g) = inst(basis.node(g));
  return out;
}

SpectralField instanton_trace(const TruncatedInstanton& inst, const EigenBasis& basis) {
  inst.validate(basis.domain());
  return analyze(instanton_samples(inst, basis), basis);
}

namespace {

Vector<double> graded_breaks(double a, double eps, double rho, double length) {
  const double lo = std::max(0.0, a - rho), hi = std::min(length, a + rho);
  std::vector<double> b{lo, hi, a};
  for (int k = 4; k < 8; ++k) {
    b.push_back(a - k * rho / 8);
    b.push_back(a + k * rho / 8);
  }
  for (double h = eps / 4; h < rho / 2; h *= 2) {
    b.push_back(a - h);
    b.push_back(a + h);
  }
  std::vector<double> kept;
  for (double x : b)
    if (x >= lo && x <= hi) kept.push_back(x);
  std::sort(kept.begin(), kept.end());
  kept.erase(std::unique(kept.begin(), kept.end(), [](double x, double y) { return std::abs(x - y) < 1e-15; }),
             kept.end());
  return Eigen::Map<Vector<double>>(kept.data(), static_cast<Eigen::Index>(kept.size()));
}

}  // namespace

double instanton_lp_integral(const TruncatedInstanton& inst, double p, const MixedRectangleDomain& domain,
                             const WeightModel* weight, int points_per_panel) {
  if (!(p > 0.0)) throw std::invalid_argument("instanton_lp_integral: p must be > 0");
  const int d = domain.dim();
  std::vector<QuadratureRule<double>> rules;
  Eigen::Index total = 1;
  for (int axis = 0; axis < d; ++axis) {
    rules.push_back(composite_gauss_legendre<double>(
        graded_breaks(inst.center(axis), inst.eps, inst.rho, domain.lengths()[axis]), points_per_panel));
    total *= rules.back().size();
  }
  double sum = 0.0;
  Point x(d);
  for (Eigen::Index g = 0; g < total; ++g) {
    Eigen::Index rem = g;
    double w = 1.0;
    for (int axis = 0; axis < d; ++axis) {
      const Eigen::Index n = rules[axis].size();
      const Eigen::Index i = rem % n;
      rem /= n;
      x(axis) = rules[axis].nodes(i);
      w *= rules[axis].weights(i);
    }
    const double z = inst(x);
    if (z == 0.0) continue;
    sum += w * (weight ? (*weight)(x) : 1.0) * std::pow(z, p);
  }
  return sum;
}

RateRegime rate_regime(double p, int dim, double s) {
  const double border = dim / (dim - 2.0 * s);
  if (std::abs(p - border) <= 1e-12 * border) return RateRegime::borderline;
  return p < border ? RateRegime::subcritical : RateRegime::supercritical;
}

RateFit lp_rate_experiment(double p, const std::vector<double>& eps_list, const TruncatedInstanton& tmpl,
                           const MixedRectangleDomain& domain, unsigned threads) {
  if (eps_list.size() < 4) throw std::invalid_argument("lp_rate_experiment: need at least 4 eps values");
  if (!(p >= 1.0)) throw std::invalid_argument("lp_rate_experiment: p must be >= 1");
  const int n = tmpl.dim();
  const double s = tmpl.s;
  RateFit fit;
  fit.p = p;
  fit.regime = rate_regime(p, n, s);
  switch (fit.regime) {
    case RateRegime::subcritical: fit.expected_slope = (n - 2.0 * s) * p / 2.0; break;
    case RateRegime::supercritical: fit.expected_slope = n - (n - 2.0 * s) * p / 2.0; break;
    case RateRegime::borderline: fit.expected_slope = n / 2.0; break;
  }
  fit.points.resize(eps_list.size());
  parallel_for(eps_list.size(), threads, [&](std::size_t i) {
    TruncatedInstanton inst = tmpl;
    inst.eps = eps_list[i];
    inst.validate(domain);
    RatePoint& pt = fit.points[i];
    pt.eps = inst.eps;
    pt.value = instanton_lp_integral(inst, p, domain);
    pt.theory = std::pow(inst.eps, fit.expected_slope);
    if (fit.regime == RateRegime::borderline) pt.theory *= std::abs(std::log(inst.eps));
    pt.residual = pt.value / pt.theory;
  });

  auto ols = [](const Vector<double>& x, const Vector<double>& y, double& slope, double& r2) {
    const double mx = x.mean(), my = y.mean();
    const double sxx = (x.array() - mx).square().sum();
    const double sxy = ((x.array() - mx) * (y.array() - my)).sum();
    const double syy = (y.array() - my).square().sum();
    slope = sxy / sxx;
    r2 = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
  };
  const Eigen::Index m = static_cast<Eigen::Index>(fit.points.size());
  Vector<double> lx(m), ly(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    lx(i) = std::log(fit.points[i].eps);
    ly(i) = std::log(fit.points[i].value);
  }
  double r2_loglog = 0.0;
  ols(lx, ly, fit.slope, r2_loglog);
  fit.r2 = r2_loglog;
  if (fit.regime == RateRegime::borderline) {
    Vector<double> bx(m), by(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      bx(i) = std::abs(lx(i));
      by(i) = fit.points[i].value / std::pow(fit.points[i].eps, n / 2.0);
    }
    double unused = 0.0;
    ols(bx, by, unused, fit.r2);
  }
  return fit;
}

WeightedIntegral weighted_critical_integral(const TruncatedInstanton& inst, const WeightModel& weight,
                                            const MixedRectangleDomain& domain, double alpha) {
  inst.validate(domain);
  if (!weight.is_constant()) {
    bool found = false;
    for (const auto& m : weight.maxima())
      if (m.location.size() == inst.center.size() && (m.location - inst.center).norm() <= 1e-12) found = true;
    if (!found) throw std::invalid_argument("weighted_critical_integral: instanton center is not a maximum of Q");
  }
  const double p = critical_exponent(inst.dim(), inst.s);
  WeightedIntegral w;
  w.value = instanton_lp_integral(inst, p, domain, &weight);
  w.flat = weight.q_max() * instanton_lp_integral(inst, p, domain);
  w.residual = weight.is_constant() ? 0.0 : std::abs(w.value - w.flat) / std::pow(inst.eps, alpha);
  return w;
}

FiberCoefficients FiberCoefficients::of(const SpectralField& u, const EnergyFunctional& functional) {
  const EnergyParts e = functional.parts(u);
  FiberCoefficients fc;
  fc.a = e.hs2;
  fc.b = e.crit;
  fc.c = e.sub;
  fc.p = functional.params().p();
  fc.q = functional.params().q;
  fc.lambda = functional.params().lambda;
  return fc;
}

double FiberCoefficients::g(double t) const {
  return a - std::pow(t, p - 2.0) * b - lambda * std::pow(t, q - 1.0) * c;
}

double FiberCoefficients::dg(double t) const {
  double d = -(p - 2.0) * std::pow(t, p - 3.0) * b;
  if (q != 1.0) d -= lambda * (q - 1.0) * std::pow(t, q - 2.0) * c;
  return d;
}

double FiberCoefficients::phi(double t) const {
  return 0.5 * t * t * a - std::pow(t, p) * b / p - lambda * std::pow(t, q + 1.0) * c / (q + 1.0);
}

double FiberCoefficients::t0() const { return std::pow(a / b, 1.0 / (p - 2.0)); }

double fiber_root(const FiberCoefficients& fc) {
  if (!(fc.a > 0.0) || !(fc.b > 0.0)) throw std::domain_error("fiber_root: degenerate fibering coefficients");
  if (fc.q == 1.0) {
    const double lead = fc.a - fc.lambda * fc.c;
    if (!(lead > 0.0)) throw std::domain_error("fiber_root: no positive root (q = 1 needs ||u||^2 > lambda int u^2)");
    return std::pow(lead / fc.b, 1.0 / (fc.p - 2.0));
  }
  // g(t0) = -lambda t0^{q-1} C <= 0 and g(0+) = A > 0.
  double hi = fc.t0();
  if (fc.g(hi) == 0.0) return hi;
  double lo = hi / 2;
  int expand = 0;
  while (fc.g(lo) <= 0.0) {
    hi = lo;
    lo /= 2;
    if (++expand > 2000) throw std::domain_error("fiber_root: no sign change found");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (fc.g(mid) > 0.0 ? lo : hi) = mid;
  }
  double t = 0.5 * (lo + hi);
  for (int it = 0; it < 5; ++it) {
    const double gt = fc.g(t);
    if (std::abs(gt) < 1e-14 * fc.a) break;
    const double next = t - gt / fc.dg(t);
    if (!(next > lo && next < hi)) break;
    t = next;
  }
  return t;
}

double beta_eps(double eps, double q, int dim, double s) {
  const double n = dim;
  const double border = n / (n - 2.0 * s);
  const double e = q + 1.0;
  if (std::abs(e - border) <= 1e-12 * border) return std::pow(eps, n / 2.0) * std::abs(std::log(eps));
  if (e < border) return std::pow(eps, (n - 2.0 * s) * e / 2.0);
  return std::pow(eps, n - (n - 2.0 * s) * e / 2.0);
}

FiberingReport maximize_fiber(const FiberCoefficients& fc, const TruncatedInstanton& inst, const ProblemParams& pp) {
  FiberingReport r;
  r.lambda = pp.lambda;
  r.eps = inst.eps;
  r.t_max = fiber_root(fc);
  r.sup_value = fc.phi(r.t_max);
  r.t0_closed = fc.t0();
  r.g_at_root = fc.g(r.t_max);
  r.beta_eps = beta_eps(inst.eps, pp.q, pp.frac.dim, pp.frac.s);
  r.threshold = std::numeric_limits<double>::quiet_NaN();
  r.margin = std::numeric_limits<double>::quiet_NaN();
  return r;
}

FiberingReport maximize_fiber(const TruncatedInstanton& inst, const ProblemParams& pp, const WeightModel& weight,
                              const EigenBasis& basis) {
  if (pp.q == 1.0) {
    const double l1 = first_fractional_eigenvalue(basis, pp.frac);
    if (!(pp.lambda < l1)) throw std::domain_error("maximize_fiber: q = 1 requires lambda < lambda_1^s");
  }
  const EnergyFunctional functional(pp, weight, basis);
  const SpectralField z = instanton_trace(inst, basis);
  return maximize_fiber(FiberCoefficients::of(z, functional), inst, pp);
}

double fibering_g(double t, const TruncatedInstanton& inst, const ProblemParams& pp, const WeightModel& weight,
                  const EigenBasis& basis) {
  if (!(t > 0.0)) throw std::invalid_argument("fibering_g: t must be > 0");
  const EnergyFunctional functional(pp, weight, basis);
  return FiberCoefficients::of(instanton_trace(inst, basis), functional).g(t);
}

FiberingReport sup_vs_threshold(const TruncatedInstanton& inst, const ProblemParams& pp, const WeightModel& weight,
                                const EigenBasis& basis, double threshold) {
  FiberingReport r = maximize_fiber(inst, pp, weight, basis);
  r.threshold = threshold;
  r.margin = threshold - r.sup_value;
  return r;
}

std::optional<double> lambda_crossover(const TruncatedInstanton& inst, const ProblemParams& pp,
                                       const WeightModel& weight, const EigenBasis& basis, double threshold,
                                       double lo, double hi) {
  const EnergyFunctional functional(pp, weight, basis);
  FiberCoefficients fc = FiberCoefficients::of(instanton_trace(inst, basis), functional);
  auto margin = [&](double lambda) {
    FiberCoefficients f = fc;
    f.lambda = lambda;
    return threshold - f.phi(fiber_root(f));
  };
  if (margin(lo) > 0.0) return lo;
  double below = lo;
  std::optional<double> above;
  for (double l = lo * 2; l <= hi * (1 + 1e-12); l *= 2) {
    if (margin(l) > 0.0) {
      above = l;
      break;
    }
    below = l;
  }
  if (!above) return std::nullopt;
  double a = below, b = *above;
  while (b - a > 1e-3 * b) {
    const double mid = std::sqrt(a * b);
    (margin(mid) > 0.0 ? b : a) = mid;
  }
  return b;
}

double FiberBracket::lower(const FiberingReport& r) const {
  if (q == 1.0) return c0;
  return c0 * std::pow(1.0 + r.lambda * r.beta_eps, 1.0 / (1.0 - q));
}

bool FiberBracket::contains(const FiberingReport& r) const { return r.t_max >= lower(r) && r.t_max <= t2; }

FiberBracket fit_fiber_bracket(const std::vector<FiberingReport>& calibration, double q) {
  if (calibration.empty()) throw std::invalid_argument("fit_fiber_bracket: empty calibration set");
  FiberBracket b;
  b.q = q;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& r : calibration) {
    const double base = q == 1.0 ? 1.0 : std::pow(1.0 + r.lambda * r.beta_eps, 1.0 / (1.0 - q));
    lo = std::min(lo, r.t_max / base);
    hi = std::max(hi, r.t_max);
  }
  b.c0 = 0.9 * lo;
  b.t2 = 1.1 * hi;
  return b;
}

std::vector<RayleighPoint> rayleigh_sweep(const TruncatedInstanton& tmpl, const std::vector<double>& eps_list,
                                          const FractionalParams& params, const EigenBasis& basis, unsigned threads) {
  std::vector<RayleighPoint> out(eps_list.size());
  parallel_for(eps_list.size(), threads, [&](std::size_t i) {
    TruncatedInstanton inst = tmpl;
    inst.eps = eps_list[i];
    const SpectralField z = instanton_trace(inst, basis);
    out[i].eps = inst.eps;
    out[i].quotient = rayleigh_quotient(z, params, basis);
    out[i].ratio = out[i].quotient / params.half_space_constant();
  });
  return out;
}

}  // namespace fraclab
