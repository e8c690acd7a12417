#pragma once
// Truncated Aubin-Talenti instantons centred on the Neumann boundary, their
// L^p scaling laws, weighted critical integrals and fibering maps.

#include "fraclab/functionals.hpp"
#include "fraclab/spectral_core.hpp"

#include <optional>
#include <vector>

namespace fraclab {

/// phi_0(t): 1 on [0, 1/2], a C-infinity step on (1/2, 1), 0 beyond.
double cutoff(double t);

/// z(x) = phi_0(|x-a|/rho) eps^{(N-2s)/2} / (eps^2 + |x-a|^2)^{(N-2s)/2}.
struct TruncatedInstanton {
  Point center;
  double eps = 0.1;
  double rho = 0.25;
  double s = 0.75;

  int dim() const { return static_cast<int>(center.size()); }
  double decay() const { return (dim() - 2.0 * s) / 2.0; }
  double radial(double r) const;
  double operator()(const Point& x) const;
  /// Throws unless eps < rho/4, the center is on the Neumann boundary and
  /// the closed rho-ball around it misses every Dirichlet face.
  void validate(const MixedRectangleDomain& domain) const;
};

/// A quarter of the distance from the center to the nearest Dirichlet face.
double default_rho(const MixedRectangleDomain& domain, const Point& center);

/// eps_k = rho 2^{-k} for k = first..last.
std::vector<double> eps_sweep(double rho, int first = 3, int last = 8);

Vector<double> instanton_samples(const TruncatedInstanton& inst, const EigenBasis& basis);
/// Grid samples of z projected onto the basis.
SpectralField instanton_trace(const TruncatedInstanton& inst, const EigenBasis& basis);

/// int_Omega w(x) z(x)^p dx by tensor composite Gauss-Legendre quadrature on
/// panels graded geometrically towards the center (independent of any basis).
double instanton_lp_integral(const TruncatedInstanton& inst, double p, const MixedRectangleDomain& domain,
                             const WeightModel* weight = nullptr, int points_per_panel = 16);

enum class RateRegime { subcritical, borderline, supercritical };

struct RatePoint {
  double eps = 0.0;
  double value = 0.0;   // ||z||_p^p
  double theory = 0.0;  // eps^{expected slope}, or eps^{N/2}|log eps| at the borderline
  double residual = 0.0;  // value / theory
};

struct RateFit {
  double p = 0.0;
  RateRegime regime = RateRegime::subcritical;
  double slope = 0.0;           // OLS slope of log value vs log eps
  double expected_slope = 0.0;  // exponent of eps^{...} (N/2 at the borderline)
  double r2 = 0.0;              // borderline: affine fit of value/eps^{N/2} vs |log eps|; else log-log fit
  std::vector<RatePoint> points;
};

RateRegime rate_regime(double p, int dim, double s);

/// Measures ||z||_p^p over an eps sweep of a template instanton (its eps is ignored).
/// Throws with fewer than 4 eps values. Sweeps run on up to `threads` workers.
RateFit lp_rate_experiment(double p, const std::vector<double>& eps_list, const TruncatedInstanton& tmpl,
                           const MixedRectangleDomain& domain, unsigned threads = 0);

struct WeightedIntegral {
  double value = 0.0;     // int Q z^{2*_s}
  double flat = 0.0;      // Q_M int z^{2*_s}
  double residual = 0.0;  // |value - flat| / eps^alpha
};

/// Throws if the instanton is not centred at a maximum of a non-constant weight.
WeightedIntegral weighted_critical_integral(const TruncatedInstanton& inst, const WeightModel& weight,
                                            const MixedRectangleDomain& domain, double alpha);

/// Coefficients of the fibering map t -> J(t u): A = ||u||^2_{H^s},
/// B = int Q |u|^{2*_s}, C = int |u|^{q+1}.
struct FiberCoefficients {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double p = 0.0;
  double q = 1.0;
  double lambda = 0.0;

  static FiberCoefficients of(const SpectralField& u, const EnergyFunctional& functional);
  double g(double t) const;
  double dg(double t) const;
  double phi(double t) const;
  /// Root of g at lambda = 0: (A/B)^{1/(p-2)}.
  double t0() const;
};

/// g(t) = ||z||^2 - t^{p-2} int Q z^p - lambda t^{q-1} int z^{q+1}.
double fibering_g(double t, const TruncatedInstanton& inst, const ProblemParams& pp, const WeightModel& weight,
                  const EigenBasis& basis);

/// Positive root of g by bisection then Newton polish (|g| < 1e-10).
/// Throws std::domain_error when g has no positive root.
double fiber_root(const FiberCoefficients& fc);

/// beta(eps) by the three regimes of q+1 versus N/(N-2s).
double beta_eps(double eps, double q, int dim, double s);

struct FiberingReport {
  double lambda = 0.0;
  double eps = 0.0;
  double t_max = 0.0;
  double sup_value = 0.0;
  double t0_closed = 0.0;
  double threshold = 0.0;
  double margin = 0.0;
  double beta_eps = 0.0;
  double g_at_root = 0.0;
};

/// Maximizer of t -> J_lambda(t z). For q = 1 requires lambda < lambda_1^s.
FiberingReport maximize_fiber(const TruncatedInstanton& inst, const ProblemParams& pp, const WeightModel& weight,
                              const EigenBasis& basis);
FiberingReport maximize_fiber(const FiberCoefficients& fc, const TruncatedInstanton& inst, const ProblemParams& pp);

/// maximize_fiber plus margin = threshold - sup.
FiberingReport sup_vs_threshold(const TruncatedInstanton& inst, const ProblemParams& pp, const WeightModel& weight,
                                const EigenBasis& basis, double threshold);

/// Smallest lambda in [lo, hi] (to relative 1e-3) above which the margin is
/// positive, searched on a geometric grid then refined by bisection; empty if
/// the margin never turns positive on the grid.
std::optional<double> lambda_crossover(const TruncatedInstanton& inst, const ProblemParams& pp,
                                       const WeightModel& weight, const EigenBasis& basis, double threshold,
                                       double lo = 1e-2, double hi = 1e4);

/// Constants of t_{lambda,eps} in [C0 (1 + lambda beta)^{1/(1-q)}, T2], fitted once
/// on a calibration set and then frozen.
struct FiberBracket {
  double c0 = 0.0;
  double t2 = 0.0;
  double q = 1.0;

  double lower(const FiberingReport& r) const;
  bool contains(const FiberingReport& r) const;
};

/// C0 = 0.9 min of t / (1 + lambda beta)^{1/(1-q)}, T2 = 1.1 max t over the calibration reports.
FiberBracket fit_fiber_bracket(const std::vector<FiberingReport>& calibration, double q);

struct RayleighPoint {
  double eps = 0.0;
  double quotient = 0.0;  // ||z||^2_{H^s} / ||z||^2_{L^{2*_s}} on the basis
  double ratio = 0.0;     // quotient / (2^{-2s/N} S(s,N))
};

std::vector<RayleighPoint> rayleigh_sweep(const TruncatedInstanton& tmpl, const std::vector<double>& eps_list,
                                          const FractionalParams& params, const EigenBasis& basis,
                                          unsigned threads = 0);

}  // namespace fraclab
