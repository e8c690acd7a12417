#include <doctest.h>

#include "fraclab/instanton_lab.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <numbers>

using namespace fraclab;

namespace {

MixedRectangleDomain unit_square() { return MixedRectangleDomain({1.0, 1.0}, {Face{0, false}}); }
Point pt(double x, double y) { return (Point(2) << x, y).finished(); }

// Half-disk integral of z^p around a face midpoint, reduced to one radial integral.
double half_disk_oracle(const TruncatedInstanton& z, double p) {
  const double d = z.decay();
  auto f = [&](double r) {
    return std::pow(cutoff(r / z.rho), p) * std::pow(z.eps, d * p) / std::pow(z.eps * z.eps + r * r, d * p) * r;
  };
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  double total = 0.0;
  const double breaks[] = {0.0, z.eps, 4 * z.eps, z.rho / 2, z.rho};
  for (int i = 0; i + 1 < 5; ++i)
    if (breaks[i + 1] > breaks[i]) total += GK::integrate(f, breaks[i], breaks[i + 1], 15, 1e-14);
  return std::numbers::pi * total;
}

struct FiberSetup {
  MixedRectangleDomain domain = unit_square();
  EigenBasis basis = build_basis(domain, 24, default_quad_points(24));
  FractionalParams fp = FractionalParams::make(0.75, 2);
  WeightModel weight{1.5, 1.0, {WeightMaximum{pt(1.0, 0.5), 2.0, 0.3}}};
  TruncatedInstanton inst{pt(1.0, 0.5), 0.25 / 8, 0.25, 0.75};
};

}  // namespace

TEST_CASE("cutoff profile") {
  CHECK(cutoff(0.0) == 1.0);
  CHECK(cutoff(0.5) == 1.0);
  CHECK(cutoff(1.0) == 0.0);
  CHECK(cutoff(3.0) == 0.0);
  double prev = 1.0, worst_slope = 0.0;
  for (double t = 0.5; t <= 1.0; t += 1e-3) {
    const double v = cutoff(t);
    CHECK(v <= prev);
    worst_slope = std::max(worst_slope, (prev - v) / 1e-3);
    prev = v;
  }
  CHECK(worst_slope < 10.0);
}

TEST_CASE("truncated instanton") {
  const MixedRectangleDomain d = unit_square();
  const TruncatedInstanton z{pt(1.0, 0.5), 0.02, 0.25, 0.75};
  CHECK(z(pt(1.0, 0.5)) == doctest::Approx(std::pow(0.02, -0.25)).epsilon(1e-14));
  CHECK(z(pt(0.75, 0.5)) == 0.0);
  CHECK(z(pt(1.0, 0.25)) == 0.0);
  CHECK_NOTHROW(z.validate(d));

  SUBCASE("invalid placements") {
    CHECK_THROWS(TruncatedInstanton{pt(1.0, 0.5), 0.1, 0.25, 0.75}.validate(d));
    CHECK_THROWS(TruncatedInstanton{pt(0.5, 0.5), 0.02, 0.25, 0.75}.validate(d));
    CHECK_THROWS(TruncatedInstanton{pt(0.5, 0.0), 0.02, 0.6, 0.75}.validate(d));
    CHECK_THROWS(TruncatedInstanton{pt(0.0, 0.5), 0.02, 0.25, 0.75}.validate(d));
  }
  SUBCASE("nonnegative samples") {
    const auto basis = build_basis(d, 16, default_quad_points(16));
    CHECK(instanton_samples(z, basis).minCoeff() >= 0.0);
  }
  SUBCASE("defaults") {
    CHECK(default_rho(d, pt(1.0, 0.5)) == doctest::Approx(0.25));
    const auto sweep = eps_sweep(0.25);
    REQUIRE(sweep.size() == 6);
    CHECK(sweep.front() == 0.25 / 8);
    CHECK(sweep.back() == 0.25 / 256);
  }
}

TEST_CASE("instanton round trip at M=64") {
  const MixedRectangleDomain d = unit_square();
  const auto basis = build_basis(d, 64, default_quad_points(64));
  const TruncatedInstanton z{pt(1.0, 0.5), 0.1, 0.5, 0.75};
  const Vector<double> direct = instanton_samples(z, basis);
  const Vector<double> back = synthesize(instanton_trace(z, basis), basis);
  CHECK((back - direct).cwiseAbs().maxCoeff() < 1e-3 * direct.cwiseAbs().maxCoeff());
}

TEST_CASE("L^p integral against the radial oracle") {
  const MixedRectangleDomain d = unit_square();
  for (double p : {2.0, 4.0, 6.0, 8.0})
    for (double eps : {0.25 / 8, 0.25 / 64, 0.25 / 256}) {
      const TruncatedInstanton z{pt(1.0, 0.5), eps, 0.25, 0.75};
      CAPTURE(p);
      CAPTURE(eps);
      CHECK(instanton_lp_integral(z, p, d) == doctest::Approx(half_disk_oracle(z, p)).epsilon(1e-9));
    }
}

TEST_CASE("rate experiment") {
  const MixedRectangleDomain d = unit_square();
  const TruncatedInstanton tmpl{pt(1.0, 0.5), 0.0, 0.25, 0.75};
  const auto eps = eps_sweep(0.25);
  CHECK(rate_regime(2.0, 2, 0.75) == RateRegime::subcritical);
  CHECK(rate_regime(4.0, 2, 0.75) == RateRegime::borderline);
  CHECK(rate_regime(6.0, 2, 0.75) == RateRegime::supercritical);

  const RateFit sub = lp_rate_experiment(2.0, eps, tmpl, d);
  CHECK(sub.expected_slope == doctest::Approx(0.5));
  CHECK(std::abs(sub.slope - 0.5) < 0.05);
  for (const auto& p : sub.points) CHECK(p.residual == doctest::Approx(p.value / p.theory));

  const RateFit sup = lp_rate_experiment(6.0, eps, tmpl, d);
  CHECK(sup.expected_slope == doctest::Approx(0.5));

  const RateFit border = lp_rate_experiment(4.0, eps, tmpl, d);
  CHECK(border.regime == RateRegime::borderline);
  CHECK(border.r2 > 0.999);

  CHECK_THROWS(lp_rate_experiment(2.0, {0.01, 0.005, 0.002}, tmpl, d));
}

TEST_CASE("weighted critical integral") {
  const MixedRectangleDomain d = unit_square();
  const double p = critical_exponent(2, 0.75);

  SUBCASE("constant weight") {
    const TruncatedInstanton z{pt(1.0, 0.5), 0.01, 0.25, 0.75};
    const auto w = weighted_critical_integral(z, WeightModel::constant(2.0), d, 1.0);
    CHECK(w.residual == 0.0);
    CHECK(w.value == doctest::Approx(w.flat).epsilon(1e-14));
  }
  SUBCASE("residual decays for gamma = alpha + 1/2") {
    const double alpha = 1.0;
    const WeightModel q(1.5, 1.0, {WeightMaximum{pt(1.0, 0.5), alpha + 0.5, 0.3}});
    double prev = std::numeric_limits<double>::infinity();
    for (double eps : {0.25 / 8, 0.25 / 16, 0.25 / 32, 0.25 / 64, 0.25 / 128}) {
      const auto w = weighted_critical_integral(TruncatedInstanton{pt(1.0, 0.5), eps, 0.25, 0.75}, q, d, alpha);
      CHECK(w.value <= w.flat);
      CHECK(w.residual < prev);
      prev = w.residual;
    }
  }
  SUBCASE("center must be a maximum") {
    const WeightModel q(1.5, 1.0, {WeightMaximum{pt(1.0, 0.5), 2.0, 0.3}});
    CHECK_THROWS(weighted_critical_integral(TruncatedInstanton{pt(1.0, 0.4), 0.01, 0.2, 0.75}, q, d, 1.0));
  }
  CHECK(p == 8.0);
}

TEST_CASE("fiber coefficients and root") {
  FiberCoefficients fc;
  fc.a = 2.0;
  fc.b = 1.0;
  fc.p = 8.0;
  fc.q = 2.0;
  CHECK(fiber_root(fc) == doctest::Approx(std::pow(2.0, 1.0 / 6.0)).epsilon(1e-12));
  fc.b = 2.0;
  CHECK(fiber_root(fc) == doctest::Approx(1.0).epsilon(1e-12));

  SUBCASE("q = 1 closed form and failure") {
    FiberCoefficients f1 = fc;
    f1.q = 1.0;
    f1.c = 1.0;
    f1.lambda = 0.5;
    const double t = fiber_root(f1);
    CHECK(std::abs(f1.g(t)) < 1e-10);
    f1.lambda = 3.0;
    CHECK_THROWS_AS(fiber_root(f1), std::domain_error);
  }
  SUBCASE("phi derivative is t g") {
    FiberCoefficients f = fc;
    f.c = 0.7;
    f.lambda = 1.3;
    for (double t : {0.3, 0.9, 1.4}) {
      const double h = 1e-6;
      CHECK((f.phi(t + h) - f.phi(t - h)) / (2 * h) == doctest::Approx(t * f.g(t)).epsilon(1e-7));
    }
  }
}

TEST_CASE("fibering map along an instanton") {
  FiberSetup s;
  const ProblemParams pp = ProblemParams::make(1.0, 2.0, s.fp);
  const EnergyFunctional f(pp, s.weight, s.basis);
  const FiberCoefficients fc = FiberCoefficients::of(instanton_trace(s.inst, s.basis), f);

  SUBCASE("g near zero is the H^s norm") {
    CHECK(fibering_g(1e-8, s.inst, pp, s.weight, s.basis) == doctest::Approx(fc.a).epsilon(1e-7));
    CHECK(fc.a > 0.0);
  }
  SUBCASE("single sign change, decreasing") {
    int changes = 0;
    double prev = fc.g(1e-6);
    for (double t = 1e-6; t < 1e3; t *= 1.05) {
      const double v = fc.g(t);
      CHECK(v <= prev);
      if ((v < 0) != (prev < 0)) ++changes;
      prev = v;
    }
    CHECK(changes == 1);
  }
  SUBCASE("maximizer") {
    const FiberingReport r = maximize_fiber(s.inst, pp, s.weight, s.basis);
    CHECK(std::abs(r.g_at_root) < 1e-10);
    CHECK(r.t_max > 0.0);
    CHECK(r.sup_value == doctest::Approx(fc.phi(r.t_max)).epsilon(1e-12));
    CHECK(r.beta_eps == doctest::Approx(beta_eps(s.inst.eps, 2.0, 2, 0.75)));
  }
  SUBCASE("closed form at lambda = 0") {
    const ProblemParams p0 = ProblemParams::make(0.0, 2.0, s.fp);
    for (double eps : {0.25 / 8, 0.25 / 16, 0.25 / 32}) {
      TruncatedInstanton z = s.inst;
      z.eps = eps;
      const FiberingReport r = maximize_fiber(z, p0, s.weight, s.basis);
      CHECK(std::abs(r.t_max - r.t0_closed) < 1e-8 * r.t0_closed);
    }
  }
  SUBCASE("non-increasing in lambda") {
    double prev = std::numeric_limits<double>::infinity();
    for (double lam : {0.0, 0.1, 1.0, 10.0, 100.0}) {
      const FiberingReport r = maximize_fiber(s.inst, ProblemParams::make(lam, 2.0, s.fp), s.weight, s.basis);
      CHECK(r.t_max <= prev);
      prev = r.t_max;
    }
  }
  SUBCASE("margin") {
    const FiberingReport r = sup_vs_threshold(s.inst, pp, s.weight, s.basis, 0.3);
    CHECK(r.threshold == 0.3);
    CHECK(r.margin == doctest::Approx(0.3 - r.sup_value));
  }
  SUBCASE("q = 1 guard") {
    const double l1 = first_fractional_eigenvalue(s.basis, s.fp);
    CHECK_THROWS(maximize_fiber(s.inst, ProblemParams::make(1.01 * l1, 1.0, s.fp), s.weight, s.basis));
    CHECK_NOTHROW(maximize_fiber(s.inst, ProblemParams::make(0.5 * l1, 1.0, s.fp), s.weight, s.basis));
  }
}

TEST_CASE("beta regimes") {
  // q + 1 against N/(N-2s) = 4 for N = 2, s = 0.75
  CHECK(beta_eps(0.01, 2.0, 2, 0.75) == doctest::Approx(std::pow(0.01, 0.75)).epsilon(1e-12));
  CHECK(beta_eps(0.01, 3.0, 2, 0.75) == doctest::Approx(std::pow(0.01, 1.0) * std::abs(std::log(0.01))).epsilon(1e-12));
  CHECK(beta_eps(0.01, 5.0, 2, 0.75) == doctest::Approx(std::pow(0.01, 2.0 - 0.5 * 6.0 / 2.0)).epsilon(1e-12));
}

TEST_CASE("lambda crossover and bracket") {
  FiberSetup s;
  const ProblemParams pp = ProblemParams::make(0.0, 2.0, s.fp);
  const double threshold = threshold_c_star(s.fp.half_space_constant(), s.fp, s.weight.q_max());
  const auto cross = lambda_crossover(s.inst, pp, s.weight, s.basis, threshold);
  REQUIRE(cross.has_value());
  for (double factor : {1.5, 4.0, 20.0}) {
    const auto r =
        sup_vs_threshold(s.inst, ProblemParams::make(*cross * factor, 2.0, s.fp), s.weight, s.basis, threshold);
    CHECK(r.margin > 0.0);
  }

  std::vector<FiberingReport> calib;
  for (double eps : {0.25 / 8, 0.25 / 16})
    for (double lam : {0.0, 1.0, 10.0}) {
      TruncatedInstanton z = s.inst;
      z.eps = eps;
      calib.push_back(maximize_fiber(z, ProblemParams::make(lam, 2.0, s.fp), s.weight, s.basis));
    }
  const FiberBracket br = fit_fiber_bracket(calib, 2.0);
  for (const auto& r : calib) {
    CHECK(br.contains(r));
    CHECK(br.lower(r) <= r.t_max);
    CHECK(r.t_max <= br.t2);
  }
}

TEST_CASE("rayleigh sweep") {
  FiberSetup s;
  const auto pts = rayleigh_sweep(s.inst, {0.25 / 8, 0.25 / 16, 0.25 / 32, 0.25 / 64}, s.fp, s.basis);
  REQUIRE(pts.size() == 4);
  for (const auto& p : pts) {
    TruncatedInstanton z = s.inst;
    z.eps = p.eps;
    CHECK(p.quotient == doctest::Approx(rayleigh_quotient(instanton_trace(z, s.basis), s.fp, s.basis)));
    CHECK(p.ratio == doctest::Approx(p.quotient / s.fp.half_space_constant()));
  }
}
