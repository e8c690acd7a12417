#include <doctest.h>

#include "fraclab/functionals.hpp"
#include "fraclab/instanton_lab.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include <cmath>
#include <numbers>
#include <random>

using namespace fraclab;
using boost::multiprecision::cpp_bin_float_50;

namespace {

double sobolev_oracle(int n, double s_in) {
  using boost::math::tgamma;
  using boost::multiprecision::pow;
  const cpp_bin_float_50 s(s_in), N(n);
  const cpp_bin_float_50 pi = boost::math::constants::pi<cpp_bin_float_50>();
  const cpp_bin_float_50 v = pow(cpp_bin_float_50(2), 2 * s) * pow(pi, s) * tgamma((N + 2 * s) / 2) /
                             tgamma((N - 2 * s) / 2) * pow(tgamma(N / 2) / tgamma(N), 2 * s / N);
  return static_cast<double>(v);
}

MixedRectangleDomain unit_square() { return MixedRectangleDomain({1.0, 1.0}, {Face{0, false}}); }

WeightModel bump(double q_max, Point at, double gamma = 2.0, double r_cut = 0.3) {
  return WeightModel(q_max, 1.0, {WeightMaximum{std::move(at), gamma, r_cut}});
}

Point pt(double x, double y) { return (Point(2) << x, y).finished(); }

// Smooth positive-ish random field concentrated in the low modes.
Vector<double> random_field(Eigen::Index n, std::mt19937& rng, double scale) {
  std::normal_distribution<double> dist;
  Vector<double> a(n);
  for (Eigen::Index j = 0; j < n; ++j) a(j) = scale * dist(rng) / (1.0 + j);
  return a;
}

}  // namespace

TEST_CASE("critical_exponent") {
  CHECK(critical_exponent(2, 0.75) == 8.0);
  CHECK(critical_exponent(4, 0.75) == doctest::Approx(3.2).epsilon(1e-15));
  CHECK(critical_exponent(3, 1.0 - 1e-12) == doctest::Approx(6.0).epsilon(1e-9));
  CHECK_THROWS_AS(critical_exponent(1, 0.75), std::invalid_argument);
}

TEST_CASE("sobolev_constant against extended precision") {
  for (int n : {2, 3, 4})
    for (double s : {0.6, 0.75, 0.9}) {
      CAPTURE(n);
      CAPTURE(s);
      CHECK(std::abs(sobolev_constant(n, s) / sobolev_oracle(n, s) - 1.0) < 1e-10);
    }
}

TEST_CASE("sobolev_constant tends to the classical constant") {
  const double classical =
      std::numbers::pi * 3.0 * 1.0 * std::pow(std::tgamma(1.5) / std::tgamma(3.0), 2.0 / 3.0);
  double prev_gap = std::numeric_limits<double>::infinity();
  for (double s : {0.9, 0.99, 0.999, 0.9999}) {
    const double gap = std::abs(sobolev_constant(3, s) - classical);
    CHECK(gap < prev_gap);
    prev_gap = gap;
  }
  CHECK(prev_gap < 1e-3 * classical);
}

TEST_CASE("sobolev_constant grows with N") {
  for (double s : {0.6, 0.75, 0.9}) {
    double prev = 0.0;
    for (int n = 2; n <= 8; ++n) {
      const double v = sobolev_constant(n, s);
      CHECK(v > prev);
      CHECK(v == doctest::Approx(sobolev_oracle(n, s)).epsilon(1e-10));
      prev = v;
    }
  }
}

TEST_CASE("problem params validation") {
  const FractionalParams fp = FractionalParams::make(0.75, 2);
  CHECK_NOTHROW(ProblemParams::make(1.0, 2.0, fp));
  CHECK_THROWS_AS(ProblemParams::make(1.0, 7.0, fp), std::invalid_argument);
  CHECK_THROWS_AS(ProblemParams::make(1.0, 0.5, fp), std::invalid_argument);
  CHECK_THROWS_AS(ProblemParams::make(-1.0, 2.0, fp), std::invalid_argument);
}

TEST_CASE("required_alpha examples") {
  const auto r1 = required_alpha(ProblemParams::make(0.0, 1.0, FractionalParams::make(0.75, 4)));
  CHECK(r1.regime == AlphaRegime::high_dim);
  CHECK(r1.alpha == doctest::Approx(1.5));

  const auto r2 = required_alpha(ProblemParams::make(0.0, 2.0, FractionalParams::make(0.75, 2)));
  CHECK(r2.regime == AlphaRegime::free);
  CHECK(r2.is_interval());
  CHECK(r2.lo == 0.0);
  CHECK(r2.hi == 2.0);
  CHECK(r2.admits(1.0));
  CHECK_FALSE(r2.admits(2.0));

  const FractionalParams f39 = FractionalParams::make(0.9, 3);
  CHECK_THROWS_AS(ProblemParams::make(0.0, 5.0, f39), std::invalid_argument);
}

TEST_CASE("required_alpha matches the growth table on a grid") {
  int checked = 0;
  for (int n = 2; n <= 5; ++n)
    for (int si = 0; si <= 8; ++si) {
      const double s = 0.55 + 0.05 * si;
      const double upper = (n + 2 * s) / (n - 2 * s);
      const double split = (6 * s - n) / (n - 2 * s);
      for (double q = 1.0; q < upper; q += 0.25) {
        const ProblemParams pp = ProblemParams::make(0.0, q, FractionalParams::make(s, n));
        const double fixed = n - (n - 2 * s) * (q + 1) / 2;
        CAPTURE(n);
        CAPTURE(s);
        CAPTURE(q);
        if (n <= 3 && q > 1 && q <= split) {
          const auto r = required_alpha(pp);
          CHECK(r.regime == AlphaRegime::free);
          CHECK(r.hi == n);
        } else if (n <= 3 && q > split) {
          const auto r = required_alpha(pp);
          CHECK(r.regime == AlphaRegime::low_dim);
          CHECK(r.alpha == doctest::Approx(fixed));
        } else if (n >= 4) {
          const auto r = required_alpha(pp);
          CHECK(r.regime == AlphaRegime::high_dim);
          CHECK(r.alpha == doctest::Approx(fixed));
        } else {
          CHECK_THROWS_AS(required_alpha(pp), std::invalid_argument);
        }
        if (n >= 4 || (q > split && q > 1)) {
          CHECK(fixed > 0.0);
          CHECK(fixed < n);
        }
        ++checked;
      }
    }
  CHECK(checked > 100);
}

TEST_CASE("weight model") {
  const MixedRectangleDomain d = unit_square();
  const WeightModel w = bump(1.5, pt(1.0, 0.5), 2.0, 0.3);

  SUBCASE("maximum value and positivity") {
    CHECK(w(pt(1.0, 0.5)) == 1.5);
    const auto basis = build_basis(d, 6, default_quad_points(6));
    const Vector<double> g = w.on_grid(basis);
    CHECK(g.minCoeff() > 0.0);
    CHECK(g.maxCoeff() <= 1.5);
    CHECK(w(pt(0.2, 0.2)) == 1.0);
  }
  SUBCASE("local growth") {
    const double c = w.decay_coefficient(0);
    for (double r : {1e-3, 1e-4}) {
      const double drop = 1.5 - w(pt(1.0 - r, 0.5));
      CHECK(drop / (r * r) == doctest::Approx(c).epsilon(1e-2));
    }
  }
  SUBCASE("valid placement") {
    CHECK(w.diagnostics(d, 1.5).empty());
    CHECK_NOTHROW(w.validate(d, 1.5));
  }
  SUBCASE("growth exponent must exceed alpha") {
    CHECK_FALSE(w.diagnostics(d, 2.0).empty());
    CHECK_THROWS_AS(w.validate(d, 2.5), std::invalid_argument);
  }
  SUBCASE("maximum on a Dirichlet face") {
    const WeightModel bad = bump(1.5, pt(0.0, 0.5));
    const auto diag = bad.diagnostics(d, 1.0);
    REQUIRE_FALSE(diag.empty());
    CHECK(diag.front().find("Dirichlet") != std::string::npos);
    CHECK_THROWS_AS(bad.validate(d, 1.0), std::invalid_argument);
  }
  SUBCASE("interior maximum") {
    CHECK_FALSE(bump(1.5, pt(0.5, 0.5)).diagnostics(d, 1.0).empty());
  }
  SUBCASE("basins") {
    const WeightModel two(2.0, 1.0, {{pt(1.0, 0.0), 2.0, 0.3}, {pt(1.0, 1.0), 2.0, 0.3}});
    CHECK(two.r0(d) == doctest::Approx(0.45));
    CHECK(two.diagnostics(d, 1.5).empty());
    CHECK(w.r0(d) == doctest::Approx(0.45));
  }
  SUBCASE("constant") {
    const WeightModel c = WeightModel::constant(2.0);
    CHECK(c.is_constant());
    CHECK(c(pt(0.3, 0.7)) == 2.0);
  }
  SUBCASE("invalid parameters") {
    CHECK_THROWS(WeightModel(0.0, 1.0, {}));
    CHECK_THROWS(WeightModel(1.0, 2.0, {}));
  }
}

TEST_CASE("energy") {
  const MixedRectangleDomain d = unit_square();
  const auto basis = build_basis(d, 10, default_quad_points(10));
  const FractionalParams fp = FractionalParams::make(0.75, 2);

  SUBCASE("zero field") {
    const ProblemParams pp = ProblemParams::make(1.0, 2.0, fp);
    CHECK(energy(SpectralField::zero(basis.size()), pp, bump(1.5, pt(1.0, 0.5)), basis) == 0.0);
  }
  SUBCASE("scalar profile along the first mode") {
    const ProblemParams pp = ProblemParams::make(0.0, 2.0, fp);
    const WeightModel one = WeightModel::constant(1.0);
    const double l1 = std::pow(basis.eigenvalues()(0), 0.75);
    const double m = std::pow(lp_norm(SpectralField::unit(basis.size(), 0), 8.0, basis), 8.0);
    auto profile = [&](double t) { return t * t * l1 / 2 - std::pow(t, 8.0) * m / 8; };
    for (double t : {0.1, 0.7, 1.3}) {
      const SpectralField u = t * SpectralField::unit(basis.size(), 0);
      CHECK(energy(u, pp, one, basis) == doctest::Approx(profile(t)).epsilon(1e-12));
    }
    const double t_star = std::pow(l1 / m, 1.0 / 6.0);
    const double h = 1e-5;
    const double slope = (energy((t_star + h) * SpectralField::unit(basis.size(), 0), pp, one, basis) -
                          energy((t_star - h) * SpectralField::unit(basis.size(), 0), pp, one, basis)) /
                         (2 * h);
    CHECK(std::abs(slope) < 1e-8);
  }
  SUBCASE("even symmetry") {
    const ProblemParams pp = ProblemParams::make(0.5, 1.5, fp);
    std::mt19937 rng(1);
    const SpectralField u(random_field(basis.size(), rng, 0.8));
    const WeightModel w = bump(1.5, pt(1.0, 0.5));
    CHECK(energy(u, pp, w, basis) == energy(-1.0 * u, pp, w, basis));
  }
  SUBCASE("negative far along an instanton ray") {
    const ProblemParams pp = ProblemParams::make(1.0, 2.0, fp);
    const SpectralField z = instanton_trace(TruncatedInstanton{pt(1.0, 0.5), 0.03, 0.25, 0.75}, basis);
    const EnergyFunctional f(pp, bump(1.5, pt(1.0, 0.5)), basis);
    double prev = f.energy(1.0 * z);
    for (double t : {4.0, 8.0, 16.0}) {
      const double e = f.energy(t * z);
      CHECK(e < 0.0);
      CHECK(e < prev);
      prev = e;
    }
  }
  SUBCASE("resolution check") {
    const ProblemParams pp = ProblemParams::make(1.0, 2.0, fp);
    const WeightModel w = WeightModel::constant(1.5);
    const auto smooth = energy_resolution(SpectralField::unit(basis.size(), 0), pp, w, basis);
    CHECK_FALSE(smooth.under_resolved);
    const auto coarse = build_basis(d, 8, default_quad_points(8));
    const auto rough = energy_resolution(3.0 * SpectralField::unit(coarse.size(), coarse.size() - 1), pp, w, coarse);
    CHECK(rough.under_resolved);
  }
}

TEST_CASE("gradient") {
  const MixedRectangleDomain d = unit_square();
  const auto basis = build_basis(d, 8, default_quad_points(8));
  const FractionalParams fp = FractionalParams::make(0.75, 2);
  const ProblemParams pp = ProblemParams::make(1.0, 2.0, fp);
  const WeightModel w = bump(1.5, pt(1.0, 0.5));
  const EnergyFunctional f(pp, w, basis);

  SUBCASE("zero field") {
    const Gradient g = f.gradient(SpectralField::zero(basis.size()));
    CHECK(g.dual.coeffs.cwiseAbs().maxCoeff() == 0.0);
    CHECK(g.norm == 0.0);
  }
  SUBCASE("forms are consistent") {
    std::mt19937 rng(9);
    const SpectralField u(random_field(basis.size(), rng, 1.0));
    const Gradient g = f.gradient(u);
    const Vector<double> ls = fractional_eigenvalues(basis, 0.75);
    CHECK((g.preconditioned.coeffs - g.dual.coeffs.cwiseQuotient(ls)).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(g.norm == doctest::Approx(std::sqrt(g.dual.coeffs.cwiseAbs2().cwiseQuotient(ls).sum())));
    Vector<double> dual;
    CHECK(f.energy_and_gradient(u.coeffs, dual) == doctest::Approx(f.energy(u)).epsilon(1e-14));
    CHECK((dual - g.dual.coeffs).cwiseAbs().maxCoeff() < 1e-13);
  }
  SUBCASE("central differences converge at second order") {
    std::mt19937 rng(42);
    double worst = 0.0;
    int ordered = 0, measured = 0;
    for (int pair = 0; pair < 50; ++pair) {
      const SpectralField u(random_field(basis.size(), rng, 1.0));
      const SpectralField v(random_field(basis.size(), rng, 1.0));
      const double exact = f.gradient(u).dual.coeffs.dot(v.coeffs);
      double err[3];
      const double hs[3] = {1e-3, 1e-4, 1e-5};
      for (int k = 0; k < 3; ++k) {
        const double fd = (f.energy(u + hs[k] * v) - f.energy(u - hs[k] * v)) / (2 * hs[k]);
        err[k] = std::abs(fd - exact) / std::max(std::abs(exact), 1e-12);
      }
      worst = std::max(worst, err[1]);
      if (err[0] > 1e-10) {
        ++measured;
        if (std::log10(err[0] / err[1]) > 1.8) ++ordered;
      }
    }
    CHECK(worst < 1e-6);
    CHECK(measured > 40);
    CHECK(ordered == measured);
  }
}

TEST_CASE("threshold") {
  const FractionalParams fp = FractionalParams::make(0.75, 2);
  const double half = fp.half_space_constant();
  const double c1 = threshold_c_star(half, fp, 1.0);
  CHECK(c1 == doctest::Approx(0.75 / 2 * std::pow(fp.sobolev_sN, 2 / 1.5) / 2).epsilon(1e-13));
  for (double c : {0.5, 2.0, 3.7})
    CHECK(threshold_c_star(half, fp, c) == doctest::Approx(c1 * std::pow(c, -(2 - 1.5) / 1.5)).epsilon(1e-13));
}

TEST_CASE("S(Sigma_D) estimate") {
  const MixedRectangleDomain d = unit_square();
  const FractionalParams fp = FractionalParams::make(0.75, 2);
  const auto b8 = build_basis(d, 8, default_quad_points(8));
  const auto b16 = build_basis(d, 16, default_quad_points(16));
  const ThresholdReport r8 = estimate_sigma_d_constant(b8, fp, 4);
  const ThresholdReport r16 = estimate_sigma_d_constant(b16, fp, 4);
  CHECK(r8.raw_estimate <= fp.half_space_constant() * 1.05);
  CHECK(r16.raw_estimate <= fp.half_space_constant() * 1.05);
  CHECK(r16.raw_estimate > 0.0);
  CHECK(r16.raw_estimate < fp.sobolev_sN);
  CHECK(r16.raw_estimate <= r8.raw_estimate + 1e-8);
  CHECK(r16.s_sigma_d <= r16.half_bound);
  CHECK(r16.seed_values.size() == 4);
  CHECK(rayleigh_quotient(r16.minimizer, fp, b16) == doctest::Approx(r16.raw_estimate).epsilon(1e-10));
  CHECK(r16.c_star == doctest::Approx(threshold_c_star(r16.s_sigma_d, fp, 1.0)));
  CHECK_THROWS(estimate_sigma_d_constant(b8, fp, 0));
}
