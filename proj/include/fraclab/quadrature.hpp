#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace fraclab {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Gauss-Legendre nodes and weights on [lo, hi].
template <typename Scalar>
struct QuadratureRule {
  Vector<Scalar> nodes;
  Vector<Scalar> weights;

  Eigen::Index size() const { return nodes.size(); }
};

/// n-point Gauss-Legendre rule on [lo, hi], nodes ascending.
///
/// Roots of P_n are found by Newton iteration from the Tricomi initial
/// guess; the three-term recurrence is evaluated in Scalar precision.
template <typename Scalar = double>
QuadratureRule<Scalar> gauss_legendre(int n, Scalar lo = Scalar(-1), Scalar hi = Scalar(1)) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
  using std::abs;
  using std::cos;
  const Scalar pi = std::numbers::pi_v<Scalar>;
  QuadratureRule<Scalar> rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const Scalar half_len = (hi - lo) / 2;
  const Scalar mid = (hi + lo) / 2;
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    Scalar x = cos(pi * (Scalar(i) + Scalar(0.75)) / (Scalar(n) + Scalar(0.5)));
    Scalar dp = 0;
    for (int iter = 0; iter < 100; ++iter) {
      Scalar p0 = 1, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const Scalar p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      // P_n'(x) = n (x P_n - P_{n-1}) / (x^2 - 1)
      dp = n * (x * p1 - p0) / (x * x - 1);
      const Scalar dx = p1 / dp;
      x -= dx;
      if (abs(dx) <= 4 * std::numeric_limits<Scalar>::epsilon()) {
        // one more evaluation of the derivative at the polished root
        p0 = 1;
        p1 = x;
        for (int k = 2; k <= n; ++k) {
          const Scalar p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1);
        break;
      }
    }
    const Scalar w = 2 / ((1 - x * x) * dp * dp);
    // x is the i-th largest root; store ascending.
    rule.nodes(n - 1 - i) = mid + half_len * x;
    rule.nodes(i) = mid - half_len * x;
    rule.weights(n - 1 - i) = half_len * w;
    rule.weights(i) = half_len * w;
  }
  if (n % 2 == 1) rule.nodes(n / 2) = mid;
  return rule;
}

/// Composite Gauss-Legendre rule over consecutive panels [breaks[i], breaks[i+1]].
template <typename Scalar = double>
QuadratureRule<Scalar> composite_gauss_legendre(const Vector<Scalar>& breaks, int points_per_panel) {
  const Eigen::Index panels = breaks.size() - 1;
  if (panels < 1) throw std::invalid_argument("composite_gauss_legendre: need at least two breakpoints");
  const auto ref = gauss_legendre<Scalar>(points_per_panel);
  QuadratureRule<Scalar> rule;
  rule.nodes.resize(panels * points_per_panel);
  rule.weights.resize(panels * points_per_panel);
  for (Eigen::Index p = 0; p < panels; ++p) {
    const Scalar a = breaks(p), b = breaks(p + 1);
    if (!(b > a)) throw std::invalid_argument("composite_gauss_legendre: breakpoints must increase");
    for (int k = 0; k < points_per_panel; ++k) {
      rule.nodes(p * points_per_panel + k) = (a + b) / 2 + (b - a) / 2 * ref.nodes(k);
      rule.weights(p * points_per_panel + k) = (b - a) / 2 * ref.weights(k);
    }
  }
  return rule;
}

}  // namespace fraclab
