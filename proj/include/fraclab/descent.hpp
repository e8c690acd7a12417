#pragma once
// Preconditioned gradient descent with Barzilai-Borwein trial steps,
// monotone Armijo backtracking and a retraction applied after every step.

#include "fraclab/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace fraclab {

struct DescentOptions {
  int budget = 2000;
  double grad_tol = 1e-8;
  double armijo_c = 1e-4;
  int max_backtracks = 50;
};

struct DescentStep {
  double value = 0.0;
  double grad_norm = 0.0;
  double step = 0.0;
};

struct DescentResult {
  Vector<double> x;
  double value = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  bool stalled = false;  // line search could not decrease the objective
  std::vector<DescentStep> history;
};

/// Minimizes f over the set fixed by `retract`.
///
/// eval(x, grad) returns f(x) and writes the L2-dual gradient into grad;
/// the search direction is grad ./ metric and the reported norm is
/// sqrt(sum grad^2 ./ metric). retract(x) maps a trial point back onto the
/// constraint set and returns false if that is impossible; observe(x, f,
/// grad_norm) runs after each accepted step and may return false to stop.
template <class Eval, class Retract, class Observe>
DescentResult preconditioned_descent(Vector<double> x, const Vector<double>& metric, Eval&& eval, Retract&& retract,
                                     Observe&& observe, const DescentOptions& opt) {
  DescentResult res;
  Vector<double> g(x.size()), g_new(x.size());
  double f = eval(x, g);
  double gn = std::sqrt((g.array().square() / metric.array()).sum());
  res.history.push_back({f, gn, 0.0});
  double alpha = 1.0;
  Vector<double> x_prev, g_prev;
  for (int it = 0; it < opt.budget; ++it) {
    if (gn < opt.grad_tol) {
      res.converged = true;
      break;
    }
    const Vector<double> dir = (g.array() / metric.array()).matrix();
    if (it > 0) {
      const Vector<double> sx = x - x_prev;
      const Vector<double> yg = g - g_prev;
      const double sy = sx.dot(yg);
      const double ss = (sx.array().square() * metric.array()).sum();
      if (sy > 0.0 && std::isfinite(ss / sy)) alpha = std::clamp(ss / sy, 1e-12, 1e12);
    }
    bool accepted = false;
    Vector<double> x_try;
    double f_try = 0.0;
    for (int bt = 0; bt < opt.max_backtracks; ++bt) {
      x_try = x - alpha * dir;
      if (retract(x_try)) {
        f_try = eval(x_try, g_new);
        // Near a minimizer the predicted decrease drops below rounding in f.
        const double slack = 16 * std::numeric_limits<double>::epsilon() * std::abs(f);
        const bool armijo = f_try <= f - opt.armijo_c * alpha * gn * gn;
        const bool flat = opt.armijo_c * alpha * gn * gn < slack && f_try <= f + slack;
        if (std::isfinite(f_try) && (armijo || flat)) {
          accepted = true;
          break;
        }
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      res.stalled = true;
      break;
    }
    x_prev = x;
    g_prev = g;
    x = x_try;
    g = g_new;
    f = f_try;
    gn = std::sqrt((g.array().square() / metric.array()).sum());
    res.iterations = it + 1;
    res.history.push_back({f, gn, alpha});
    if (!observe(x, f, gn)) break;
  }
  if (gn < opt.grad_tol) res.converged = true;
  res.x = std::move(x);
  res.value = f;
  res.grad_norm = gn;
  return res;
}

}  // namespace fraclab
