#include "fraclab/nehari_solver.hpp"

#include "fraclab/descent.hpp"
#include "fraclab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fraclab {

NehariPoint nehari_project(const SpectralField& u, const EnergyFunctional& functional) {
  if (!u.all_finite()) throw std::invalid_argument("nehari_project: field has non-finite coefficients");
  if (u.coeffs.cwiseAbs().maxCoeff() == 0.0) throw std::invalid_argument("nehari_project: field is zero");
  const FiberCoefficients fc = FiberCoefficients::of(u, functional);
  if (!(fc.b > 0.0)) throw std::invalid_argument("nehari_project: field vanishes on the grid");
  NehariPoint np;
  np.t_scale = fiber_root(fc);
  np.field = np.t_scale * u;
  const EnergyParts e = functional.parts(np.field);
  np.constraint_residual = e.hs2 - e.crit - functional.params().lambda * e.sub;
  return np;
}

NehariPoint nehari_project(const SpectralField& u, const ProblemParams& pp, const WeightModel& weight,
                           const EigenBasis& basis) {
  return nehari_project(u, EnergyFunctional(pp, weight, basis));
}

Point barycenter_grid(const Vector<double>& values, double p, const EigenBasis& basis) {
  const Vector<double> mass = (basis.grid_weights().array() * values.array().abs().pow(p)).matrix();
  const double total = mass.sum();
  if (!(total > 0.0)) throw std::invalid_argument("barycenter: field is zero");
  Point b(basis.dim());
  for (int axis = 0; axis < basis.dim(); ++axis) b(axis) = mass.dot(basis.grid_coordinate(axis)) / total;
  return b;
}

Point barycenter(const SpectralField& u, const FractionalParams& params, const EigenBasis& basis) {
  return barycenter_grid(synthesize(u, basis), params.crit_exp, basis);
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::budget_exhausted: return "budget_exhausted";
    case SolveStatus::stalled: return "stalled";
    case SolveStatus::basin_escape: return "basin_escape";
  }
  return "?";
}

namespace {

SpectralField positive_part(const SpectralField& u, const EigenBasis& basis) {
  return analyze(synthesize(u, basis).cwiseAbs().eval(), basis);
}

}  // namespace

SolutionRecord minimize_on_nehari(const SpectralField& seed, int basin, const EnergyFunctional& functional,
                                  const WeightModel& weight, const SolverOptions& opt) {
  const EigenBasis& basis = functional.basis();
  const ProblemParams& pp = functional.params();
  const double p = pp.p();
  SolutionRecord rec;
  rec.basin_index = basin;
  rec.r0 = opt.r0 > 0.0 ? opt.r0 : weight.r0(basis.domain());
  Point target;
  if (basin >= 0) {
    if (basin >= static_cast<int>(weight.maxima().size())) throw std::invalid_argument("minimize_on_nehari: no such basin");
    target = weight.maxima()[basin].location;
  }
  auto basin_distance = [&](const Vector<double>& values) {
    if (basin < 0) return 0.0;
    return (barycenter_grid(values, p, basis) - target).norm();
  };

  SpectralField start = opt.positivity_projection ? positive_part(seed, basis) : seed;
  const FiberCoefficients seed_fc = FiberCoefficients::of(start, functional);
  NehariPoint np0 = nehari_project(start, functional);
  rec.seed_sup = seed_fc.phi(np0.t_scale);
  const double d0 = basin_distance(synthesize(np0.field, basis));
  if (d0 >= rec.r0) throw std::invalid_argument("minimize_on_nehari: projected seed lies outside its basin");

  const double coercive_factor = pp.q > 1.0 ? 0.5 - 1.0 / (pp.q + 1.0) : 0.0;
  bool escaped = false;
  bool project_sign = opt.positivity_projection;
  auto eval = [&](const Vector<double>& a, Vector<double>& grad) { return functional.energy_and_gradient(a, grad); };
  auto retract = [&](Vector<double>& a) {
    if (!a.allFinite()) return false;
    SpectralField u(a);
    if (project_sign) u = positive_part(u, basis);
    try {
      a = nehari_project(u, functional).field.coeffs;
    } catch (const std::exception&) {
      return false;
    }
    return true;
  };
  int iteration = 0;
  auto record = [&](const Vector<double>& a, double f, double gn, double step) {
    const SpectralField u(a);
    const Vector<double> values = synthesize(u, basis);
    IterationRecord it;
    it.iteration = iteration++;
    it.energy = f;
    it.grad_norm = gn;
    it.hs2 = (functional.lambda_s().array() * a.array().square()).sum();
    it.step = step;
    it.basin_distance = basin_distance(values);
    if (f < coercive_factor * it.hs2 - 1e-12 * std::max(1.0, it.hs2)) rec.coercive = false;
    rec.history.push_back(it);
    return it;
  };
  {
    Vector<double> g;
    const double f0 = functional.energy_and_gradient(np0.field.coeffs, g);
    record(np0.field.coeffs, f0, std::sqrt(g.cwiseAbs2().cwiseQuotient(functional.lambda_s()).sum()), 0.0);
  }
  std::vector<DescentStep> steps;
  auto observe = [&](const Vector<double>& a, double f, double gn) {
    const IterationRecord it = record(a, f, gn, 0.0);
    if (basin >= 0 && it.basin_distance >= rec.r0) {
      escaped = true;
      return false;
    }
    return true;
  };
  DescentOptions dopt;
  dopt.budget = opt.budget;
  dopt.grad_tol = opt.grad_tol;
  const std::size_t first = rec.history.size();
  DescentResult res = preconditioned_descent(np0.field.coeffs, functional.lambda_s(), eval, retract, observe, dopt);
  int iterations = res.iterations;
  // The sign projection is not smooth where the truncated field dips below
  // zero; finish on the plain Nehari set once it stops making progress.
  if (res.stalled && project_sign && !escaped && iterations < opt.budget) {
    for (std::size_t i = 1; i < res.history.size(); ++i) steps.push_back(res.history[i]);
    project_sign = false;
    dopt.budget = opt.budget - iterations;
    res = preconditioned_descent(res.x, functional.lambda_s(), eval, retract, observe, dopt);
    iterations += res.iterations;
  }
  for (std::size_t i = 1; i < res.history.size(); ++i) steps.push_back(res.history[i]);
  for (std::size_t i = 0; i < steps.size() && first + i < rec.history.size(); ++i)
    rec.history[first + i].step = steps[i].step;

  rec.field = SpectralField(res.x);
  rec.energy = res.value;
  rec.grad_norm = res.grad_norm;
  rec.iterations = iterations;
  const Vector<double> values = synthesize(rec.field, basis);
  rec.barycenter = barycenter_grid(values, p, basis);
  rec.basin_distance = basin >= 0 ? (rec.barycenter - target).norm() : 0.0;
  rec.positivity_min = values.minCoeff();
  rec.hs_norm = std::sqrt((functional.lambda_s().array() * res.x.array().square()).sum());
  if (escaped)
    rec.status = SolveStatus::basin_escape;
  else if (res.converged)
    rec.status = SolveStatus::converged;
  else if (res.stalled)
    rec.status = SolveStatus::stalled;
  else
    rec.status = SolveStatus::budget_exhausted;
  return rec;
}

TruncatedInstanton basin_seed(const WeightModel& weight, int basin, double eps, const MixedRectangleDomain& domain,
                              double s) {
  const Point& a = weight.maxima().at(basin).location;
  return TruncatedInstanton{a, eps, default_rho(domain, a), s};
}

MultiplicityResult multiplicity_search(const EnergyFunctional& functional, const WeightModel& weight, double eps_seed,
                                       const SolverOptions& opt, unsigned threads) {
  const EigenBasis& basis = functional.basis();
  const std::size_t k = weight.maxima().size();
  if (k == 0) throw std::invalid_argument("multiplicity_search: weight has no maxima");
  MultiplicityResult out;
  out.records.resize(k);
  parallel_for(k, threads, [&](std::size_t i) {
    const TruncatedInstanton inst = basin_seed(weight, static_cast<int>(i), eps_seed, basis.domain(), functional.params().frac.s);
    out.records[i] = minimize_on_nehari(instanton_trace(inst, basis), static_cast<int>(i), functional, weight, opt);
  });
  out.min_barycenter_separation = std::numeric_limits<double>::infinity();
  out.min_hs_distance = std::numeric_limits<double>::infinity();
  const double r0 = out.records.front().r0;
  for (std::size_t i = 0; i < k; ++i) {
    if (!out.records[i].converged()) out.partial = true;
    for (std::size_t j = i + 1; j < k; ++j) {
      const double sep = (out.records[i].barycenter - out.records[j].barycenter).norm();
      const Vector<double> diff = out.records[i].field.coeffs - out.records[j].field.coeffs;
      const double dist = std::sqrt((functional.lambda_s().array() * diff.array().square()).sum());
      out.min_barycenter_separation = std::min(out.min_barycenter_separation, sep);
      out.min_hs_distance = std::min(out.min_hs_distance, dist);
      if (sep < r0 || dist <= 1e-4) out.distinct = false;
    }
  }
  if (k == 1) out.min_barycenter_separation = out.min_hs_distance = 0.0;
  return out;
}

LambdaTildeResult estimate_lambda_tilde(const ProblemParams& pp, const WeightModel& weight, const EigenBasis& basis,
                                        double eps_seed, double c_star, double lambda_start, double lambda_max,
                                        const SolverOptions& opt, unsigned threads) {
  if (!(lambda_start > 0.0) || !(lambda_max >= lambda_start))
    throw std::invalid_argument("estimate_lambda_tilde: need 0 < lambda_start <= lambda_max");
  LambdaTildeResult r;
  auto ok = [&](double lambda) {
    ++r.evaluations;
    ProblemParams p = pp;
    p.lambda = lambda;
    const EnergyFunctional functional(p, weight, basis);
    try {
      const MultiplicityResult m = multiplicity_search(functional, weight, eps_seed, opt, threads);
      for (const auto& rec : m.records)
        if (!rec.converged() || !(rec.energy < c_star)) return false;
      return true;
    } catch (const std::exception&) {
      return false;
    }
  };
  double good = 0.0, bad = 0.0;
  for (double l = lambda_start; l <= lambda_max * (1 + 1e-12); l *= 2) {
    if (ok(l)) {
      good = l;
    } else {
      bad = l;
      break;
    }
  }
  if (bad > 0.0 && good > 0.0) {
    while (bad - good > 0.1 * bad) {
      const double mid = std::sqrt(good * bad);
      (ok(mid) ? good : bad) = mid;
    }
  }
  r.lambda_tilde = good;
  r.first_failure = bad;
  return r;
}

PsReport ps_diagnostics(const std::vector<IterationRecord>& history, double c_star, double grad_tol, int min_plateau) {
  if (history.empty()) throw std::invalid_argument("ps_diagnostics: empty history");
  PsReport r;
  for (const auto& it : history) {
    r.energies.push_back(it.energy);
    r.grad_norms.push_back(it.grad_norm);
  }
  r.final_energy = r.energies.back();
  r.final_grad_norm = r.grad_norms.back();
  r.converged_below_threshold = r.final_grad_norm < grad_tol && r.final_energy < c_star;
  const int n = static_cast<int>(r.energies.size());
  int start = -1;
  auto close = [&](int first, int last) {
    if (first >= 0 && last - first + 1 >= min_plateau) r.plateaus.push_back({first, last, r.energies[last]});
  };
  for (int i = 0; i < n; ++i) {
    const bool above = r.energies[i] > c_star;
    const bool flat = i > 0 && std::abs(r.energies[i] - r.energies[i - 1]) <= 1e-6 * std::abs(r.energies[i]);
    if (above && (flat || start < 0)) {
      if (start < 0) start = i;
    } else {
      close(start, i - 1);
      start = above ? i : -1;
    }
  }
  close(start, n - 1);
  return r;
}

}  // namespace fraclab
