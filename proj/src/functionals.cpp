#include "fraclab/functionals.hpp"

#include "fraclab/descent.hpp"
#include "fraclab/instanton_lab.hpp"
#include "fraclab/special.hpp"
#include "fraclab/parallel.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace fraclab {

double critical_exponent(int dim, double s) {
  if (!(dim > 2.0 * s)) throw std::invalid_argument("critical_exponent: need N > 2s");
  return 2.0 * dim / (dim - 2.0 * s);
}

double sobolev_constant(int dim, double s) {
  if (!(s > 0.0 && s < 1.0)) throw std::invalid_argument("sobolev_constant: s must lie in (0, 1)");
  if (!(dim > 2.0 * s)) throw std::invalid_argument("sobolev_constant: need N > 2s");
  const double n = dim;
  return std::pow(2.0, 2.0 * s) * std::pow(std::numbers::pi, s) * gamma_fn((n + 2.0 * s) / 2.0) /
         gamma_fn((n - 2.0 * s) / 2.0) * std::pow(gamma_fn(n / 2.0) / gamma_fn(n), 2.0 * s / n);
}

ProblemParams ProblemParams::make(double lambda, double q, const FractionalParams& frac) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("lambda must be >= 0");
  if (!(q >= 1.0)) throw std::invalid_argument("q must be >= 1");
  if (!(q < frac.crit_exp - 1.0)) throw std::invalid_argument("q must be < 2*_s - 1");
  return ProblemParams{lambda, q, frac};
}

bool AlphaRequirement::admits(double a) const {
  if (is_interval()) return a > lo && a < hi;
  return std::abs(a - alpha) <= 1e-12 * std::max(1.0, std::abs(alpha));
}

const char* to_string(AlphaRegime r) {
  switch (r) {
    case AlphaRegime::free: return "i";
    case AlphaRegime::low_dim: return "ii";
    case AlphaRegime::high_dim: return "iii";
  }
  return "?";
}

AlphaRequirement required_alpha(const ProblemParams& pp) {
  const int n = pp.frac.dim;
  const double s = pp.frac.s, q = pp.q;
  const double upper = (n + 2.0 * s) / (n - 2.0 * s);
  const double split = (6.0 * s - n) / (n - 2.0 * s);
  const double fixed = n - (n - 2.0 * s) * (q + 1.0) / 2.0;
  AlphaRequirement r;
  if (n == 2 || n == 3) {
    if (q > 1.0 && q <= split) {
      r.regime = AlphaRegime::free;
      r.alpha = std::numeric_limits<double>::quiet_NaN();
      r.lo = 0.0;
      r.hi = n;
      return r;
    }
    if (q > split && q < upper) {
      r.regime = AlphaRegime::low_dim;
      r.alpha = r.lo = r.hi = fixed;
      return r;
    }
  } else if (n >= 4 && q >= 1.0 && q < upper) {
    r.regime = AlphaRegime::high_dim;
    r.alpha = r.lo = r.hi = fixed;
    return r;
  }
  std::ostringstream os;
  os << "no growth regime matches N=" << n << ", s=" << s << ", q=" << q;
  throw std::invalid_argument(os.str());
}

WeightModel::WeightModel(double q_max, double background, std::vector<WeightMaximum> maxima)
    : q_max_(q_max), background_(background), maxima_(std::move(maxima)) {
  if (!(q_max_ > 0.0) || !std::isfinite(q_max_)) throw std::invalid_argument("weight: Q_M must be > 0");
  if (!(background_ > 0.0) || background_ > q_max_)
    throw std::invalid_argument("weight: background must lie in (0, Q_M]");
  for (const auto& m : maxima_) {
    if (!(m.gamma > 0.0)) throw std::invalid_argument("weight: gamma must be > 0");
    if (!(m.r_cut > 0.0)) throw std::invalid_argument("weight: r_cut must be > 0");
  }
}

WeightModel WeightModel::constant(double q_max) { return WeightModel(q_max, q_max, {}); }

double WeightModel::decay_coefficient(std::size_t i) const {
  const auto& m = maxima_.at(i);
  return 2.0 * (q_max_ - background_) / std::pow(m.r_cut, m.gamma);
}

double WeightModel::operator()(const Point& x) const {
  if (is_constant()) return q_max_;
  double deficit = std::numeric_limits<double>::infinity();
  for (const auto& m : maxima_) {
    const double r = (x - m.location).norm();
    const double u = std::pow(std::min(r / m.r_cut, 1.0), m.gamma);
    deficit = std::min(deficit, (q_max_ - background_) * (1.0 - (1.0 - u) * (1.0 - u)));
  }
  return q_max_ - deficit;
}

Vector<double> WeightModel::on_grid(const EigenBasis& basis) const {
  Vector<double> out(basis.grid_size());
  if (is_constant()) {
    out.setConstant(q_max_);
    return out;
  }
  for (Eigen::Index g = 0; g < out.size(); ++g) out(g) = (*this)(basis.node(g));
  return out;
}

double WeightModel::r0(const MixedRectangleDomain& domain) const {
  if (maxima_.size() < 2) {
    double shortest = std::numeric_limits<double>::infinity();
    for (double l : domain.lengths()) shortest = std::min(shortest, l);
    return 0.45 * shortest;
  }
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < maxima_.size(); ++i)
    for (std::size_t j = i + 1; j < maxima_.size(); ++j)
      best = std::min(best, (maxima_[i].location - maxima_[j].location).norm());
  return 0.45 * best;
}

std::vector<std::string> WeightModel::diagnostics(const MixedRectangleDomain& domain, std::optional<double> alpha) const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < maxima_.size(); ++i) {
    const auto& m = maxima_[i];
    std::ostringstream key;
    key << "weight.max" << i;
    if (m.location.size() != domain.dim()) {
      out.push_back(key.str() + ": location has wrong dimension");
      continue;
    }
    if (!domain.contains(m.location, 1e-12)) {
      out.push_back(key.str() + ": maximum lies outside the domain");
      continue;
    }
    if (domain.distance_to_dirichlet(m.location) <= 1e-12) {
      out.push_back(key.str() + ": maximum lies on a Dirichlet face; maxima of Q must sit on the Neumann boundary");
      continue;
    }
    if (!domain.on_neumann_boundary(m.location, 1e-12))
      out.push_back(key.str() + ": maximum must lie on a Neumann face");
    if (alpha && !(m.gamma > *alpha)) {
      std::ostringstream os;
      os << key.str() << ": gamma = " << m.gamma << " must exceed alpha = " << *alpha;
      out.push_back(os.str());
    }
  }
  for (std::size_t i = 0; i < maxima_.size(); ++i)
    for (std::size_t j = i + 1; j < maxima_.size(); ++j)
      if ((maxima_[i].location - maxima_[j].location).norm() <= 1e-12)
        out.push_back("weight: maxima " + std::to_string(i) + " and " + std::to_string(j) + " coincide");
  return out;
}

void WeightModel::validate(const MixedRectangleDomain& domain, std::optional<double> alpha) const {
  const auto d = diagnostics(domain, alpha);
  if (!d.empty()) throw std::invalid_argument(d.front());
}

EnergyFunctional::EnergyFunctional(const ProblemParams& pp, const WeightModel& weight, const EigenBasis& basis)
    : pp_(pp), basis_(&basis), lambda_s_(fractional_eigenvalues(basis, pp.frac.s)), weight_(weight.on_grid(basis)),
      q_max_(weight.q_max()) {}

EnergyParts EnergyFunctional::parts_grid(const SpectralField& u, const Vector<double>& values) const {
  EnergyParts e;
  e.hs2 = (lambda_s_.array() * u.coeffs.array().square()).sum();
  const auto w = basis_->grid_weights().array();
  const auto a = values.array().abs();
  e.crit = (w * weight_.array() * a.pow(pp_.p())).sum();
  e.sub = (w * a.pow(pp_.q + 1.0)).sum();
  return e;
}

EnergyParts EnergyFunctional::parts(const SpectralField& u) const { return parts_grid(u, synthesize(u, *basis_)); }

double EnergyFunctional::energy(const EnergyParts& e) const {
  return 0.5 * e.hs2 - e.crit / pp_.p() - pp_.lambda * e.sub / (pp_.q + 1.0);
}

double EnergyFunctional::energy(const SpectralField& u) const { return energy(parts(u)); }

double EnergyFunctional::energy_and_gradient(const Vector<double>& coeffs, Vector<double>& grad) const {
  const SpectralField u(coeffs);
  const Vector<double> values = synthesize(u, *basis_);
  const EnergyParts e = parts_grid(u, values);
  const auto a = values.array().abs();
  const Vector<double> nonlinear =
      (weight_.array() * a.pow(pp_.p() - 2.0) * values.array() + pp_.lambda * a.pow(pp_.q - 1.0) * values.array())
          .matrix();
  grad = lambda_s_.cwiseProduct(coeffs) - analyze(nonlinear, *basis_).coeffs;
  return energy(e);
}

Gradient EnergyFunctional::gradient(const SpectralField& u) const {
  Gradient g;
  Vector<double> dual;
  energy_and_gradient(u.coeffs, dual);
  g.preconditioned = SpectralField(dual.cwiseQuotient(lambda_s_));
  g.norm = std::sqrt(dual.dot(g.preconditioned.coeffs));
  g.dual = SpectralField(std::move(dual));
  return g;
}

double energy(const SpectralField& u, const ProblemParams& pp, const WeightModel& weight, const EigenBasis& basis) {
  return EnergyFunctional(pp, weight, basis).energy(u);
}

Gradient gradient(const SpectralField& u, const ProblemParams& pp, const WeightModel& weight, const EigenBasis& basis) {
  return EnergyFunctional(pp, weight, basis).gradient(u);
}

EnergyResolution energy_resolution(const SpectralField& u, const ProblemParams& pp, const WeightModel& weight,
                                   const EigenBasis& basis) {
  EnergyResolution r;
  r.value = energy(u, pp, weight, basis);
  const int fine_q = (3 * basis.quad_points_per_axis() + 1) / 2;
  const EigenBasis fine = build_basis(basis.domain(), basis.modes_per_axis(), fine_q);
  r.refined = energy(u, pp, weight, fine);
  const double scale = std::max(std::abs(r.refined), std::numeric_limits<double>::min());
  r.rel_change = std::abs(r.value - r.refined) / scale;
  r.under_resolved = r.rel_change > 1e-6;
  return r;
}

const char* to_string(SobolevRegime r) { return r == SobolevRegime::equal ? "C=" : "C<"; }

double rayleigh_quotient(const SpectralField& u, const FractionalParams& params, const EigenBasis& basis) {
  const double h = hs_norm(u, params, basis);
  const double l = lp_norm(u, params.crit_exp, basis);
  if (!(l > 0.0)) throw std::invalid_argument("rayleigh_quotient: field vanishes");
  return h * h / (l * l);
}

namespace {

struct SeedRun {
  double value = std::numeric_limits<double>::infinity();
  SpectralField field;
  bool converged = false;
};

SeedRun minimize_rayleigh(const SpectralField& seed, const FractionalParams& params, const EigenBasis& basis,
                          int budget) {
  const double p = params.crit_exp;
  const Vector<double> lam = fractional_eigenvalues(basis, params.s);
  auto eval = [&](const Vector<double>& a, Vector<double>& grad) {
    const double hs2 = (lam.array() * a.array().square()).sum();
    const Vector<double> values = synthesize(SpectralField(a), basis);
    const auto abs_v = values.array().abs();
    const double lp = (basis.grid_weights().array() * abs_v.pow(p)).sum();
    const Vector<double> nl = (abs_v.pow(p - 2.0) * values.array()).matrix();
    grad = 2.0 * lam.cwiseProduct(a) / hs2 - 2.0 * analyze(nl, basis).coeffs / lp;
    return std::log(hs2) - (2.0 / p) * std::log(lp);
  };
  auto retract = [&](Vector<double>& a) {
    const double hs = std::sqrt((lam.array() * a.array().square()).sum());
    if (!(hs > 0.0) || !std::isfinite(hs)) return false;
    a /= hs;
    return true;
  };
  auto observe = [](const Vector<double>&, double, double) { return true; };
  Vector<double> x0 = seed.coeffs;
  SeedRun run;
  if (!retract(x0)) return run;
  DescentOptions opt;
  opt.budget = budget;
  opt.grad_tol = 1e-9;
  const DescentResult res = preconditioned_descent(std::move(x0), lam, eval, retract, observe, opt);
  run.value = std::exp(res.value);
  run.field = SpectralField(res.x);
  run.converged = res.converged || (res.stalled && res.grad_norm < 1e-6);
  return run;
}

}  // namespace

ThresholdReport estimate_sigma_d_constant(const EigenBasis& basis, const FractionalParams& params, int restarts,
                                          int budget, unsigned threads) {
  if (restarts < 1) throw std::invalid_argument("estimate_sigma_d_constant: restarts must be >= 1");
  const auto& domain = basis.domain();
  std::vector<SpectralField> seeds;
  seeds.push_back(SpectralField::unit(basis.size(), 0));
  std::vector<Point> centers = domain.neumann_vertices();
  for (const Face& f : domain.neumann_faces()) centers.push_back(domain.face_midpoint(f));
  for (const Point& c : centers) {
    if (static_cast<int>(seeds.size()) >= restarts) break;
    const double rho = default_rho(domain, c);
    if (!(rho > 0.0)) continue;
    seeds.push_back(instanton_trace(TruncatedInstanton{c, rho / 8.0, rho, params.s}, basis));
  }
  for (Eigen::Index j = 1; static_cast<int>(seeds.size()) < restarts && j < basis.size(); ++j)
    seeds.push_back(SpectralField::unit(basis.size(), j));
  seeds.resize(std::min<std::size_t>(seeds.size(), static_cast<std::size_t>(restarts)));

  std::vector<SeedRun> runs(seeds.size());
  parallel_for(seeds.size(), threads, [&](std::size_t i) { runs[i] = minimize_rayleigh(seeds[i], params, basis, budget); });

  ThresholdReport rep;
  rep.s = params.s;
  rep.dim = params.dim;
  rep.s_sN = params.sobolev_sN;
  rep.half_bound = params.half_space_constant();
  std::size_t best = 0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    rep.seed_values.push_back(runs[i].value);
    if (runs[i].value < runs[best].value) best = i;
  }
  rep.raw_estimate = runs[best].value;
  rep.minimizer = runs[best].field;
  rep.stale = !runs[best].converged;
  rep.regime = rep.raw_estimate < rep.half_bound ? SobolevRegime::below : SobolevRegime::equal;
  rep.s_sigma_d = std::min(rep.raw_estimate, rep.half_bound);
  rep.c_star = threshold_c_star(rep.s_sigma_d, params, 1.0);
  return rep;
}

double threshold_c_star(double s_sigma_d, const FractionalParams& params, double q_max) {
  const double s = params.s, n = params.dim;
  return (s / n) * std::pow(s_sigma_d, n / (2.0 * s)) / std::pow(q_max, (n - 2.0 * s) / (2.0 * s));
}

double threshold_c_star(const ThresholdReport& report, const WeightModel& weight) {
  FractionalParams p;
  p.s = report.s;
  p.dim = report.dim;
  return threshold_c_star(report.s_sigma_d, p, weight.q_max());
}

}  // namespace fraclab
