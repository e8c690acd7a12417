#include "fraclab/experiments.hpp"

#include "fraclab/extension_kernel.hpp"
#include "fraclab/instanton_lab.hpp"
#include "fraclab/nehari_solver.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>

namespace fraclab {

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12e", x);
  return buf;
}

namespace {

std::string hash_hex(std::uint64_t h) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

std::string provenance(std::uint64_t h) { return std::string("# fraclab ") + kVersion + " config-hash " + hash_hex(h); }

}  // namespace

CsvWriter::CsvWriter(const std::string& path, std::uint64_t config_hash, const std::vector<std::string>& columns)
    : out_(path, std::ios::binary), path_(path), columns_(columns.size()) {
  if (!out_) throw std::runtime_error("cannot write '" + path + "'");
  out_ << provenance(config_hash) << "\n";
  for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
  out_ << "\n";
}

CsvWriter& CsvWriter::cell(double x) {
  row_.push_back(format_number(x));
  return *this;
}

CsvWriter& CsvWriter::cell(long long x) {
  row_.push_back(std::to_string(x));
  return *this;
}

CsvWriter& CsvWriter::cell(const std::string& x) {
  row_.push_back(x);
  return *this;
}

void CsvWriter::end_row() {
  if (row_.size() != columns_) throw std::logic_error("csv row width mismatch in " + path_);
  for (std::size_t i = 0; i < row_.size(); ++i) out_ << (i ? "," : "") << row_[i];
  out_ << "\n";
  row_.clear();
}

void write_coefficients(const std::string& path, const std::string& descriptor, std::uint64_t config_hash,
                        const Vector<double>& coeffs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << provenance(config_hash) << "\n# basis " << descriptor << "\n# count " << coeffs.size() << "\n";
  for (Eigen::Index j = 0; j < coeffs.size(); ++j) out << format_number(coeffs(j)) << "\n";
}

namespace {

struct Context {
  const RunConfig& cfg;
  std::ostream& log;
  std::uint64_t hash;
  std::filesystem::path dir;

  std::string path(const std::string& name) const { return (dir / name).string(); }
  void note(const std::string& msg) const {
    if (cfg.verbose) log << msg << "\n";
  }
};

EigenBasis make_basis(const RunConfig& cfg) {
  const int quad = cfg.quad > 0 ? cfg.quad : default_quad_points(cfg.modes);
  return build_basis(make_domain(cfg), cfg.modes, quad);
}

Point default_center(const RunConfig& cfg, const MixedRectangleDomain& domain) {
  if (!cfg.center.empty()) return Eigen::Map<const Vector<double>>(cfg.center.data(), cfg.dim);
  if (!cfg.maxima.empty()) return Eigen::Map<const Vector<double>>(cfg.maxima[0].data(), cfg.dim);
  Point best;
  double best_d = -1.0;
  for (const Face& f : domain.neumann_faces()) {
    const Point m = domain.face_midpoint(f);
    const double d = domain.distance_to_dirichlet(m);
    if (d > best_d + 1e-12) {
      best_d = d;
      best = m;
    }
  }
  return best;
}

TruncatedInstanton make_instanton(const RunConfig& cfg, const MixedRectangleDomain& domain) {
  TruncatedInstanton inst;
  inst.center = default_center(cfg, domain);
  inst.rho = cfg.rho > 0.0 ? cfg.rho : default_rho(domain, inst.center);
  inst.s = cfg.s;
  inst.eps = cfg.eps_seed > 0.0 ? cfg.eps_seed : inst.rho / 8.0;
  return inst;
}

std::vector<double> eps_list(const RunConfig& cfg, const TruncatedInstanton& inst) {
  return cfg.eps.empty() ? eps_sweep(inst.rho) : cfg.eps;
}

ThresholdReport threshold_report(const RunConfig& cfg, const EigenBasis& basis, const FractionalParams& frac) {
  if (cfg.estimate_sigma_d) return estimate_sigma_d_constant(basis, frac, cfg.restarts, cfg.budget, cfg.threads);
  ThresholdReport r;
  r.s = frac.s;
  r.dim = frac.dim;
  r.s_sN = frac.sobolev_sN;
  r.half_bound = frac.half_space_constant();
  r.raw_estimate = std::numeric_limits<double>::quiet_NaN();
  r.s_sigma_d = r.half_bound;
  r.regime = SobolevRegime::equal;
  r.c_star = threshold_c_star(r.s_sigma_d, frac, 1.0);
  return r;
}

int run_eigen(const Context& ctx) {
  const EigenBasis basis = make_basis(ctx.cfg);
  const FractionalParams frac = make_fractional(ctx.cfg);
  std::vector<std::string> cols{"mode"};
  for (int a = 0; a < basis.dim(); ++a) cols.push_back("k" + std::to_string(a));
  cols.insert(cols.end(), {"lambda", "lambda_s"});
  CsvWriter csv(ctx.path("eigen.csv"), ctx.hash, cols);
  const Eigen::Index n = std::min<Eigen::Index>(ctx.cfg.count, basis.size());
  for (Eigen::Index j = 0; j < n; ++j) {
    csv.cell(static_cast<long long>(j));
    for (int k : basis.mode_index(j)) csv.cell(k);
    csv.cell(basis.eigenvalues()(j)).cell(std::pow(basis.eigenvalues()(j), frac.s));
    csv.end_row();
  }
  CsvWriter summary(ctx.path("eigen_summary.csv"), ctx.hash,
                    {"modes_per_axis", "quad_points_per_axis", "size", "grid_size", "orthonormality_defect",
                     "first_fractional_eigenvalue"});
  summary.cell(basis.modes_per_axis()).cell(basis.quad_points_per_axis()).cell(static_cast<long long>(basis.size()));
  summary.cell(static_cast<long long>(basis.grid_size()));
  summary.cell(basis.orthonormality_defect()).cell(first_fractional_eigenvalue(basis, frac));
  summary.end_row();
  return kExitOk;
}

int run_isometry(const Context& ctx) {
  const EigenBasis basis = make_basis(ctx.cfg);
  const FractionalParams frac = make_fractional(ctx.cfg);
  CsvWriter csv(ctx.path("isometry.csv"), ctx.hash,
                {"mode", "lambda", "lambda_s", "extension_energy", "rel_error", "status"});
  int code = kExitOk;
  const Eigen::Index n = std::min<Eigen::Index>(ctx.cfg.count, basis.size());
  for (Eigen::Index j = 0; j < n; ++j) {
    const double lam = basis.eigenvalues()(j);
    const double target = std::pow(lam, frac.s);
    std::string status = "ok";
    double e = std::numeric_limits<double>::quiet_NaN();
    try {
      e = mode_extension_energy(lam, frac);
    } catch (const std::runtime_error&) {
      status = "not_converged";
    }
    const double rel = std::abs(e - target) / target;
    if (status == "ok" && !(rel < 1e-6)) status = "tolerance";
    if (status != "ok") code = kExitPartial;
    csv.cell(static_cast<long long>(j)).cell(lam).cell(target).cell(e).cell(rel).cell(status);
    csv.end_row();
  }
  return code;
}

int run_sobolev(const Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  CsvWriter csv(ctx.path("sobolev.csv"), ctx.hash, {"dim", "s", "crit_exp", "ks", "sobolev_sN", "half_bound"});
  for (int n : cfg.dim_list)
    for (double s : cfg.s_list) {
      const FractionalParams fp = FractionalParams::make(s, n);
      csv.cell(n).cell(s).cell(fp.crit_exp).cell(fp.ks).cell(fp.sobolev_sN).cell(fp.half_space_constant());
      csv.end_row();
    }
  if (!cfg.estimate_sigma_d) return kExitOk;
  const EigenBasis basis = make_basis(cfg);
  const FractionalParams frac = make_fractional(cfg);
  const ThresholdReport rep = threshold_report(cfg, basis, frac);
  const WeightModel weight = make_weight(cfg);
  CsvWriter th(ctx.path("threshold.csv"), ctx.hash,
               {"dim", "s", "modes", "raw_estimate", "s_sigma_d", "half_bound", "sobolev_sN", "regime", "q_max",
                "c_star", "stale"});
  th.cell(frac.dim).cell(frac.s).cell(cfg.modes).cell(rep.raw_estimate).cell(rep.s_sigma_d).cell(rep.half_bound);
  th.cell(rep.s_sN).cell(std::string(to_string(rep.regime))).cell(weight.q_max()).cell(threshold_c_star(rep, weight));
  th.cell(std::string(rep.stale ? "true" : "false"));
  th.end_row();
  return rep.stale ? kExitPartial : kExitOk;
}

int run_rates(const Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const MixedRectangleDomain domain = make_domain(cfg);
  const TruncatedInstanton tmpl = make_instanton(cfg, domain);
  const auto eps = eps_list(cfg, tmpl);
  CsvWriter rows(ctx.path("rates.csv"), ctx.hash, {"eps", "p", "value", "theory", "residual"});
  CsvWriter fits(ctx.path("rates_fit.csv"), ctx.hash, {"p", "regime", "slope", "expected_slope", "r2"});
  for (double p : cfg.p_list) {
    const RateFit fit = lp_rate_experiment(p, eps, tmpl, domain, cfg.threads);
    for (const auto& pt : fit.points) {
      rows.cell(pt.eps).cell(p).cell(pt.value).cell(pt.theory).cell(pt.residual);
      rows.end_row();
    }
    const char* regime = fit.regime == RateRegime::subcritical   ? "subcritical"
                         : fit.regime == RateRegime::borderline ? "borderline"
                                                                : "supercritical";
    fits.cell(p).cell(std::string(regime)).cell(fit.slope).cell(fit.expected_slope).cell(fit.r2);
    fits.end_row();
  }
  return kExitOk;
}

int run_fiber(const Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const EigenBasis basis = make_basis(cfg);
  const FractionalParams frac = make_fractional(cfg);
  const WeightModel weight = make_weight(cfg);
  const TruncatedInstanton tmpl = make_instanton(cfg, basis.domain());
  const auto eps = eps_list(cfg, tmpl);
  const ThresholdReport rep = threshold_report(cfg, basis, frac);
  const double c_star = threshold_c_star(rep, weight);
  const std::vector<double> lambdas = cfg.lambda_sweep.empty() ? std::vector<double>{cfg.lambda} : cfg.lambda_sweep;
  const AlphaRequirement req = required_alpha(make_problem(cfg, 0.0));

  CsvWriter csv(ctx.path("fiber.csv"), ctx.hash,
                {"eps", "lambda", "t_max", "t0_closed", "sup_value", "threshold", "margin", "beta_eps", "g_at_root"});
  std::vector<FiberingReport> all;
  int code = kExitOk;
  for (double e : eps) {
    TruncatedInstanton inst = tmpl;
    inst.eps = e;
    for (double lambda : lambdas) {
      try {
        const FiberingReport r = sup_vs_threshold(inst, make_problem(cfg, lambda), weight, basis, c_star);
        all.push_back(r);
        csv.cell(r.eps).cell(r.lambda).cell(r.t_max).cell(r.t0_closed).cell(r.sup_value).cell(r.threshold);
        csv.cell(r.margin).cell(r.beta_eps).cell(r.g_at_root);
        csv.end_row();
      } catch (const std::domain_error& err) {
        ctx.log << "fiber: eps=" << format_number(e) << " lambda=" << format_number(lambda) << ": " << err.what()
                << "\n";
        code = kExitPartial;
      }
    }
  }
  CsvWriter summary(ctx.path("fiber_summary.csv"), ctx.hash,
                    {"eps", "regime", "alpha", "threshold", "lambda_crossover"});
  for (double e : eps) {
    TruncatedInstanton inst = tmpl;
    inst.eps = e;
    std::string crossover = "none";
    if (const auto lc = lambda_crossover(inst, make_problem(cfg, 0.0), weight, basis, c_star, cfg.lambda_min,
                                         cfg.lambda_max))
      crossover = format_number(*lc);
    summary.cell(e).cell(std::string(to_string(req.regime)));
    summary.cell(req.is_interval() ? (cfg.alpha ? *cfg.alpha : std::numeric_limits<double>::quiet_NaN()) : req.alpha);
    summary.cell(c_star).cell(crossover);
    summary.end_row();
  }
  if (!all.empty()) {
    const FiberBracket b = fit_fiber_bracket(all, cfg.q);
    CsvWriter br(ctx.path("fiber_bracket.csv"), ctx.hash, {"q", "c0", "t2"});
    br.cell(cfg.q).cell(b.c0).cell(b.t2);
    br.end_row();
  }
  return code;
}

void write_record_row(CsvWriter& csv, const SolutionRecord& r, const RunConfig& cfg, double c_star) {
  csv.cell(r.basin_index).cell(cfg.lambda).cell(cfg.q).cell(r.energy).cell(r.grad_norm);
  for (int a = 0; a < cfg.dim; ++a) csv.cell(r.barycenter(a));
  csv.cell(r.positivity_min).cell(c_star).cell(r.seed_sup).cell(r.iterations).cell(std::string(to_string(r.status)));
  csv.end_row();
}

std::vector<std::string> record_columns(int dim) {
  std::vector<std::string> cols{"basin", "lambda", "q", "energy", "grad_norm"};
  for (int a = 0; a < dim; ++a) cols.push_back("beta_" + std::to_string(a));
  cols.insert(cols.end(), {"positivity_min", "c_star", "seed_sup", "iterations", "status"});
  return cols;
}

void write_history(const std::string& path, std::uint64_t hash, const SolutionRecord& r) {
  CsvWriter h(path, hash, {"iteration", "energy", "grad_norm", "hs2", "step", "basin_distance"});
  for (const auto& it : r.history) {
    h.cell(it.iteration).cell(it.energy).cell(it.grad_norm).cell(it.hs2).cell(it.step).cell(it.basin_distance);
    h.end_row();
  }
}

SolverOptions solver_options(const RunConfig& cfg) {
  SolverOptions opt;
  opt.budget = cfg.budget;
  opt.grad_tol = cfg.grad_tol;
  opt.positivity_projection = cfg.positivity;
  return opt;
}

int run_solve(const Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const EigenBasis basis = make_basis(cfg);
  const FractionalParams frac = make_fractional(cfg);
  const WeightModel weight = make_weight(cfg);
  const ProblemParams pp = make_problem(cfg, cfg.lambda);
  if (pp.q == 1.0 && !(pp.lambda < first_fractional_eigenvalue(basis, frac)))
    throw ConfigError("problem.lambda", "q = 1 requires lambda < lambda_1^s");
  const ThresholdReport rep = threshold_report(cfg, basis, frac);
  const double c_star = threshold_c_star(rep, weight);
  const EnergyFunctional functional(pp, weight, basis);
  const TruncatedInstanton inst = make_instanton(cfg, basis.domain());
  const int basin = weight.maxima().empty() ? -1 : 0;
  const SolutionRecord r = minimize_on_nehari(instanton_trace(inst, basis), basin, functional, weight, solver_options(cfg));
  CsvWriter csv(ctx.path("solution.csv"), ctx.hash, record_columns(cfg.dim));
  write_record_row(csv, r, cfg, c_star);
  write_history(ctx.path("history.csv"), ctx.hash, r);
  write_coefficients(ctx.path("solution_0.txt"), basis.descriptor(), ctx.hash, r.field.coeffs);
  ctx.note("solve: energy " + format_number(r.energy) + " grad " + format_number(r.grad_norm) + " status " +
           to_string(r.status));
  return r.converged() ? kExitOk : kExitPartial;
}

int run_multiplicity(const Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const EigenBasis basis = make_basis(cfg);
  const FractionalParams frac = make_fractional(cfg);
  const WeightModel weight = make_weight(cfg);
  const ProblemParams pp = make_problem(cfg, cfg.lambda);
  if (pp.q == 1.0 && !(pp.lambda < first_fractional_eigenvalue(basis, frac)))
    throw ConfigError("problem.lambda", "q = 1 requires lambda < lambda_1^s");
  const ThresholdReport rep = threshold_report(cfg, basis, frac);
  const double c_star = threshold_c_star(rep, weight);
  const EnergyFunctional functional(pp, weight, basis);
  double eps_seed = cfg.eps_seed;
  if (!(eps_seed > 0.0)) {
    double rho = std::numeric_limits<double>::infinity();
    for (const auto& m : weight.maxima()) rho = std::min(rho, default_rho(basis.domain(), m.location));
    eps_seed = rho / 8.0;
  }
  const MultiplicityResult m = multiplicity_search(functional, weight, eps_seed, solver_options(cfg), cfg.threads);
  CsvWriter csv(ctx.path("multiplicity.csv"), ctx.hash, record_columns(cfg.dim));
  for (std::size_t i = 0; i < m.records.size(); ++i) {
    write_record_row(csv, m.records[i], cfg, c_star);
    write_coefficients(ctx.path("solution_" + std::to_string(i) + ".txt"), basis.descriptor(), ctx.hash,
                       m.records[i].field.coeffs);
  }
  CsvWriter summary(ctx.path("multiplicity_summary.csv"), ctx.hash,
                    {"k", "r0", "distinct", "min_barycenter_separation", "min_hs_distance", "partial"});
  summary.cell(static_cast<long long>(m.records.size())).cell(m.records.front().r0);
  summary.cell(std::string(m.distinct ? "true" : "false")).cell(m.min_barycenter_separation).cell(m.min_hs_distance);
  summary.cell(std::string(m.partial ? "true" : "false"));
  summary.end_row();
  return (m.partial || !m.distinct) ? kExitPartial : kExitOk;
}

}  // namespace

int run(const RunConfig& cfg, std::ostream& log) {
  const auto diagnostics = validate(cfg);
  if (!diagnostics.empty()) {
    for (const auto& d : diagnostics) log << "error: " << d << "\n";
    return kExitValidation;
  }
  std::error_code ec;
  std::filesystem::create_directories(cfg.output_dir, ec);
  if (ec) {
    log << "error: --out = " << cfg.output_dir << ": " << ec.message() << "\n";
    return kExitValidation;
  }
  const Context ctx{cfg, log, config_hash(cfg), std::filesystem::path(cfg.output_dir)};
  try {
    if (cfg.subcommand == "eigen") return run_eigen(ctx);
    if (cfg.subcommand == "isometry") return run_isometry(ctx);
    if (cfg.subcommand == "sobolev") return run_sobolev(ctx);
    if (cfg.subcommand == "rates") return run_rates(ctx);
    if (cfg.subcommand == "fiber") return run_fiber(ctx);
    if (cfg.subcommand == "solve") return run_solve(ctx);
    if (cfg.subcommand == "multiplicity") return run_multiplicity(ctx);
  } catch (const ConfigError& e) {
    log << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    log << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  log << "error: unknown subcommand '" << cfg.subcommand << "'\n";
  return kExitValidation;
}

}  // namespace fraclab
