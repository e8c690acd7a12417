#pragma once
// Minimization of the energy on the Nehari manifold
//   N = { u != 0 : ||u||^2 = int Q|u|^{2*_s} + lambda int |u|^{q+1} },
// localized by the barycenter map around each maximum of the weight.

#include "fraclab/functionals.hpp"
#include "fraclab/instanton_lab.hpp"

#include <string>
#include <vector>

namespace fraclab {

struct NehariPoint {
  SpectralField field;
  double t_scale = 1.0;
  double constraint_residual = 0.0;  // ||u||^2 - int Q|u|^p - lambda int |u|^{q+1} after scaling
};

/// Scales u onto the Nehari manifold. Throws std::invalid_argument for u = 0 and
/// std::domain_error when no positive scaling exists (q = 1, lambda too large).
NehariPoint nehari_project(const SpectralField& u, const EnergyFunctional& functional);
NehariPoint nehari_project(const SpectralField& u, const ProblemParams& pp, const WeightModel& weight,
                           const EigenBasis& basis);

/// int x |u|^{2*_s} / int |u|^{2*_s}.
Point barycenter(const SpectralField& u, const FractionalParams& params, const EigenBasis& basis);
Point barycenter_grid(const Vector<double>& values, double p, const EigenBasis& basis);

enum class SolveStatus { converged, budget_exhausted, stalled, basin_escape };
const char* to_string(SolveStatus s);

struct IterationRecord {
  int iteration = 0;
  double energy = 0.0;
  double grad_norm = 0.0;
  double hs2 = 0.0;
  double step = 0.0;
  double basin_distance = 0.0;
};

struct SolutionRecord {
  SpectralField field;
  double energy = 0.0;
  double grad_norm = 0.0;
  Point barycenter;
  int basin_index = -1;
  double basin_distance = 0.0;  // |barycenter - a^basin|
  double r0 = 0.0;
  double positivity_min = 0.0;
  double seed_sup = 0.0;  // sup of the fibering map through the seed
  double hs_norm = 0.0;
  SolveStatus status = SolveStatus::budget_exhausted;
  bool coercive = true;  // J >= (1/2 - 1/(q+1)) ||u||^2 held along the run
  int iterations = 0;
  std::vector<IterationRecord> history;

  bool converged() const { return status == SolveStatus::converged; }
};

struct SolverOptions {
  int budget = 5000;
  double grad_tol = 1e-8;
  bool positivity_projection = true;  // replace u by |u| on the grid after each step
  double r0 = 0.0;                    // 0 = WeightModel::r0
};

/// Preconditioned gradient descent on the Nehari manifold with Armijo
/// backtracking. basin < 0 disables the barycenter localization.
/// Throws std::invalid_argument if the projected seed starts outside its basin.
SolutionRecord minimize_on_nehari(const SpectralField& seed, int basin, const EnergyFunctional& functional,
                                  const WeightModel& weight, const SolverOptions& opt = {});

/// Truncated instanton of scale eps centred at maximum i, rho from default_rho.
TruncatedInstanton basin_seed(const WeightModel& weight, int basin, double eps, const MixedRectangleDomain& domain,
                              double s);

struct MultiplicityResult {
  std::vector<SolutionRecord> records;
  bool partial = false;
  bool distinct = true;
  double min_barycenter_separation = 0.0;
  double min_hs_distance = 0.0;
};

/// One minimization per maximum of the weight, seeded at the projected
/// instanton; basins run on up to `threads` workers.
MultiplicityResult multiplicity_search(const EnergyFunctional& functional, const WeightModel& weight, double eps_seed,
                                       const SolverOptions& opt = {}, unsigned threads = 0);

struct LambdaTildeResult {
  double lambda_tilde = 0.0;  // largest lambda found with all basins converged below c_star
  double first_failure = 0.0; // smallest lambda found failing (0 if none up to lambda_max)
  int evaluations = 0;
};

/// Doubles lambda from lambda_start until some basin escapes or reaches
/// energy >= c_star, then bisects (geometric mean) to relative 10%.
LambdaTildeResult estimate_lambda_tilde(const ProblemParams& pp, const WeightModel& weight, const EigenBasis& basis,
                                        double eps_seed, double c_star, double lambda_start, double lambda_max,
                                        const SolverOptions& opt = {}, unsigned threads = 0);

struct Plateau {
  int first = 0;
  int last = 0;
  double level = 0.0;
};

struct PsReport {
  std::vector<double> energies;
  std::vector<double> grad_norms;
  std::vector<Plateau> plateaus;  // stretches with energy above c_star and relative change < 1e-6 per step
  double final_energy = 0.0;
  double final_grad_norm = 0.0;
  bool converged_below_threshold = false;
};

/// Throws std::invalid_argument on an empty history.
PsReport ps_diagnostics(const std::vector<IterationRecord>& history, double c_star, double grad_tol = 1e-8,
                        int min_plateau = 10);

}  // namespace fraclab
