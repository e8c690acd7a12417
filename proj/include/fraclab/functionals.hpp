#pragma once
// Problem data for the weighted critical problem
//   (-Delta)^s u = Q(x) |u|^{2*_s - 2} u + lambda |u|^{q-1} u   in Omega,
// with mixed boundary data, and the associated energy, constants and threshold.

#include "fraclab/spectral_core.hpp"

#include <optional>
#include <string>
#include <vector>

namespace fraclab {

/// 2N/(N-2s). Throws unless N > 2s.
double critical_exponent(int dim, double s);

/// Whole-space fractional Sobolev constant
/// 2^{2s} pi^s Gamma((N+2s)/2)/Gamma((N-2s)/2) (Gamma(N/2)/Gamma(N))^{2s/N}.
double sobolev_constant(int dim, double s);

struct ProblemParams {
  double lambda = 0.0;
  double q = 1.0;
  FractionalParams frac;

  /// Validates 1 <= q < 2*_s - 1 and lambda >= 0.
  static ProblemParams make(double lambda, double q, const FractionalParams& frac);
  double p() const { return frac.crit_exp; }
};

enum class AlphaRegime {
  free,      // N = 2,3 and 1 < q <= (6s-N)/(N-2s): any alpha in (0, N)
  low_dim,   // N = 2,3 and (6s-N)/(N-2s) < q < (N+2s)/(N-2s)
  high_dim,  // N >= 4 and 1 <= q < (N+2s)/(N-2s)
};

struct AlphaRequirement {
  AlphaRegime regime = AlphaRegime::free;
  double alpha = 0.0;  // fixed value, or NaN in the free regime
  double lo = 0.0;     // admissible interval, (lo, hi) open in the free regime
  double hi = 0.0;

  bool is_interval() const { return regime == AlphaRegime::free; }
  /// True iff a given alpha satisfies the requirement.
  bool admits(double a) const;
};

const char* to_string(AlphaRegime r);

/// Growth exponent alpha the weight must exceed near its maxima.
/// Throws std::invalid_argument when (N, s, q) matches none of the cases.
AlphaRequirement required_alpha(const ProblemParams& pp);

/// One strict maximum of the weight.
struct WeightMaximum {
  Point location;
  double gamma = 2.0;  // growth exponent of Q_M - Q near the maximum
  double r_cut = 0.5;  // Q reaches the background value at distance r_cut
};

/// Q(x) = Q_M - min_i d_i(|x - a^i|), d_i(r) = (Q_M - b)(1 - (1 - min(r/r_cut_i, 1)^gamma_i)^2).
/// Q equals Q_M exactly at each a^i, grows like 2(Q_M - b)(r/r_cut)^gamma near it and
/// is C^1 with value b beyond r_cut. A model without maxima is the constant Q_M.
class WeightModel {
 public:
  WeightModel(double q_max, double background, std::vector<WeightMaximum> maxima);
  static WeightModel constant(double q_max);

  double q_max() const { return q_max_; }
  double background() const { return background_; }
  const std::vector<WeightMaximum>& maxima() const { return maxima_; }
  bool is_constant() const { return maxima_.empty() || background_ == q_max_; }
  /// c_i in Q_M - Q(x) ~ c_i |x - a^i|^gamma_i.
  double decay_coefficient(std::size_t i) const;

  double operator()(const Point& x) const;
  Vector<double> on_grid(const EigenBasis& basis) const;

  /// Basin radius: 0.45 times the smallest pairwise distance between maxima;
  /// for a single maximum 0.45 times the shortest domain edge.
  double r0(const MixedRectangleDomain& domain) const;

  /// Human-readable violations of the weight hypotheses for a given alpha
  /// (empty iff valid): maxima on Neumann faces away from Dirichlet faces,
  /// gamma_i > alpha, positive background, disjoint basins.
  std::vector<std::string> diagnostics(const MixedRectangleDomain& domain, std::optional<double> alpha) const;
  /// Throws std::invalid_argument carrying the first diagnostic.
  void validate(const MixedRectangleDomain& domain, std::optional<double> alpha) const;

 private:
  double q_max_;
  double background_;
  std::vector<WeightMaximum> maxima_;
};

/// Pieces of the energy for one field.
struct EnergyParts {
  double hs2 = 0.0;   // ||u||^2_{H^s}
  double crit = 0.0;  // int Q |u|^{2*_s}
  double sub = 0.0;   // int |u|^{q+1}
};

struct Gradient {
  SpectralField dual;            // g_j = a_j lambda_j^s - <f(u), phi_j>
  SpectralField preconditioned;  // g_j / lambda_j^s
  double norm = 0.0;             // sqrt(sum g_j^2 / lambda_j^s)
};

/// Evaluates I_lambda(u) = ||u||^2/2 - int Q|u|^p/p - lambda int |u|^{q+1}/(q+1)
/// and its gradient on a fixed basis. Holds a reference to the basis.
class EnergyFunctional {
 public:
  EnergyFunctional(const ProblemParams& pp, const WeightModel& weight, const EigenBasis& basis);

  const ProblemParams& params() const { return pp_; }
  const EigenBasis& basis() const { return *basis_; }
  const Vector<double>& lambda_s() const { return lambda_s_; }
  const Vector<double>& weight_grid() const { return weight_; }
  double q_max() const { return q_max_; }

  EnergyParts parts(const SpectralField& u) const;
  EnergyParts parts_grid(const SpectralField& u, const Vector<double>& values) const;
  double energy(const EnergyParts& parts) const;
  double energy(const SpectralField& u) const;
  Gradient gradient(const SpectralField& u) const;
  /// Energy and L2-dual gradient in one pass.
  double energy_and_gradient(const Vector<double>& coeffs, Vector<double>& grad) const;

 private:
  ProblemParams pp_;
  const EigenBasis* basis_;
  Vector<double> lambda_s_;
  Vector<double> weight_;
  double q_max_;
};

double energy(const SpectralField& u, const ProblemParams& pp, const WeightModel& weight, const EigenBasis& basis);
Gradient gradient(const SpectralField& u, const ProblemParams& pp, const WeightModel& weight, const EigenBasis& basis);

struct EnergyResolution {
  double value = 0.0;
  double refined = 0.0;
  double rel_change = 0.0;
  bool under_resolved = false;  // rel_change > 1e-6
};

/// Re-evaluates the energy on a grid with 1.5x the quadrature points per axis.
EnergyResolution energy_resolution(const SpectralField& u, const ProblemParams& pp, const WeightModel& weight,
                                   const EigenBasis& basis);

enum class SobolevRegime { equal, below };  // C_= and C_<
const char* to_string(SobolevRegime r);

struct ThresholdReport {
  double s_sigma_d = 0.0;    // min(raw_estimate, half_bound)
  double raw_estimate = 0.0; // discrete Rayleigh infimum
  double s_sN = 0.0;
  double half_bound = 0.0;   // 2^{-2s/N} S(s,N)
  SobolevRegime regime = SobolevRegime::equal;
  double c_star = 0.0;       // threshold for Q_M = 1
  double s = 0.0;
  int dim = 0;
  SpectralField minimizer;
  std::vector<double> seed_values;
  bool stale = false;        // best seed hit its iteration budget
};

/// Rayleigh quotient ||u||^2_{H^s} / ||u||^2_{L^{2*_s}}.
double rayleigh_quotient(const SpectralField& u, const FractionalParams& params, const EigenBasis& basis);

/// Multi-start minimization of the Rayleigh quotient. Seeds in order: the
/// lowest mode, truncated instanton traces at the all-Neumann vertices and at
/// each Neumann face midpoint, then further modes. Seeds run concurrently on up to `threads` workers
/// (0 = hardware concurrency); the best value wins, ties by seed index.
ThresholdReport estimate_sigma_d_constant(const EigenBasis& basis, const FractionalParams& params, int restarts,
                                          int budget = 3000, unsigned threads = 0);

/// (s/N) S(Sigma_D)^{N/2s} / Q_M^{(N-2s)/2s}.
double threshold_c_star(const ThresholdReport& report, const WeightModel& weight);
double threshold_c_star(double s_sigma_d, const FractionalParams& params, double q_max);

}  // namespace fraclab
