#pragma once
// Run configuration: flat "key = value" lines grouped under [section] headers.

#include "fraclab/functionals.hpp"
#include "fraclab/spectral_core.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fraclab {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& message)
      : std::runtime_error(key.empty() ? message : key + ": " + message), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"eigen", "isometry", "sobolev", "rates", "fiber", "solve", "multiplicity"};
  return names;
}

struct RunConfig {
  std::string subcommand;

  // [problem]
  int dim = 2;
  double s = 0.75;
  double q = 2.0;
  double lambda = 0.0;
  std::vector<double> lambda_sweep;
  std::optional<double> alpha;

  // [domain]
  std::vector<double> lengths{1.0, 1.0};
  std::vector<std::string> dirichlet{"x0"};

  // [weight]
  double q_max = 1.0;
  double background = 1.0;
  std::vector<std::vector<double>> maxima;
  std::vector<double> gamma{2.0};
  std::vector<double> r_cut{0.5};

  // [numerics]
  int modes = 32;
  int quad = 0;  // 0 = default_quad_points(modes)
  std::vector<double> eps;     // absolute eps values; empty = rho 2^{-3..-8}
  std::vector<double> p_list{2.0, 4.0, 6.0};
  std::vector<double> center;  // instanton center; empty = first weight maximum or first Neumann face midpoint
  double rho = 0.0;            // 0 = default_rho
  double eps_seed = 0.0;       // 0 = rho/8
  int budget = 5000;
  double grad_tol = 1e-8;
  int restarts = 4;
  int count = 20;              // modes listed by eigen/isometry
  std::vector<int> dim_list{2, 3, 4};
  std::vector<double> s_list{0.6, 0.75, 0.9};
  bool estimate_sigma_d = true;
  bool positivity = true;
  double lambda_min = 1e-2;    // crossover search window
  double lambda_max = 1e4;

  // command line
  std::string output_dir = ".";
  unsigned threads = 0;
  bool verbose = false;
};

/// Parses config text into a RunConfig (subcommand and command-line fields
/// untouched). Throws ConfigError naming "section.key" for unknown sections,
/// unknown or duplicate keys and malformed values.
void parse_config(const std::string& text, RunConfig& cfg);
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Canonical "section.key = value" serialization of every parameter.
std::string canonical_text(const RunConfig& cfg);
std::uint64_t fnv1a64(const std::string& bytes);
std::uint64_t config_hash(const RunConfig& cfg);

/// Every violated constraint, each naming key, value and constraint; empty iff valid.
std::vector<std::string> validate(const RunConfig& cfg);

MixedRectangleDomain make_domain(const RunConfig& cfg);
FractionalParams make_fractional(const RunConfig& cfg);
ProblemParams make_problem(const RunConfig& cfg, double lambda);
WeightModel make_weight(const RunConfig& cfg);

}  // namespace fraclab
