#include "fraclab/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace fraclab {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  double x = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
  if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size() || !std::isfinite(x))
    throw ConfigError(key, "expected a number, got '" + v + "'");
  return x;
}

int to_int(const std::string& key, const std::string& v) {
  int x = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
  if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw ConfigError(key, "expected an integer, got '" + v + "'");
  return x;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key, "expected true or false, got '" + v + "'");
}

std::vector<double> to_doubles(const std::string& key, const std::string& v) {
  std::vector<double> out;
  if (trim(v).empty()) return out;
  for (const auto& item : split(v, ',')) out.push_back(to_double(key, item));
  return out;
}

std::vector<int> to_ints(const std::string& key, const std::string& v) {
  std::vector<int> out;
  if (trim(v).empty()) return out;
  for (const auto& item : split(v, ',')) out.push_back(to_int(key, item));
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table{
      {"problem.dim", [](RunConfig& c, const std::string& k, const std::string& v) { c.dim = to_int(k, v); }},
      {"problem.s", [](RunConfig& c, const std::string& k, const std::string& v) { c.s = to_double(k, v); }},
      {"problem.q", [](RunConfig& c, const std::string& k, const std::string& v) { c.q = to_double(k, v); }},
      {"problem.lambda", [](RunConfig& c, const std::string& k, const std::string& v) { c.lambda = to_double(k, v); }},
      {"problem.lambda_sweep",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.lambda_sweep = to_doubles(k, v); }},
      {"problem.alpha", [](RunConfig& c, const std::string& k, const std::string& v) { c.alpha = to_double(k, v); }},
      {"domain.lengths", [](RunConfig& c, const std::string& k, const std::string& v) { c.lengths = to_doubles(k, v); }},
      {"domain.dirichlet",
       [](RunConfig& c, const std::string&, const std::string& v) {
         c.dirichlet.clear();
         if (!trim(v).empty())
           for (const auto& f : split(v, ',')) c.dirichlet.push_back(f);
       }},
      {"weight.q_max", [](RunConfig& c, const std::string& k, const std::string& v) { c.q_max = to_double(k, v); }},
      {"weight.background",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.background = to_double(k, v); }},
      {"weight.maxima",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.maxima.clear();
         if (trim(v).empty()) return;
         for (const auto& pt : split(v, ';')) c.maxima.push_back(to_doubles(k, pt));
       }},
      {"weight.gamma", [](RunConfig& c, const std::string& k, const std::string& v) { c.gamma = to_doubles(k, v); }},
      {"weight.r_cut", [](RunConfig& c, const std::string& k, const std::string& v) { c.r_cut = to_doubles(k, v); }},
      {"numerics.modes", [](RunConfig& c, const std::string& k, const std::string& v) { c.modes = to_int(k, v); }},
      {"numerics.quad", [](RunConfig& c, const std::string& k, const std::string& v) { c.quad = to_int(k, v); }},
      {"numerics.eps", [](RunConfig& c, const std::string& k, const std::string& v) { c.eps = to_doubles(k, v); }},
      {"numerics.p", [](RunConfig& c, const std::string& k, const std::string& v) { c.p_list = to_doubles(k, v); }},
      {"numerics.center", [](RunConfig& c, const std::string& k, const std::string& v) { c.center = to_doubles(k, v); }},
      {"numerics.rho", [](RunConfig& c, const std::string& k, const std::string& v) { c.rho = to_double(k, v); }},
      {"numerics.eps_seed",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.eps_seed = to_double(k, v); }},
      {"numerics.budget", [](RunConfig& c, const std::string& k, const std::string& v) { c.budget = to_int(k, v); }},
      {"numerics.grad_tol",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.grad_tol = to_double(k, v); }},
      {"numerics.restarts", [](RunConfig& c, const std::string& k, const std::string& v) { c.restarts = to_int(k, v); }},
      {"numerics.count", [](RunConfig& c, const std::string& k, const std::string& v) { c.count = to_int(k, v); }},
      {"numerics.dim_list", [](RunConfig& c, const std::string& k, const std::string& v) { c.dim_list = to_ints(k, v); }},
      {"numerics.s_list", [](RunConfig& c, const std::string& k, const std::string& v) { c.s_list = to_doubles(k, v); }},
      {"numerics.estimate_sigma_d",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.estimate_sigma_d = to_bool(k, v); }},
      {"numerics.positivity",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.positivity = to_bool(k, v); }},
      {"numerics.lambda_min",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.lambda_min = to_double(k, v); }},
      {"numerics.lambda_max",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.lambda_max = to_double(k, v); }},
  };
  return table;
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

template <class T>
std::string join(const std::vector<T>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ",";
    if constexpr (std::is_same_v<T, double>)
      out += fmt(xs[i]);
    else if constexpr (std::is_same_v<T, std::string>)
      out += xs[i];
    else
      out += std::to_string(xs[i]);
  }
  return out;
}

std::string describe(double x) { return fmt(x); }

}  // namespace

void parse_config(const std::string& text, RunConfig& cfg) {
  static const std::set<std::string> sections{"problem", "domain", "weight", "numerics"};
  std::istringstream in(text);
  std::string line, section;
  std::set<std::string> seen;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) continue;
    if (body.front() == '[') {
      if (body.back() != ']') throw ConfigError("", "line " + std::to_string(lineno) + ": malformed section header");
      section = trim(body.substr(1, body.size() - 2));
      if (!sections.count(section)) throw ConfigError(section, "unknown section");
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError("", "line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (section.empty()) throw ConfigError(key, "key outside any section");
    const std::string full = section + "." + key;
    const auto it = setters().find(full);
    if (it == setters().end()) throw ConfigError(full, "unknown key");
    if (!seen.insert(full).second) throw ConfigError(full, "duplicate key");
    it->second(cfg, full, value);
  }
}

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  parse_config(text, cfg);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("--config", "cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string canonical_text(const RunConfig& c) {
  std::ostringstream os;
  os << "subcommand = " << c.subcommand << "\n";
  os << "problem.dim = " << c.dim << "\nproblem.s = " << fmt(c.s) << "\nproblem.q = " << fmt(c.q)
     << "\nproblem.lambda = " << fmt(c.lambda) << "\nproblem.lambda_sweep = " << join(c.lambda_sweep)
     << "\nproblem.alpha = " << (c.alpha ? fmt(*c.alpha) : "") << "\n";
  os << "domain.lengths = " << join(c.lengths) << "\ndomain.dirichlet = " << join(c.dirichlet) << "\n";
  os << "weight.q_max = " << fmt(c.q_max) << "\nweight.background = " << fmt(c.background) << "\nweight.maxima = ";
  for (std::size_t i = 0; i < c.maxima.size(); ++i) os << (i ? ";" : "") << join(c.maxima[i]);
  os << "\nweight.gamma = " << join(c.gamma) << "\nweight.r_cut = " << join(c.r_cut) << "\n";
  os << "numerics.modes = " << c.modes << "\nnumerics.quad = " << c.quad << "\nnumerics.eps = " << join(c.eps)
     << "\nnumerics.p = " << join(c.p_list) << "\nnumerics.center = " << join(c.center)
     << "\nnumerics.rho = " << fmt(c.rho) << "\nnumerics.eps_seed = " << fmt(c.eps_seed)
     << "\nnumerics.budget = " << c.budget << "\nnumerics.grad_tol = " << fmt(c.grad_tol)
     << "\nnumerics.restarts = " << c.restarts << "\nnumerics.count = " << c.count
     << "\nnumerics.dim_list = " << join(c.dim_list) << "\nnumerics.s_list = " << join(c.s_list)
     << "\nnumerics.estimate_sigma_d = " << (c.estimate_sigma_d ? "true" : "false")
     << "\nnumerics.positivity = " << (c.positivity ? "true" : "false") << "\nnumerics.lambda_min = " << fmt(c.lambda_min)
     << "\nnumerics.lambda_max = " << fmt(c.lambda_max) << "\n";
  return os.str();
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t config_hash(const RunConfig& cfg) { return fnv1a64(canonical_text(cfg)); }

MixedRectangleDomain make_domain(const RunConfig& cfg) {
  std::vector<Face> faces;
  for (const auto& name : cfg.dirichlet) faces.push_back(Face::parse(name));
  return MixedRectangleDomain(cfg.lengths, faces);
}

FractionalParams make_fractional(const RunConfig& cfg) { return FractionalParams::make(cfg.s, cfg.dim); }

ProblemParams make_problem(const RunConfig& cfg, double lambda) {
  return ProblemParams::make(lambda, cfg.q, make_fractional(cfg));
}

WeightModel make_weight(const RunConfig& cfg) {
  std::vector<WeightMaximum> maxima;
  for (std::size_t i = 0; i < cfg.maxima.size(); ++i) {
    WeightMaximum m;
    m.location = Eigen::Map<const Vector<double>>(cfg.maxima[i].data(), static_cast<Eigen::Index>(cfg.maxima[i].size()));
    m.gamma = cfg.gamma.size() == 1 ? cfg.gamma[0] : cfg.gamma.at(i);
    m.r_cut = cfg.r_cut.size() == 1 ? cfg.r_cut[0] : cfg.r_cut.at(i);
    maxima.push_back(std::move(m));
  }
  return WeightModel(cfg.q_max, cfg.background, std::move(maxima));
}

std::vector<std::string> validate(const RunConfig& c) {
  std::vector<std::string> d;
  auto add = [&](const std::string& key, const std::string& value, const std::string& rule) {
    d.push_back(key + " = " + value + ": " + rule);
  };
  bool known = false;
  for (const auto& name : subcommands()) known = known || name == c.subcommand;
  if (!known) add("subcommand", c.subcommand, "unknown subcommand");

  bool frac_ok = true;
  if (!(c.s > 0.5 && c.s < 1.0)) {
    add("problem.s", describe(c.s), "s must lie in (1/2, 1)");
    frac_ok = false;
  }
  if (c.dim < 2) {
    add("problem.dim", std::to_string(c.dim), "dimension N must be >= 2");
    frac_ok = false;
  }
  if (static_cast<int>(c.lengths.size()) != c.dim)
    add("domain.lengths", join(c.lengths), "need exactly N edge lengths");
  for (double l : c.lengths)
    if (!(l > 0.0)) add("domain.lengths", join(c.lengths), "edge lengths must be positive");

  std::optional<MixedRectangleDomain> domain;
  try {
    if (static_cast<int>(c.lengths.size()) == c.dim) domain = make_domain(c);
  } catch (const std::exception& e) {
    add("domain.dirichlet", join(c.dirichlet), e.what());
  }

  const double crit = frac_ok ? critical_exponent(c.dim, c.s) : 0.0;
  const bool needs_problem = c.subcommand == "fiber" || c.subcommand == "solve" || c.subcommand == "multiplicity";
  if (frac_ok) {
    if (!(c.q >= 1.0)) add("problem.q", describe(c.q), "q must be >= 1");
    if (!(c.q < crit - 1.0)) add("problem.q", describe(c.q), "q must be < 2*_s - 1 (= " + describe(crit - 1.0) + ")");
  }
  if (!(c.lambda >= 0.0)) add("problem.lambda", describe(c.lambda), "lambda must be >= 0");
  for (double l : c.lambda_sweep)
    if (!(l >= 0.0)) add("problem.lambda_sweep", join(c.lambda_sweep), "lambda values must be >= 0");

  if (c.modes < 1) add("numerics.modes", std::to_string(c.modes), "modes must be >= 1");
  if (c.quad != 0 && c.quad < 2 * c.modes)
    add("numerics.quad", std::to_string(c.quad), "quad must be 0 (default) or >= 2*modes");
  if (c.budget < 1) add("numerics.budget", std::to_string(c.budget), "budget must be >= 1");
  if (c.restarts < 1) add("numerics.restarts", std::to_string(c.restarts), "restarts must be >= 1");
  if (c.count < 1) add("numerics.count", std::to_string(c.count), "count must be >= 1");
  if (!(c.grad_tol > 0.0)) add("numerics.grad_tol", describe(c.grad_tol), "grad_tol must be > 0");
  if (!(c.rho >= 0.0)) add("numerics.rho", describe(c.rho), "rho must be >= 0 (0 = default)");
  if (!(c.eps_seed >= 0.0)) add("numerics.eps_seed", describe(c.eps_seed), "eps_seed must be >= 0 (0 = default)");
  for (double e : c.eps)
    if (!(e > 0.0)) add("numerics.eps", join(c.eps), "eps values must be > 0");
  for (double p : c.p_list)
    if (!(p >= 1.0)) add("numerics.p", join(c.p_list), "p values must be >= 1");
  if (!(c.lambda_min > 0.0 && c.lambda_max >= c.lambda_min))
    add("numerics.lambda_min", describe(c.lambda_min), "need 0 < lambda_min <= lambda_max");
  for (int n : c.dim_list)
    if (n < 2) add("numerics.dim_list", join(c.dim_list), "dimensions must be >= 2");
  for (double s : c.s_list)
    if (!(s > 0.5 && s < 1.0)) add("numerics.s_list", join(c.s_list), "s must lie in (1/2, 1)");
  if (!c.center.empty() && static_cast<int>(c.center.size()) != c.dim)
    add("numerics.center", join(c.center), "need exactly N coordinates");

  if (!(c.q_max > 0.0)) add("weight.q_max", describe(c.q_max), "Q_M must be > 0");
  if (!(c.background > 0.0 && c.background <= c.q_max))
    add("weight.background", describe(c.background), "background must lie in (0, Q_M] so that Q > 0");
  if (c.gamma.empty() || (c.gamma.size() != 1 && c.gamma.size() != c.maxima.size()))
    add("weight.gamma", join(c.gamma), "give one exponent or one per maximum");
  if (c.r_cut.empty() || (c.r_cut.size() != 1 && c.r_cut.size() != c.maxima.size()))
    add("weight.r_cut", join(c.r_cut), "give one radius or one per maximum");
  for (double r : c.r_cut)
    if (!(r > 0.0)) add("weight.r_cut", join(c.r_cut), "r_cut must be > 0");
  for (double g : c.gamma)
    if (!(g > 0.0)) add("weight.gamma", join(c.gamma), "gamma must be > 0");
  for (std::size_t i = 0; i < c.maxima.size(); ++i)
    if (static_cast<int>(c.maxima[i].size()) != c.dim)
      add("weight.maxima", join(c.maxima[i]), "maximum " + std::to_string(i) + " needs exactly N coordinates");
  if (c.subcommand == "multiplicity" && c.maxima.empty())
    add("weight.maxima", "", "multiplicity needs at least one maximum");

  // Growth exponent requirement near the maxima.
  std::optional<double> alpha_bound;
  if (frac_ok && c.q >= 1.0 && c.q < crit - 1.0) {
    try {
      const AlphaRequirement req = required_alpha(ProblemParams::make(std::max(c.lambda, 0.0), c.q, make_fractional(c)));
      if (req.is_interval()) {
        if (c.alpha) {
          if (!req.admits(*c.alpha)) add("problem.alpha", describe(*c.alpha), "alpha must lie in (0, N) for this q");
          alpha_bound = c.alpha;
        } else if (needs_problem && !c.maxima.empty()) {
          add("problem.alpha", "", "alpha must be given explicitly when q leaves it free in (0, N)");
        }
      } else {
        if (c.alpha && !req.admits(*c.alpha))
          add("problem.alpha", describe(*c.alpha), "alpha is fixed to N - (N-2s)(q+1)/2 = " + describe(req.alpha));
        alpha_bound = req.alpha;
      }
    } catch (const std::exception& e) {
      if (needs_problem) add("problem.q", describe(c.q), e.what());
    }
  }

  const bool weight_shape_ok =
      !c.gamma.empty() && (c.gamma.size() == 1 || c.gamma.size() == c.maxima.size()) && !c.r_cut.empty() &&
      (c.r_cut.size() == 1 || c.r_cut.size() == c.maxima.size()) && c.q_max > 0.0 && c.background > 0.0 &&
      c.background <= c.q_max;
  bool maxima_dims_ok = true;
  for (const auto& m : c.maxima) maxima_dims_ok = maxima_dims_ok && static_cast<int>(m.size()) == c.dim;
  if (domain && weight_shape_ok && maxima_dims_ok) {
    try {
      const WeightModel w = make_weight(c);
      for (const auto& msg : w.diagnostics(*domain, alpha_bound)) d.push_back(msg);
    } catch (const std::exception& e) {
      add("weight", "", e.what());
    }
  }
  return d;
}

}  // namespace fraclab
