#include "fraclab/spectral_core.hpp"

#include "fraclab/extension_kernel.hpp"
#include "fraclab/functionals.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace fraclab {

namespace {

const char* axis_letter(int axis) {
  static const char* letters[] = {"x", "y", "z"};
  return axis < 3 ? letters[axis] : nullptr;
}

}  // namespace

std::string Face::name() const {
  if (const char* l = axis_letter(axis)) return std::string(l) + (upper ? "1" : "0");
  return "a" + std::to_string(axis) + "-" + (upper ? "1" : "0");
}

Face Face::parse(std::string_view text) {
  auto bad = [&] { return std::invalid_argument("unrecognized face '" + std::string(text) + "'"); };
  if (text.size() == 2 && (text[1] == '0' || text[1] == '1')) {
    const bool upper = text[1] == '1';
    switch (text[0]) {
      case 'x': return {0, upper};
      case 'y': return {1, upper};
      case 'z': return {2, upper};
      default: throw bad();
    }
  }
  if (text.size() >= 4 && text[0] == 'a') {
    const auto dash = text.find('-');
    if (dash == std::string_view::npos || dash + 2 != text.size()) throw bad();
    int axis = 0;
    for (std::size_t i = 1; i < dash; ++i) {
      if (text[i] < '0' || text[i] > '9') throw bad();
      axis = axis * 10 + (text[i] - '0');
    }
    if (text[dash + 1] != '0' && text[dash + 1] != '1') throw bad();
    return {axis, text[dash + 1] == '1'};
  }
  throw bad();
}

MixedRectangleDomain::MixedRectangleDomain(std::vector<double> lengths, std::vector<Face> dirichlet)
    : lengths_(std::move(lengths)) {
  if (lengths_.empty()) throw std::invalid_argument("domain: need at least one axis");
  for (double l : lengths_)
    if (!(l > 0.0) || !std::isfinite(l)) throw std::invalid_argument("domain: edge lengths must be positive");
  kinds_.assign(lengths_.size(), {BoundaryKind::neumann, BoundaryKind::neumann});
  if (dirichlet.empty()) throw std::invalid_argument("domain: Dirichlet part must be nonempty");
  for (const Face& f : dirichlet) {
    if (f.axis < 0 || f.axis >= dim()) throw std::invalid_argument("domain: face " + f.name() + " outside dimension");
    kinds_[f.axis][f.upper ? 1 : 0] = BoundaryKind::dirichlet;
  }
  if (static_cast<int>(dirichlet_faces().size()) == 2 * dim())
    throw std::invalid_argument("domain: Dirichlet part must be a strict subset of the boundary");
}

BoundaryKind MixedRectangleDomain::kind(Face f) const { return kinds_.at(f.axis)[f.upper ? 1 : 0]; }

std::vector<Face> MixedRectangleDomain::faces() const {
  std::vector<Face> out;
  for (int a = 0; a < dim(); ++a) {
    out.push_back({a, false});
    out.push_back({a, true});
  }
  return out;
}

std::vector<Face> MixedRectangleDomain::dirichlet_faces() const {
  std::vector<Face> out;
  for (const Face& f : faces())
    if (kind(f) == BoundaryKind::dirichlet) out.push_back(f);
  return out;
}

std::vector<Face> MixedRectangleDomain::neumann_faces() const {
  std::vector<Face> out;
  for (const Face& f : faces())
    if (kind(f) == BoundaryKind::neumann) out.push_back(f);
  return out;
}

std::vector<std::pair<Face, Face>> MixedRectangleDomain::interface() const {
  std::vector<std::pair<Face, Face>> out;
  for (const Face& d : dirichlet_faces())
    for (const Face& n : neumann_faces())
      if (d.axis != n.axis) out.emplace_back(d, n);
  return out;
}

bool MixedRectangleDomain::contains(const Point& x, double tol) const {
  if (x.size() != dim()) return false;
  for (int a = 0; a < dim(); ++a)
    if (x(a) < -tol || x(a) > lengths_[a] + tol) return false;
  return true;
}

bool MixedRectangleDomain::on_face(const Point& x, Face f, double tol) const {
  if (!contains(x, tol)) return false;
  const double target = f.upper ? lengths_[f.axis] : 0.0;
  return std::abs(x(f.axis) - target) <= tol;
}

bool MixedRectangleDomain::on_neumann_boundary(const Point& x, double tol) const {
  bool on_n = false;
  for (const Face& f : faces()) {
    if (!on_face(x, f, tol)) continue;
    if (kind(f) == BoundaryKind::dirichlet) return false;
    on_n = true;
  }
  return on_n;
}

double MixedRectangleDomain::distance_to_face(const Point& x, Face f) const {
  double sq = 0.0;
  for (int a = 0; a < dim(); ++a) {
    double d = 0.0;
    if (a == f.axis) {
      d = x(a) - (f.upper ? lengths_[a] : 0.0);
    } else if (x(a) < 0.0) {
      d = x(a);
    } else if (x(a) > lengths_[a]) {
      d = x(a) - lengths_[a];
    }
    sq += d * d;
  }
  return std::sqrt(sq);
}

double MixedRectangleDomain::distance_to_dirichlet(const Point& x) const {
  double best = std::numeric_limits<double>::infinity();
  for (const Face& f : dirichlet_faces()) best = std::min(best, distance_to_face(x, f));
  return best;
}

Point MixedRectangleDomain::face_midpoint(Face f) const {
  Point x(dim());
  for (int a = 0; a < dim(); ++a) x(a) = lengths_[a] / 2;
  x(f.axis) = f.upper ? lengths_[f.axis] : 0.0;
  return x;
}

std::vector<Point> MixedRectangleDomain::neumann_vertices() const {
  std::vector<Point> out;
  for (unsigned mask = 0; mask < (1u << dim()); ++mask) {
    Point x(dim());
    bool neumann = true;
    for (int a = 0; a < dim(); ++a) {
      const bool upper = (mask >> a) & 1u;
      x(a) = upper ? lengths_[a] : 0.0;
      neumann = neumann && kinds_[a][upper ? 1 : 0] == BoundaryKind::neumann;
    }
    if (neumann) out.push_back(x);
  }
  return out;
}

double MixedRectangleDomain::measure() const {
  double m = 1.0;
  for (double l : lengths_) m *= l;
  return m;
}

std::string MixedRectangleDomain::descriptor() const {
  std::ostringstream os;
  os.precision(17);
  os << "lengths=";
  for (int a = 0; a < dim(); ++a) os << (a ? "," : "") << lengths_[a];
  os << ";dirichlet=";
  bool first = true;
  for (const Face& f : dirichlet_faces()) {
    os << (first ? "" : ",") << f.name();
    first = false;
  }
  return os.str();
}

FractionalParams FractionalParams::make(double s, int dim) {
  if (!(s > 0.5 && s < 1.0)) throw std::invalid_argument("s must lie in (1/2, 1)");
  if (dim < 2) throw std::invalid_argument("dimension N must be >= 2");
  FractionalParams p;
  p.s = s;
  p.dim = dim;
  p.crit_exp = critical_exponent(dim, s);
  p.ks = ks_constant(s);
  p.sobolev_sN = sobolev_constant(dim, s);
  return p;
}

double FractionalParams::half_space_constant() const { return std::pow(2.0, -2.0 * s / dim) * sobolev_sN; }

AxisKind axis_kind(const MixedRectangleDomain& domain, int axis) {
  const bool lower_d = domain.kind({axis, false}) == BoundaryKind::dirichlet;
  const bool upper_d = domain.kind({axis, true}) == BoundaryKind::dirichlet;
  if (lower_d && upper_d) return AxisKind::dd;
  if (lower_d) return AxisKind::dn;
  if (upper_d) return AxisKind::nd;
  return AxisKind::nn;
}

}  // namespace fraclab
