#pragma once
// Spectral fractional Laplacian on axis-aligned boxes whose faces carry
// either homogeneous Dirichlet or homogeneous Neumann data.
//
// The eigenpairs of -Delta are tensor products of 1D sine/cosine families,
// so the basis, the grid transforms and every fractional power are exact
// up to the tensor Gauss-Legendre quadrature used for pointwise nonlinearities.

#include "fraclab/quadrature.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fraclab {

using Point = Eigen::VectorXd;

enum class BoundaryKind { dirichlet, neumann };

/// One face of a box: the hyperplane x_axis = 0 (lower) or x_axis = L (upper).
struct Face {
  int axis = 0;
  bool upper = false;

  friend bool operator==(const Face&, const Face&) = default;

  /// "x0", "x1", "y0", ... for axes 0-2, "a3-0", "a3-1" beyond.
  std::string name() const;
  static Face parse(std::string_view text);
};

/// Box [0,L_0] x ... x [0,L_{N-1}] with each face assigned to Sigma_D or Sigma_N.
class MixedRectangleDomain {
 public:
  /// Throws std::invalid_argument unless 0 < |Sigma_D| < |boundary|.
  MixedRectangleDomain(std::vector<double> lengths, std::vector<Face> dirichlet);

  int dim() const { return static_cast<int>(lengths_.size()); }
  const std::vector<double>& lengths() const { return lengths_; }
  BoundaryKind kind(Face f) const;
  std::vector<Face> faces() const;
  std::vector<Face> dirichlet_faces() const;
  std::vector<Face> neumann_faces() const;

  /// Pairs (Dirichlet face, Neumann face) sharing an (N-2)-dimensional edge;
  /// their common edges make up the interface Gamma.
  std::vector<std::pair<Face, Face>> interface() const;

  bool contains(const Point& x, double tol = 1e-12) const;
  bool on_face(const Point& x, Face f, double tol = 1e-12) const;
  /// Lies on a Neumann face and on no (closed) Dirichlet face.
  bool on_neumann_boundary(const Point& x, double tol = 1e-12) const;
  /// Euclidean distance from an interior or boundary point to a closed face.
  double distance_to_face(const Point& x, Face f) const;
  double distance_to_dirichlet(const Point& x) const;
  Point face_midpoint(Face f) const;
  /// Vertices whose incident faces are all Neumann, in binary order of (upper0, upper1, ...).
  std::vector<Point> neumann_vertices() const;
  double measure() const;

  /// Compact, stable text form, e.g. "lengths=1,1;dirichlet=x0".
  std::string descriptor() const;

 private:
  std::vector<double> lengths_;
  std::vector<std::array<BoundaryKind, 2>> kinds_;
};

/// Scalar environment of the problem: s, N and everything derived from them.
struct FractionalParams {
  double s = 0.75;
  int dim = 2;
  double crit_exp = 8.0;    // 2N/(N-2s)
  double ks = 1.0;          // 2^{2s-1} Gamma(s)/Gamma(1-s)
  double sobolev_sN = 0.0;  // whole-space fractional Sobolev constant

  /// Validates 1/2 < s < 1, N >= 2, N > 2s.
  static FractionalParams make(double s, int dim);
  /// 2^{-2s/N} S(s,N), the half-space constant bounding S(Sigma_D).
  double half_space_constant() const;
};

/// Per-axis factor of the mixed eigenbasis, named by (lower, upper) face data.
enum class AxisKind { dd, dn, nd, nn };

AxisKind axis_kind(const MixedRectangleDomain& domain, int axis);

namespace detail {

template <typename Scalar>
Scalar axis_eigenfunction(AxisKind kind, int k, Scalar length, Scalar x) {
  using std::cos;
  using std::sin;
  using std::sqrt;
  const Scalar pi = std::numbers::pi_v<Scalar>;
  const Scalar amp = sqrt(Scalar(2) / length);
  switch (kind) {
    case AxisKind::dd: return amp * sin(Scalar(k + 1) * pi * x / length);
    case AxisKind::dn: return amp * sin((Scalar(k) + Scalar(0.5)) * pi * x / length);
    case AxisKind::nd: return amp * cos((Scalar(k) + Scalar(0.5)) * pi * x / length);
    case AxisKind::nn:
      if (k == 0) return Scalar(1) / sqrt(length);
      return amp * cos(Scalar(k) * pi * x / length);
  }
  return Scalar(0);
}

/// out = in x_axis A: contracts tensor axis `axis` (extent A.cols()) against A.
/// Tensors are flat with axis 0 fastest.
template <typename Scalar>
Vector<Scalar> mode_product(const Vector<Scalar>& in, std::vector<Eigen::Index>& shape, int axis,
                            const Matrix<Scalar>& a) {
  Eigen::Index pre = 1, post = 1;
  for (int d = 0; d < axis; ++d) pre *= shape[d];
  for (std::size_t d = axis + 1; d < shape.size(); ++d) post *= shape[d];
  const Eigen::Index n = shape[axis];
  const Eigen::Index m = a.rows();
  Vector<Scalar> out(pre * m * post);
  if (pre == 1) {
    Eigen::Map<const Matrix<Scalar>> src(in.data(), n, post);
    Eigen::Map<Matrix<Scalar>> dst(out.data(), m, post);
    dst.noalias() = a * src;
  } else {
    for (Eigen::Index p = 0; p < post; ++p) {
      Eigen::Map<const Matrix<Scalar>> src(in.data() + p * pre * n, pre, n);
      Eigen::Map<Matrix<Scalar>> dst(out.data() + p * pre * m, pre, m);
      dst.noalias() = src * a.transpose();
    }
  }
  shape[axis] = m;
  return out;
}

}  // namespace detail

/// Coefficients a_j of a function in H^s_{Sigma_D}, aligned with a basis' mode order.
template <typename Scalar>
struct BasicSpectralField {
  Vector<Scalar> coeffs;

  BasicSpectralField() = default;
  explicit BasicSpectralField(Vector<Scalar> c) : coeffs(std::move(c)) {}

  Eigen::Index size() const { return coeffs.size(); }
  bool all_finite() const { return coeffs.allFinite(); }

  static BasicSpectralField zero(Eigen::Index n) { return BasicSpectralField(Vector<Scalar>::Zero(n)); }
  static BasicSpectralField unit(Eigen::Index n, Eigen::Index j) {
    BasicSpectralField f = zero(n);
    f.coeffs(j) = Scalar(1);
    return f;
  }

  BasicSpectralField& operator+=(const BasicSpectralField& o) { coeffs += o.coeffs; return *this; }
  BasicSpectralField& operator-=(const BasicSpectralField& o) { coeffs -= o.coeffs; return *this; }
  BasicSpectralField& operator*=(Scalar c) { coeffs *= c; return *this; }
};

template <typename Scalar>
BasicSpectralField<Scalar> operator+(BasicSpectralField<Scalar> a, const BasicSpectralField<Scalar>& b) {
  return a += b;
}
template <typename Scalar>
BasicSpectralField<Scalar> operator-(BasicSpectralField<Scalar> a, const BasicSpectralField<Scalar>& b) {
  return a -= b;
}
template <typename Scalar>
BasicSpectralField<Scalar> operator*(Scalar c, BasicSpectralField<Scalar> a) {
  return a *= c;
}

/// Truncated eigenbasis of the mixed Laplacian on a box together with the
/// tensor Gauss-Legendre grid used for synthesis and analysis.
///
/// Modes are ordered by ascending eigenvalue; ties are broken
/// lexicographically by the per-axis indices. Immutable after construction.
template <typename Scalar>
class BasicEigenBasis {
 public:
  BasicEigenBasis(MixedRectangleDomain domain, int modes_per_axis, int quad_points_per_axis);

  const MixedRectangleDomain& domain() const { return domain_; }
  int dim() const { return domain_.dim(); }
  int modes_per_axis() const { return modes_; }
  int quad_points_per_axis() const { return quad_; }
  Eigen::Index size() const { return eigenvalues_.size(); }
  Eigen::Index grid_size() const { return grid_weights_.size(); }

  const Vector<Scalar>& eigenvalues() const { return eigenvalues_; }
  /// Per-axis indices of sorted mode j.
  std::vector<int> mode_index(Eigen::Index j) const;
  AxisKind axis_kind(int axis) const { return kinds_[axis]; }
  const QuadratureRule<Scalar>& axis_rule(int axis) const { return rules_[axis]; }
  /// Q x M samples of the 1D eigenfunctions of one axis.
  const Matrix<Scalar>& axis_values(int axis) const { return axis_values_[axis]; }
  const Vector<Scalar>& axis_eigenvalues(int axis) const { return axis_eigenvalues_[axis]; }

  const Vector<Scalar>& grid_weights() const { return grid_weights_; }
  /// Coordinate x_axis at every grid node (flat, axis 0 fastest).
  const Vector<Scalar>& grid_coordinate(int axis) const { return grid_coords_[axis]; }
  Point node(Eigen::Index g) const;

  /// Largest |G - I| over the per-axis Gram matrices on the quadrature grid.
  Scalar orthonormality_defect() const;
  std::string descriptor() const;

  // Tensor layout helpers used by the transforms.
  const std::vector<Eigen::Index>& tensor_offset() const { return tensor_offset_; }

 private:
  MixedRectangleDomain domain_;
  int modes_;
  int quad_;
  std::vector<AxisKind> kinds_;
  std::vector<QuadratureRule<Scalar>> rules_;
  std::vector<Matrix<Scalar>> axis_values_;
  std::vector<Vector<Scalar>> axis_eigenvalues_;
  Vector<Scalar> eigenvalues_;
  std::vector<Eigen::Index> tensor_offset_;
  Vector<Scalar> grid_weights_;
  std::vector<Vector<Scalar>> grid_coords_;
};

using SpectralField = BasicSpectralField<double>;
using EigenBasis = BasicEigenBasis<double>;
using GridValues = Vector<double>;

/// Quadrature count per axis used when none is given: 2M + 12 keeps the 1D
/// Gram defect below 1e-12 for every M (2M alone does not for small M).
inline int default_quad_points(int modes_per_axis) { return 2 * modes_per_axis + 12; }

template <typename Scalar>
BasicEigenBasis<Scalar>::BasicEigenBasis(MixedRectangleDomain domain, int modes_per_axis, int quad_points_per_axis)
    : domain_(std::move(domain)), modes_(modes_per_axis), quad_(quad_points_per_axis) {
  if (modes_ < 1) throw std::invalid_argument("build_basis: modes_per_axis must be >= 1");
  if (quad_ < 2 * modes_)
    throw std::invalid_argument("build_basis: quad_points_per_axis must be >= 2*modes_per_axis (anti-aliasing floor)");
  const int d = domain_.dim();
  for (int axis = 0; axis < d; ++axis) {
    const Scalar length = Scalar(domain_.lengths()[axis]);
    const AxisKind kind = fraclab::axis_kind(domain_, axis);
    kinds_.push_back(kind);
    rules_.push_back(gauss_legendre<Scalar>(quad_, Scalar(0), length));
    Matrix<Scalar> values(quad_, modes_);
    Vector<Scalar> lam(modes_);
    for (int k = 0; k < modes_; ++k) {
      const Scalar pi = std::numbers::pi_v<Scalar>;
      Scalar f = 0;
      switch (kind) {
        case AxisKind::dd: f = Scalar(k + 1) * pi / length; break;
        case AxisKind::dn:
        case AxisKind::nd: f = (Scalar(k) + Scalar(0.5)) * pi / length; break;
        case AxisKind::nn: f = Scalar(k) * pi / length; break;
      }
      lam(k) = f * f;
      for (int g = 0; g < quad_; ++g)
        values(g, k) = detail::axis_eigenfunction<Scalar>(kind, k, length, rules_.back().nodes(g));
    }
    axis_values_.push_back(std::move(values));
    axis_eigenvalues_.push_back(std::move(lam));
  }

  Eigen::Index n_modes = 1, n_grid = 1;
  for (int axis = 0; axis < d; ++axis) {
    n_modes *= modes_;
    n_grid *= quad_;
  }

  // Sum per-axis contributions in ascending order so that permuted index
  // tuples with equal eigenvalues produce bit-identical sums.
  struct Entry {
    Scalar lambda;
    std::vector<int> idx;
    Eigen::Index offset;
  };
  std::vector<Entry> entries;
  entries.reserve(n_modes);
  std::vector<int> idx(d, 0);
  std::vector<Scalar> parts(d);
  for (Eigen::Index t = 0; t < n_modes; ++t) {
    Eigen::Index rem = t;
    for (int axis = 0; axis < d; ++axis) {
      idx[axis] = static_cast<int>(rem % modes_);
      rem /= modes_;
      parts[axis] = axis_eigenvalues_[axis](idx[axis]);
    }
    std::sort(parts.begin(), parts.end());
    Scalar lambda = 0;
    for (const Scalar& p : parts) lambda += p;
    entries.push_back({lambda, idx, t});
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.lambda != b.lambda) return a.lambda < b.lambda;
    return a.idx < b.idx;
  });
  eigenvalues_.resize(n_modes);
  tensor_offset_.resize(n_modes);
  for (Eigen::Index j = 0; j < n_modes; ++j) {
    eigenvalues_(j) = entries[j].lambda;
    tensor_offset_[j] = entries[j].offset;
  }

  grid_weights_.resize(n_grid);
  grid_coords_.assign(d, Vector<Scalar>(n_grid));
  for (Eigen::Index g = 0; g < n_grid; ++g) {
    Eigen::Index rem = g;
    Scalar w = 1;
    for (int axis = 0; axis < d; ++axis) {
      const Eigen::Index i = rem % quad_;
      rem /= quad_;
      w *= rules_[axis].weights(i);
      grid_coords_[axis](g) = rules_[axis].nodes(i);
    }
    grid_weights_(g) = w;
  }

  if (orthonormality_defect() > Scalar(1e-10))
    throw std::invalid_argument("build_basis: quadrature grid too coarse, eigenfunctions not orthonormal to 1e-10");
}

template <typename Scalar>
std::vector<int> BasicEigenBasis<Scalar>::mode_index(Eigen::Index j) const {
  std::vector<int> idx(dim());
  Eigen::Index rem = tensor_offset_.at(j);
  for (int axis = 0; axis < dim(); ++axis) {
    idx[axis] = static_cast<int>(rem % modes_);
    rem /= modes_;
  }
  return idx;
}

template <typename Scalar>
Point BasicEigenBasis<Scalar>::node(Eigen::Index g) const {
  Point x(dim());
  for (int axis = 0; axis < dim(); ++axis) x(axis) = static_cast<double>(grid_coords_[axis](g));
  return x;
}

template <typename Scalar>
Scalar BasicEigenBasis<Scalar>::orthonormality_defect() const {
  Scalar worst = 0;
  for (int axis = 0; axis < dim(); ++axis) {
    const auto& phi = axis_values_[axis];
    const Matrix<Scalar> gram = phi.transpose() * rules_[axis].weights.asDiagonal() * phi;
    const Scalar defect = (gram - Matrix<Scalar>::Identity(modes_, modes_)).cwiseAbs().maxCoeff();
    worst = std::max(worst, defect);
  }
  return worst;
}

template <typename Scalar>
std::string BasicEigenBasis<Scalar>::descriptor() const {
  return domain_.descriptor() + ";modes=" + std::to_string(modes_) + ";quad=" + std::to_string(quad_);
}

/// Closed-form eigenbasis with modes_per_axis modes and quad_points_per_axis
/// Gauss-Legendre nodes on every axis.
template <typename Scalar = double>
BasicEigenBasis<Scalar> build_basis(const MixedRectangleDomain& domain, int modes_per_axis, int quad_points_per_axis) {
  return BasicEigenBasis<Scalar>(domain, modes_per_axis, quad_points_per_axis);
}

/// u(x_g) = sum_j a_j phi_j(x_g) on every grid node.
template <typename Scalar>
Vector<Scalar> synthesize(const BasicSpectralField<Scalar>& field, const BasicEigenBasis<Scalar>& basis) {
  if (field.size() != basis.size()) throw std::invalid_argument("synthesize: coefficient length does not match basis");
  const int d = basis.dim();
  Eigen::Index n_tensor = 1;
  for (int axis = 0; axis < d; ++axis) n_tensor *= basis.modes_per_axis();
  Vector<Scalar> tensor = Vector<Scalar>::Zero(n_tensor);
  const auto& offset = basis.tensor_offset();
  for (Eigen::Index j = 0; j < field.size(); ++j) tensor(offset[j]) = field.coeffs(j);
  std::vector<Eigen::Index> shape(d, basis.modes_per_axis());
  for (int axis = 0; axis < d; ++axis) tensor = detail::mode_product(tensor, shape, axis, basis.axis_values(axis));
  return tensor;
}

/// a_j = <u, phi_j> by tensor quadrature.
template <typename Scalar>
BasicSpectralField<Scalar> analyze(const Vector<Scalar>& values, const BasicEigenBasis<Scalar>& basis) {
  if (values.size() != basis.grid_size()) throw std::invalid_argument("analyze: values are not defined on the basis grid");
  const int d = basis.dim();
  Vector<Scalar> tensor = values.cwiseProduct(basis.grid_weights());
  std::vector<Eigen::Index> shape(d, basis.quad_points_per_axis());
  for (int axis = 0; axis < d; ++axis) {
    const Matrix<Scalar> phi_t = basis.axis_values(axis).transpose();
    tensor = detail::mode_product(tensor, shape, axis, phi_t);
  }
  Vector<Scalar> coeffs(basis.size());
  const auto& offset = basis.tensor_offset();
  for (Eigen::Index j = 0; j < basis.size(); ++j) coeffs(j) = tensor(offset[j]);
  return BasicSpectralField<Scalar>(std::move(coeffs));
}

/// lambda_j^s for every mode.
template <typename Scalar>
Vector<Scalar> fractional_eigenvalues(const BasicEigenBasis<Scalar>& basis, double s) {
  return basis.eigenvalues().array().pow(Scalar(s)).matrix();
}

/// (-Delta)^s u: a_j -> lambda_j^s a_j.
template <typename Scalar>
BasicSpectralField<Scalar> apply_fractional(const BasicSpectralField<Scalar>& field, const FractionalParams& params,
                                            const BasicEigenBasis<Scalar>& basis) {
  if (field.size() != basis.size()) throw std::invalid_argument("apply_fractional: coefficient length does not match basis");
  return BasicSpectralField<Scalar>(fractional_eigenvalues(basis, params.s).cwiseProduct(field.coeffs));
}

/// Fractional power with a bare exponent; s need not satisfy the problem's
/// standing hypotheses (used for limit checks).
template <typename Scalar>
BasicSpectralField<Scalar> apply_fractional(const BasicSpectralField<Scalar>& field, double s,
                                            const BasicEigenBasis<Scalar>& basis) {
  if (field.size() != basis.size()) throw std::invalid_argument("apply_fractional: coefficient length does not match basis");
  return BasicSpectralField<Scalar>(fractional_eigenvalues(basis, s).cwiseProduct(field.coeffs));
}

/// (sum_j a_j^2 lambda_j^s)^{1/2}
template <typename Scalar>
Scalar hs_norm(const BasicSpectralField<Scalar>& field, const FractionalParams& params,
               const BasicEigenBasis<Scalar>& basis) {
  if (field.size() != basis.size()) throw std::invalid_argument("hs_norm: coefficient length does not match basis");
  using std::sqrt;
  return sqrt((fractional_eigenvalues(basis, params.s).array() * field.coeffs.array().square()).sum());
}

/// (sum_g w_g |u_g|^p)^{1/p} for grid samples.
template <typename Scalar>
Scalar lp_norm_grid(const Vector<Scalar>& values, double p, const BasicEigenBasis<Scalar>& basis) {
  if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: p must be >= 1");
  if (values.size() != basis.grid_size()) throw std::invalid_argument("lp_norm: values are not defined on the basis grid");
  using std::pow;
  const Scalar sum = (basis.grid_weights().array() * values.array().abs().pow(Scalar(p))).sum();
  return pow(sum, Scalar(1) / Scalar(p));
}

template <typename Scalar>
Scalar lp_norm(const BasicSpectralField<Scalar>& field, double p, const BasicEigenBasis<Scalar>& basis) {
  if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: p must be >= 1");
  return lp_norm_grid(synthesize(field, basis), p, basis);
}

/// L^2 inner product of two grid functions by quadrature.
template <typename Scalar>
Scalar grid_inner(const Vector<Scalar>& u, const Vector<Scalar>& v, const BasicEigenBasis<Scalar>& basis) {
  return (basis.grid_weights().array() * u.array() * v.array()).sum();
}

/// lambda_1^s = min_j lambda_j^s.
template <typename Scalar>
Scalar first_fractional_eigenvalue(const BasicEigenBasis<Scalar>& basis, const FractionalParams& params) {
  using std::pow;
  return pow(basis.eigenvalues().minCoeff(), Scalar(params.s));
}

}  // namespace fraclab
