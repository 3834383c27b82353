#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace psifield {

using Index = Eigen::Index;

enum class Boundary { periodic, reflecting };

inline const char* to_string(Boundary b) { return b == Boundary::periodic ? "periodic" : "reflecting"; }

inline Boundary boundary_from_string(const std::string& s) {
  if (s == "periodic") return Boundary::periodic;
  if (s == "reflecting") return Boundary::reflecting;
  throw std::invalid_argument("unknown boundary '" + s + "' (expected periodic|reflecting)");
}

template <typename Scalar>
using Point = Eigen::Matrix<Scalar, Eigen::Dynamic, 1, 0, 3, 1>;

template <typename Scalar>
using RealArray = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using ComplexArray = Eigen::Array<std::complex<Scalar>, Eigen::Dynamic, 1>;

/// One axis of a configuration-space box.
template <typename Scalar>
struct Axis {
  Scalar lo = 0;
  Scalar hi = 1;
  Index points = 8;
  Boundary boundary = Boundary::periodic;

  friend bool operator==(const Axis&, const Axis&) = default;
};

/// Uniform rectangular grid over a box in 1 to 3 dimensions.
///
/// Spacing is (hi - lo) / points on every axis. Periodic axes put nodes at
/// lo + i*dx (the point hi is identified with lo); reflecting axes put nodes
/// at cell centres lo + (i + 1/2)*dx so that the cells tile [lo, hi] exactly.
/// Storage order is row-major: the last axis varies fastest.
template <typename Scalar = double>
class Grid {
 public:
  static constexpr Index min_points = 8;
  static constexpr Index max_total_points = Index{1} << 26;

  Grid() = default;

  explicit Grid(std::vector<Axis<Scalar>> axes) : axes_(std::move(axes)) {
    if (axes_.empty() || axes_.size() > 3) {
      throw std::invalid_argument("grid must have 1 to 3 dimensions");
    }
    total_ = 1;
    for (std::size_t k = 0; k < axes_.size(); ++k) {
      const auto& a = axes_[k];
      if (a.points < min_points) {
        throw std::invalid_argument("grid axis " + std::to_string(k) + " needs at least 8 points");
      }
      if (!(std::isfinite(a.lo) && std::isfinite(a.hi)) || !(a.hi > a.lo)) {
        throw std::invalid_argument("grid axis " + std::to_string(k) + " needs finite lo < hi");
      }
      if (total_ > max_total_points / a.points) {
        throw std::length_error("grid point count exceeds addressable limit");
      }
      total_ *= a.points;
    }
    Index stride = 1;
    for (int k = dims() - 1; k >= 0; --k) {
      strides_[k] = stride;
      stride *= axes_[k].points;
    }
  }

  /// Convenience for the common 1-D case.
  static Grid line(Scalar lo, Scalar hi, Index points, Boundary b) { return Grid({Axis<Scalar>{lo, hi, points, b}}); }

  int dims() const { return static_cast<int>(axes_.size()); }
  Index size() const { return total_; }
  const Axis<Scalar>& axis(int k) const { return axes_[k]; }
  const std::vector<Axis<Scalar>>& axes() const { return axes_; }
  Index points(int k) const { return axes_[k].points; }
  Index stride(int k) const { return strides_[k]; }
  Boundary boundary(int k) const { return axes_[k].boundary; }
  Scalar lo(int k) const { return axes_[k].lo; }
  Scalar hi(int k) const { return axes_[k].hi; }
  Scalar length(int k) const { return axes_[k].hi - axes_[k].lo; }
  Scalar spacing(int k) const { return length(k) / static_cast<Scalar>(axes_[k].points); }

  Scalar cell_volume() const {
    Scalar v = 1;
    for (int k = 0; k < dims(); ++k) v *= spacing(k);
    return v;
  }

  bool all_periodic() const {
    for (const auto& a : axes_)
      if (a.boundary != Boundary::periodic) return false;
    return true;
  }

  /// Offset of node 0 from lo in units of dx.
  Scalar node_offset(int k) const { return boundary(k) == Boundary::periodic ? Scalar(0) : Scalar(0.5); }

  /// Node coordinate, computed about the box centre so that symmetric boxes
  /// give coordinates that are exact negatives of each other.
  Scalar coordinate(int k, Index i) const {
    const Scalar centre = (axes_[k].lo + axes_[k].hi) / 2;
    const Scalar n = static_cast<Scalar>(axes_[k].points);
    return centre + (static_cast<Scalar>(i) + node_offset(k) - n / 2) * spacing(k);
  }

  std::array<Index, 3> unravel(Index linear) const {
    std::array<Index, 3> idx{0, 0, 0};
    for (int k = 0; k < dims(); ++k) {
      idx[k] = linear / strides_[k];
      linear -= idx[k] * strides_[k];
    }
    return idx;
  }

  Index ravel(const std::array<Index, 3>& idx) const {
    Index linear = 0;
    for (int k = 0; k < dims(); ++k) linear += idx[k] * strides_[k];
    return linear;
  }

  Point<Scalar> node(Index linear) const {
    const auto idx = unravel(linear);
    Point<Scalar> x(dims());
    for (int k = 0; k < dims(); ++k) x[k] = coordinate(k, idx[k]);
    return x;
  }

  /// Map a coordinate into the box: wrap on periodic axes, fold back on
  /// reflecting axes (repeatedly, for proposals that overshoot by more than
  /// one box length).
  Scalar fold(int k, Scalar x) const {
    const Scalar lo_k = lo(k);
    const Scalar len = length(k);
    if (boundary(k) == Boundary::periodic) {
      Scalar y = std::fmod(x - lo_k, len);
      if (y < 0) y += len;
      if (y >= len) y = 0;
      return lo_k + y;
    }
    if (x >= lo_k && x <= hi(k)) return x;
    Scalar y = std::fmod(x - lo_k, 2 * len);
    if (y < 0) y += 2 * len;
    if (y > len) y = 2 * len - y;
    return lo_k + y;
  }

  Point<Scalar> fold(Point<Scalar> x) const {
    for (int k = 0; k < dims(); ++k) x[k] = fold(k, x[k]);
    return x;
  }

  bool contains(const Point<Scalar>& x) const {
    if (x.size() != dims()) return false;
    for (int k = 0; k < dims(); ++k)
      if (!(x[k] >= lo(k) && x[k] <= hi(k))) return false;
    return true;
  }

  friend bool operator==(const Grid& a, const Grid& b) { return a.axes_ == b.axes_; }

 private:
  std::vector<Axis<Scalar>> axes_;
  std::array<Index, 3> strides_{1, 1, 1};
  Index total_ = 0;
};

template <typename Scalar>
void require_same_grid(const Grid<Scalar>& a, const Grid<Scalar>& b, const char* what) {
  if (!(a == b)) throw std::invalid_argument(std::string(what) + ": grid mismatch");
}

/// Nonnegative density p(X, t) sampled on grid nodes (cell averages).
template <typename Scalar = double>
struct DensityField {
  Grid<Scalar> grid;
  RealArray<Scalar> values;
  Scalar time = 0;

  DensityField() = default;
  DensityField(Grid<Scalar> g, RealArray<Scalar> v, Scalar t = 0) : grid(std::move(g)), values(std::move(v)), time(t) {
    if (values.size() != grid.size()) throw std::invalid_argument("density: value count does not match grid");
  }
  static DensityField zeros(const Grid<Scalar>& g, Scalar t = 0) {
    return DensityField(g, RealArray<Scalar>::Zero(g.size()), t);
  }
};

/// Complex wave function on grid nodes.
template <typename Scalar = double>
struct WaveField {
  Grid<Scalar> grid;
  ComplexArray<Scalar> values;
  Scalar time = 0;

  WaveField() = default;
  WaveField(Grid<Scalar> g, ComplexArray<Scalar> v, Scalar t = 0) : grid(std::move(g)), values(std::move(v)), time(t) {
    if (values.size() != grid.size()) throw std::invalid_argument("wave: value count does not match grid");
  }

  RealArray<Scalar> density() const { return values.abs2(); }
};

/// N-vector per node, stored as a (points x dims) array.
template <typename Scalar>
using VectorValues = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
bool all_finite(const Eigen::ArrayBase<Scalar>& a) {
  return a.allFinite();
}

template <typename Scalar>
void require_finite(const WaveField<Scalar>& psi, const char* what) {
  if (!psi.values.real().allFinite() || !psi.values.imag().allFinite()) {
    throw std::runtime_error(std::string(what) + ": wave field became non-finite");
  }
}

template <typename Scalar>
Scalar integrate(const Grid<Scalar>& grid, const RealArray<Scalar>& values) {
  return values.sum() * grid.cell_volume();
}

/// Midpoint quadrature of a density over the grid's cells.
template <typename Scalar>
Scalar integrate(const DensityField<Scalar>& field) {
  return integrate(field.grid, field.values);
}

template <typename Scalar>
Scalar squared_norm(const WaveField<Scalar>& psi) {
  return psi.values.abs2().sum() * psi.grid.cell_volume();
}

template <typename Scalar>
DensityField<Scalar> normalized(DensityField<Scalar> field) {
  const Scalar z = integrate(field);
  if (!(z > 0)) throw std::domain_error("cannot normalize a density with zero mass");
  field.values /= z;
  return field;
}

/// Central-difference gradient of ln(values + epsilon).
///
/// Periodic axes wrap; reflecting axes use the second-order one-sided stencil
/// at the two end nodes.
template <typename Scalar>
VectorValues<Scalar> gradient_log(const Grid<Scalar>& grid, const RealArray<Scalar>& values, Scalar epsilon) {
  if (!(epsilon > 0)) throw std::invalid_argument("gradient_log: epsilon must be > 0");
  if (values.size() != grid.size()) throw std::invalid_argument("gradient_log: value count does not match grid");
  const RealArray<Scalar> logv = (values + epsilon).log();
  VectorValues<Scalar> grad(grid.size(), grid.dims());
  for (int k = 0; k < grid.dims(); ++k) {
    const Index n = grid.points(k);
    const Index s = grid.stride(k);
    const Scalar inv2dx = Scalar(1) / (2 * grid.spacing(k));
    const bool periodic = grid.boundary(k) == Boundary::periodic;
    for (Index lin = 0; lin < grid.size(); ++lin) {
      const Index i = (lin / s) % n;
      const Index base = lin - i * s;
      Scalar g;
      if (i > 0 && i < n - 1) {
        g = (logv[lin + s] - logv[lin - s]) * inv2dx;
      } else if (periodic) {
        const Index ip = (i + 1) % n;
        const Index im = (i + n - 1) % n;
        g = (logv[base + ip * s] - logv[base + im * s]) * inv2dx;
      } else if (i == 0) {
        g = (-3 * logv[lin] + 4 * logv[lin + s] - logv[lin + 2 * s]) * inv2dx;
      } else {
        g = (3 * logv[lin] - 4 * logv[lin - s] + logv[lin - 2 * s]) * inv2dx;
      }
      grad(lin, k) = g;
    }
  }
  return grad;
}

template <typename Scalar>
VectorValues<Scalar> gradient_log(const DensityField<Scalar>& field, Scalar epsilon) {
  return gradient_log(field.grid, field.values, epsilon);
}

/// Up to 2^dims (node, weight) pairs for multilinear interpolation at x.
template <typename Scalar>
struct Stencil {
  std::array<Index, 8> nodes{};
  std::array<Scalar, 8> weights{};
  int count = 0;
};

template <typename Scalar>
Stencil<Scalar> interpolation_stencil(const Grid<Scalar>& grid, const Point<Scalar>& x) {
  if (x.size() != grid.dims()) throw std::invalid_argument("interpolate: point dimension does not match grid");
  std::array<Index, 3> i0{}, i1{};
  std::array<Scalar, 3> frac{};
  for (int k = 0; k < grid.dims(); ++k) {
    const Index n = grid.points(k);
    const Scalar xf = grid.fold(k, x[k]);
    Scalar u = (xf - grid.lo(k)) / grid.spacing(k) - grid.node_offset(k);
    // Snap onto a node when within rounding of it.
    const Scalar r = std::round(u);
    if (std::abs(u - r) <= 64 * std::numeric_limits<Scalar>::epsilon() * std::max(Scalar(1), std::abs(u))) u = r;
    if (grid.boundary(k) == Boundary::periodic) {
      if (u >= static_cast<Scalar>(n)) u -= static_cast<Scalar>(n);
      Index a = static_cast<Index>(std::floor(u));
      if (a >= n) a = n - 1;
      if (a < 0) a = 0;
      frac[k] = u - static_cast<Scalar>(a);
      i0[k] = a;
      i1[k] = (a + 1) % n;
    } else {
      u = std::clamp(u, Scalar(0), static_cast<Scalar>(n - 1));
      Index a = static_cast<Index>(std::floor(u));
      if (a >= n - 1) a = n - 1;
      frac[k] = u - static_cast<Scalar>(a);
      i0[k] = a;
      i1[k] = std::min<Index>(a + 1, n - 1);
    }
  }
  Stencil<Scalar> st;
  const int corners = 1 << grid.dims();
  for (int c = 0; c < corners; ++c) {
    Index lin = 0;
    Scalar w = 1;
    for (int k = 0; k < grid.dims(); ++k) {
      const bool upper = (c >> k) & 1;
      lin += (upper ? i1[k] : i0[k]) * grid.stride(k);
      w *= upper ? frac[k] : (1 - frac[k]);
    }
    if (w == 0) continue;
    st.nodes[st.count] = lin;
    st.weights[st.count] = w;
    ++st.count;
  }
  return st;
}

/// Multilinear interpolation of a scalar field.
template <typename Scalar>
Scalar interpolate(const Grid<Scalar>& grid, const RealArray<Scalar>& values, const Point<Scalar>& x) {
  const auto st = interpolation_stencil(grid, x);
  if (st.count == 1) return values[st.nodes[0]];
  Scalar v = 0;
  for (int j = 0; j < st.count; ++j) v += st.weights[j] * values[st.nodes[j]];
  return v;
}

template <typename Scalar>
Scalar interpolate(const DensityField<Scalar>& field, const Point<Scalar>& x) {
  return interpolate(field.grid, field.values, x);
}

/// Multilinear interpolation of a vector field.
template <typename Scalar>
Point<Scalar> interpolate(const Grid<Scalar>& grid, const VectorValues<Scalar>& values, const Point<Scalar>& x) {
  const auto st = interpolation_stencil(grid, x);
  Point<Scalar> v(grid.dims());
  if (st.count == 1) {
    for (int k = 0; k < grid.dims(); ++k) v[k] = values(st.nodes[0], k);
    return v;
  }
  v.setZero();
  for (int j = 0; j < st.count; ++j)
    for (int k = 0; k < grid.dims(); ++k) v[k] += st.weights[j] * values(st.nodes[j], k);
  return v;
}

/// Index of the cell containing x; out-of-box points on reflecting axes land in
/// the nearest boundary cell and set `outside`.
template <typename Scalar>
Index cell_index(const Grid<Scalar>& grid, const Point<Scalar>& x, bool* outside = nullptr) {
  Index lin = 0;
  bool out = false;
  for (int k = 0; k < grid.dims(); ++k) {
    const Index n = grid.points(k);
    Scalar xk = x[k];
    if (grid.boundary(k) == Boundary::periodic) {
      xk = grid.fold(k, xk);
      Index i = static_cast<Index>(std::floor((xk - grid.lo(k)) / grid.spacing(k) + Scalar(0.5)));
      i %= n;
      lin += i * grid.stride(k);
    } else {
      Index i = static_cast<Index>(std::floor((xk - grid.lo(k)) / grid.spacing(k)));
      if (xk < grid.lo(k) || xk > grid.hi(k)) out = true;
      i = std::clamp<Index>(i, 0, n - 1);
      lin += i * grid.stride(k);
    }
  }
  if (outside) *outside = out;
  return lin;
}

}  // namespace psifield
