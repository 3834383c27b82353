#pragma once

#include "psifield/grid.hpp"

#include <optional>
#include <stdexcept>
#include <vector>

namespace psifield {

/// Diffusion constant and node regularization for the guided Particle.
///
/// The regularized density is |Psi|^2 + eps. With `relative_epsilon` the
/// regularizer is epsilon * max|Psi|^2 of the field being converted, which
/// keeps the drift invariant under rescaling of Psi.
template <typename Scalar = double>
struct GuidanceParams {
  Scalar lambda = 1;
  Scalar epsilon = Scalar(1e-12);
  bool relative_epsilon = true;
  std::optional<Scalar> drift_cap;

  void validate() const {
    if (!(lambda > 0)) throw std::invalid_argument("guidance: lambda must be > 0");
    if (!(epsilon > 0)) throw std::invalid_argument("guidance: epsilon must be > 0");
    if (drift_cap && !(*drift_cap > 0)) throw std::invalid_argument("guidance: drift_cap must be > 0 when set");
  }

  Scalar absolute_epsilon(const RealArray<Scalar>& density) const {
    if (!relative_epsilon) return epsilon;
    const Scalar peak = density.size() ? density.maxCoeff() : Scalar(0);
    if (!(peak > 0)) throw std::invalid_argument("guidance: relative epsilon needs a nonzero wave field");
    return epsilon * peak;
  }
};

/// lambda = l^2 / tau.
template <typename Scalar = double>
struct DiffusionSpec {
  Scalar length_scale = 1;
  Scalar time_scale = 1;

  void validate() const {
    if (!(length_scale > 0) || !(time_scale > 0))
      throw std::invalid_argument("diffusion spec: length and time scales must be > 0");
  }
};

template <typename Scalar>
Scalar diffusion_constant(const DiffusionSpec<Scalar>& spec) {
  spec.validate();
  return spec.length_scale * spec.length_scale / spec.time_scale;
}

/// lambda * grad ln(|Psi|^2 + eps) on the grid of the source wave field.
template <typename Scalar = double>
struct DriftField {
  Grid<Scalar> grid;
  VectorValues<Scalar> vectors;  // size() x dims
  Scalar time = 0;
  GuidanceParams<Scalar> params;

  Point<Scalar> at_node(Index i) const {
    Point<Scalar> v(grid.dims());
    for (int k = 0; k < grid.dims(); ++k) v[k] = vectors(i, k);
    return v;
  }

  Scalar max_magnitude() const { return vectors.rowwise().norm().maxCoeff(); }
};

/// V = -ln(|Psi|^2 + eps).
template <typename Scalar>
DensityField<Scalar> potential_field(const WaveField<Scalar>& psi, const GuidanceParams<Scalar>& params) {
  params.validate();
  const RealArray<Scalar> rho = psi.density();
  const Scalar eps = params.absolute_epsilon(rho);
  return DensityField<Scalar>(psi.grid, -(rho + eps).log(), psi.time);
}

template <typename Scalar>
void apply_drift_cap(VectorValues<Scalar>& v, Scalar cap) {
  for (Index i = 0; i < v.rows(); ++i) {
    const Scalar m = v.row(i).matrix().norm();
    if (m > cap) v.row(i) *= cap / m;
  }
}

template <typename Scalar>
DriftField<Scalar> drift_field(const WaveField<Scalar>& psi, const GuidanceParams<Scalar>& params) {
  params.validate();
  const RealArray<Scalar> rho = psi.density();
  const Scalar eps = params.absolute_epsilon(rho);
  DriftField<Scalar> d{psi.grid, params.lambda * gradient_log(psi.grid, rho, eps), psi.time, params};
  if (params.drift_cap) apply_drift_cap(d.vectors, *params.drift_cap);
  if (!d.vectors.allFinite()) throw std::runtime_error("drift_field: non-finite drift");
  return d;
}

enum class TimeInterpolation { piecewise_constant, linear };

/// Drift at an off-grid point between two snapshots (or from one, if static).
template <typename Scalar>
Point<Scalar> drift_at(const DriftField<Scalar>& t0, const DriftField<Scalar>* t1, const Point<Scalar>& x, Scalar t,
                       TimeInterpolation mode = TimeInterpolation::piecewise_constant) {
  if (t1 == nullptr) return interpolate(t0.grid, t0.vectors, x);
  if (t < t0.time || t > t1->time) throw std::out_of_range("drift_at: time outside snapshot bracket");
  const Point<Scalar> v0 = interpolate(t0.grid, t0.vectors, x);
  if (mode == TimeInterpolation::piecewise_constant) return v0;
  const Scalar span = t1->time - t0.time;
  if (!(span > 0)) return v0;
  const Scalar w = (t - t0.time) / span;
  return (1 - w) * v0 + w * interpolate(t1->grid, t1->vectors, x);
}

/// Axis-aligned node surface {x_axis = position}.
template <typename Scalar = double>
struct NodeSurface {
  int axis = 0;
  Scalar position = 0;
};

/// Nodes of a 1-D field: places where the cell-wise linear interpolant of the
/// complex amplitude has |Psi|^2 below `depth` times the smaller of the two
/// density maxima bracketing it. Bracketing maxima below
/// `significance` times the global maximum are ignored, so roundoff in the
/// tails is never reported. A shallow minimum between two packets that have not
/// yet reached equal amplitude is not a node.
template <typename Scalar>
std::vector<NodeSurface<Scalar>> locate_nodes_1d(const WaveField<Scalar>& psi, Scalar depth = Scalar(1e-4),
                                                 Scalar significance = Scalar(1e-3)) {
  if (psi.grid.dims() != 1) throw std::invalid_argument("locate_nodes_1d: grid must be 1-D");
  const auto& v = psi.values;
  const RealArray<Scalar> rho = psi.density();
  const Index n = rho.size();
  const Scalar floor = significance * rho.maxCoeff();
  const Scalar dx = psi.grid.spacing(0);
  std::vector<NodeSurface<Scalar>> nodes;
  for (Index i = 0; i + 1 < n; ++i) {
    const std::complex<Scalar> d = v[i + 1] - v[i];
    const Scalar dd = std::norm(d);
    if (!(dd > 0)) continue;
    const Scalar s = -std::real(std::conj(v[i]) * d) / dd;
    if (!(s > 0 && s < 1)) continue;  // modulus not minimal inside this cell
    const Scalar m = std::norm(v[i] + s * d);
    Index l = i, r = i + 1;
    while (l > 0 && rho[l - 1] >= rho[l]) --l;
    while (r + 1 < n && rho[r + 1] >= rho[r]) ++r;
    const Scalar shoulder = std::min(rho[l], rho[r]);
    if (!(shoulder >= floor && m <= depth * shoulder)) continue;
    nodes.push_back({0, psi.grid.coordinate(0, i) + s * dx});
  }
  return nodes;
}

}  // namespace psifield
