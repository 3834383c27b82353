#pragma once

#include "psifield/grid.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace psifield {

/// Cell counts normalized by n * cell volume. Points outside a reflecting
/// box are counted in the nearest boundary cell and tallied in `outside`.
template <typename Scalar>
DensityField<Scalar> histogram(const std::vector<Point<Scalar>>& points, const Grid<Scalar>& grid,
                               Index* outside = nullptr) {
  if (points.empty()) throw std::invalid_argument("histogram: need at least one point");
  RealArray<Scalar> counts = RealArray<Scalar>::Zero(grid.size());
  Index out = 0;
  for (const auto& p : points) {
    if (p.size() != grid.dims()) throw std::invalid_argument("histogram: point dimension does not match grid");
    bool o = false;
    counts[cell_index(grid, p, &o)] += 1;
    out += o ? 1 : 0;
  }
  if (outside) *outside = out;
  counts /= static_cast<Scalar>(points.size()) * grid.cell_volume();
  return DensityField<Scalar>(grid, std::move(counts), 0);
}

/// Mass-preserving transfer onto a coarser grid over the same box. A fine
/// cell straddling a coarse cell edge is split by overlap length.
template <typename Scalar>
DensityField<Scalar> coarse_grain(const DensityField<Scalar>& fine, const Grid<Scalar>& coarse) {
  const Grid<Scalar>& g = fine.grid;
  if (g.dims() != coarse.dims()) throw std::invalid_argument("coarse_grain: dimension mismatch");
  std::vector<std::vector<std::array<std::pair<Index, Scalar>, 2>>> w(static_cast<std::size_t>(g.dims()));
  for (int k = 0; k < g.dims(); ++k) {
    if (g.lo(k) != coarse.lo(k) || g.hi(k) != coarse.hi(k) || g.boundary(k) != coarse.boundary(k))
      throw std::invalid_argument("coarse_grain: grids must cover the same box with the same boundaries");
    if (coarse.spacing(k) < g.spacing(k)) throw std::invalid_argument("coarse_grain: target grid is finer");
    const Scalar big = coarse.spacing(k), r = g.spacing(k) / big;
    const Index n = coarse.points(k);
    auto& wk = w[static_cast<std::size_t>(k)];
    for (Index i = 0; i < g.points(k); ++i) {
      // position of the fine cell's left edge in units of coarse cells
      const Scalar u = (g.coordinate(k, i) - g.spacing(k) / 2 - coarse.lo(k)) / big - coarse.node_offset(k) + Scalar(0.5);
      const Scalar j0 = std::floor(u);
      const Scalar first = std::min(Scalar(1), (j0 + 1 - u) / r);
      auto wrap = [&](Index j) { return g.boundary(k) == Boundary::periodic ? ((j % n) + n) % n : std::clamp<Index>(j, 0, n - 1); };
      const auto j = static_cast<Index>(j0);
      wk.push_back({std::pair{wrap(j), first}, std::pair{wrap(j + 1), 1 - first}});
    }
  }
  RealArray<Scalar> mass = RealArray<Scalar>::Zero(coarse.size());
  for (Index lin = 0; lin < g.size(); ++lin) {
    const auto idx = g.unravel(lin);
    const Scalar m = fine.values[lin] * g.cell_volume();
    // 2^dims overlap combinations
    for (int mask = 0; mask < (1 << g.dims()); ++mask) {
      std::array<Index, 3> c{0, 0, 0};
      Scalar f = m;
      for (int k = 0; k < g.dims(); ++k) {
        const auto& [j, frac] = w[static_cast<std::size_t>(k)][static_cast<std::size_t>(idx[k])][(mask >> k) & 1];
        c[k] = j;
        f *= frac;
      }
      if (f != 0) mass[coarse.ravel(c)] += f;
    }
  }
  return DensityField<Scalar>(coarse, mass / coarse.cell_volume(), fine.time);
}

}  // namespace psifield
