#pragma once

#include "psifield/grid.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace psifield {

struct UnsupportedPropagator : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// H = -(hbar^2 / 2 m_k) sum_k d^2/dx_k^2 + U(X).
template <typename Scalar = double>
struct HamiltonianSpec {
  Scalar hbar = 1;
  std::vector<Scalar> mass;     // one per dim; empty means 1 everywhere
  RealArray<Scalar> potential;  // empty means U = 0

  Scalar mass_of(int k) const { return mass.empty() ? Scalar(1) : mass.at(static_cast<std::size_t>(k)); }

  void validate(const Grid<Scalar>& grid) const {
    if (!(hbar > 0)) throw std::invalid_argument("hamiltonian: hbar must be > 0");
    if (!mass.empty() && static_cast<int>(mass.size()) != grid.dims())
      throw std::invalid_argument("hamiltonian: need one mass per dimension");
    for (Scalar m : mass)
      if (!(m > 0)) throw std::invalid_argument("hamiltonian: masses must be > 0");
    if (potential.size() != 0) {
      if (potential.size() != grid.size()) throw std::invalid_argument("hamiltonian: potential does not match grid");
      if (!potential.allFinite()) throw std::invalid_argument("hamiltonian: potential must be finite");
    }
  }

  RealArray<Scalar> potential_or_zero(const Grid<Scalar>& grid) const {
    return potential.size() == 0 ? RealArray<Scalar>::Zero(grid.size()) : potential;
  }
};

/// Isotropic harmonic potential 0.5 * m * omega^2 * |x|^2 about the origin.
template <typename Scalar>
RealArray<Scalar> harmonic_potential(const Grid<Scalar>& grid, Scalar omega = 1, Scalar mass = 1) {
  RealArray<Scalar> u(grid.size());
  for (Index i = 0; i < grid.size(); ++i) u[i] = Scalar(0.5) * mass * omega * omega * grid.node(i).squaredNorm();
  return u;
}

namespace detail {

/// Angular wavenumber of FFT bin j on an axis of n points and length L.
template <typename Scalar>
Scalar wavenumber(Index j, Index n, Scalar length) {
  const Index m = (j < (n + 1) / 2) ? j : j - n;
  return 2 * std::numbers::pi_v<Scalar> * static_cast<Scalar>(m) / length;
}

/// In-place FFT along every axis; forward is unscaled, inverse divides by N.
template <typename Scalar>
class GridFFT {
 public:
  explicit GridFFT(const Grid<Scalar>& grid) : grid_(grid) {}

  void forward(ComplexArray<Scalar>& v) { transform(v, true); }
  void inverse(ComplexArray<Scalar>& v) { transform(v, false); }

 private:
  void transform(ComplexArray<Scalar>& v, bool fwd) {
    for (int k = 0; k < grid_.dims(); ++k) {
      const Index n = grid_.points(k);
      const Index s = grid_.stride(k);
      in_.resize(static_cast<std::size_t>(n));
      for (Index lin = 0; lin < grid_.size(); ++lin) {
        if ((lin / s) % n != 0) continue;  // visit each line once, from its first node
        for (Index i = 0; i < n; ++i) in_[static_cast<std::size_t>(i)] = v[lin + i * s];
        if (fwd)
          fft_.fwd(out_, in_);
        else
          fft_.inv(out_, in_);
        for (Index i = 0; i < n; ++i) v[lin + i * s] = out_[static_cast<std::size_t>(i)];
      }
    }
  }

  Grid<Scalar> grid_;
  Eigen::FFT<Scalar> fft_;
  std::vector<std::complex<Scalar>> in_, out_;
};

template <typename Scalar>
RealArray<Scalar> kinetic_spectrum(const Grid<Scalar>& grid, const HamiltonianSpec<Scalar>& h) {
  RealArray<Scalar> e = RealArray<Scalar>::Zero(grid.size());
  for (Index lin = 0; lin < grid.size(); ++lin) {
    const auto idx = grid.unravel(lin);
    Scalar energy = 0;
    for (int k = 0; k < grid.dims(); ++k) {
      const Scalar kk = wavenumber(idx[k], grid.points(k), grid.length(k));
      energy += h.hbar * h.hbar * kk * kk / (2 * h.mass_of(k));
    }
    e[lin] = energy;
  }
  return e;
}

template <typename Scalar>
void require_periodic(const Grid<Scalar>& grid) {
  if (!grid.all_periodic())
    throw UnsupportedPropagator("spectral propagator requires periodic boundaries on every axis");
}

}  // namespace detail

/// Strang-split spectral propagator for a fixed (H, dt); reuse it across steps.
template <typename Scalar = double>
class SplitStepPropagator {
 public:
  SplitStepPropagator(const Grid<Scalar>& grid, const HamiltonianSpec<Scalar>& h, Scalar dt) : grid_(grid), fft_(grid), dt_(dt) {
    detail::require_periodic(grid);
    h.validate(grid);
    if (!(dt > 0)) throw std::invalid_argument("split-step: dt must be > 0");
    const RealArray<Scalar> u = h.potential_or_zero(grid);
    half_potential_ = (u * (-dt / (2 * h.hbar))).unaryExpr([](Scalar phase) { return std::polar(Scalar(1), phase); });
    const RealArray<Scalar> e = detail::kinetic_spectrum(grid, h);
    kinetic_ = (e * (-dt / h.hbar)).unaryExpr([](Scalar phase) { return std::polar(Scalar(1), phase); });
  }

  Scalar dt() const { return dt_; }

  void step(WaveField<Scalar>& psi) {
    require_same_grid(psi.grid, grid_, "split-step");
    psi.values *= half_potential_;
    fft_.forward(psi.values);
    psi.values *= kinetic_;
    fft_.inverse(psi.values);
    psi.values *= half_potential_;
    psi.time += dt_;
  }

 private:
  Grid<Scalar> grid_;
  detail::GridFFT<Scalar> fft_;
  Scalar dt_;
  ComplexArray<Scalar> half_potential_;
  ComplexArray<Scalar> kinetic_;
};

/// One Strang step exp(-iU dt/2hbar) exp(-iK dt/hbar) exp(-iU dt/2hbar).
template <typename Scalar>
WaveField<Scalar> step_splitstep(WaveField<Scalar> psi, const HamiltonianSpec<Scalar>& h, Scalar dt) {
  SplitStepPropagator<Scalar> prop(psi.grid, h, dt);
  prop.step(psi);
  require_finite(psi, "step_splitstep");
  return psi;
}

/// Repeated split steps; returns snapshots at t0, every `stride` steps, and
/// at t_final.
template <typename Scalar>
std::vector<WaveField<Scalar>> evolve(WaveField<Scalar> psi, const HamiltonianSpec<Scalar>& h, Scalar t_final, Scalar dt,
                                      Index snapshot_stride) {
  if (snapshot_stride < 1) throw std::invalid_argument("evolve: snapshot stride must be >= 1");
  if (!(dt > 0)) throw std::invalid_argument("evolve: dt must be > 0");
  if (t_final < 0) throw std::invalid_argument("evolve: t_final must be >= 0");
  const Scalar ratio = t_final / dt;
  const auto steps = static_cast<Index>(std::llround(ratio));
  if (std::abs(static_cast<Scalar>(steps) * dt - t_final) > Scalar(1e-9))
    throw std::invalid_argument("evolve: dt must divide t_final");
  std::vector<WaveField<Scalar>> out;
  out.reserve(static_cast<std::size_t>((steps + snapshot_stride - 1) / snapshot_stride + 1));
  const Scalar t0 = psi.time;
  out.push_back(psi);
  if (steps == 0) return out;
  SplitStepPropagator<Scalar> prop(psi.grid, h, dt);
  for (Index s = 1; s <= steps; ++s) {
    prop.step(psi);
    // Recompute time from the step count so long runs do not accumulate drift.
    psi.time = t0 + static_cast<Scalar>(s) * dt;
    if (s % snapshot_stride == 0 || s == steps) {
      require_finite(psi, "evolve");
      out.push_back(psi);
    }
  }
  return out;
}

/// <H> / <psi|psi>, kinetic part evaluated spectrally.
template <typename Scalar>
Scalar energy(const WaveField<Scalar>& psi, const HamiltonianSpec<Scalar>& h) {
  detail::require_periodic(psi.grid);
  ComplexArray<Scalar> hat = psi.values;
  detail::GridFFT<Scalar> fft(psi.grid);
  fft.forward(hat);
  const RealArray<Scalar> e = detail::kinetic_spectrum(psi.grid, h);
  const Scalar n = static_cast<Scalar>(psi.grid.size());
  const Scalar kinetic = (e * hat.abs2()).sum() / n;
  const Scalar potential = (h.potential_or_zero(psi.grid) * psi.values.abs2()).sum();
  return (kinetic + potential) / psi.values.abs2().sum();
}

// ---------------------------------------------------------------------------
// Initial states

template <typename Scalar = double>
struct DoubleGaussianParams {
  Scalar a = 1;  // width
  Scalar b = 1;  // half-separation

  void validate() const {
    if (!(a > 0) || !(b > 0)) throw std::invalid_argument("double gaussian: a and b must be > 0");
  }
  bool localization_regime() const { return b / a >= 2; }
};

/// exp(-(x-b)^2/2a^2) + exp(-(x+b)^2/2a^2), unnormalized.
template <typename Scalar>
Scalar double_gaussian_value(const DoubleGaussianParams<Scalar>& p, Scalar x) {
  const Scalar s = 2 * p.a * p.a;
  return std::exp(-(x - p.b) * (x - p.b) / s) + std::exp(-(x + p.b) * (x + p.b) / s);
}

template <typename Scalar>
WaveField<Scalar> make_double_gaussian(const Grid<Scalar>& grid, const DoubleGaussianParams<Scalar>& p) {
  p.validate();
  if (grid.dims() != 1) throw std::invalid_argument("double gaussian: grid must be 1-D");
  const Scalar reach = p.b + 6 * p.a;
  if (grid.lo(0) > -reach || grid.hi(0) < reach)
    throw std::invalid_argument("double gaussian: grid extent must cover [-b-6a, b+6a]");
  ComplexArray<Scalar> v(grid.size());
  for (Index i = 0; i < grid.size(); ++i) v[i] = double_gaussian_value(p, grid.coordinate(0, i));
  return WaveField<Scalar>(grid, std::move(v), 0);
}

/// exp(-|x-c|^2 / 2w^2 + i k.x), unnormalized.
template <typename Scalar>
WaveField<Scalar> make_packet(const Grid<Scalar>& grid, const Point<Scalar>& center, Scalar width,
                              const Point<Scalar>& momentum) {
  if (!(width > 0)) throw std::invalid_argument("packet: width must be > 0");
  if (center.size() != grid.dims() || momentum.size() != grid.dims())
    throw std::invalid_argument("packet: center/momentum dimension does not match grid");
  ComplexArray<Scalar> v(grid.size());
  for (Index i = 0; i < grid.size(); ++i) {
    const Point<Scalar> x = grid.node(i);
    const Scalar r2 = (x - center).squaredNorm();
    v[i] = std::polar(std::exp(-r2 / (2 * width * width)), momentum.dot(x));
  }
  WaveField<Scalar> psi(grid, std::move(v), 0);
  if (!(squared_norm(psi) > 0)) throw std::invalid_argument("packet: state vanishes on the grid");
  return psi;
}

/// Eigenpairs of the discretized Hamiltonian (spectral kinetic term), lowest
/// first. Eigenvectors are normalized to sum |phi|^2 dV = 1 with the sign
/// chosen so that the largest-magnitude component is positive.
template <typename Scalar = double>
struct Spectrum {
  Grid<Scalar> grid;
  RealArray<Scalar> energies;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> states;  // one column per level

  Index levels() const { return energies.size(); }
};

template <typename Scalar>
Spectrum<Scalar> compute_spectrum(const Grid<Scalar>& grid, const HamiltonianSpec<Scalar>& h, Index levels) {
  detail::require_periodic(grid);
  h.validate(grid);
  constexpr Index max_dense = 2048;
  const Index n = grid.size();
  if (n > max_dense) throw std::invalid_argument("spectrum: dense diagonalization limited to 2048 grid points");
  if (levels < 1 || levels > n) throw std::invalid_argument("spectrum: requested level count out of range");

  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Matrix hm(n, n);
  detail::GridFFT<Scalar> fft(grid);
  const RealArray<Scalar> e = detail::kinetic_spectrum(grid, h);
  ComplexArray<Scalar> col(n);
  for (Index j = 0; j < n; ++j) {
    col.setZero();
    col[j] = 1;
    fft.forward(col);
    col *= e;
    fft.inverse(col);
    hm.col(j) = col.real().matrix();
  }
  hm = ((hm + hm.transpose()) / 2).eval();
  hm.diagonal() += h.potential_or_zero(grid).matrix();

  Eigen::SelfAdjointEigenSolver<Matrix> solver(hm);
  if (solver.info() != Eigen::Success) throw std::runtime_error("spectrum: eigensolver failed");
  Spectrum<Scalar> s{grid, solver.eigenvalues().head(levels).array(), solver.eigenvectors().leftCols(levels)};
  const Scalar scale = Scalar(1) / std::sqrt(grid.cell_volume());
  for (Index c = 0; c < levels; ++c) {
    Index arg = 0;
    s.states.col(c).cwiseAbs().maxCoeff(&arg);
    const Scalar sign = s.states(arg, c) < 0 ? Scalar(-1) : Scalar(1);
    s.states.col(c) *= sign * scale;
  }
  return s;
}

template <typename Scalar>
struct SuperpositionTerm {
  std::complex<Scalar> coefficient;
  Index level = 0;
};

/// sum_n c_n phi_n from a precomputed spectrum.
template <typename Scalar>
WaveField<Scalar> make_superposition(const std::vector<SuperpositionTerm<Scalar>>& terms, const Spectrum<Scalar>& spectrum) {
  if (terms.empty()) throw std::invalid_argument("superposition: no terms");
  ComplexArray<Scalar> v = ComplexArray<Scalar>::Zero(spectrum.grid.size());
  for (const auto& t : terms) {
    if (t.level < 0 || t.level >= spectrum.levels())
      throw std::invalid_argument("superposition: eigen index " + std::to_string(t.level) + " outside computed spectrum");
    v += t.coefficient * spectrum.states.col(t.level).array().template cast<std::complex<Scalar>>();
  }
  WaveField<Scalar> psi(spectrum.grid, std::move(v), 0);
  if (!(squared_norm(psi) > 0)) throw std::invalid_argument("superposition: state has zero norm");
  return psi;
}

template <typename Scalar>
WaveField<Scalar> make_superposition(const std::vector<SuperpositionTerm<Scalar>>& terms, const Grid<Scalar>& grid,
                                     const HamiltonianSpec<Scalar>& h) {
  Index top = 0;
  for (const auto& t : terms) top = std::max(top, t.level);
  return make_superposition(terms, compute_spectrum(grid, h, top + 1));
}

/// Mean wavevector of the state, from its discrete Fourier transform.
template <typename Scalar>
Point<Scalar> mean_momentum(const WaveField<Scalar>& psi, Scalar hbar = 1) {
  detail::require_periodic(psi.grid);
  ComplexArray<Scalar> hat = psi.values;
  detail::GridFFT<Scalar> fft(psi.grid);
  fft.forward(hat);
  const RealArray<Scalar> w = hat.abs2();
  Point<Scalar> mean = Point<Scalar>::Zero(psi.grid.dims());
  for (Index lin = 0; lin < psi.grid.size(); ++lin) {
    const auto idx = psi.grid.unravel(lin);
    for (int k = 0; k < psi.grid.dims(); ++k)
      mean[k] += w[lin] * detail::wavenumber(idx[k], psi.grid.points(k), psi.grid.length(k));
  }
  return hbar * mean / w.sum();
}

}  // namespace psifield
