#pragma once

#include "psifield/grid.hpp"
#include "psifield/guidance.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <cmath>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace psifield {

enum class FPScheme { chang_cooper, central };
enum class FPStepping { explicit_euler, implicit_euler };

struct StabilityViolation : std::invalid_argument {
  StabilityViolation(const std::string& what, double suggested) : std::invalid_argument(what), suggested_dt(suggested) {}
  double suggested_dt;
};

namespace detail {

/// Logarithmic mean (a - b) / (ln a - ln b), accurate when a ~ b.
template <typename Scalar>
Scalar log_mean(Scalar a, Scalar b) {
  const Scalar x = b / a - 1;
  if (x == 0) return a;
  if (std::abs(x) < Scalar(1e-3)) return a * x / std::log1p(x);
  return (b - a) / (std::log(b) - std::log(a));
}

}  // namespace detail

/// Finite-volume generator of dp/dt = lambda div(grad p - p grad ln rho),
/// rho = |Psi|^2 + eps, written as transfer rates between neighbouring cells.
///
/// rates(k)(i, 0) is the rate from node i to its +1 neighbour along axis k and
/// rates(k)(i, 1) the reverse rate. Reflecting axes have no face past the last
/// node; periodic axes wrap.
///
/// With the Chang-Cooper (exponentially fitted) weights the rates are
///   r(i->j) = lambda/dx^2 * rho_j / L(rho_i, rho_j)
/// with L the logarithmic mean, so rho_i r(i->j) = rho_j r(j->i) and every
/// face flux vanishes when p is proportional to rho.
template <typename Scalar = double>
struct FPOperator {
  Grid<Scalar> grid;
  RealArray<Scalar> rho;
  Scalar lambda = 1;
  FPScheme scheme = FPScheme::chang_cooper;
  std::vector<Eigen::Array<Scalar, Eigen::Dynamic, 2>> rates;

  /// Index of the +1 neighbour of `lin` along axis k, or -1 when there is no face.
  Index neighbour(Index lin, int k) const {
    const Index n = grid.points(k), s = grid.stride(k);
    const Index i = (lin / s) % n;
    if (i + 1 < n) return lin + s;
    if (grid.boundary(k) == Boundary::periodic) return lin - i * s;
    return -1;
  }

  /// Largest total out-rate over all cells; explicit Euler stays positive for
  /// dt <= 1 / max_out_rate().
  Scalar max_out_rate() const {
    RealArray<Scalar> out = RealArray<Scalar>::Zero(grid.size());
    for (int k = 0; k < grid.dims(); ++k)
      for (Index lin = 0; lin < grid.size(); ++lin) {
        const Index j = neighbour(lin, k);
        if (j < 0) continue;
        out[lin] += rates[k](lin, 0);
        out[j] += rates[k](lin, 1);
      }
    return out.maxCoeff();
  }

  /// dp/dt at p.
  RealArray<Scalar> apply(const RealArray<Scalar>& p) const {
    RealArray<Scalar> dp = RealArray<Scalar>::Zero(p.size());
    for (int k = 0; k < grid.dims(); ++k)
      for (Index lin = 0; lin < grid.size(); ++lin) {
        const Index j = neighbour(lin, k);
        if (j < 0) continue;
        const Scalar flux = face_flux(p, lin, j, k);
        dp[lin] -= flux;
        dp[j] += flux;
      }
    return dp;
  }

  /// Net transfer rate from lin to its +1 neighbour j along axis k.
  Scalar face_flux(const RealArray<Scalar>& p, Index lin, Index j, int k) const {
    if (scheme == FPScheme::chang_cooper) {
      // w (q_i - q_j) with q = p / rho and w = rho_i r(i->j) = rho_j r(j->i).
      const Scalar w = rates[k](lin, 0) * rho[lin];
      return w * (p[lin] / rho[lin] - p[j] / rho[j]);
    }
    return rates[k](lin, 0) * p[lin] - rates[k](lin, 1) * p[j];
  }

  Eigen::SparseMatrix<Scalar> matrix() const {
    std::vector<Eigen::Triplet<Scalar>> t;
    t.reserve(static_cast<std::size_t>(grid.size() * (1 + 4 * grid.dims())));
    for (int k = 0; k < grid.dims(); ++k)
      for (Index lin = 0; lin < grid.size(); ++lin) {
        const Index j = neighbour(lin, k);
        if (j < 0) continue;
        const Scalar fwd = rates[k](lin, 0), bwd = rates[k](lin, 1);
        t.emplace_back(lin, lin, -fwd);
        t.emplace_back(j, lin, fwd);
        t.emplace_back(j, j, -bwd);
        t.emplace_back(lin, j, bwd);
      }
    Eigen::SparseMatrix<Scalar> m(grid.size(), grid.size());
    m.setFromTriplets(t.begin(), t.end());
    return m;
  }
};

/// Builds the operator for a regularized density rho (already including eps).
template <typename Scalar>
FPOperator<Scalar> make_fp_operator(const Grid<Scalar>& grid, RealArray<Scalar> rho, Scalar lambda,
                                    FPScheme scheme = FPScheme::chang_cooper) {
  if (!(lambda > 0)) throw std::invalid_argument("fp operator: lambda must be > 0");
  if (rho.size() != grid.size() || !(rho > 0).all() || !rho.allFinite())
    throw std::invalid_argument("fp operator: regularized density must be positive and finite");
  FPOperator<Scalar> op{grid, std::move(rho), lambda, scheme, {}};
  for (int k = 0; k < grid.dims(); ++k) {
    const Scalar base = lambda / (grid.spacing(k) * grid.spacing(k));
    Eigen::Array<Scalar, Eigen::Dynamic, 2> r = Eigen::Array<Scalar, Eigen::Dynamic, 2>::Zero(grid.size(), 2);
    for (Index lin = 0; lin < grid.size(); ++lin) {
      const Index j = op.neighbour(lin, k);
      if (j < 0) continue;
      const Scalar ri = op.rho[lin], rj = op.rho[j];
      if (scheme == FPScheme::chang_cooper) {
        const Scalar lm = detail::log_mean(ri, rj);
        r(lin, 0) = base * rj / lm;
        r(lin, 1) = base * ri / lm;
      } else {
        const Scalar half_delta = (std::log(rj) - std::log(ri)) / 2;
        r(lin, 0) = base * (1 + half_delta);
        r(lin, 1) = base * (1 - half_delta);
      }
    }
    op.rates.push_back(std::move(r));
  }
  return op;
}

template <typename Scalar>
FPOperator<Scalar> make_fp_operator(const WaveField<Scalar>& psi, const GuidanceParams<Scalar>& params,
                                    FPScheme scheme = FPScheme::chang_cooper) {
  params.validate();
  const RealArray<Scalar> d = psi.density();
  return make_fp_operator(psi.grid, RealArray<Scalar>(d + params.absolute_epsilon(d)), params.lambda, scheme);
}

/// Explicit or backward-Euler stepping for one operator. Backward-Euler
/// factorizations are cached per distinct dt.
template <typename Scalar = double>
class FPStepper {
 public:
  FPStepper(FPOperator<Scalar> op, FPStepping stepping) : op_(std::move(op)), stepping_(stepping) {}

  const FPOperator<Scalar>& op() const { return op_; }

  Scalar stability_limit() const { return Scalar(1) / op_.max_out_rate(); }

  void step(DensityField<Scalar>& p, Scalar dt) {
    require_same_grid(p.grid, op_.grid, "fp_step");
    if (!(dt > 0)) throw std::invalid_argument("fp_step: dt must be > 0");
    if (stepping_ == FPStepping::explicit_euler) {
      check_explicit(dt);
      p.values += dt * op_.apply(p.values);
    } else {
      // Solve (I - dt L) delta = dt L p for the increment; L p comes from the
      // flux form, so an equilibrium p gives delta = 0 without solver roundoff.
      auto& lu = factor(dt);
      const RealArray<Scalar> rhs = dt * op_.apply(p.values);
      Eigen::Matrix<Scalar, Eigen::Dynamic, 1> delta = lu.solve(rhs.matrix());
      if (lu.info() != Eigen::Success) throw std::runtime_error("fp_step: implicit solve failed");
      // Backward Euler with an M-matrix is positivity preserving; clip roundoff.
      p.values = (p.values + delta.array()).max(Scalar(0));
    }
    p.time += dt;
  }

 private:
  void check_explicit(Scalar dt) const {
    if (op_.scheme == FPScheme::central) {
      for (const auto& r : op_.rates)
        if ((r < 0).any())
          throw StabilityViolation("fp_step: central scheme cell Peclet number exceeds 2; refine the grid or use chang_cooper",
                                   0.0);
    }
    const Scalar limit = stability_limit();
    if (dt > limit * (1 + Scalar(1e-12)))
      throw StabilityViolation("fp_step: dt=" + std::to_string(dt) + " exceeds explicit stability bound; use dt <= " +
                                   std::to_string(limit),
                               static_cast<double>(limit));
  }

  Eigen::SparseLU<Eigen::SparseMatrix<Scalar>>& factor(Scalar dt) {
    auto it = lu_.find(dt);
    if (it != lu_.end()) return *it->second;
    Eigen::SparseMatrix<Scalar> a = -dt * op_.matrix();
    Eigen::SparseMatrix<Scalar> id(a.rows(), a.cols());
    id.setIdentity();
    a += id;
    a.makeCompressed();
    auto lu = std::make_unique<Eigen::SparseLU<Eigen::SparseMatrix<Scalar>>>();
    lu->compute(a);
    if (lu->info() != Eigen::Success) throw std::runtime_error("fp_step: factorization failed");
    return *lu_.emplace(dt, std::move(lu)).first->second;
  }

  FPOperator<Scalar> op_;
  FPStepping stepping_;
  std::map<Scalar, std::unique_ptr<Eigen::SparseLU<Eigen::SparseMatrix<Scalar>>>> lu_;
};

/// One step of the Smoluchowski equation.
template <typename Scalar>
DensityField<Scalar> fp_step(DensityField<Scalar> p, const FPOperator<Scalar>& op, Scalar dt,
                             FPStepping stepping = FPStepping::explicit_euler) {
  FPStepper<Scalar> stepper(op, stepping);
  stepper.step(p, dt);
  return p;
}

template <typename Scalar = double>
struct FPOptions {
  FPScheme scheme = FPScheme::chang_cooper;
  FPStepping stepping = FPStepping::explicit_euler;
  std::vector<Scalar> output_times;  // empty: every snapshot time plus t_final
};

/// Evolves p0 with the operator rebuilt for every wave snapshot; the snapshot
/// with the latest time <= t governs [t, next snapshot). Steps are split so
/// that snapshot and output times are hit exactly.
template <typename Scalar>
std::vector<DensityField<Scalar>> fp_evolve(DensityField<Scalar> p, const std::vector<WaveField<Scalar>>& psi_snapshots,
                                            const GuidanceParams<Scalar>& params, Scalar dt, Scalar t_final,
                                            const FPOptions<Scalar>& options = {}) {
  if (psi_snapshots.empty()) throw std::invalid_argument("fp_evolve: no wave snapshots");
  if (!(dt > 0)) throw std::invalid_argument("fp_evolve: dt must be > 0");
  if (t_final < p.time) throw std::invalid_argument("fp_evolve: t_final before initial time");
  const bool is_static = psi_snapshots.size() == 1;
  if (!is_static && t_final > psi_snapshots.back().time + 1e-9)
    throw std::invalid_argument("fp_evolve: t_final beyond last snapshot");

  std::vector<Scalar> outputs = options.output_times;
  if (outputs.empty()) {
    for (const auto& s : psi_snapshots)
      if (s.time >= p.time - 1e-12 && s.time <= t_final + 1e-12) outputs.push_back(s.time);
    if (outputs.empty() || std::abs(outputs.back() - t_final) > 1e-12) outputs.push_back(t_final);
  }
  std::sort(outputs.begin(), outputs.end());

  auto segment_of = [&](Scalar t) -> std::size_t {
    if (is_static) return 0;
    std::size_t s = 0;
    const Scalar tol = Scalar(1e-9) * std::max(Scalar(1), std::abs(t));
    while (s + 1 < psi_snapshots.size() && psi_snapshots[s + 1].time <= t + tol) ++s;
    return s;
  };

  std::vector<DensityField<Scalar>> out;
  std::size_t next_out = 0;
  const Scalar eps_t = Scalar(1e-12) * std::max(Scalar(1), std::abs(t_final));
  while (next_out < outputs.size() && outputs[next_out] <= p.time + eps_t) {
    DensityField<Scalar> snap = p;
    snap.time = outputs[next_out++];
    out.push_back(std::move(snap));
  }
  std::size_t seg = segment_of(p.time);
  auto stepper = std::make_unique<FPStepper<Scalar>>(make_fp_operator(psi_snapshots[seg], params, options.scheme),
                                                     options.stepping);
  while (p.time < t_final - eps_t) {
    Scalar stop = t_final;
    if (!is_static && seg + 1 < psi_snapshots.size()) stop = std::min(stop, psi_snapshots[seg + 1].time);
    if (next_out < outputs.size()) stop = std::min(stop, outputs[next_out]);
    const Scalar t_start = p.time;
    const Index n = static_cast<Index>(std::ceil((stop - t_start) / dt - Scalar(1e-9)));
    const Scalar h = (stop - t_start) / static_cast<Scalar>(std::max<Index>(n, 1));
    for (Index s = 0; s < n; ++s) stepper->step(p, h);
    p.time = stop;
    while (next_out < outputs.size() && outputs[next_out] <= p.time + eps_t) {
      DensityField<Scalar> snap = p;
      snap.time = outputs[next_out++];
      out.push_back(std::move(snap));
    }
    const std::size_t nseg = segment_of(p.time);
    if (nseg != seg) {
      seg = nseg;
      stepper = std::make_unique<FPStepper<Scalar>>(make_fp_operator(psi_snapshots[seg], params, options.scheme),
                                                   options.stepping);
    }
  }
  return out;
}

/// Discrete equilibrium (|Psi|^2 + eps) / Z of the Chang-Cooper operator.
template <typename Scalar>
DensityField<Scalar> equilibrium_density(const WaveField<Scalar>& psi, const GuidanceParams<Scalar>& params) {
  const RealArray<Scalar> d = psi.density();
  return normalized(DensityField<Scalar>(psi.grid, d + params.absolute_epsilon(d), psi.time));
}

}  // namespace psifield
