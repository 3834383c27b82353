#pragma once

#include "psifield/grid.hpp"
#include "psifield/guidance.hpp"
#include "psifield/histogram.hpp"
#include "psifield/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <variant>
#include <vector>

namespace psifield {

/// Thrown when a proposal leaves the finite numbers (uncapped drift blowup).
struct IntegratorFailure : std::runtime_error {
  IntegratorFailure(const std::string& what, std::vector<double> position, double time, std::uint64_t stream)
      : std::runtime_error(what), position(std::move(position)), time(time), stream_id(stream) {}
  std::vector<double> position;
  double time;
  std::uint64_t stream_id;
};

/// Time-ordered drift snapshots with optional node surfaces per snapshot.
/// A single snapshot is treated as a static field valid for all times.
template <typename Scalar = double>
class DriftSource {
 public:
  DriftSource() = default;
  explicit DriftSource(std::vector<DriftField<Scalar>> snapshots,
                       TimeInterpolation mode = TimeInterpolation::piecewise_constant)
      : snapshots_(std::move(snapshots)), mode_(mode) {
    if (snapshots_.empty()) throw std::invalid_argument("drift source: no snapshots");
    for (std::size_t i = 1; i < snapshots_.size(); ++i) {
      if (!(snapshots_[i].time > snapshots_[i - 1].time))
        throw std::invalid_argument("drift source: snapshot times must increase");
      require_same_grid(snapshots_[i].grid, snapshots_[0].grid, "drift source");
    }
  }

  static DriftSource from_waves(const std::vector<WaveField<Scalar>>& waves, const GuidanceParams<Scalar>& params,
                                TimeInterpolation mode = TimeInterpolation::piecewise_constant) {
    std::vector<DriftField<Scalar>> d;
    d.reserve(waves.size());
    for (const auto& w : waves) d.push_back(drift_field(w, params));
    return DriftSource(std::move(d), mode);
  }

  static DriftSource constant(const Grid<Scalar>& grid, const Point<Scalar>& v) {
    DriftField<Scalar> f{grid, VectorValues<Scalar>(grid.size(), grid.dims()), 0, {}};
    for (int k = 0; k < grid.dims(); ++k) f.vectors.col(k).setConstant(v[k]);
    return DriftSource({std::move(f)});
  }

  /// Registers node surfaces for each snapshot (outer size must match).
  void set_nodes(std::vector<std::vector<NodeSurface<Scalar>>> nodes) {
    if (nodes.size() != snapshots_.size()) throw std::invalid_argument("drift source: one node list per snapshot");
    nodes_ = std::move(nodes);
  }

  const Grid<Scalar>& grid() const { return snapshots_.front().grid; }
  bool is_static() const { return snapshots_.size() == 1; }
  const std::vector<DriftField<Scalar>>& snapshots() const { return snapshots_; }
  Scalar first_time() const { return snapshots_.front().time; }
  Scalar last_time() const { return snapshots_.back().time; }
  TimeInterpolation mode() const { return mode_; }

  Scalar min_spacing() const {
    Scalar m = std::numeric_limits<Scalar>::infinity();
    for (std::size_t i = 1; i < snapshots_.size(); ++i) m = std::min(m, snapshots_[i].time - snapshots_[i - 1].time);
    return m;
  }

  Scalar max_magnitude() const {
    Scalar m = 0;
    for (const auto& s : snapshots_) m = std::max(m, s.max_magnitude());
    return m;
  }

  /// Index of the snapshot governing time t (latest snapshot with time <= t).
  std::size_t segment(Scalar t) const {
    if (is_static()) return 0;
    const Scalar tol = Scalar(1e-9) * std::max(Scalar(1), std::abs(t));
    auto it = std::upper_bound(snapshots_.begin(), snapshots_.end(), t + tol,
                               [](Scalar v, const DriftField<Scalar>& s) { return v < s.time; });
    if (it == snapshots_.begin()) throw std::out_of_range("drift source: time before first snapshot");
    return static_cast<std::size_t>(std::distance(snapshots_.begin(), it) - 1);
  }

  Point<Scalar> drift(const Point<Scalar>& x, Scalar t) const {
    const std::size_t s = segment(t);
    if (s + 1 >= snapshots_.size() || mode_ == TimeInterpolation::piecewise_constant)
      return interpolate(snapshots_[s].grid, snapshots_[s].vectors, x);
    const Scalar tc = std::clamp(t, snapshots_[s].time, snapshots_[s + 1].time);
    return drift_at(snapshots_[s], &snapshots_[s + 1], x, tc, mode_);
  }

  const std::vector<NodeSurface<Scalar>>* nodes_at(Scalar t) const {
    if (nodes_.empty()) return nullptr;
    return &nodes_[segment(t)];
  }

 private:
  std::vector<DriftField<Scalar>> snapshots_;
  std::vector<std::vector<NodeSurface<Scalar>>> nodes_;
  TimeInterpolation mode_ = TimeInterpolation::piecewise_constant;
};

/// Particle position, clock, noise identity and node-crossing tally.
template <typename Scalar = double>
struct TrajectoryState {
  Point<Scalar> x;
  Scalar t = 0;
  NoiseSpec noise;
  Index crossings = 0;
  RandomStream rng;

  TrajectoryState() = default;
  TrajectoryState(Point<Scalar> x0, Scalar t0, NoiseSpec spec)
      : x(std::move(x0)), t(t0), noise(spec), rng(spec, StreamPurpose::increments) {}
};

/// One Euler-Maruyama step: dX = drift dt + sqrt(2 lambda dt) eta.
template <typename Scalar>
void step_em(TrajectoryState<Scalar>& state, const DriftSource<Scalar>& source, const GuidanceParams<Scalar>& params,
             Scalar dt) {
  if (!(dt > 0)) throw std::invalid_argument("step_em: dt must be > 0");
  if (params.lambda < 0) throw std::invalid_argument("step_em: lambda must be >= 0");
  const Grid<Scalar>& grid = source.grid();
  const int d = grid.dims();
  const Point<Scalar> v = source.drift(state.x, state.t);
  const Scalar amp = std::sqrt(2 * params.lambda * dt);
  Point<Scalar> proposal(d);
  for (int k = 0; k < d; ++k) proposal[k] = state.x[k] + v[k] * dt + amp * static_cast<Scalar>(state.rng.normal());
  if (!proposal.allFinite()) {
    std::ostringstream os;
    os << "integrator failure at t=" << state.t << " (stream " << state.noise.stream_id << ")";
    std::vector<double> pos(state.x.data(), state.x.data() + d);
    throw IntegratorFailure(os.str(), std::move(pos), static_cast<double>(state.t), state.noise.stream_id);
  }
  if (const auto* nodes = source.nodes_at(state.t)) {
    for (const auto& n : *nodes) {
      const Scalar a = state.x[n.axis] - n.position;
      const Scalar b = proposal[n.axis] - n.position;
      if ((a < 0 && b >= 0) || (a >= 0 && b < 0)) ++state.crossings;
    }
  }
  state.x = grid.fold(proposal);
  state.t += dt;
}

template <typename Scalar = double>
struct PathRecord {
  std::uint64_t stream_id = 0;
  std::vector<Scalar> times;
  std::vector<Point<Scalar>> positions;
};

template <typename Scalar = double>
struct TrajectoryOutcome {
  TrajectoryState<Scalar> state;
  std::optional<PathRecord<Scalar>> path;
};

namespace detail {

template <typename Scalar>
void check_schedule(const DriftSource<Scalar>& source, Scalar t0, Scalar t_final, Scalar dt) {
  if (!(dt > 0)) throw std::invalid_argument("langevin: dt_L must be > 0");
  if (t_final < t0) throw std::invalid_argument("langevin: t_final before initial time");
  if (!source.is_static()) {
    if (dt > source.min_spacing() * (1 + 1e-9)) throw std::invalid_argument("langevin: dt_L exceeds snapshot spacing");
    if (t_final > source.last_time() + 1e-9) throw std::invalid_argument("langevin: t_final beyond last snapshot");
    if (t0 < source.first_time() - 1e-9) throw std::invalid_argument("langevin: start before first snapshot");
  }
}

template <typename Scalar>
Index step_count(Scalar t0, Scalar t_final, Scalar dt) {
  const Scalar r = (t_final - t0) / dt;
  return static_cast<Index>(std::ceil(r - Scalar(1e-9)));
}

}  // namespace detail

/// Integrates from initial.t to t_final. The step count is
/// ceil((t_final - t0) / dt_L); the last step is shortened to land on t_final.
/// Times are recomputed from the step index to avoid accumulation error.
template <typename Scalar>
TrajectoryOutcome<Scalar> simulate_trajectory(TrajectoryState<Scalar> state, const DriftSource<Scalar>& source,
                                              const GuidanceParams<Scalar>& params, Scalar dt, Scalar t_final,
                                              std::optional<Index> path_stride = std::nullopt) {
  detail::check_schedule(source, state.t, t_final, dt);
  TrajectoryOutcome<Scalar> out;
  if (path_stride) {
    if (*path_stride < 1) throw std::invalid_argument("langevin: path stride must be >= 1");
    out.path = PathRecord<Scalar>{state.noise.stream_id, {state.t}, {state.x}};
  }
  const Scalar t0 = state.t;
  const Index steps = detail::step_count(t0, t_final, dt);
  for (Index s = 1; s <= steps; ++s) {
    const Scalar target = (s == steps) ? t_final : t0 + static_cast<Scalar>(s) * dt;
    step_em(state, source, params, target - state.t);
    state.t = target;
    if (out.path && (s % *path_stride == 0 || s == steps)) {
      out.path->times.push_back(state.t);
      out.path->positions.push_back(state.x);
    }
  }
  out.state = std::move(state);
  return out;
}

// ---------------------------------------------------------------------------
// Ensembles

template <typename Scalar = double>
struct PointMass {
  Point<Scalar> x;
};

/// Inverse-CDF sampling over grid cells, uniform within the chosen cell.
template <typename Scalar = double>
class DensitySampler {
 public:
  explicit DensitySampler(DensityField<Scalar> density) : density_(std::move(density)) {
    if ((density_.values < 0).any() || !density_.values.allFinite())
      throw std::invalid_argument("density sampler: density must be finite and nonnegative");
    cdf_.resize(static_cast<std::size_t>(density_.values.size()));
    Scalar acc = 0;
    for (Index i = 0; i < density_.values.size(); ++i) cdf_[static_cast<std::size_t>(i)] = (acc += density_.values[i]);
    if (!(acc > 0)) throw std::invalid_argument("density sampler: density has zero mass");
    for (auto& c : cdf_) c /= acc;
  }

  Point<Scalar> sample(RandomStream& rng) const {
    const Scalar u = static_cast<Scalar>(rng.uniform());
    auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
    if (it == cdf_.end()) --it;
    const auto cell = static_cast<Index>(std::distance(cdf_.begin(), it));
    const Grid<Scalar>& g = density_.grid;
    Point<Scalar> x = g.node(cell);
    for (int k = 0; k < g.dims(); ++k) x[k] += (static_cast<Scalar>(rng.uniform()) - Scalar(0.5)) * g.spacing(k);
    return g.fold(x);
  }

  const DensityField<Scalar>& density() const { return density_; }

 private:
  DensityField<Scalar> density_;
  std::vector<Scalar> cdf_;
};

template <typename Scalar = double>
struct SampleFromDensity {
  DensityField<Scalar> density;
};

template <typename Scalar = double>
using InitialSampler = std::variant<PointMass<Scalar>, SampleFromDensity<Scalar>>;

template <typename Scalar = double>
struct EnsembleOptions {
  std::uint64_t master_seed = 0;
  int workers = 1;
  std::optional<Index> path_stride;  // record paths when set
  std::vector<Scalar> checkpoints;   // extra histogram times in (t0, t_final)
  Scalar start_time = 0;
};

template <typename Scalar = double>
struct EnsembleResult {
  std::vector<Point<Scalar>> initial_positions;
  std::vector<Point<Scalar>> final_positions;
  std::vector<Index> crossings;
  DensityField<Scalar> initial_histogram;
  DensityField<Scalar> histogram;
  std::vector<DensityField<Scalar>> checkpoint_histograms;
  std::vector<PathRecord<Scalar>> paths;
  Index outside_count = 0;
  // metadata
  Scalar lambda = 0;
  Scalar dt = 0;
  Index steps = 0;
  std::uint64_t master_seed = 0;
};

/// Runs body(i) for i in [0, n) on `workers` threads with a fixed block
/// partition. Every index is attempted; afterwards the failure with the lowest
/// index (if any) is rethrown, so the outcome does not depend on scheduling.
template <typename Fn>
void parallel_for_deterministic(Index n, int workers, Fn&& body) {
  if (n <= 0) return;
  workers = std::max(1, std::min<int>(workers, static_cast<int>(std::min<Index>(n, 1024))));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  std::vector<Index> error_index(static_cast<std::size_t>(workers), n);
  auto run = [&](int w) {
    const Index begin = n * w / workers, end = n * (w + 1) / workers;
    for (Index i = begin; i < end; ++i) {
      try {
        body(i);
      } catch (...) {
        if (i < error_index[static_cast<std::size_t>(w)]) {
          error_index[static_cast<std::size_t>(w)] = i;
          errors[static_cast<std::size_t>(w)] = std::current_exception();
        }
      }
    }
  };
  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(run, w);
    for (auto& th : pool) th.join();
  }
  Index first = n;
  std::exception_ptr err;
  for (std::size_t w = 0; w < errors.size(); ++w)
    if (errors[w] && error_index[w] < first) {
      first = error_index[w];
      err = errors[w];
    }
  if (err) std::rethrow_exception(err);
}

/// Thrown when a trajectory of an ensemble fails; names the stream.
struct EnsembleFailure : std::runtime_error {
  EnsembleFailure(const std::string& what, std::uint64_t stream) : std::runtime_error(what), stream_id(stream) {}
  std::uint64_t stream_id;
};

template <typename Scalar>
Point<Scalar> draw_initial(const InitialSampler<Scalar>& sampler, const DensitySampler<Scalar>* density_sampler,
                           NoiseSpec spec) {
  if (const auto* pm = std::get_if<PointMass<Scalar>>(&sampler)) return pm->x;
  RandomStream rng(spec, StreamPurpose::initial_sample);
  return density_sampler->sample(rng);
}

/// n independent trajectories with stream ids 0..n-1. Results are merged in
/// stream order, so every output is a pure function of (inputs, master_seed).
template <typename Scalar>
EnsembleResult<Scalar> run_ensemble(Index n, const InitialSampler<Scalar>& sampler, const DriftSource<Scalar>& source,
                                    const GuidanceParams<Scalar>& params, Scalar dt, Scalar t_final,
                                    const Grid<Scalar>& histogram_grid, const EnsembleOptions<Scalar>& options = {}) {
  if (n < 1) throw std::invalid_argument("run_ensemble: n must be >= 1");
  detail::check_schedule(source, options.start_time, t_final, dt);
  std::vector<Scalar> marks = options.checkpoints;
  std::sort(marks.begin(), marks.end());
  for (Scalar c : marks)
    if (c < options.start_time || c > t_final) throw std::invalid_argument("run_ensemble: checkpoint outside run");

  std::optional<DensitySampler<Scalar>> dsampler;
  if (const auto* sd = std::get_if<SampleFromDensity<Scalar>>(&sampler)) dsampler.emplace(sd->density);

  EnsembleResult<Scalar> res;
  const auto un = static_cast<std::size_t>(n);
  res.initial_positions.resize(un);
  res.final_positions.resize(un);
  res.crossings.resize(un);
  std::vector<std::vector<Point<Scalar>>> at_marks(marks.size(), std::vector<Point<Scalar>>(un));
  if (options.path_stride) res.paths.resize(un);

  parallel_for_deterministic(n, options.workers, [&](Index i) {
    const NoiseSpec spec{options.master_seed, static_cast<std::uint64_t>(i)};
    const auto ui = static_cast<std::size_t>(i);
    try {
      TrajectoryState<Scalar> st(draw_initial(sampler, dsampler ? &*dsampler : nullptr, spec), options.start_time, spec);
      res.initial_positions[ui] = st.x;
      PathRecord<Scalar> path{spec.stream_id, {}, {}};
      auto advance = [&](Scalar until) {
        auto o = simulate_trajectory(std::move(st), source, params, dt, until, options.path_stride);
        st = std::move(o.state);
        if (o.path) {
          const std::size_t skip = path.times.empty() ? 0 : 1;
          path.times.insert(path.times.end(), o.path->times.begin() + static_cast<std::ptrdiff_t>(skip), o.path->times.end());
          path.positions.insert(path.positions.end(), o.path->positions.begin() + static_cast<std::ptrdiff_t>(skip),
                                o.path->positions.end());
        }
      };
      for (std::size_t m = 0; m < marks.size(); ++m) {
        advance(marks[m]);
        at_marks[m][ui] = st.x;
      }
      advance(t_final);
      res.final_positions[ui] = st.x;
      res.crossings[ui] = st.crossings;
      if (options.path_stride) res.paths[ui] = std::move(path);
    } catch (const std::exception& e) {
      throw EnsembleFailure(std::string("trajectory ") + std::to_string(i) + " failed: " + e.what(), spec.stream_id);
    }
  });

  res.initial_histogram = histogram(res.initial_positions, histogram_grid, nullptr);
  res.initial_histogram.time = options.start_time;
  res.histogram = histogram(res.final_positions, histogram_grid, &res.outside_count);
  res.histogram.time = t_final;
  for (std::size_t m = 0; m < marks.size(); ++m) {
    res.checkpoint_histograms.push_back(histogram(at_marks[m], histogram_grid, nullptr));
    res.checkpoint_histograms.back().time = marks[m];
  }
  res.lambda = params.lambda;
  res.dt = dt;
  res.steps = detail::step_count(options.start_time, t_final, dt);
  res.master_seed = options.master_seed;
  return res;
}

// ---------------------------------------------------------------------------
// First passage

template <typename Scalar = double>
struct CrossLevel {
  int axis = 0;
  Scalar level = 0;
  bool upward = true;  // stop when x[axis] >= level (else x[axis] <= level)
};

template <typename Scalar = double>
struct EnterRegion {
  Point<Scalar> lo;
  Point<Scalar> hi;
};

template <typename Scalar = double>
using StopPredicate = std::variant<CrossLevel<Scalar>, EnterRegion<Scalar>>;

template <typename Scalar>
bool stop_reached(const StopPredicate<Scalar>& pred, const Point<Scalar>& x) {
  if (const auto* c = std::get_if<CrossLevel<Scalar>>(&pred))
    return c->upward ? x[c->axis] >= c->level : x[c->axis] <= c->level;
  const auto& r = std::get<EnterRegion<Scalar>>(pred);
  for (Index k = 0; k < x.size(); ++k)
    if (x[k] < r.lo[k] || x[k] > r.hi[k]) return false;
  return true;
}

template <typename Scalar = double>
struct FirstPassage {
  Scalar time = 0;  // elapsed since the start; t_max when censored
  bool censored = false;
};

/// Elapsed time until `pred` first holds, checked before the first step and
/// after each step. Censored (not an error) when t_max elapses first.
template <typename Scalar>
FirstPassage<Scalar> first_passage_time(TrajectoryState<Scalar> state, const DriftSource<Scalar>& source,
                                        const GuidanceParams<Scalar>& params, Scalar dt,
                                        const StopPredicate<Scalar>& pred, Scalar t_max) {
  if (!source.is_static()) throw std::invalid_argument("first_passage_time: requires a static wave field");
  if (!(dt > 0) || !(t_max > 0)) throw std::invalid_argument("first_passage_time: dt and t_max must be > 0");
  if (stop_reached(pred, state.x)) return {0, false};
  const Index max_steps = detail::step_count(Scalar(0), t_max, dt);
  for (Index s = 1; s <= max_steps; ++s) {
    step_em(state, source, params, dt);
    if (stop_reached(pred, state.x)) return {static_cast<Scalar>(s) * dt, false};
  }
  return {t_max, true};
}

/// n first-passage runs from a common start, streams 0..n-1.
template <typename Scalar>
std::vector<FirstPassage<Scalar>> run_first_passage(Index n, const Point<Scalar>& start, const DriftSource<Scalar>& source,
                                                    const GuidanceParams<Scalar>& params, Scalar dt,
                                                    const StopPredicate<Scalar>& pred, Scalar t_max,
                                                    std::uint64_t master_seed, int workers = 1) {
  std::vector<FirstPassage<Scalar>> out(static_cast<std::size_t>(n));
  parallel_for_deterministic(n, workers, [&](Index i) {
    TrajectoryState<Scalar> st(start, 0, NoiseSpec{master_seed, static_cast<std::uint64_t>(i)});
    out[static_cast<std::size_t>(i)] = first_passage_time(std::move(st), source, params, dt, pred, t_max);
  });
  return out;
}

/// Largest dt_L with max|drift| * dt_L <= fraction * min dx.
template <typename Scalar>
Scalar suggest_dt(const DriftSource<Scalar>& source, Scalar fraction = Scalar(0.5)) {
  Scalar dx = std::numeric_limits<Scalar>::infinity();
  for (int k = 0; k < source.grid().dims(); ++k) dx = std::min(dx, source.grid().spacing(k));
  const Scalar vmax = source.max_magnitude();
  if (!(vmax > 0)) return std::numeric_limits<Scalar>::infinity();
  return fraction * dx / vmax;
}

}  // namespace psifield
