#pragma once

#include "psifield/grid.hpp"
#include "psifield/guidance.hpp"
#include "psifield/histogram.hpp"
#include "psifield/langevin.hpp"
#include "psifield/schrodinger.hpp"
#include "psifield/smoluchowski.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

namespace psifield {

/// 1/2 sum |p - q| dV. Both fields are expected to be normalized.
template <typename Scalar>
Scalar total_variation(const DensityField<Scalar>& p, const DensityField<Scalar>& q) {
  require_same_grid(p.grid, q.grid, "total_variation");
  return Scalar(0.5) * (p.values - q.values).abs().sum() * p.grid.cell_volume();
}

template <typename Scalar>
Scalar max_norm_difference(const DensityField<Scalar>& p, const DensityField<Scalar>& q) {
  require_same_grid(p.grid, q.grid, "max_norm_difference");
  return (p.values - q.values).abs().maxCoeff();
}

/// T ~ (a^3 / (lambda b)) exp(b^2 / a^2), the rough escape-time estimate for
/// the double-Gaussian potential. Meaningful only for b >> a; see
/// kramers_in_validity_regime.
template <typename Scalar>
Scalar kramers_prediction(const DoubleGaussianParams<Scalar>& p, Scalar lambda) {
  p.validate();
  if (!(lambda > 0)) throw std::invalid_argument("kramers_prediction: lambda must be > 0");
  return p.a * p.a * p.a / (lambda * p.b) * std::exp(p.b * p.b / (p.a * p.a));
}

template <typename Scalar>
bool kramers_in_validity_regime(const DoubleGaussianParams<Scalar>& p) {
  return p.b / p.a >= 2;
}

template <typename Scalar = double>
struct EscapeTimeEstimate {
  std::optional<Scalar> mean;  // unset when every run was censored
  Scalar standard_error = std::numeric_limits<Scalar>::quiet_NaN();
  Scalar censored_fraction = 0;
  Index n = 0;           // total runs
  Index uncensored = 0;  // runs that escaped
  std::optional<Scalar> predicted;
  std::optional<Scalar> ratio;  // mean / predicted
};

/// Mean and standard error (sample std / sqrt(n)) over uncensored runs.
template <typename Scalar>
EscapeTimeEstimate<Scalar> mfpt_estimate(const std::vector<FirstPassage<Scalar>>& runs,
                                         std::optional<Scalar> predicted = std::nullopt) {
  EscapeTimeEstimate<Scalar> e;
  e.n = static_cast<Index>(runs.size());
  e.predicted = predicted;
  if (runs.empty()) return e;
  Scalar sum = 0;
  for (const auto& r : runs)
    if (!r.censored) {
      sum += r.time;
      ++e.uncensored;
    }
  e.censored_fraction = static_cast<Scalar>(e.n - e.uncensored) / static_cast<Scalar>(e.n);
  if (e.uncensored == 0) return e;
  const Scalar mean = sum / static_cast<Scalar>(e.uncensored);
  e.mean = mean;
  if (e.uncensored >= 2) {
    Scalar ss = 0;
    for (const auto& r : runs)
      if (!r.censored) ss += (r.time - mean) * (r.time - mean);
    const Scalar var = ss / static_cast<Scalar>(e.uncensored - 1);
    e.standard_error = std::sqrt(var / static_cast<Scalar>(e.uncensored));
  }
  if (predicted && *predicted > 0) e.ratio = mean / *predicted;
  return e;
}

template <typename Scalar = double>
struct Correlation {
  Scalar rho = 0;
  Scalar z = 0;  // rho * sqrt(samples)
  Index samples = 0;
  bool degenerate = false;
};

template <typename Scalar>
Correlation<Scalar> pearson(const std::vector<Scalar>& a, const std::vector<Scalar>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("pearson: series lengths differ");
  Correlation<Scalar> c;
  c.samples = static_cast<Index>(a.size());
  if (a.size() < 2) {
    c.degenerate = true;
    return c;
  }
  const auto n = static_cast<Scalar>(a.size());
  Scalar ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  Scalar sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (!(saa > 0) || !(sbb > 0)) {
    c.degenerate = true;
    return c;
  }
  c.rho = sab / std::sqrt(saa * sbb);
  c.z = c.rho * std::sqrt(n);
  return c;
}

template <typename Scalar = double>
struct IndependenceReport {
  Correlation<Scalar> increments;  // dx vs dy over all recorded steps
  Correlation<Scalar> occupancy;   // [x > x_split] vs [y > y_split]
};

/// Correlation between the two coordinates of 2-D paths: increments pooled
/// over all consecutive records, occupancy indicators split at the given
/// coordinates.
template <typename Scalar>
IndependenceReport<Scalar> independence_test(const std::vector<PathRecord<Scalar>>& paths, Scalar x_split = 0,
                                             Scalar y_split = 0) {
  std::vector<Scalar> dx, dy, ox, oy;
  for (const auto& p : paths) {
    for (std::size_t i = 0; i < p.positions.size(); ++i) {
      if (p.positions[i].size() != 2) throw std::invalid_argument("independence_test: paths must be 2-D");
      ox.push_back(p.positions[i][0] > x_split ? 1 : 0);
      oy.push_back(p.positions[i][1] > y_split ? 1 : 0);
      if (i == 0) continue;
      dx.push_back(p.positions[i][0] - p.positions[i - 1][0]);
      dy.push_back(p.positions[i][1] - p.positions[i - 1][1]);
    }
  }
  return {pearson(dx, dy), pearson(ox, oy)};
}

template <typename Scalar = double>
struct Interval {
  Scalar lo;
  Scalar hi;
  bool contains(Scalar x) const { return x >= lo && x <= hi; }
};

template <typename Scalar = double>
struct OccupancyReport {
  std::vector<int> labels;          // well index per record, -1 in the neutral gap
  std::vector<Index> dwell_records;  // lengths of consecutive stays in one well
  Index jumps = 0;                  // changes of well, ignoring passes through the gap
};

/// Labels a 1-D coordinate series by well. A jump is recorded when the series
/// enters a well different from the last well it occupied.
template <typename Scalar>
OccupancyReport<Scalar> well_occupancy(const std::vector<Scalar>& path, const std::vector<Interval<Scalar>>& wells) {
  OccupancyReport<Scalar> r;
  r.labels.reserve(path.size());
  int last = -1;
  Index dwell = 0;
  for (Scalar x : path) {
    int label = -1;
    for (std::size_t w = 0; w < wells.size(); ++w)
      if (wells[w].contains(x)) {
        label = static_cast<int>(w);
        break;
      }
    r.labels.push_back(label);
    if (label < 0) continue;
    if (label != last) {
      if (last >= 0) {
        ++r.jumps;
        r.dwell_records.push_back(dwell);
      }
      last = label;
      dwell = 0;
    }
    ++dwell;
  }
  if (last >= 0) r.dwell_records.push_back(dwell);
  return r;
}

template <typename Scalar>
std::vector<Scalar> axis_series(const PathRecord<Scalar>& path, int axis = 0) {
  std::vector<Scalar> s;
  s.reserve(path.positions.size());
  for (const auto& p : path.positions) s.push_back(p[axis]);
  return s;
}

template <typename Scalar = double>
struct ExponentialFit {
  Scalar tau = std::numeric_limits<Scalar>::quiet_NaN();
  Scalar amplitude = std::numeric_limits<Scalar>::quiet_NaN();
  Index points = 0;
};

/// Least-squares fit of ln y = ln A - t / tau over samples with y > floor.
template <typename Scalar>
ExponentialFit<Scalar> fit_relaxation_time(const std::vector<Scalar>& t, const std::vector<Scalar>& y, Scalar floor = 0) {
  if (t.size() != y.size()) throw std::invalid_argument("fit_relaxation_time: length mismatch");
  Scalar st = 0, sl = 0, stt = 0, stl = 0;
  Index n = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!(y[i] > floor)) continue;
    const Scalar l = std::log(y[i]);
    st += t[i];
    sl += l;
    stt += t[i] * t[i];
    stl += t[i] * l;
    ++n;
  }
  ExponentialFit<Scalar> f;
  f.points = n;
  if (n < 2) return f;
  const Scalar nn = static_cast<Scalar>(n);
  const Scalar den = nn * stt - st * st;
  if (!(std::abs(den) > 0)) return f;
  const Scalar slope = (nn * stl - st * sl) / den;
  const Scalar icpt = (sl - slope * st) / nn;
  f.tau = slope < 0 ? -1 / slope : std::numeric_limits<Scalar>::infinity();
  f.amplitude = std::exp(icpt);
  return f;
}

template <typename Scalar = double>
struct ResidualSample {
  Scalar time;
  Scalar tv;
  Scalar max_norm;
};

/// Residual of p(X,t) against (|Psi(X,t)|^2 + eps)/Z at each density time,
/// using the wave snapshot whose time matches (within 1e-9).
template <typename Scalar>
std::vector<ResidualSample<Scalar>> adiabatic_residual(const std::vector<DensityField<Scalar>>& densities,
                                                       const std::vector<WaveField<Scalar>>& waves,
                                                       const GuidanceParams<Scalar>& params) {
  std::vector<ResidualSample<Scalar>> out;
  for (const auto& p : densities) {
    const WaveField<Scalar>* match = nullptr;
    for (const auto& w : waves)
      if (std::abs(w.time - p.time) <= Scalar(1e-9) * std::max(Scalar(1), std::abs(p.time))) {
        match = &w;
        break;
      }
    if (match == nullptr) {
      if (waves.size() == 1)
        match = &waves.front();
      else
        throw std::invalid_argument("adiabatic_residual: no wave snapshot at t=" + std::to_string(p.time));
    }
    const RealArray<Scalar> d = match->density();
    const DensityField<Scalar> eq = normalized(DensityField<Scalar>(match->grid, d + params.absolute_epsilon(d), p.time));
    const DensityField<Scalar> pn = normalized(p);
    out.push_back({p.time, total_variation(pn, eq), max_norm_difference(pn, eq)});
  }
  return out;
}

}  // namespace psifield
