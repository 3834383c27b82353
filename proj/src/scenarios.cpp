#include "psifield/scenarios.hpp"

#include "psifield/analysis.hpp"
#include "psifield/langevin.hpp"
#include "psifield/schrodinger.hpp"
#include "psifield/smoluchowski.hpp"
#include "psifield/snapshot_io.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

#ifndef PSIFIELD_VERSION
#define PSIFIELD_VERSION "unversioned"
#endif

namespace psifield {

namespace {

namespace fs = std::filesystem;
using G = Grid<double>;
using W = WaveField<double>;
using D = DensityField<double>;

constexpr Index oracle_samples = 100000;

std::string fmt(double v) {
  char buf[40];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

Point<double> point(const std::vector<double>& x) {
  Point<double> p(static_cast<Index>(x.size()));
  for (std::size_t k = 0; k < x.size(); ++k) p[static_cast<Index>(k)] = x[k];
  return p;
}

Point<double> point(double x) { return point(std::vector<double>{x}); }

std::uint64_t derived_seed(std::uint64_t master, std::uint64_t k) {
  // splitmix64 finalizer
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (k + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class Csv {
 public:
  Csv(const fs::path& p, const std::vector<std::string>& header) : out_(p) {
    if (!out_) throw std::runtime_error("cannot write " + p.string());
    for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << "\n";
  }
  void row(const std::vector<double>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) out_ << (i ? "," : "") << fmt(v[i]);
    out_ << "\n";
  }
  void fields(const std::vector<std::string>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) out_ << (i ? "," : "") << v[i];
    out_ << "\n";
  }
  void row(const std::string& label, const std::vector<double>& v) {
    out_ << label;
    for (double x : v) out_ << "," << fmt(x);
    out_ << "\n";
  }

 private:
  std::ofstream out_;
};

/// Latest snapshot with time <= t.
const W& wave_at(const std::vector<W>& waves, double t) {
  std::size_t s = 0;
  while (s + 1 < waves.size() && waves[s + 1].time <= t + 1e-9 * std::max(1.0, std::abs(t))) ++s;
  return waves[s];
}

const D* density_at(const std::vector<D>& seq, double t) {
  for (const auto& p : seq)
    if (std::abs(p.time - t) <= 1e-9 * std::max(1.0, std::abs(t))) return &p;
  return nullptr;
}

struct Run {
  ScenarioConfig cfg;
  RunOptions opt;
  fs::path dir;
  RunManifest m;
  bool fp = true, ens = true;
  GuidanceParams<double> gp;
  G grid, hgrid;
  HamiltonianSpec<double> h;
  std::vector<W> waves;
  bool evolving = false;
  std::optional<EnsembleResult<double>> ensemble;
  std::vector<D> fp_out;
  std::set<std::string> files;

  fs::path file(const std::string& rel) {
    files.insert(rel);
    return dir / rel;
  }

  void metric(const std::string& name, double v) { m.metrics.emplace_back(name, v); }

  void snapshot(const std::string& stem, const auto& field) {
    write_snapshot(dir / "snapshots" / stem, field);
    files.insert("snapshots/" + stem + ".bin");
    files.insert("snapshots/" + stem + ".json");
  }

  // Checks whose inputs come from a stage that did not run are recorded as skipped.
  void check(bool available, const std::string& name, double value, const std::string& cmp, double limit,
             const std::string& note = {}) {
    if (!available) {
      m.thresholds.push_back(skipped_check(name, cmp, limit, fp ? "ensemble stage not run" : "fp stage not run"));
      return;
    }
    m.thresholds.push_back(make_check(name, value, cmp, limit, note));
  }

  D coarse_equilibrium(double t) const { return coarse_grain(equilibrium_density(wave_at(waves, t), gp), hgrid); }
};

// ---------------------------------------------------------------------------
// Wave fields

void prepare(Run& r) {
  const auto& c = r.cfg;
  r.h.hbar = c.hbar;
  r.h.mass = c.mass;
  const double m0 = c.mass.empty() ? 1.0 : c.mass[0];
  W psi0;
  if (const auto* p = std::get_if<DoubleWellParams>(&c.params)) {
    psi0 = make_double_gaussian(r.grid, DoubleGaussianParams<double>{p->a, p->b});
  } else if (const auto* p = std::get_if<ProductParams>(&c.params)) {
    ComplexArray<double> v(r.grid.size());
    for (Index i = 0; i < r.grid.size(); ++i) {
      const auto x = r.grid.node(i);
      v[i] = double_gaussian_value(DoubleGaussianParams<double>{p->a, p->b}, x[0]) *
             std::exp(-x[1] * x[1] / (2 * p->y_width * p->y_width));
    }
    psi0 = W(r.grid, std::move(v), 0);
  } else if (const auto* p = std::get_if<HarmonicGroundParams>(&c.params)) {
    r.h.potential = harmonic_potential(r.grid, p->omega, m0);
    const auto spec = compute_spectrum(r.grid, r.h, 1);
    psi0 = W(r.grid, spec.states.col(0).array().cast<std::complex<double>>(), 0);
    r.metric("ground_energy", spec.energies[0]);
  } else if (const auto* p = std::get_if<AdiabaticParams>(&c.params)) {
    r.h.potential = harmonic_potential(r.grid, p->omega, m0);
    psi0 = make_packet(r.grid, point(p->displacement), std::sqrt(c.hbar / (m0 * p->omega)), point(0.0));
  } else if (const auto* p = std::get_if<InterferenceParams>(&c.params)) {
    const W a = make_packet(r.grid, point(-p->separation), p->width, point(p->momentum));
    const W b = make_packet(r.grid, point(p->separation), p->width, point(-p->momentum));
    psi0 = W(r.grid, a.values + b.values, 0);
  } else if (const auto* p = std::get_if<FreePacketParams>(&c.params)) {
    psi0 = make_packet(r.grid, point(p->center), p->width, point(p->momentum));
  }
  r.evolving = !std::holds_alternative<DoubleWellParams>(c.params) && !std::holds_alternative<ProductParams>(c.params);
  if (r.evolving) {
    r.waves = evolve(psi0, r.h, c.t_final, c.dt, c.snapshot_stride);
    const double n0 = squared_norm(r.waves.front());
    double drift = 0;
    for (const auto& w : r.waves) drift = std::max(drift, std::abs(squared_norm(w) / n0 - 1));
    r.metric("psi_norm_drift", drift);
    r.metric("psi_steps", std::round(c.t_final / c.dt));
    r.snapshot("psi_final", r.waves.back());
  } else {
    r.waves = {psi0};
  }
  r.snapshot("psi_initial", r.waves.front());
  r.snapshot("drift_initial", DriftSnapshot{r.grid, drift_field(r.waves.front(), r.gp).vectors, 0.0});
}

// ---------------------------------------------------------------------------
// Ensemble stage

void double_well_campaigns(Run& r, const DoubleWellParams& p) {
  const auto& c = r.cfg;
  std::vector<std::pair<double, EscapeTimeEstimate<double>>> table;
  if (p.mfpt_trajectories > 0) {
    Csv csv(r.file("mfpt.csv"), {"a", "b", "lambda", "predicted_T", "measured_mean", "standard_error", "ratio",
                                 "censored_fraction", "n", "escapes"});
    std::vector<double> bs = p.mfpt_b_values;
    for (std::size_t k = 0; k < bs.size(); ++k) {
      const double b = bs[k];
      const DoubleGaussianParams<double> dg{p.a, b};
      const auto src = DriftSource<double>::from_waves({make_double_gaussian(r.grid, dg)}, r.gp);
      const double T = kramers_prediction(dg, r.gp.lambda);
      const auto runs = run_first_passage<double>(p.mfpt_trajectories, point(-b), src, r.gp, c.dt_L,
                                                  CrossLevel<double>{0, b, true}, p.mfpt_t_max_factor * T,
                                                  derived_seed(c.master_seed, 1 + k), r.opt.workers);
      const auto est = mfpt_estimate(runs, std::optional<double>(T));
      const double mean = est.mean.value_or(std::nan("")), ratio = est.ratio.value_or(std::nan(""));
      csv.row({p.a, b, r.gp.lambda, T, mean, est.standard_error, ratio, est.censored_fraction,
               static_cast<double>(est.n), static_cast<double>(est.uncensored)});
      const std::string tag = "[b=" + fmt(b) + "]";
      r.metric("mfpt_predicted" + tag, T);
      r.metric("mfpt_mean" + tag, mean);
      r.metric("mfpt_se" + tag, est.standard_error);
      r.metric("mfpt_ratio" + tag, ratio);
      r.metric("mfpt_censored_fraction" + tag, est.censored_fraction);
      table.emplace_back(b, est);
    }
  }
  std::sort(table.begin(), table.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  for (const auto& [b, est] : table) {
    if (b / p.a < 2) continue;
    const std::string tag = "[b=" + fmt(b) + "]";
    const double ratio = est.ratio.value_or(std::nan(""));
    r.check(true, "mfpt_ratio" + tag, ratio, ">=", 1.0 / 3, "within a factor 3 of the Kramers estimate");
    r.check(true, "mfpt_ratio" + tag, ratio, "<=", 3.0, "within a factor 3 of the Kramers estimate");
    r.check(true, "mfpt_escapes" + tag, static_cast<double>(est.uncensored), ">=", 200);
  }
  for (std::size_t k = 0; k + 1 < table.size(); ++k) {
    const auto& [b1, e1] = table[k];
    const auto& [b2, e2] = table[k + 1];
    if (b1 / p.a < 2 || !e1.mean || !e2.mean) continue;
    const double expected = (b2 * b2 - b1 * b1) / (p.a * p.a);
    const double measured = std::log(*e2.mean / *e1.mean);
    const std::string tag = "[b=" + fmt(b1) + "->" + fmt(b2) + "]";
    r.metric("mfpt_log_ratio" + tag, measured);
    r.metric("mfpt_log_ratio_expected" + tag, expected);
    r.check(true, "mfpt_log_ratio_rel_error" + tag, std::abs(measured / expected - 1), "<=", 0.3);
  }

  if (p.b / p.a >= 2 && p.jump_trajectories > 0) {
    const DoubleGaussianParams<double> dg{p.a, p.b};
    const auto src = DriftSource<double>::from_waves({make_double_gaussian(r.grid, dg)}, r.gp);
    const double horizon = p.jump_horizon_fraction * kramers_prediction(dg, r.gp.lambda);
    // a jump is an entry into the far well, |x - b| <= a
    const auto runs = run_first_passage<double>(p.jump_trajectories, point(-p.b), src, r.gp, c.dt_L,
                                                EnterRegion<double>{point(p.b - p.a), point(p.b + p.a)}, horizon,
                                                derived_seed(c.master_seed, 100), r.opt.workers);
    const auto est = mfpt_estimate(runs);
    r.metric("jump_horizon", horizon);
    r.metric("no_jump_fraction", est.censored_fraction);
    for (const auto& [b, e] : table)
      if (b == p.b && e.mean) r.metric("no_jump_fraction_from_mfpt", std::exp(-horizon / *e.mean));
    r.check(true, "no_jump_fraction", est.censored_fraction, ">=", 0.95);
  }
}

void ensemble_stage(Run& r) {
  const auto& c = r.cfg;
  auto src = DriftSource<double>::from_waves(r.waves, r.gp);
  const auto* interf = std::get_if<InterferenceParams>(&c.params);
  if (interf) {
    std::vector<std::vector<NodeSurface<double>>> nodes;
    for (const auto& w : r.waves) nodes.push_back(locate_nodes_1d(w, interf->node_depth, interf->node_significance));
    r.metric("nodes_at_final", static_cast<double>(nodes.back().size()));
    src.set_nodes(std::move(nodes));
  }
  r.metric("max_drift", src.max_magnitude());
  r.metric("dt_L_rule_limit", suggest_dt(src));

  InitialSampler<double> sampler = PointMass<double>{};
  if (c.initial.kind == InitialConfig::Kind::point)
    sampler = PointMass<double>{point(c.initial.point)};
  else
    sampler = SampleFromDensity<double>{equilibrium_density(r.waves.front(), r.gp)};
  EnsembleOptions<double> o;
  o.master_seed = c.master_seed;
  o.workers = r.opt.workers;
  o.path_stride = c.path_stride;
  o.checkpoints = c.checkpoints;
  r.ensemble = run_ensemble<double>(c.n, sampler, src, r.gp, c.dt_L, c.t_final, r.hgrid, o);
  const auto& e = *r.ensemble;
  r.metric("outside_count", static_cast<double>(e.outside_count));

  std::vector<const D*> hists;
  for (const auto& h : e.checkpoint_histograms) hists.push_back(&h);
  hists.push_back(&e.histogram);
  Csv res(r.file("residual.csv"), {"t", "TV", "maxnorm"});
  double tv = 0, mx = 0;
  for (const D* hst : hists) {
    const D eq = r.coarse_equilibrium(hst->time);
    tv = total_variation(*hst, eq);
    mx = max_norm_difference(*hst, eq);
    res.row({hst->time, tv, mx});
  }
  r.metric("final_tv", tv);
  r.metric("final_max_norm", mx);
  r.snapshot("histogram_final", e.histogram);

  if (c.path_records > 0 && !e.paths.empty()) {
    std::vector<std::string> header{"stream_id", "t"};
    for (int k = 0; k < r.grid.dims(); ++k) header.push_back("x" + std::to_string(k + 1));
    Csv paths(r.file("paths.csv"), header);
    const auto keep = std::min<std::size_t>(static_cast<std::size_t>(c.path_records), e.paths.size());
    for (std::size_t i = 0; i < keep; ++i)
      for (std::size_t j = 0; j < e.paths[i].times.size(); ++j) {
        std::vector<double> row{static_cast<double>(e.paths[i].stream_id), e.paths[i].times[j]};
        for (Index k = 0; k < e.paths[i].positions[j].size(); ++k) row.push_back(e.paths[i].positions[j][k]);
        paths.row(row);
      }
  }

  if (interf) {
    Csv cross(r.file("crossings.csv"), {"stream_id", "crossings"});
    Index zero = 0;
    for (std::size_t i = 0; i < e.crossings.size(); ++i) {
      cross.row({static_cast<double>(i), static_cast<double>(e.crossings[i])});
      zero += e.crossings[i] == 0 ? 1 : 0;
    }
    r.metric("zero_crossing_fraction", static_cast<double>(zero) / static_cast<double>(c.n));
  }
  if (const auto* p = std::get_if<DoubleWellParams>(&c.params)) {
    const double side = c.initial.kind == InitialConfig::Kind::point && c.initial.point[0] > 0 ? 1.0 : -1.0;
    Index same = 0;
    for (const auto& x : e.final_positions) same += x[0] * side > 0 ? 1 : 0;
    r.metric("start_well_mass", static_cast<double>(same) / static_cast<double>(c.n));
    double_well_campaigns(r, *p);
  }
  if (std::holds_alternative<ProductParams>(c.params)) {
    if (e.paths.empty()) throw std::invalid_argument("product_separation: needs path_stride to record paths");
    const auto ind = independence_test(e.paths, 0.0, 0.0);
    r.metric("increment_rho", ind.increments.rho);
    r.metric("increment_samples", static_cast<double>(ind.increments.samples));
    r.metric("increment_z", ind.increments.z);
    r.metric("occupancy_rho", ind.occupancy.rho);
    r.metric("occupancy_z", ind.occupancy.z);
  }
}

// ---------------------------------------------------------------------------
// Fokker-Planck stage

std::vector<D> fp_run(const Run& r, const GuidanceParams<double>& gp, std::vector<double> times, double& dt_used) {
  const auto& c = r.cfg;
  D p0 = D::zeros(r.grid);
  if (c.initial.kind == InitialConfig::Kind::point)
    p0.values[cell_index(r.grid, point(c.initial.point))] = 1 / r.grid.cell_volume();
  else
    p0 = equilibrium_density(r.waves.front(), gp);
  FPOptions<double> o;
  o.scheme = c.fp.scheme;
  o.stepping = c.fp.stepping;
  o.output_times = std::move(times);
  if (c.fp.dt) {
    dt_used = *c.fp.dt;
  } else if (c.fp.stepping == FPStepping::implicit_euler) {
    dt_used = c.dt;
  } else {
    FPStepper<double> s(make_fp_operator(r.waves.front(), gp, c.fp.scheme), FPStepping::explicit_euler);
    dt_used = 0.5 * s.stability_limit();
  }
  return fp_evolve(p0, r.waves, gp, dt_used, c.t_final, o);
}

std::vector<double> fp_output_times(const Run& r) {
  std::set<double> t(r.cfg.checkpoints.begin(), r.cfg.checkpoints.end());
  t.insert(r.cfg.t_final);
  if (r.evolving)
    for (const auto& w : r.waves) t.insert(w.time);
  else
    for (int k = 0; k <= 20; ++k) t.insert(r.cfg.t_final * k / 20);
  // merge times closer than the snapshot tolerance
  std::vector<double> out;
  for (double x : t)
    if (out.empty() || x - out.back() > 1e-9 * std::max(1.0, x)) out.push_back(x);
  return out;
}

void residual_csv(Run& r, const std::string& name, const std::vector<D>& seq, const GuidanceParams<double>& gp,
                  double& tv_max, double& tv_last) {
  Csv csv(r.file(name), {"t", "TV", "maxnorm"});
  tv_max = 0;
  tv_last = 0;
  for (const auto& p : seq) {
    const D eq = equilibrium_density(wave_at(r.waves, p.time), gp);
    const D pn = normalized(p);
    tv_last = total_variation(pn, eq);
    if (p.time > 0) tv_max = std::max(tv_max, tv_last);
    csv.row({p.time, tv_last, max_norm_difference(pn, eq)});
  }
}

void fp_stage(Run& r) {
  const auto& c = r.cfg;
  double dt_used = 0;
  r.fp_out = fp_run(r, r.gp, fp_output_times(r), dt_used);
  r.metric("fp_dt", dt_used);
  double mass_err = 0;
  for (const auto& p : r.fp_out) mass_err = std::max(mass_err, std::abs(integrate(p) - 1));
  r.metric("fp_mass_error", mass_err);
  double tv_max = 0, tv_last = 0;
  residual_csv(r, "fp_residual.csv", r.fp_out, r.gp, tv_max, tv_last);
  r.metric("fp_residual_tv_final", tv_last);
  r.snapshot("fp_final", r.fp_out.back());

  if (std::holds_alternative<DoubleWellParams>(c.params)) {
    std::vector<double> t, y;
    for (const auto& p : r.fp_out) {
      t.push_back(p.time);
      y.push_back(total_variation(normalized(p), equilibrium_density(r.waves.front(), r.gp)));
    }
    const auto fit = fit_relaxation_time(t, y, 1e-6);
    r.metric("fp_relaxation_time", fit.tau);
  }

  if (const auto* p = std::get_if<AdiabaticParams>(&c.params)) {
    std::vector<double> lambdas = p->lambda_sweep;
    std::sort(lambdas.begin(), lambdas.end());
    std::vector<double> residual;
    for (double lambda : lambdas) {
      GuidanceParams<double> gp = r.gp;
      gp.lambda = lambda;
      double dt = 0;
      std::vector<double> times;
      for (const auto& w : r.waves) times.push_back(w.time);
      const auto seq = fp_run(r, gp, times, dt);
      double mx = 0, last = 0;
      residual_csv(r, "fp_residual_lambda_" + fmt(lambda) + ".csv", seq, gp, mx, last);
      r.metric("adiabatic_residual_tv[lambda=" + fmt(lambda) + "]", mx);
      residual.push_back(mx);
    }
    double worst_increase = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k + 1 < residual.size(); ++k)
      worst_increase = std::max(worst_increase, residual[k + 1] - residual[k]);
    if (residual.size() > 1)
      r.check(true, "adiabatic_residual_max_step_change", worst_increase, "<", 0.0,
              "residual strictly decreasing in lambda");
    r.check(true, "adiabatic_residual_tv[lambda=" + fmt(lambdas.back()) + "]", residual.back(), "<", 0.1);
  }
}

void oracle(Run& r) {
  const auto& e = *r.ensemble;
  std::vector<const D*> hists;
  for (const auto& h : e.checkpoint_histograms) hists.push_back(&h);
  hists.push_back(&e.histogram);
  Csv csv(r.file("oracle.csv"), {"t", "TV"});
  double worst = 0;
  for (const D* h : hists) {
    const D* p = density_at(r.fp_out, h->time);
    if (!p) throw std::logic_error("oracle: no FP output at t=" + fmt(h->time));
    const double tv = total_variation(*h, coarse_grain(normalized(*p), r.hgrid));
    csv.row({h->time, tv});
    worst = std::max(worst, tv);
  }
  r.metric("oracle_tv_max", worst);
  if (r.cfg.n >= oracle_samples)
    r.check(true, "oracle_tv_max", worst, "<", 0.05, "FP vs ensemble histogram");
  else
    r.m.thresholds.push_back(skipped_check("oracle_tv_max", "<", 0.05, "needs n >= 100000"));
}

// ---------------------------------------------------------------------------
// Scenario thresholds that need only what has been computed

void scenario_checks(Run& r) {
  const auto& c = r.cfg;
  auto metric = [&](const std::string& name) {
    for (const auto& [k, v] : r.m.metrics)
      if (k == name) return v;
    return std::nan("");
  };
  if (r.evolving) r.check(true, "psi_norm_drift", metric("psi_norm_drift"), "<", 1e-9);
  if (const auto* p = std::get_if<DoubleWellParams>(&c.params)) {
    if (p->b / p->a >= 2) r.check(r.ens, "start_well_mass", metric("start_well_mass"), ">", 0.95);
    if (!r.ens) {
      r.check(false, "mfpt_ratio", 0, ">=", 1.0 / 3);
      if (p->b / p->a >= 2) r.check(false, "no_jump_fraction", 0, ">=", 0.95);
    }
  } else if (std::holds_alternative<HarmonicGroundParams>(c.params)) {
    double tv = std::nan("");
    if (r.ens) tv = total_variation(r.ensemble->histogram, r.coarse_equilibrium(0.0));
    r.metric("stationary_tv", tv);
    r.check(r.ens, "stationary_tv", tv, "<", 0.08, "final histogram vs |psi_0|^2/Z");
  } else if (std::holds_alternative<InterferenceParams>(c.params)) {
    r.check(r.ens, "zero_crossing_fraction", metric("zero_crossing_fraction"), ">=", 0.99);
    r.check(r.ens, "fringe_tv", metric("final_tv"), "<", 0.15, "final histogram vs |psi(t)|^2/Z");
  } else if (std::holds_alternative<ProductParams>(c.params)) {
    const double n = metric("increment_samples");
    r.check(r.ens, "increment_abs_rho", std::abs(metric("increment_rho")), "<", r.ens ? 3 / std::sqrt(n) : 0.0,
            "3 / sqrt(samples)");
  } else if (const auto* p = std::get_if<FreePacketParams>(&c.params)) {
    const W& last = r.waves.back();
    const D dens = normalized(D(last.grid, last.density(), last.time));
    double mean = 0, m2 = 0;
    for (Index i = 0; i < dens.values.size(); ++i) {
      const double x = last.grid.coordinate(0, i);
      mean += dens.values[i] * x * last.grid.cell_volume();
      m2 += dens.values[i] * x * x * last.grid.cell_volume();
    }
    const double m0 = c.mass.empty() ? 1.0 : c.mass[0];
    const double s0 = p->width / std::sqrt(2.0);
    const double expected = s0 * std::sqrt(1 + std::pow(c.hbar * c.t_final / (2 * m0 * s0 * s0), 2));
    const double width = std::sqrt(m2 - mean * mean);
    r.metric("packet_width", width);
    r.metric("packet_width_expected", expected);
    r.check(true, "packet_width_rel_error", std::abs(width / expected - 1), "<", 0.01);
    r.check(r.ens, "tracking_tv", metric("final_tv"), "<", 0.15, "final histogram vs |psi(t)|^2/Z");
  }
  if (!r.fp && std::holds_alternative<AdiabaticParams>(c.params))
    r.check(false, "adiabatic_residual_tv", 0, "<", 0.1);
}

}  // namespace

const char* to_string(RunStage s) {
  switch (s) {
    case RunStage::fp_only: return "fp-only";
    case RunStage::ensemble_only: return "ensemble-only";
    default: return "all";
  }
}

const char* code_version() { return PSIFIELD_VERSION; }

RunManifest run_scenario(ScenarioConfig config, const RunOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  if (options.seed) config.master_seed = *options.seed;
  if (options.workers < 1) throw std::invalid_argument("workers must be >= 1");
  const std::string text = serialize_config(config);
  const auto valid = validate_config(text);
  if (!valid.config) {
    std::string msg = "invalid config:";
    for (const auto& e : valid.errors) msg += "\n  " + e;
    throw std::invalid_argument(msg);
  }

  Run r;
  r.cfg = *valid.config;
  r.opt = options;
  r.dir = options.out ? *options.out : fs::path(r.cfg.output_dir);
  r.fp = options.stage != RunStage::ensemble_only;
  r.ens = options.stage != RunStage::fp_only;
  r.gp = r.cfg.guidance;
  r.grid = r.cfg.make_grid();
  r.hgrid = r.cfg.make_histogram_grid();
  fs::create_directories(r.dir / "snapshots");

  r.m.code_version = code_version();
  r.m.scenario = r.cfg.scenario;
  r.m.stage = to_string(options.stage);
  r.m.config_json = serialize_config(r.cfg);
  r.m.workers = options.workers;

  prepare(r);
  if (r.ens) ensemble_stage(r);
  if (r.fp) fp_stage(r);
  if (r.ens && r.fp) oracle(r);
  scenario_checks(r);

  {
    std::ofstream(r.file("config.json")) << r.m.config_json << "\n";
    Csv metrics(r.file("metrics.csv"), {"name", "value"});
    for (const auto& [k, v] : r.m.metrics) metrics.row("\"" + k + "\"", {v});
    Csv th(r.file("thresholds.csv"), {"name", "value", "comparison", "limit", "status"});
    for (const auto& t : r.m.thresholds)
      th.fields({"\"" + t.name + "\"", fmt(t.value), t.comparison, fmt(t.limit), to_string(t.status)});
  }
  for (const auto& f : r.files) r.m.files.push_back(inventory_entry(r.dir, f));
  r.m.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_manifest(r.m, r.dir / "manifest.json");
  return r.m;
}

}  // namespace psifield
