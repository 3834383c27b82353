// Acceptance run: one PASS/FAIL line per criterion.
#include "psifield/psifield.hpp"
#include "psifield/scenarios.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

using namespace psifield;
namespace fs = std::filesystem;
using G = Grid<double>;
using W = WaveField<double>;
using D = DensityField<double>;

namespace {

fs::path work_dir = "acceptance_runs";

struct Verdict {
  bool pass = false;
  std::string detail;
};

Point<double> pt(double x) {
  Point<double> p(1);
  p << x;
  return p;
}

double metric(const RunManifest& m, const std::string& name) {
  for (const auto& [k, v] : m.metrics)
    if (k == name) return v;
  throw std::runtime_error("manifest has no metric " + name);
}

const ThresholdCheck& threshold(const RunManifest& m, const std::string& name) {
  for (const auto& t : m.thresholds)
    if (t.name == name) return t;
  throw std::runtime_error("manifest has no threshold " + name);
}

bool passed(const RunManifest& m, const std::string& name) { return threshold(m, name).status == CheckStatus::pass; }

ScenarioConfig configure(const std::string& json) {
  const auto r = validate_config(json);
  if (!r.config) {
    std::string msg;
    for (const auto& e : r.errors) msg += e + "; ";
    throw std::runtime_error("bad acceptance config: " + msg);
  }
  return *r.config;
}

RunManifest run(const std::string& name, const std::string& json, RunStage stage = RunStage::all, int workers = 1) {
  RunOptions o;
  o.stage = stage;
  o.workers = workers;
  o.out = work_dir / name;
  return run_scenario(configure(json), o);
}

std::string num(double v, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

// ---------------------------------------------------------------------------

Verdict equilibrium_law() {
  const G g = G::line(-6, 6, 240, Boundary::reflecting);
  const G hist = G::line(-6, 6, 48, Boundary::reflecting);
  const W psi = make_packet(g, pt(0), 1.0, pt(0));
  GuidanceParams<double> params;
  const auto src = DriftSource<double>::from_waves({psi}, params);
  EnsembleOptions<double> o;
  o.master_seed = 11;
  const auto res = run_ensemble<double>(10000, PointMass<double>{pt(2.0)}, src, params, 0.01, 100.0, hist, o);
  const double tv = total_variation(res.histogram, coarse_grain(equilibrium_density(psi, params), hist));
  return {tv < 0.05, "TV " + num(tv) + " < 0.05 (n=1e4, t=100, lambda=1)"};
}

Verdict oracle_equivalence() {
  const auto dw = run("oracle_double_well", R"({"scenario": "double_well", "n": 100000, "t_final": 2,
      "checkpoints": [0.25, 0.75], "params": {"a": 1, "b": 1, "mfpt_b_values": []}})");
  const auto hg = run("oracle_harmonic", R"({"scenario": "harmonic_ground", "n": 100000, "guidance": {"lambda": 1},
      "dt_L": 0.001, "initial": {"kind": "point", "x": [1.5]}, "checkpoints": [0.1, 0.3]})");
  const double a = metric(dw, "oracle_tv_max"), b = metric(hg, "oracle_tv_max");
  return {passed(dw, "oracle_tv_max") && passed(hg, "oracle_tv_max"),
          "max TV over 3 checkpoints: double_well b/a=1 " + num(a) + ", harmonic " + num(b) + " (< 0.05, n=1e5)"};
}

Verdict adiabatic() {
  const auto m = run("adiabatic", R"({"scenario": "adiabatic_tracking"})", RunStage::fp_only);
  const double r1 = metric(m, "adiabatic_residual_tv[lambda=1]"), r10 = metric(m, "adiabatic_residual_tv[lambda=10]"),
               r100 = metric(m, "adiabatic_residual_tv[lambda=100]");
  const bool ok = r1 > r10 && r10 > r100 && r100 < 0.1;
  return {ok, "residual TV lambda=1,10,100: " + num(r1) + ", " + num(r10) + ", " + num(r100)};
}

Verdict kramers() {
  const auto m = run("kramers", R"({"scenario": "double_well", "params": {"a": 1, "b": 3, "mfpt_b_values": [2.5, 3.0]}})",
                     RunStage::ensemble_only);
  bool a = true;
  for (const auto& t : m.thresholds)
    if (t.name.rfind("mfpt_ratio[", 0) == 0 || t.name.rfind("mfpt_escapes[", 0) == 0) a = a && t.status == CheckStatus::pass;
  const bool b = passed(m, "mfpt_log_ratio_rel_error[b=2.5->3]");
  const bool c = passed(m, "no_jump_fraction");
  std::string d = std::string("(a) ") + (a ? "ok" : "FAIL") + " T/T_K=" + num(metric(m, "mfpt_ratio[b=2.5]")) +
                  " escapes=" + num(threshold(m, "mfpt_escapes[b=2.5]").value) + "; (b) " + (b ? "ok" : "FAIL") +
                  " ln ratio=" + num(metric(m, "mfpt_log_ratio[b=2.5->3]")) + " vs 2.75; (c) " + (c ? "ok" : "FAIL") +
                  " no-jump fraction=" + num(metric(m, "no_jump_fraction")) + " (>= 0.95; MFPT implies " +
                  num(metric(m, "no_jump_fraction_from_mfpt")) + ")";
  return {a && b && c, d};
}

Verdict interference() {
  const auto m = run("interference", R"({"scenario": "interference"})", RunStage::ensemble_only);
  const bool ok = passed(m, "zero_crossing_fraction") && passed(m, "fringe_tv");
  return {ok, "zero-crossing fraction " + num(metric(m, "zero_crossing_fraction")) + " >= 0.99, fringe TV " +
                  num(metric(m, "final_tv")) + " < 0.15"};
}

Verdict separability() {
  const auto m = run("separability", R"({"scenario": "product_separation"})", RunStage::ensemble_only);
  const auto& t = threshold(m, "increment_abs_rho");
  return {t.status == CheckStatus::pass,
          "|rho| " + num(t.value) + " < 3/sqrt(" + num(metric(m, "increment_samples"), 8) + ") = " + num(t.limit)};
}

Verdict hygiene() {
  std::vector<std::string> failures;
  std::ostringstream d;

  // wave propagator: 1e5 steps
  {
    const G g = G::line(-8, 8, 256, Boundary::periodic);
    HamiltonianSpec<double> h;
    h.potential = harmonic_potential(g, 1.0);
    W psi = make_packet(g, pt(1.0), 1.0, pt(0.5));
    const double n0 = squared_norm(psi);
    SplitStepPropagator<double> prop(g, h, 1e-3);
    double worst = 0;
    for (int s = 1; s <= 100000; ++s) {
      prop.step(psi);
      if (s % 1000 == 0) worst = std::max(worst, std::abs(squared_norm(psi) / n0 - 1));
    }
    d << "norm drift " << num(worst, 3);
    if (!(worst < 1e-9)) failures.push_back("norm drift");
  }

  // FP mass and fixed point
  {
    const G g = G::line(-9, 9, 256, Boundary::reflecting);
    const W psi = make_double_gaussian(g, DoubleGaussianParams<double>{1, 3});
    const GuidanceParams<double> params;
    const auto op = make_fp_operator(psi, params);
    const D eq = equilibrium_density(psi, params);
    double mass = 0, fixed = 0;
    for (FPStepping s : {FPStepping::explicit_euler, FPStepping::implicit_euler}) {
      FPStepper<double> stepper(op, s);
      const double dt = s == FPStepping::explicit_euler ? 0.9 * stepper.stability_limit() : 0.05;
      D p = D::zeros(g);
      p.values[40] = 1 / g.cell_volume();
      D q = eq;
      for (int k = 0; k < 200; ++k) {
        const double before = integrate(p);
        stepper.step(p, dt);
        mass = std::max(mass, std::abs(integrate(p) - before));
        stepper.step(q, dt);
      }
      fixed = std::max(fixed, (q.values - eq.values).abs().maxCoeff());
    }
    d << "; FP mass/step " << num(mass, 3) << "; fixed point " << num(fixed, 3);
    if (!(mass <= 1e-12)) failures.push_back("FP mass");
    if (!(fixed <= 1e-12)) failures.push_back("fixed point");
  }

  // EM increments with zero drift: mean 0, variance 2 lambda dt, no lag correlation
  {
    const G g = G::line(-1e6, 1e6, 8, Boundary::periodic);
    const auto src = DriftSource<double>::constant(g, pt(0.0));
    GuidanceParams<double> params;
    params.lambda = 1.3;
    const double dt = 1e-3;
    TrajectoryState<double> st(pt(0.0), 0, NoiseSpec{5, 0});
    const int n = 200000;
    double m1 = 0, m2 = 0, lag = 0, prev = 0;
    for (int i = 0; i < n; ++i) {
      const double x0 = st.x[0];
      step_em(st, src, params, dt);
      const double dx = st.x[0] - x0;
      m1 += dx;
      m2 += dx * dx;
      if (i > 0) lag += dx * prev;
      prev = dx;
    }
    const double var = 2 * params.lambda * dt;
    m1 /= n;
    m2 /= n;
    lag /= (n - 1) * var;
    const bool ok = std::abs(m1) < 3 * std::sqrt(var / n) && std::abs(m2 / var - 1) < 0.03 && std::abs(lag) < 3 / std::sqrt(n);
    d << "; EM var/(2 lambda dt) " << num(m2 / var, 5) << ", lag corr " << num(lag, 3);
    if (!ok) failures.push_back("EM moments");
  }
  std::string detail = d.str();
  for (const auto& f : failures) detail += " [" + f + " out of tolerance]";
  return {failures.empty(), detail};
}

Verdict determinism() {
  std::vector<std::string> mismatches;
  auto compare = [&](const std::string& name, const std::string& json) {
    run(name + "_w1", json, RunStage::all, 1);
    run(name + "_w3", json, RunStage::all, 3);
    const auto a = comparable_manifest(work_dir / (name + "_w1") / "manifest.json");
    const auto b = comparable_manifest(work_dir / (name + "_w3") / "manifest.json");
    if (a != b) mismatches.push_back(name + " manifest");
    const auto m = read_manifest(work_dir / (name + "_w1") / "manifest.json");
    for (const auto& f : m.files)
      if (sha256_file(work_dir / (name + "_w1") / f.path) != sha256_file(work_dir / (name + "_w3") / f.path))
        mismatches.push_back(name + "/" + f.path);
    return m.files.size();
  };
  std::size_t files = compare("determinism_harmonic", R"({"scenario": "harmonic_ground", "master_seed": 77})");
  files += compare("determinism_product", R"({"scenario": "product_separation", "t_final": 10, "n": 100,
      "path_records": 100, "master_seed": 78})");
  std::string detail = "1 vs 3 workers, " + std::to_string(files) + " files compared";
  for (const auto& m : mismatches) detail += " [differs: " + m + "]";
  return {mismatches.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) work_dir = argv[1];
  fs::create_directories(work_dir);
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"equilibrium law", equilibrium_law}, {"oracle equivalence", oracle_equivalence},
      {"adiabatic approximation", adiabatic}, {"Kramers localization", kramers},
      {"interference confinement", interference}, {"separability", separability},
      {"solver hygiene", hygiene}, {"determinism", determinism}};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    failed += v.pass ? 0 : 1;
    std::cout << (v.pass ? "PASS" : "FAIL") << "  " << (i + 1) << ". " << criteria[i].first << ": " << v.detail << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
