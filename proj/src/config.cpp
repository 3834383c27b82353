#include "psifield/config.hpp"

#include "psifield/analysis.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

namespace psifield {

namespace {

using json = nlohmann::ordered_json;

constexpr double nominal_dt = 1e-3;

bool evolves(const std::string& s) { return s != "double_well" && s != "product_separation"; }
int dims_of(const std::string& s) { return s == "product_separation" ? 2 : 1; }

std::string scenario_list() {
  std::string out;
  for (const char* n : scenario_names) out += (out.empty() ? "" : ", ") + std::string(n);
  return out;
}

double kramers_time(const DoubleWellParams& p, double lambda) {
  return kramers_prediction(DoubleGaussianParams<double>{p.a, p.b}, lambda);
}

// Grid, time step and start point that follow from the scenario parameters.
std::vector<Axis<double>> derived_grid(const ScenarioConfig& c) {
  if (const auto* p = std::get_if<DoubleWellParams>(&c.params)) {
    double bmax = p->b;
    for (double b : p->mfpt_b_values) bmax = std::max(bmax, b);
    const double reach = bmax + 6 * p->a;
    return {{-reach, reach, 256, Boundary::reflecting}};
  }
  if (const auto* p = std::get_if<ProductParams>(&c.params)) {
    const double rx = p->b + 6 * p->a, ry = 6 * p->y_width;
    return {{-rx, rx, 120, Boundary::reflecting}, {-ry, ry, 96, Boundary::reflecting}};
  }
  return c.grid;
}

double derived_t_final(const ScenarioConfig& c) {
  if (const auto* p = std::get_if<DoubleWellParams>(&c.params)) {
    if (p->b / p->a >= 2) return p->horizon_fraction * kramers_time(*p, c.guidance.lambda);
    return 4.0;
  }
  if (const auto* p = std::get_if<InterferenceParams>(&c.params)) return p->separation / p->momentum;
  if (const auto* p = std::get_if<AdiabaticParams>(&c.params)) return 2 * std::numbers::pi / p->omega;
  return c.t_final;
}

// ---------------------------------------------------------------------------
// Reading with error collection

class Reader {
 public:
  explicit Reader(std::vector<std::string>& errors) : errors_(errors) {}

  void error(const std::string& path, const std::string& msg) { errors_.push_back(path + ": " + msg); }

  const json* object(const json& parent, const std::string& path, const char* key) {
    if (!parent.contains(key)) return nullptr;
    const json& v = parent.at(key);
    if (!v.is_object()) {
      error(join(path, key), "must be an object");
      return nullptr;
    }
    return &v;
  }

  void allow(const json& obj, const std::string& path, std::initializer_list<const char*> keys) {
    const std::set<std::string> ok(keys.begin(), keys.end());
    for (auto it = obj.begin(); it != obj.end(); ++it)
      if (!ok.count(it.key())) error(join(path, it.key()), "unknown key");
  }

  bool number(const json& obj, const std::string& path, const char* key, double& out) {
    if (!obj.contains(key)) return false;
    const json& v = obj.at(key);
    if (!v.is_number()) {
      error(join(path, key), "must be a number");
      return false;
    }
    out = v.get<double>();
    return true;
  }

  bool optional_number(const json& obj, const std::string& path, const char* key, std::optional<double>& out) {
    if (!obj.contains(key)) return false;
    if (obj.at(key).is_null()) {
      out.reset();
      return true;
    }
    double v = 0;
    if (!number(obj, path, key, v)) return false;
    out = v;
    return true;
  }

  bool integer(const json& obj, const std::string& path, const char* key, Index& out) {
    if (!obj.contains(key)) return false;
    const json& v = obj.at(key);
    if (!v.is_number_integer()) {
      error(join(path, key), "must be an integer");
      return false;
    }
    out = v.get<Index>();
    return true;
  }

  bool unsigned_integer(const json& obj, const std::string& path, const char* key, std::uint64_t& out) {
    if (!obj.contains(key)) return false;
    const json& v = obj.at(key);
    if (!v.is_number_unsigned()) {
      error(join(path, key), "must be a nonnegative integer");
      return false;
    }
    out = v.get<std::uint64_t>();
    return true;
  }

  bool boolean(const json& obj, const std::string& path, const char* key, bool& out) {
    if (!obj.contains(key)) return false;
    const json& v = obj.at(key);
    if (!v.is_boolean()) {
      error(join(path, key), "must be true or false");
      return false;
    }
    out = v.get<bool>();
    return true;
  }

  bool string(const json& obj, const std::string& path, const char* key, std::string& out) {
    if (!obj.contains(key)) return false;
    const json& v = obj.at(key);
    if (!v.is_string()) {
      error(join(path, key), "must be a string");
      return false;
    }
    out = v.get<std::string>();
    return true;
  }

  template <typename T>
  bool list(const json& obj, const std::string& path, const char* key, std::vector<T>& out) {
    if (!obj.contains(key)) return false;
    const json& v = obj.at(key);
    if (!v.is_array()) {
      error(join(path, key), "must be an array");
      return false;
    }
    std::vector<T> tmp;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const bool ok = std::is_integral_v<T> ? v[i].is_number_integer() : v[i].is_number();
      if (!ok) {
        error(join(path, key) + "[" + std::to_string(i) + "]", std::is_integral_v<T> ? "must be an integer" : "must be a number");
        return false;
      }
      tmp.push_back(v[i].get<T>());
    }
    out = std::move(tmp);
    return true;
  }

  static std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

 private:
  std::vector<std::string>& errors_;
};

void read_params(Reader& r, const json& obj, ScenarioParams& params) {
  const std::string P = "params";
  std::visit(
      [&](auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, DoubleWellParams>) {
          r.allow(obj, P, {"a", "b", "horizon_fraction", "mfpt_b_values", "mfpt_trajectories", "mfpt_t_max_factor",
                           "jump_horizon_fraction", "jump_trajectories"});
          r.number(obj, P, "a", p.a);
          r.number(obj, P, "b", p.b);
          r.number(obj, P, "horizon_fraction", p.horizon_fraction);
          r.list(obj, P, "mfpt_b_values", p.mfpt_b_values);
          r.integer(obj, P, "mfpt_trajectories", p.mfpt_trajectories);
          r.number(obj, P, "mfpt_t_max_factor", p.mfpt_t_max_factor);
          r.number(obj, P, "jump_horizon_fraction", p.jump_horizon_fraction);
          r.integer(obj, P, "jump_trajectories", p.jump_trajectories);
        } else if constexpr (std::is_same_v<T, InterferenceParams>) {
          r.allow(obj, P, {"separation", "momentum", "width", "node_depth", "node_significance"});
          r.number(obj, P, "separation", p.separation);
          r.number(obj, P, "momentum", p.momentum);
          r.number(obj, P, "width", p.width);
          r.number(obj, P, "node_depth", p.node_depth);
          r.number(obj, P, "node_significance", p.node_significance);
        } else if constexpr (std::is_same_v<T, HarmonicGroundParams>) {
          r.allow(obj, P, {"omega"});
          r.number(obj, P, "omega", p.omega);
        } else if constexpr (std::is_same_v<T, AdiabaticParams>) {
          r.allow(obj, P, {"omega", "displacement", "lambda_sweep"});
          r.number(obj, P, "omega", p.omega);
          r.number(obj, P, "displacement", p.displacement);
          r.list(obj, P, "lambda_sweep", p.lambda_sweep);
        } else if constexpr (std::is_same_v<T, ProductParams>) {
          r.allow(obj, P, {"a", "b", "y_width"});
          r.number(obj, P, "a", p.a);
          r.number(obj, P, "b", p.b);
          r.number(obj, P, "y_width", p.y_width);
        } else {
          r.allow(obj, P, {"center", "width", "momentum"});
          r.number(obj, P, "center", p.center);
          r.number(obj, P, "width", p.width);
          r.number(obj, P, "momentum", p.momentum);
        }
      },
      params);
}

json params_to_json(const ScenarioParams& params) {
  return std::visit(
      [](const auto& p) -> json {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, DoubleWellParams>)
          return {{"a", p.a},
                  {"b", p.b},
                  {"horizon_fraction", p.horizon_fraction},
                  {"mfpt_b_values", p.mfpt_b_values},
                  {"mfpt_trajectories", p.mfpt_trajectories},
                  {"mfpt_t_max_factor", p.mfpt_t_max_factor},
                  {"jump_horizon_fraction", p.jump_horizon_fraction},
                  {"jump_trajectories", p.jump_trajectories}};
        else if constexpr (std::is_same_v<T, InterferenceParams>)
          return {{"separation", p.separation},
                  {"momentum", p.momentum},
                  {"width", p.width},
                  {"node_depth", p.node_depth},
                  {"node_significance", p.node_significance}};
        else if constexpr (std::is_same_v<T, HarmonicGroundParams>)
          return {{"omega", p.omega}};
        else if constexpr (std::is_same_v<T, AdiabaticParams>)
          return {{"omega", p.omega}, {"displacement", p.displacement}, {"lambda_sweep", p.lambda_sweep}};
        else if constexpr (std::is_same_v<T, ProductParams>)
          return {{"a", p.a}, {"b", p.b}, {"y_width", p.y_width}};
        else
          return {{"center", p.center}, {"width", p.width}, {"momentum", p.momentum}};
      },
      params);
}

const char* stepping_name(FPStepping s) { return s == FPStepping::explicit_euler ? "explicit" : "implicit"; }
const char* scheme_name(FPScheme s) { return s == FPScheme::chang_cooper ? "chang_cooper" : "central"; }

// ---------------------------------------------------------------------------
// Constraint checks on a fully populated config

void check(const ScenarioConfig& c, std::vector<std::string>& errors) {
  auto err = [&](const std::string& path, const std::string& msg) { errors.push_back(path + ": " + msg); };
  auto num = [](double v) {
    std::ostringstream s;
    s << v;
    return s.str();
  };

  const int dims = dims_of(c.scenario);
  if (static_cast<int>(c.grid.size()) != dims)
    err("grid", "scenario " + c.scenario + " needs " + std::to_string(dims) + " axis" + (dims > 1 ? "es" : ""));
  for (std::size_t k = 0; k < c.grid.size(); ++k) {
    const auto& a = c.grid[k];
    const std::string p = "grid[" + std::to_string(k) + "]";
    if (a.points < Grid<double>::min_points) err(p + ".points", "must be >= 8");
    if (!(std::isfinite(a.lo) && std::isfinite(a.hi) && a.hi > a.lo)) err(p, "needs finite lo < hi");
    if (evolves(c.scenario) && a.boundary != Boundary::periodic)
      err(p + ".boundary", "the wave propagator requires periodic boundaries");
  }
  if (!(c.hbar > 0)) err("hamiltonian.hbar", "must be > 0");
  if (!c.mass.empty() && static_cast<int>(c.mass.size()) != dims) err("hamiltonian.mass", "need one mass per axis");
  for (double m : c.mass)
    if (!(m > 0)) err("hamiltonian.mass", "masses must be > 0");

  if (!(c.guidance.lambda > 0)) err("guidance.lambda", "must be > 0");
  if (!(c.guidance.epsilon > 0)) err("guidance.epsilon", "must be > 0");
  if (c.guidance.drift_cap && !(*c.guidance.drift_cap > 0)) err("guidance.drift_cap", "must be > 0 or null");
  if (c.diffusion && !(c.diffusion->length_scale > 0 && c.diffusion->time_scale > 0))
    err("diffusion", "length_scale and time_scale must be > 0");

  if (!(c.dt > 0)) err("dt", "must be > 0");
  if (!(c.dt_L > 0)) err("dt_L", "must be > 0");
  if (c.dt_L > c.dt) err("dt_L", "dt_L (" + num(c.dt_L) + ") must not exceed dt (" + num(c.dt) + ")");
  if (!(c.t_final > 0)) err("t_final", "must be > 0");
  if (evolves(c.scenario) && c.dt > 0 && c.t_final > 0) {
    const double steps = c.t_final / c.dt;
    if (std::abs(std::round(steps) * c.dt - c.t_final) > 1e-9) err("dt", "must divide t_final (" + num(c.t_final) + ")");
  }
  if (c.snapshot_stride < 1) err("snapshot_stride", "must be >= 1");
  if (c.n < 1) err("n", "must be >= 1");

  if (static_cast<int>(c.histogram_points.size()) != dims)
    err("histogram_points", "need one entry per grid axis");
  else
    for (std::size_t k = 0; k < c.grid.size(); ++k) {
      const Index h = c.histogram_points[k];
      if (h < Grid<double>::min_points || c.grid[k].points % h != 0)
        err("histogram_points[" + std::to_string(k) + "]", "must be >= 8 and divide grid points");
    }
  for (double t : c.checkpoints)
    if (!(t > 0 && t < c.t_final)) err("checkpoints", "every checkpoint must lie in (0, t_final)");
  if (std::adjacent_find(c.checkpoints.begin(), c.checkpoints.end(), std::greater_equal<>()) != c.checkpoints.end())
    err("checkpoints", "must be strictly increasing");

  if (c.initial.kind == InitialConfig::Kind::point) {
    if (static_cast<int>(c.initial.point.size()) != dims) err("initial.x", "need one coordinate per grid axis");
    for (std::size_t k = 0; k < c.initial.point.size() && k < c.grid.size(); ++k)
      if (!(c.initial.point[k] >= c.grid[k].lo && c.initial.point[k] <= c.grid[k].hi))
        err("initial.x", "start point lies outside the grid");
  }
  if (c.fp.dt && !(*c.fp.dt > 0)) err("fp.dt", "must be > 0 or null");
  if (c.path_stride && *c.path_stride < 1) err("path_stride", "must be >= 1 or null");
  if (c.path_records < 0) err("path_records", "must be >= 0");
  if (c.path_records > 0 && !c.path_stride) err("path_records", "needs path_stride");
  if (c.output_dir.empty()) err("output_dir", "must not be empty");

  auto positive = [&](const char* key, double v) {
    if (!(v > 0)) err(std::string("params.") + key, "must be > 0");
  };
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, DoubleWellParams>) {
          positive("a", p.a);
          positive("b", p.b);
          positive("horizon_fraction", p.horizon_fraction);
          positive("mfpt_t_max_factor", p.mfpt_t_max_factor);
          positive("jump_horizon_fraction", p.jump_horizon_fraction);
          if (p.mfpt_trajectories < 0) err("params.mfpt_trajectories", "must be >= 0");
          if (p.jump_trajectories < 0) err("params.jump_trajectories", "must be >= 0");
          std::vector<double> bs = p.mfpt_b_values;
          bs.push_back(p.b);
          for (double b : bs) {
            if (!(b > 0)) err("params.mfpt_b_values", "must be > 0");
            if (!c.grid.empty() && (c.grid[0].lo > -(b + 6 * p.a) || c.grid[0].hi < b + 6 * p.a))
              err("grid[0]", "must cover [-b-6a, b+6a] for b = " + num(b));
          }
        } else if constexpr (std::is_same_v<T, InterferenceParams>) {
          positive("separation", p.separation);
          positive("momentum", p.momentum);
          positive("width", p.width);
          positive("node_depth", p.node_depth);
          positive("node_significance", p.node_significance);
        } else if constexpr (std::is_same_v<T, HarmonicGroundParams>) {
          positive("omega", p.omega);
        } else if constexpr (std::is_same_v<T, AdiabaticParams>) {
          positive("omega", p.omega);
          if (p.lambda_sweep.empty()) err("params.lambda_sweep", "must not be empty");
          for (double l : p.lambda_sweep)
            if (!(l > 0)) err("params.lambda_sweep", "entries must be > 0");
        } else if constexpr (std::is_same_v<T, ProductParams>) {
          positive("a", p.a);
          positive("b", p.b);
          positive("y_width", p.y_width);
        } else {
          positive("width", p.width);
        }
      },
      c.params);
}

}  // namespace

Grid<double> ScenarioConfig::make_histogram_grid() const {
  std::vector<Axis<double>> axes = grid;
  for (std::size_t k = 0; k < axes.size(); ++k) axes[k].points = histogram_points.at(k);
  return Grid<double>(axes);
}

bool operator==(const ScenarioConfig& a, const ScenarioConfig& b) { return serialize_config(a) == serialize_config(b); }

ScenarioConfig default_config(const std::string& scenario) {
  ScenarioConfig c;
  c.scenario = scenario;
  c.output_dir = "runs/" + scenario;
  if (scenario == "double_well") {
    c.params = DoubleWellParams{};
    c.dt = c.dt_L = 0.01;
    c.snapshot_stride = 1;
    c.histogram_points = {64};
    c.initial = {InitialConfig::Kind::point, {-std::get<DoubleWellParams>(c.params).b}};
  } else if (scenario == "interference") {
    c.params = InterferenceParams{};
    c.grid = {{-16, 16, 2048, Boundary::periodic}};
    c.guidance.lambda = 10;
    c.dt_L = 1e-4;
    c.n = 2000;
    c.histogram_points = {128};
    c.fp.stepping = FPStepping::implicit_euler;
    c.fp.dt = 1e-4;
  } else if (scenario == "harmonic_ground") {
    c.params = HarmonicGroundParams{};
    c.grid = {{-8, 8, 256, Boundary::periodic}};
    c.guidance.lambda = 10;
    c.dt_L = 1e-4;
    c.t_final = 1;
    c.histogram_points = {32};
    c.initial = {InitialConfig::Kind::point, {0.0}};
    c.fp.stepping = FPStepping::implicit_euler;
    c.fp.dt = 1e-3;
  } else if (scenario == "adiabatic_tracking") {
    c.params = AdiabaticParams{};
    c.grid = {{-8, 8, 256, Boundary::periodic}};
    c.guidance.lambda = 10;
    c.dt_L = 2e-4;
    c.n = 2000;
    c.histogram_points = {32};
    c.fp.stepping = FPStepping::implicit_euler;
    c.fp.dt = 1e-3;
  } else if (scenario == "product_separation") {
    c.params = ProductParams{};
    c.dt = c.dt_L = 0.0025;
    c.t_final = 50;
    c.n = 200;
    c.snapshot_stride = 1;
    c.histogram_points = {30, 24};
    c.path_stride = 20;
  } else if (scenario == "free_packet") {
    c.params = FreePacketParams{};
    c.grid = {{-20, 20, 1024, Boundary::periodic}};
    c.guidance.lambda = 10;
    c.dt_L = 1e-4;
    c.t_final = 2;
    c.n = 2000;
    c.histogram_points = {128};
    c.fp.stepping = FPStepping::implicit_euler;
    c.fp.dt = 1e-3;
  } else {
    throw std::invalid_argument("unknown scenario '" + scenario + "'; valid names: " + scenario_list());
  }
  c.grid = derived_grid(c);
  c.t_final = derived_t_final(c);
  if (evolves(scenario)) c.dt = c.t_final / std::ceil(c.t_final / nominal_dt - 1e-9);
  return c;
}

ConfigResult validate_config(const std::string& text) {
  ConfigResult res;
  auto& errors = res.errors;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    errors.push_back(std::string("(document): invalid JSON: ") + e.what());
    return res;
  }
  if (!doc.is_object()) {
    errors.push_back("(document): must be a JSON object");
    return res;
  }
  Reader r(errors);
  std::string name;
  if (!doc.contains("scenario")) {
    errors.push_back("scenario: required; valid names: " + scenario_list());
    return res;
  }
  if (!r.string(doc, "", "scenario", name)) return res;
  if (std::find_if(scenario_names.begin(), scenario_names.end(), [&](const char* n) { return name == n; }) ==
      scenario_names.end()) {
    errors.push_back("scenario: unknown scenario '" + name + "'; valid names: " + scenario_list());
    return res;
  }

  ScenarioConfig c = default_config(name);
  r.allow(doc, "", {"scenario", "grid", "hamiltonian", "guidance", "diffusion", "dt", "dt_L", "t_final", "snapshot_stride",
                    "n", "master_seed", "histogram_points", "checkpoints", "initial", "fp", "path_stride", "path_records",
                    "params", "output_dir"});

  if (const json* p = r.object(doc, "", "params")) read_params(r, *p, c.params);

  if (const json* g = r.object(doc, "", "guidance")) {
    r.allow(*g, "guidance", {"lambda", "epsilon", "relative_epsilon", "drift_cap"});
    r.number(*g, "guidance", "lambda", c.guidance.lambda);
    r.number(*g, "guidance", "epsilon", c.guidance.epsilon);
    r.boolean(*g, "guidance", "relative_epsilon", c.guidance.relative_epsilon);
    r.optional_number(*g, "guidance", "drift_cap", c.guidance.drift_cap);
  }
  if (doc.contains("diffusion") && !doc.at("diffusion").is_null()) {
    if (const json* d = r.object(doc, "", "diffusion")) {
      r.allow(*d, "diffusion", {"length_scale", "time_scale"});
      DiffusionSpec<double> spec;
      const bool l = r.number(*d, "diffusion", "length_scale", spec.length_scale);
      const bool t = r.number(*d, "diffusion", "time_scale", spec.time_scale);
      if (!l || !t) {
        r.error("diffusion", "needs length_scale and time_scale");
      } else if (spec.length_scale > 0 && spec.time_scale > 0) {
        const double lambda = diffusion_constant(spec);
        const json* g = doc.contains("guidance") && doc.at("guidance").is_object() ? &doc.at("guidance") : nullptr;
        if (g && g->contains("lambda") && g->at("lambda").is_number() &&
            std::abs(g->at("lambda").get<double>() - lambda) > 1e-12 * lambda)
          r.error("diffusion", "conflicts with guidance.lambda; give one or make them agree");
        c.guidance.lambda = lambda;
        c.diffusion = spec;
      } else {
        c.diffusion = spec;
      }
    }
  }

  if (const json* h = r.object(doc, "", "hamiltonian")) {
    r.allow(*h, "hamiltonian", {"hbar", "mass"});
    r.number(*h, "hamiltonian", "hbar", c.hbar);
    r.list(*h, "hamiltonian", "mass", c.mass);
  }

  const bool has_grid = doc.contains("grid");
  if (has_grid) {
    const json& g = doc.at("grid");
    if (!g.is_array()) {
      r.error("grid", "must be an array of axes");
    } else {
      std::vector<Axis<double>> axes;
      for (std::size_t k = 0; k < g.size(); ++k) {
        const std::string p = "grid[" + std::to_string(k) + "]";
        if (!g[k].is_object()) {
          r.error(p, "must be an object");
          continue;
        }
        Axis<double> a;
        r.allow(g[k], p, {"lo", "hi", "points", "boundary"});
        if (!r.number(g[k], p, "lo", a.lo)) r.error(p + ".lo", "required");
        if (!r.number(g[k], p, "hi", a.hi)) r.error(p + ".hi", "required");
        if (!r.integer(g[k], p, "points", a.points)) r.error(p + ".points", "required");
        std::string b = "periodic";
        r.string(g[k], p, "boundary", b);
        if (b == "periodic" || b == "reflecting")
          a.boundary = boundary_from_string(b);
        else
          r.error(p + ".boundary", "must be periodic or reflecting");
        axes.push_back(a);
      }
      c.grid = axes;
    }
  } else {
    c.grid = derived_grid(c);
  }

  const bool has_dt = r.number(doc, "", "dt", c.dt);
  r.number(doc, "", "dt_L", c.dt_L);
  const bool has_t = r.number(doc, "", "t_final", c.t_final);
  if (!has_t) c.t_final = derived_t_final(c);
  if (!has_dt && evolves(name) && c.t_final > 0) c.dt = c.t_final / std::ceil(c.t_final / nominal_dt - 1e-9);
  r.integer(doc, "", "snapshot_stride", c.snapshot_stride);
  r.integer(doc, "", "n", c.n);
  r.unsigned_integer(doc, "", "master_seed", c.master_seed);
  const bool has_hist = r.list(doc, "", "histogram_points", c.histogram_points);
  bool hist_fits = c.histogram_points.size() == c.grid.size();
  for (std::size_t k = 0; hist_fits && k < c.grid.size(); ++k) hist_fits = c.grid[k].points % c.histogram_points[k] == 0;
  if (!has_hist && !hist_fits) {
    // default bins when the grid shape was changed by hand
    c.histogram_points.clear();
    for (const auto& a : c.grid) c.histogram_points.push_back(a.points % 8 == 0 ? a.points / 8 : a.points);
  }
  r.list(doc, "", "checkpoints", c.checkpoints);

  const bool has_initial = doc.contains("initial");
  if (const json* i = r.object(doc, "", "initial")) {
    r.allow(*i, "initial", {"kind", "x"});
    std::string kind = "density";
    r.string(*i, "initial", "kind", kind);
    if (kind == "density") {
      c.initial = {InitialConfig::Kind::density, {}};
      if (i->contains("x")) r.error("initial.x", "only valid with kind \"point\"");
    } else if (kind == "point") {
      c.initial.kind = InitialConfig::Kind::point;
      if (!r.list(*i, "initial", "x", c.initial.point)) r.error("initial.x", "required for kind \"point\"");
    } else {
      r.error("initial.kind", "must be density or point");
    }
  }
  if (!has_initial && name == "double_well")
    c.initial = {InitialConfig::Kind::point, {-std::get<DoubleWellParams>(c.params).b}};

  if (const json* f = r.object(doc, "", "fp")) {
    r.allow(*f, "fp", {"scheme", "stepping", "dt"});
    std::string s;
    if (r.string(*f, "fp", "scheme", s)) {
      if (s == "chang_cooper")
        c.fp.scheme = FPScheme::chang_cooper;
      else if (s == "central")
        c.fp.scheme = FPScheme::central;
      else
        r.error("fp.scheme", "must be chang_cooper or central");
    }
    if (r.string(*f, "fp", "stepping", s)) {
      if (s == "explicit")
        c.fp.stepping = FPStepping::explicit_euler;
      else if (s == "implicit")
        c.fp.stepping = FPStepping::implicit_euler;
      else
        r.error("fp.stepping", "must be explicit or implicit");
    }
    r.optional_number(*f, "fp", "dt", c.fp.dt);
  }
  if (doc.contains("path_stride")) {
    if (doc.at("path_stride").is_null()) {
      c.path_stride.reset();
    } else {
      Index s = 0;
      if (r.integer(doc, "", "path_stride", s)) c.path_stride = s;
    }
  }
  r.integer(doc, "", "path_records", c.path_records);
  r.string(doc, "", "output_dir", c.output_dir);

  check(c, errors);
  if (errors.empty()) res.config = std::move(c);
  return res;
}

std::string serialize_config(const ScenarioConfig& c) {
  json grid = json::array();
  for (const auto& a : c.grid)
    grid.push_back({{"lo", a.lo}, {"hi", a.hi}, {"points", a.points}, {"boundary", to_string(a.boundary)}});
  json doc;
  doc["scenario"] = c.scenario;
  doc["grid"] = grid;
  doc["hamiltonian"] = {{"hbar", c.hbar}, {"mass", c.mass}};
  doc["guidance"] = {{"lambda", c.guidance.lambda},
                     {"epsilon", c.guidance.epsilon},
                     {"relative_epsilon", c.guidance.relative_epsilon},
                     {"drift_cap", c.guidance.drift_cap ? json(*c.guidance.drift_cap) : json(nullptr)}};
  doc["diffusion"] = c.diffusion ? json{{"length_scale", c.diffusion->length_scale}, {"time_scale", c.diffusion->time_scale}}
                                 : json(nullptr);
  doc["dt"] = c.dt;
  doc["dt_L"] = c.dt_L;
  doc["t_final"] = c.t_final;
  doc["snapshot_stride"] = c.snapshot_stride;
  doc["n"] = c.n;
  doc["master_seed"] = c.master_seed;
  doc["histogram_points"] = c.histogram_points;
  doc["checkpoints"] = c.checkpoints;
  doc["initial"] = c.initial.kind == InitialConfig::Kind::point ? json{{"kind", "point"}, {"x", c.initial.point}}
                                                                 : json{{"kind", "density"}};
  doc["fp"] = {{"scheme", scheme_name(c.fp.scheme)},
               {"stepping", stepping_name(c.fp.stepping)},
               {"dt", c.fp.dt ? json(*c.fp.dt) : json(nullptr)}};
  doc["path_stride"] = c.path_stride ? json(*c.path_stride) : json(nullptr);
  doc["path_records"] = c.path_records;
  doc["params"] = params_to_json(c.params);
  doc["output_dir"] = c.output_dir;
  return doc.dump(2);
}

}  // namespace psifield
