#pragma once

#include "psifield/grid.hpp"
#include "psifield/guidance.hpp"
#include "psifield/smoluchowski.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace psifield {

inline constexpr std::array<const char*, 6> scenario_names{"double_well",        "interference",       "harmonic_ground",
                                                           "adiabatic_tracking", "product_separation", "free_packet"};

struct DoubleWellParams {
  double a = 1;
  double b = 3;
  double horizon_fraction = 0.02;  // default t_final, in units of the Kramers time (b/a >= 2)
  std::vector<double> mfpt_b_values{2.5, 3.0};
  Index mfpt_trajectories = 200;
  double mfpt_t_max_factor = 20;
  double jump_horizon_fraction = 0.1;
  Index jump_trajectories = 1000;
  friend bool operator==(const DoubleWellParams&, const DoubleWellParams&) = default;
};

struct InterferenceParams {
  double separation = 4;  // packets start at -+separation
  double momentum = 1.5;  // moving towards each other
  double width = 1;
  double node_depth = 1e-4;
  double node_significance = 1e-3;
  friend bool operator==(const InterferenceParams&, const InterferenceParams&) = default;
};

struct HarmonicGroundParams {
  double omega = 1;
  friend bool operator==(const HarmonicGroundParams&, const HarmonicGroundParams&) = default;
};

struct AdiabaticParams {
  double omega = 1;
  double displacement = 1;
  std::vector<double> lambda_sweep{1, 10, 100};
  friend bool operator==(const AdiabaticParams&, const AdiabaticParams&) = default;
};

struct ProductParams {
  double a = 1;  // double Gaussian along x
  double b = 1.5;
  double y_width = 1;
  friend bool operator==(const ProductParams&, const ProductParams&) = default;
};

struct FreePacketParams {
  double center = -5;
  double width = 1.4142135623730951;  // amplitude width; density std 1
  double momentum = 1;
  friend bool operator==(const FreePacketParams&, const FreePacketParams&) = default;
};

using ScenarioParams = std::variant<DoubleWellParams, InterferenceParams, HarmonicGroundParams, AdiabaticParams,
                                    ProductParams, FreePacketParams>;

struct InitialConfig {
  enum class Kind { density, point } kind = Kind::density;
  std::vector<double> point;
  friend bool operator==(const InitialConfig&, const InitialConfig&) = default;
};

struct FPConfig {
  FPScheme scheme = FPScheme::chang_cooper;
  FPStepping stepping = FPStepping::explicit_euler;
  std::optional<double> dt;  // unset: half the explicit stability limit, or dt for implicit
  friend bool operator==(const FPConfig&, const FPConfig&) = default;
};

struct ScenarioConfig {
  std::string scenario;
  std::vector<Axis<double>> grid;
  double hbar = 1;
  std::vector<double> mass;
  GuidanceParams<double> guidance;
  std::optional<DiffusionSpec<double>> diffusion;  // when set, guidance.lambda = l^2 / tau
  double dt = 1e-3;
  double dt_L = 1e-3;
  double t_final = 1;
  Index snapshot_stride = 10;
  Index n = 1000;
  std::uint64_t master_seed = 1;
  std::vector<Index> histogram_points;
  std::vector<double> checkpoints;
  InitialConfig initial;
  FPConfig fp;
  std::optional<Index> path_stride;
  Index path_records = 0;  // how many recorded paths go to paths.csv
  ScenarioParams params;
  std::string output_dir;

  Grid<double> make_grid() const { return Grid<double>(grid); }
  Grid<double> make_histogram_grid() const;
};

bool operator==(const ScenarioConfig& a, const ScenarioConfig& b);

struct ConfigResult {
  std::optional<ScenarioConfig> config;
  std::vector<std::string> errors;  // "path.to.key: message"
};

/// Every default for the named scenario. Throws on an unknown name.
ScenarioConfig default_config(const std::string& scenario);

/// Parses JSON, applies defaults, checks every constraint, and reports all
/// violations at once.
ConfigResult validate_config(const std::string& text);

/// JSON with every field explicit; feeding it back to validate_config gives
/// an equal config.
std::string serialize_config(const ScenarioConfig& config);

}  // namespace psifield
