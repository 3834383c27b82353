#pragma once

#include "psifield/config.hpp"
#include "psifield/manifest.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>

namespace psifield {

enum class RunStage { all, fp_only, ensemble_only };

const char* to_string(RunStage s);

struct RunOptions {
  int workers = 1;
  RunStage stage = RunStage::all;
  std::optional<std::filesystem::path> out;  // overrides config.output_dir
  std::optional<std::uint64_t> seed;         // overrides config.master_seed
};

/// Runs one scenario end to end and writes manifest.json, config.json,
/// metric CSVs and field snapshots into the output directory. Threshold
/// failures are recorded in the manifest, not thrown.
RunManifest run_scenario(ScenarioConfig config, const RunOptions& options = {});

/// Compile-time version string recorded in manifests.
const char* code_version();

}  // namespace psifield
