#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace psifield {

struct FileEntry {
  std::string path;  // relative to the run directory
  std::uintmax_t bytes = 0;
  std::string sha256;
};

enum class CheckStatus { pass, fail, skipped };

const char* to_string(CheckStatus s);

/// One embedded acceptance threshold: `value <comparison> limit`.
struct ThresholdCheck {
  std::string name;
  double value = 0;
  std::string comparison;  // "<", "<=", ">", ">="
  double limit = 0;
  CheckStatus status = CheckStatus::skipped;
  std::string note;
};

ThresholdCheck make_check(std::string name, double value, std::string comparison, double limit, std::string note = {});
ThresholdCheck skipped_check(std::string name, std::string comparison, double limit, std::string note);

/// Everything outside `runtime` is a pure function of (config, seed) and is
/// what determinism comparisons look at.
struct RunManifest {
  std::string format = "psifield-manifest/1";
  std::string code_version;
  std::string scenario;
  std::string stage;
  std::string config_json;
  std::vector<std::pair<std::string, double>> metrics;
  std::vector<ThresholdCheck> thresholds;
  std::vector<FileEntry> files;
  double wall_clock_seconds = 0;
  int workers = 1;

  bool thresholds_met() const;
};

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& file);
FileEntry inventory_entry(const std::filesystem::path& root, const std::filesystem::path& file);

void write_manifest(const RunManifest& m, const std::filesystem::path& file);
RunManifest read_manifest(const std::filesystem::path& file);

/// Manifest JSON without the runtime block.
std::string comparable_manifest(const std::filesystem::path& file);

/// Problems found when re-checking every listed file; empty when intact.
std::vector<std::string> verify_manifest(const RunManifest& m, const std::filesystem::path& run_dir);

/// Human-readable summary of metrics and thresholds.
std::string summarize(const RunManifest& m);

}  // namespace psifield
