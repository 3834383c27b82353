#pragma once

#include "psifield/grid.hpp"

#include <filesystem>
#include <string>
#include <variant>

namespace psifield {

/// Field snapshot on disk: `<stem>.bin` holds little-endian float64 values in
/// row-major node order (interleaved re/im for wave fields, dims components per
/// node for drift fields); `<stem>.json` holds
/// {dims, points, extent, boundary, time, kind}.
enum class SnapshotKind { density, wave, drift };

const char* to_string(SnapshotKind k);
SnapshotKind snapshot_kind_from_string(const std::string& s);

struct DriftSnapshot {
  Grid<double> grid;
  VectorValues<double> values;
  double time = 0;
};

using Snapshot = std::variant<DensityField<double>, WaveField<double>, DriftSnapshot>;

/// Writes both files and returns the paths written (bin first, json second).
std::pair<std::filesystem::path, std::filesystem::path> write_snapshot(const std::filesystem::path& stem,
                                                                      const DensityField<double>& field);
std::pair<std::filesystem::path, std::filesystem::path> write_snapshot(const std::filesystem::path& stem,
                                                                      const WaveField<double>& field);
std::pair<std::filesystem::path, std::filesystem::path> write_snapshot(const std::filesystem::path& stem,
                                                                      const DriftSnapshot& field);

Snapshot read_snapshot(const std::filesystem::path& stem);

}  // namespace psifield
