#include "psifield/snapshot_io.hpp"

#include "json.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace psifield {

static_assert(std::endian::native == std::endian::little, "snapshot format assumes a little-endian host");

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

fs::path with_suffix(const fs::path& stem, const char* ext) {
  fs::path p = stem;
  p += ext;
  return p;
}

json grid_header(const Grid<double>& grid, double time, SnapshotKind kind) {
  json h;
  h["dims"] = grid.dims();
  json points = json::array(), extent = json::array(), boundary = json::array();
  for (int k = 0; k < grid.dims(); ++k) {
    points.push_back(grid.points(k));
    extent.push_back({grid.lo(k), grid.hi(k)});
    boundary.push_back(to_string(grid.boundary(k)));
  }
  h["points"] = points;
  h["extent"] = extent;
  h["boundary"] = boundary;
  h["time"] = time;
  h["kind"] = to_string(kind);
  return h;
}

Grid<double> grid_from_header(const json& h) {
  const int dims = h.at("dims").get<int>();
  std::vector<Axis<double>> axes;
  for (int k = 0; k < dims; ++k) {
    Axis<double> a;
    a.points = h.at("points").at(k).get<Index>();
    a.lo = h.at("extent").at(k).at(0).get<double>();
    a.hi = h.at("extent").at(k).at(1).get<double>();
    a.boundary = boundary_from_string(h.at("boundary").at(k).get<std::string>());
    axes.push_back(a);
  }
  return Grid<double>(std::move(axes));
}

void write_doubles(const fs::path& path, const double* data, std::size_t count) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(double)));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<double> read_doubles(const fs::path& path, std::size_t expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<double> data(expected);
  in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(expected * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(expected * sizeof(double)) || in.peek() != EOF) {
    throw std::runtime_error("snapshot payload size mismatch: " + path.string());
  }
  return data;
}

void write_header(const fs::path& path, const json& h) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << h.dump(2) << '\n';
}

}  // namespace

const char* to_string(SnapshotKind k) {
  switch (k) {
    case SnapshotKind::density: return "density";
    case SnapshotKind::wave: return "wave";
    case SnapshotKind::drift: return "drift";
  }
  return "density";
}

SnapshotKind snapshot_kind_from_string(const std::string& s) {
  if (s == "density") return SnapshotKind::density;
  if (s == "wave") return SnapshotKind::wave;
  if (s == "drift") return SnapshotKind::drift;
  throw std::invalid_argument("unknown snapshot kind '" + s + "'");
}

std::pair<fs::path, fs::path> write_snapshot(const fs::path& stem, const DensityField<double>& field) {
  const auto bin = with_suffix(stem, ".bin"), hdr = with_suffix(stem, ".json");
  write_doubles(bin, field.values.data(), static_cast<std::size_t>(field.values.size()));
  write_header(hdr, grid_header(field.grid, field.time, SnapshotKind::density));
  return {bin, hdr};
}

std::pair<fs::path, fs::path> write_snapshot(const fs::path& stem, const WaveField<double>& field) {
  const auto bin = with_suffix(stem, ".bin"), hdr = with_suffix(stem, ".json");
  // std::complex<double> is layout-compatible with double[2].
  write_doubles(bin, reinterpret_cast<const double*>(field.values.data()),
                2 * static_cast<std::size_t>(field.values.size()));
  write_header(hdr, grid_header(field.grid, field.time, SnapshotKind::wave));
  return {bin, hdr};
}

std::pair<fs::path, fs::path> write_snapshot(const fs::path& stem, const DriftSnapshot& field) {
  const auto bin = with_suffix(stem, ".bin"), hdr = with_suffix(stem, ".json");
  const Index n = field.grid.size();
  const int d = field.grid.dims();
  std::vector<double> flat(static_cast<std::size_t>(n * d));
  for (Index i = 0; i < n; ++i)
    for (int k = 0; k < d; ++k) flat[static_cast<std::size_t>(i * d + k)] = field.values(i, k);
  write_doubles(bin, flat.data(), flat.size());
  write_header(hdr, grid_header(field.grid, field.time, SnapshotKind::drift));
  return {bin, hdr};
}

Snapshot read_snapshot(const fs::path& stem) {
  std::ifstream hin(with_suffix(stem, ".json"));
  if (!hin) throw std::runtime_error("cannot open snapshot header " + with_suffix(stem, ".json").string());
  const json h = json::parse(hin);
  Grid<double> grid = grid_from_header(h);
  const double time = h.at("time").get<double>();
  const auto kind = snapshot_kind_from_string(h.at("kind").get<std::string>());
  const auto n = static_cast<std::size_t>(grid.size());
  const auto bin = with_suffix(stem, ".bin");
  switch (kind) {
    case SnapshotKind::density: {
      auto data = read_doubles(bin, n);
      RealArray<double> v = Eigen::Map<const RealArray<double>>(data.data(), grid.size());
      return DensityField<double>(std::move(grid), std::move(v), time);
    }
    case SnapshotKind::wave: {
      auto data = read_doubles(bin, 2 * n);
      ComplexArray<double> v(grid.size());
      std::memcpy(reinterpret_cast<double*>(v.data()), data.data(), data.size() * sizeof(double));
      return WaveField<double>(std::move(grid), std::move(v), time);
    }
    case SnapshotKind::drift: {
      const int d = grid.dims();
      auto data = read_doubles(bin, n * static_cast<std::size_t>(d));
      DriftSnapshot s{grid, VectorValues<double>(grid.size(), d), time};
      for (Index i = 0; i < grid.size(); ++i)
        for (int k = 0; k < d; ++k) s.values(i, k) = data[static_cast<std::size_t>(i * d + k)];
      return s;
    }
  }
  throw std::logic_error("unreachable snapshot kind");
}

}  // namespace psifield
