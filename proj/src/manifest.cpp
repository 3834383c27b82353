#include "psifield/manifest.hpp"

#include "json.hpp"

#include <openssl/evp.h>

#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <memory>
#include <sstream>
#include <stdexcept>

namespace psifield {

namespace {

using json = nlohmann::ordered_json;

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new(), EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) throw std::runtime_error("sha256: init failed");
  }
  void update(const char* data, std::size_t n) {
    if (EVP_DigestUpdate(ctx_.get(), data, n) != 1) throw std::runtime_error("sha256: update failed");
  }
  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx_.get(), md.data(), &len) != 1) throw std::runtime_error("sha256: final failed");
    std::ostringstream s;
    for (unsigned int i = 0; i < len; ++i) s << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    return s.str();
  }

 private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
double number_from(const json& v) { return v.is_number() ? v.get<double>() : std::numeric_limits<double>::quiet_NaN(); }

CheckStatus status_from_string(const std::string& s) {
  if (s == "pass") return CheckStatus::pass;
  if (s == "fail") return CheckStatus::fail;
  if (s == "skipped") return CheckStatus::skipped;
  throw std::invalid_argument("manifest: unknown threshold status '" + s + "'");
}

json to_json(const RunManifest& m, bool with_runtime) {
  json doc;
  doc["format"] = m.format;
  doc["code_version"] = m.code_version;
  doc["scenario"] = m.scenario;
  doc["stage"] = m.stage;
  doc["config"] = json::parse(m.config_json);
  json metrics = json::object();
  for (const auto& [k, v] : m.metrics) metrics[k] = number_or_null(v);
  doc["metrics"] = metrics;
  json th = json::array();
  for (const auto& t : m.thresholds)
    th.push_back({{"name", t.name},
                  {"value", number_or_null(t.value)},
                  {"comparison", t.comparison},
                  {"limit", t.limit},
                  {"status", to_string(t.status)},
                  {"note", t.note}});
  doc["thresholds"] = th;
  doc["thresholds_met"] = m.thresholds_met();
  json files = json::array();
  for (const auto& f : m.files) files.push_back({{"path", f.path}, {"bytes", f.bytes}, {"sha256", f.sha256}});
  doc["files"] = files;
  if (with_runtime) doc["runtime"] = {{"wall_clock_seconds", m.wall_clock_seconds}, {"workers", m.workers}};
  return doc;
}

}  // namespace

const char* to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::pass: return "pass";
    case CheckStatus::fail: return "fail";
    default: return "skipped";
  }
}

ThresholdCheck make_check(std::string name, double value, std::string comparison, double limit, std::string note) {
  bool ok = false;
  if (comparison == "<")
    ok = value < limit;
  else if (comparison == "<=")
    ok = value <= limit;
  else if (comparison == ">")
    ok = value > limit;
  else if (comparison == ">=")
    ok = value >= limit;
  else
    throw std::invalid_argument("threshold: unknown comparison '" + comparison + "'");
  return {std::move(name), value, std::move(comparison), limit, ok ? CheckStatus::pass : CheckStatus::fail, std::move(note)};
}

ThresholdCheck skipped_check(std::string name, std::string comparison, double limit, std::string note) {
  return {std::move(name), std::numeric_limits<double>::quiet_NaN(), std::move(comparison), limit, CheckStatus::skipped,
          std::move(note)};
}

bool RunManifest::thresholds_met() const {
  for (const auto& t : thresholds)
    if (t.status == CheckStatus::fail) return false;
  return true;
}

std::string sha256_hex(const std::string& bytes) {
  Sha256 h;
  h.update(bytes.data(), bytes.size());
  return h.hex();
}

std::string sha256_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + file.string());
  Sha256 h;
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

FileEntry inventory_entry(const std::filesystem::path& root, const std::filesystem::path& file) {
  const auto full = file.is_absolute() ? file : root / file;
  return {std::filesystem::relative(full, root).generic_string(), std::filesystem::file_size(full), sha256_file(full)};
}

void write_manifest(const RunManifest& m, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << to_json(m, true).dump(2) << "\n";
}

RunManifest read_manifest(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot read " + file.string());
  const json doc = json::parse(in);
  RunManifest m;
  m.format = doc.at("format").get<std::string>();
  if (m.format != "psifield-manifest/1") throw std::runtime_error("unsupported manifest format " + m.format);
  m.code_version = doc.at("code_version").get<std::string>();
  m.scenario = doc.at("scenario").get<std::string>();
  m.stage = doc.at("stage").get<std::string>();
  m.config_json = doc.at("config").dump(2);
  for (auto it = doc.at("metrics").begin(); it != doc.at("metrics").end(); ++it)
    m.metrics.emplace_back(it.key(), number_from(it.value()));
  for (const auto& t : doc.at("thresholds"))
    m.thresholds.push_back({t.at("name").get<std::string>(), number_from(t.at("value")), t.at("comparison").get<std::string>(),
                            number_from(t.at("limit")), status_from_string(t.at("status").get<std::string>()),
                            t.at("note").get<std::string>()});
  for (const auto& f : doc.at("files"))
    m.files.push_back({f.at("path").get<std::string>(), f.at("bytes").get<std::uintmax_t>(), f.at("sha256").get<std::string>()});
  if (doc.contains("runtime")) {
    m.wall_clock_seconds = doc.at("runtime").at("wall_clock_seconds").get<double>();
    m.workers = doc.at("runtime").at("workers").get<int>();
  }
  return m;
}

std::string comparable_manifest(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot read " + file.string());
  json doc = json::parse(in);
  doc.erase("runtime");
  return doc.dump(2);
}

std::vector<std::string> verify_manifest(const RunManifest& m, const std::filesystem::path& run_dir) {
  std::vector<std::string> problems;
  for (const auto& f : m.files) {
    const auto p = run_dir / f.path;
    if (!std::filesystem::exists(p)) {
      problems.push_back(f.path + ": missing");
      continue;
    }
    if (std::filesystem::file_size(p) != f.bytes) problems.push_back(f.path + ": size differs");
    if (sha256_file(p) != f.sha256) problems.push_back(f.path + ": checksum differs");
  }
  return problems;
}

std::string summarize(const RunManifest& m) {
  std::ostringstream s;
  s << "scenario " << m.scenario << " (stage " << m.stage << ", code " << m.code_version << ")\n";
  s << "wall clock " << std::fixed << std::setprecision(1) << m.wall_clock_seconds << " s on " << m.workers << " worker"
    << (m.workers == 1 ? "" : "s") << "\n\nmetrics\n";
  s << std::defaultfloat << std::setprecision(6);
  for (const auto& [k, v] : m.metrics) s << "  " << std::left << std::setw(36) << k << " " << v << "\n";
  s << "\nthresholds\n";
  for (const auto& t : m.thresholds) {
    s << "  " << std::left << std::setw(8) << to_string(t.status) << std::setw(36) << t.name << " " << t.value << " "
      << t.comparison << " " << t.limit;
    if (!t.note.empty()) s << "  (" << t.note << ")";
    s << "\n";
  }
  s << "\n" << (m.thresholds_met() ? "all thresholds met" : "threshold failures") << "\n";
  return s.str();
}

}  // namespace psifield
