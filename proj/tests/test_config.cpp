#include "doctest.h"
#include "psifield/config.hpp"
#include "psifield/manifest.hpp"
#include "psifield/scenarios.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

using namespace psifield;
namespace fs = std::filesystem;

namespace {

bool has_error(const ConfigResult& r, const std::string& needle) {
  for (const auto& e : r.errors)
    if (e.find(needle) != std::string::npos) return true;
  return false;
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("psifield_test_config_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int cli(const std::string& args) {
  const int rc = std::system((std::string(PSIFIELD_CLI) + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_CASE("every scenario has valid defaults that survive a round trip") {
  for (const char* name : scenario_names) {
    CAPTURE(name);
    const auto r = validate_config(std::string(R"({"scenario": ")") + name + "\"}");
    REQUIRE(r.errors.empty());
    REQUIRE(r.config);
    CHECK(*r.config == default_config(name));
    const auto again = validate_config(serialize_config(*r.config));
    REQUIRE(again.config);
    CHECK(*again.config == *r.config);
  }
}

TEST_CASE("double_well defaults follow the Kramers horizon") {
  const auto c = default_config("double_well");
  CHECK(c.dt_L <= c.dt);
  CHECK(c.t_final > 0);
  // a = lambda = 1, b = 3: T = exp(9) / 3
  CHECK(c.t_final == doctest::Approx(0.02 * std::exp(9.0) / 3).epsilon(1e-12));
}

TEST_CASE("dt_L larger than dt names both keys") {
  const auto r = validate_config(R"({"scenario": "free_packet", "dt_L": 0.01})");
  CHECK_FALSE(r.config);
  REQUIRE(has_error(r, "dt_L"));
  bool both = false;
  for (const auto& e : r.errors) both = both || (e.find("dt_L") != std::string::npos && e.find("dt (") != std::string::npos);
  CHECK(both);
}

TEST_CASE("unknown scenario lists the valid names") {
  const auto r = validate_config(R"({"scenario": "triple_well"})");
  CHECK_FALSE(r.config);
  for (const char* name : scenario_names) CHECK(has_error(r, name));
}

TEST_CASE("all violations are reported together") {
  const auto r = validate_config(R"({"scenario": "harmonic_ground", "n": -3, "bogus": 1, "hbar": "one"})");
  CHECK_FALSE(r.config);
  CHECK(has_error(r, "bogus: unknown key"));
  CHECK(has_error(r, "hbar"));
  CHECK(has_error(r, "n"));
  CHECK(r.errors.size() >= 3);
}

TEST_CASE("malformed JSON is an error, not an exception") {
  const auto r = validate_config("{\"scenario\": ");
  CHECK_FALSE(r.config);
  CHECK(has_error(r, "invalid JSON"));
}

TEST_CASE("sha256 known vector") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("small run writes a verifiable manifest") {
  const auto dir = scratch("run");
  auto c = default_config("harmonic_ground");
  c.n = 200;
  RunOptions o;
  o.out = dir;
  const auto m = run_scenario(c, o);
  CHECK(m.scenario == "harmonic_ground");
  CHECK_FALSE(m.files.empty());
  const auto back = read_manifest(dir / "manifest.json");
  CHECK(back.files.size() == m.files.size());
  CHECK(verify_manifest(back, dir).empty());

  std::ofstream(dir / m.files.front().path, std::ios::app) << "tamper";
  CHECK_FALSE(verify_manifest(back, dir).empty());
}

TEST_CASE("fp-only stage marks ensemble thresholds skipped") {
  const auto dir = scratch("fp_only");
  auto c = default_config("harmonic_ground");
  RunOptions o;
  o.out = dir;
  o.stage = RunStage::fp_only;
  const auto m = run_scenario(c, o);
  bool skipped = false;
  for (const auto& t : m.thresholds) skipped = skipped || (t.name == "stationary_tv" && t.status == CheckStatus::skipped);
  CHECK(skipped);
  CHECK(m.thresholds_met());
}

TEST_CASE("cli exit codes") {
  const auto dir = scratch("cli");
  {
    std::ofstream(dir / "good.json") << R"({"scenario": "harmonic_ground", "n": 200})";
    std::ofstream(dir / "bad.json") << R"({"scenario": "harmonic_ground", "dt_L": 1})";
    std::ofstream(dir / "strict.json") << R"({"scenario": "harmonic_ground", "n": 20, "guidance": {"lambda": 0.01}})";
  }
  CHECK(cli("validate --config " + (dir / "good.json").string()) == 0);
  CHECK(cli("validate --config " + (dir / "bad.json").string()) == 1);
  CHECK(cli("validate --config " + (dir / "missing.json").string()) == 1);
  CHECK(cli("run --config " + (dir / "good.json").string() + " --out " + (dir / "out").string()) == 0);
  CHECK(cli("report " + (dir / "out").string()) == 0);
  CHECK(cli("run --config " + (dir / "strict.json").string() + " --out " + (dir / "strict").string()) == 2);
  CHECK(cli("no-such-verb") == 1);
}
