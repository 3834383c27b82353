#include "psifield/config.hpp"
#include "psifield/manifest.hpp"
#include "psifield/scenarios.hpp"

#include "CLI11.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace psifield;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_error = 1;
constexpr int exit_thresholds = 2;

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ScenarioConfig load(const fs::path& p) {
  const auto r = validate_config(slurp(p));
  if (!r.config) {
    std::ostringstream msg;
    msg << p.string() << ": " << r.errors.size() << " error" << (r.errors.size() == 1 ? "" : "s");
    for (const auto& e : r.errors) msg << "\n  " << e;
    throw std::invalid_argument(msg.str());
  }
  return *r.config;
}

struct RunArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  int workers = 1;
  std::string out;
};

void add_run_options(CLI::App* cmd, RunArgs& a) {
  cmd->add_option("--config", a.config, "scenario config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", a.seed, "master seed, overrides the config");
  cmd->add_option("--workers", a.workers, "ensemble worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--out", a.out, "output directory, overrides the config");
}

int run(const RunArgs& a, RunStage stage) {
  RunOptions o;
  o.stage = stage;
  o.workers = a.workers;
  o.seed = a.seed;
  if (!a.out.empty()) o.out = a.out;
  const ScenarioConfig cfg = load(a.config);
  const RunManifest m = run_scenario(cfg, o);
  const fs::path dir = o.out ? *o.out : fs::path(cfg.output_dir);
  const std::string summary = summarize(m);
  std::ofstream(dir / "summary.txt") << summary;
  std::cout << summary << "manifest: " << (dir / "manifest.json").string() << "\n";
  return m.thresholds_met() ? exit_ok : exit_thresholds;
}

int report(const std::string& target) {
  fs::path file = target;
  if (fs::is_directory(file)) file /= "manifest.json";
  const RunManifest m = read_manifest(file);
  const auto problems = verify_manifest(m, file.parent_path());
  const std::string summary = summarize(m);
  std::ofstream(file.parent_path() / "summary.txt") << summary;
  std::cout << summary;
  if (!problems.empty()) {
    std::cerr << "manifest verification failed:\n";
    for (const auto& p : problems) std::cerr << "  " << p << "\n";
    return exit_error;
  }
  std::cout << "checksums: " << m.files.size() << " files verified\n";
  return m.thresholds_met() ? exit_ok : exit_thresholds;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"psifield: guided-diffusion simulations of a classical wave field"};
  app.set_version_flag("--version", std::string(code_version()));
  app.require_subcommand(1);

  RunArgs run_args, fp_args, ens_args;
  auto* run_cmd = app.add_subcommand("run", "wave evolution, ensemble, FP oracle and analysis");
  add_run_options(run_cmd, run_args);
  auto* fp_cmd = app.add_subcommand("fp-only", "wave evolution and FP solution only");
  add_run_options(fp_cmd, fp_args);
  auto* ens_cmd = app.add_subcommand("ensemble-only", "wave evolution and Langevin ensemble only");
  add_run_options(ens_cmd, ens_args);

  std::string validate_path;
  bool print = false;
  auto* validate_cmd = app.add_subcommand("validate", "check a config and print it with defaults applied");
  validate_cmd->add_option("--config", validate_path, "scenario config (JSON)")->required()->check(CLI::ExistingFile);
  validate_cmd->add_flag("--print", print, "print the normalized config");

  std::string report_target;
  auto* report_cmd = app.add_subcommand("report", "verify a run's checksums and regenerate its summary");
  report_cmd->add_option("manifest", report_target, "manifest.json or run directory")->required()->check(CLI::ExistingPath);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_error;
  }

  try {
    if (*run_cmd) return run(run_args, RunStage::all);
    if (*fp_cmd) return run(fp_args, RunStage::fp_only);
    if (*ens_cmd) return run(ens_args, RunStage::ensemble_only);
    if (*validate_cmd) {
      const auto cfg = load(validate_path);
      if (print) std::cout << serialize_config(cfg) << "\n";
      std::cout << validate_path << ": valid " << cfg.scenario << " config\n";
      return exit_ok;
    }
    if (*report_cmd) return report(report_target);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_error;
  }
  return exit_error;
}
