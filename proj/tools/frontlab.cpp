// frontlab <command> --config PATH [--out DIR] [--workers N] [--seed-offset K] [--strict]
#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "frontlab/errors.hpp"
#include "frontlab/io.hpp"

namespace {

// Reads the config and fills in the command from the subcommand; a conflicting command is a usage error.
frontlab::ExperimentConfig load(const std::string& path, const std::string& sub) {
  std::ifstream in(path);
  if (!in) throw frontlab::ConfigError("--config: cannot read " + path);
  frontlab::Json doc;
  try {
    doc = frontlab::Json::parse(in);
  } catch (const frontlab::Json::parse_error& e) {
    throw frontlab::ConfigError(path + ": " + e.what());
  }
  if (!doc.is_object()) throw frontlab::ConfigError(path + ": config must be an object");
  if (!doc.contains("command")) doc["command"] = sub;
  if (doc["command"] != sub)
    throw frontlab::ConfigError("/command: config says " + doc["command"].dump() + " but the subcommand is " + sub);
  return frontlab::ExperimentConfig::from_json(std::move(doc));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random ignition front experiments"};
  app.set_version_flag("--version", std::string(frontlab::kToolVersion));
  app.require_subcommand(1);

  std::string config, out;
  int workers = 0;
  std::uint64_t seed_offset = 0;
  bool strict = false;

  for (const auto& name : frontlab::command_names()) {
    auto* sub = app.add_subcommand(name, "run the " + name + " experiment");
    sub->add_option("--config", config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output directory (overrides output_dir)");
    sub->add_option("--workers", workers, "worker threads; default FRONTLAB_WORKERS or 1")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--seed-offset", seed_offset, "added to every seed");
    sub->add_flag("--strict", strict, "failed assertions give a nonzero exit status");
  }

  CLI11_PARSE(app, argc, argv);
  const std::string sub = app.get_subcommands().front()->get_name();

  try {
    const auto cfg = load(config, sub);
    frontlab::RunOptions opt;
    opt.out_dir = out;
    opt.workers = workers;
    opt.seed_offset = seed_offset;
    opt.strict = strict;
    const auto m = frontlab::run_experiment(cfg, opt);
    for (const auto& j : m.jobs)
      if (j.status != "ok") std::cerr << "job " << j.name << " seed " << j.seed << " failed: " << j.message << "\n";
    for (const auto& a : m.assertions)
      std::cout << (a.passed ? "PASS " : "FAIL ") << a.name << ": " << a.detail << "\n";
    std::cout << "config " << m.config_hash.substr(0, 16) << ", " << m.files.size() << " files, manifest in "
              << (out.empty() ? cfg.output_dir() : out) << "/manifest.json\n";
    return m.exit_code(strict);
  } catch (const frontlab::ConfigError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 64;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
