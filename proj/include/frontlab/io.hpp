#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "frontlab/geometry.hpp"
#include "frontlab/homog.hpp"
#include "frontlab/medium.hpp"
#include "frontlab/speed_table.hpp"

namespace frontlab {

using Json = nlohmann::json;

inline constexpr const char* kToolVersion = "0.3.0";

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

enum class Command { Simulate, FrontSpeed, Fluctuations, Additivity, Wulff, HJ, Homogenize, Exclusivity, Perturb, Calibrate };

std::string command_name(Command c);
Command parse_command(const std::string& s);
const std::vector<std::string>& command_names();

// A run description. Physical quantities carry their unit in the key: *_len for lengths,
// *_time for times; everything else is dimensionless. Unknown keys are rejected.
class ExperimentConfig {
 public:
  static ExperimentConfig from_json(Json doc);
  static ExperimentConfig parse(const std::string& text);
  static ExperimentConfig load(const std::string& path);

  Command command() const noexcept { return command_; }
  const Json& doc() const noexcept { return doc_; }
  // Sorted keys, shortest round-trip numbers, no whitespace.
  std::string canonical() const;
  // sha256 of the canonical form without output_dir (outputs must not depend on where they go).
  std::string hash() const;
  std::string output_dir() const;
  std::vector<std::uint64_t> seeds() const;

  ExperimentConfig with_command(Command c) const;
  ExperimentConfig with_seed_offset(std::uint64_t k) const;
  ExperimentConfig with_output_dir(const std::string& dir) const;

 private:
  Json doc_;
  Command command_ = Command::Simulate;
};

// Typed views of config blocks; errors name the field path, e.g. "/medium/g/radius_len".
MediumSpec parse_medium(const Json& j, const std::string& path = "/medium");
SetDescriptor parse_set(const Json& j, int dim, const std::string& path);
SpeedTable parse_speed(const Json& j, int dim, const std::string& path);
Json medium_to_json(const MediumSpec& m);
Json constants_to_json(const Constants& k);
Constants constants_from_json(const Json& j, const std::string& path = "/constants");

struct JobRecord {
  std::string name;
  std::uint64_t seed = 0;
  std::string status = "ok";  // ok | failed
  std::size_t steps = 0;
  double wall_seconds = 0.0;
  std::string message;
};

struct FileRecord {
  std::string path;  // relative to the output directory
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct AssertionRecord {
  std::string name;
  bool passed = false;
  double value = 0.0, limit = 0.0;
  std::string detail;
};

struct RunManifest {
  std::string config_hash;
  std::string tool_version = kToolVersion;
  std::string command;
  std::vector<JobRecord> jobs;
  std::vector<FileRecord> files;
  std::vector<AssertionRecord> assertions;
  Json constants = Json::object();

  bool jobs_ok() const;
  bool assertions_ok() const;
  // 0 on success; 1 on a failed job; 2 on a failed assertion when strict.
  int exit_code(bool strict) const;
  Json to_json() const;
};

struct RunOptions {
  std::string out_dir;  // overrides the config's output_dir when set
  int workers = 0;
  std::uint64_t seed_offset = 0;
  bool strict = false;
};

// Dispatches on the command, writes artifacts plus manifest.json, returns the manifest.
// Config errors propagate as ConfigError; job failures are recorded, not thrown.
RunManifest run_experiment(const ExperimentConfig& cfg, const RunOptions& opt = {});

}  // namespace frontlab
