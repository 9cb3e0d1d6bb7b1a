#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "frontlab/errors.hpp"
#include "frontlab/io.hpp"

using namespace frontlab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("frontlab_test_io_" + name);
  fs::remove_all(p);
  return p;
}

ExperimentConfig sim_config(double t_end) {
  Json j = Json::parse(R"({"command":"simulate","seeds":[3],
    "medium":{"dim":1,"g":{"kind":"hat","radius_len":2},"a_map":{"kind":"identity"}},
    "params":{"h_len":0.25,"lo_len":[-15],"hi_len":[15],"datum":"step",
              "set":{"kind":"ball","radius_len":6}}})");
  j["params"]["t_end_time"] = t_end;
  return ExperimentConfig::from_json(j);
}

std::map<std::string, std::string> checksums(const RunManifest& m) {
  std::map<std::string, std::string> o;
  for (const auto& f : m.files) o[f.path] = f.sha256;
  return o;
}

std::string config_error(const std::string& text) {
  try {
    ExperimentConfig::parse(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_SUITE("io") {
  TEST_CASE("sha256 matches the published test vectors") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  }

  TEST_CASE("config round-trips through its canonical form") {
    const auto c = ExperimentConfig::parse(R"({"params":{"t_end_time":0.1,"h_len":0.3333333333333333},
      "command":"simulate","seeds":{"first":2,"count":3}})");
    const auto c2 = ExperimentConfig::parse(c.canonical());
    CHECK(c2.canonical() == c.canonical());
    CHECK(c2.hash() == c.hash());
    CHECK(c.seeds() == std::vector<std::uint64_t>{2, 3, 4});
    CHECK(c.with_output_dir("/elsewhere").hash() == c.hash());
    CHECK(c.with_seed_offset(10).seeds() == std::vector<std::uint64_t>{12, 13, 14});
    CHECK(c.with_seed_offset(10).hash() != c.hash());
  }

  TEST_CASE("invalid configs name the offending field") {
    CHECK(config_error(R"({"command":"nope"})").find("/command") == 0);
    CHECK(config_error(R"({"command":"simulate","extra":1})").find("/extra") == 0);
    CHECK(config_error(R"({"command":"simulate","medium":{"profile":{"theta0":0.7}}})").find("/medium/profile") == 0);
    CHECK(config_error(R"({"command":"simulate","medium":{"g":{"kind":"hat","radius":2}}})") ==
          "/medium/g/radius: unknown field");
    CHECK(config_error(R"({"command":"simulate","seeds":[1,1]})").find("/seeds") == 0);
    CHECK(config_error(R"({"command":"simulate","seeds":[-1]})").find("/seeds/0") == 0);
    CHECK(config_error("{not json").find("config:") == 0);
    // command-block errors surface from run_experiment
    const auto c = ExperimentConfig::parse(R"({"command":"hj","params":{"speed":{"constant":1},"t_time":"x"}})");
    RunOptions o;
    o.out_dir = scratch("bad").string();
    CHECK_THROWS_WITH_AS(run_experiment(c, o), "/params/t_time: expected a number", ConfigError);
  }

  TEST_CASE("medium block parses every field and re-serializes") {
    const auto m = parse_medium(Json::parse(R"({"dim":2,"profile":{"theta0":0.2,"M":2,"m1":2,"alpha1":0.5},
      "g":{"kind":"power","amplitude":0.5,"decay":4,"stretch":[1,2]},"a_map":{"kind":"bernoulli","p":0.3,"value":1},
      "range_len":16,"n4_len":4})"));
    CHECK(m.dim == 2);
    CHECK(m.g.kind == Bump::Kind::Power);
    CHECK(m.g.stretch[1] == 2.0);
    CHECK(m.a_map.kind == AmplitudeMap::Kind::Bernoulli);
    CHECK(*m.range == 16.0);
    const auto m2 = parse_medium(medium_to_json(m));
    CHECK(medium_to_json(m2) == medium_to_json(m));
  }

  TEST_CASE("simulate with t_end = 0 writes one zero-step job and the initial snapshot") {
    RunOptions o;
    o.out_dir = scratch("zero").string();
    const auto m = run_experiment(sim_config(0.0), o);
    REQUIRE(m.jobs.size() == 1);
    CHECK(m.jobs[0].steps == 0);
    CHECK(m.jobs[0].status == "ok");
    const auto files = checksums(m);
    CHECK(files.count("seed_3/snapshot_000.flf") == 1);
    CHECK(files.count("seed_3/snapshot_001.flf") == 0);
    CHECK(m.exit_code(true) == 0);
  }

  TEST_CASE("identical config twice gives identical checksums and a complete inventory") {
    RunOptions a, b;
    a.out_dir = scratch("a").string();
    b.out_dir = scratch("b").string();
    b.workers = 2;
    const auto ma = run_experiment(sim_config(5.0), a);
    const auto mb = run_experiment(sim_config(5.0), b);
    CHECK(checksums(ma) == checksums(mb));
    CHECK(ma.jobs[0].steps > 0);

    std::set<std::string> on_disk;
    for (const auto& e : fs::recursive_directory_iterator(a.out_dir))
      if (e.is_regular_file()) on_disk.insert(fs::relative(e.path(), a.out_dir).generic_string());
    on_disk.erase("manifest.json");
    std::set<std::string> listed;
    for (const auto& f : ma.files) listed.insert(f.path);
    CHECK(on_disk == listed);

    // every CSV carries the config hash
    std::ifstream csv(fs::path(a.out_dir) / "summary.csv");
    std::string first;
    std::getline(csv, first);
    CHECK(first == "# config_sha256=" + ma.config_hash);
  }

  TEST_CASE("rerunning into the same directory drops the previous inventory") {
    RunOptions o;
    o.out_dir = scratch("rerun").string();
    run_experiment(sim_config(5.0), o);
    const auto m = run_experiment(sim_config(0.0), o);
    CHECK_FALSE(fs::exists(fs::path(o.out_dir) / "seed_3/snapshot_001.flf"));
    CHECK(checksums(m).count("seed_3/snapshot_001.flf") == 0);
  }

  TEST_CASE("front-speed on the homogeneous default matches c0 within 2%") {
    const auto c = ExperimentConfig::parse(R"({"command":"front-speed","seeds":{"first":0,"count":8},
      "params":{"probes_len":[32,64,128]}})");
    RunOptions o;
    o.out_dir = scratch("fs").string();
    const auto m = run_experiment(c, o);
    CHECK(m.jobs_ok());
    bool saw = false;
    for (const auto& a : m.assertions)
      if (a.name == "c0_match") {
        saw = true;
        CHECK(a.passed);
      }
    CHECK(saw);
  }

  TEST_CASE("failed assertions only change the exit code under --strict") {
    RunManifest m;
    m.assertions.push_back({"x", false, 1, 0, ""});
    CHECK(m.exit_code(false) == 0);
    CHECK(m.exit_code(true) == 2);
    m.jobs.push_back({"j", 0, "failed", 0, 0.0, "boom"});
    CHECK(m.exit_code(false) == 1);
  }

  TEST_CASE("constants serialize with unit-suffixed names") {
    Constants k;
    k.c0 = 0.5;
    k.kappa0 = 3;
    k.M_star = 100;
    const auto j = constants_to_json(k);
    CHECK(j.contains("kappa0_time"));
    const auto k2 = constants_from_json(j);
    CHECK(k2.M_star == 100);
    CHECK(k2.kappa0 == 3);
  }
}
