#include "frontlab/io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <set>
#include <sstream>

#include "frontlab/ensemble.hpp"
#include "frontlab/errors.hpp"
#include "frontlab/hj.hpp"
#include "frontlab/init_data.hpp"
#include "frontlab/log.hpp"
#include "frontlab/solver.hpp"
#include "frontlab/speed.hpp"

namespace fs = std::filesystem;

namespace frontlab {

// ---------------------------------------------------------------- hashing

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 || EVP_DigestFinal_ex(ctx.get(), md, &len) != 1)
    throw std::runtime_error("sha256: digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("sha256: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return sha256_hex(ss.str());
}

// ---------------------------------------------------------------- commands

namespace {

const std::vector<std::pair<Command, std::string>>& command_table() {
  static const std::vector<std::pair<Command, std::string>> t{
      {Command::Simulate, "simulate"},       {Command::FrontSpeed, "front-speed"},
      {Command::Fluctuations, "fluctuations"}, {Command::Additivity, "additivity"},
      {Command::Wulff, "wulff"},             {Command::HJ, "hj"},
      {Command::Homogenize, "homogenize"},   {Command::Exclusivity, "exclusivity"},
      {Command::Perturb, "perturb"},         {Command::Calibrate, "calibrate"}};
  return t;
}

}  // namespace

std::string command_name(Command c) {
  for (const auto& [k, s] : command_table())
    if (k == c) return s;
  return "?";
}

Command parse_command(const std::string& s) {
  for (const auto& [k, n] : command_table())
    if (n == s) return k;
  throw ConfigError("/command: unknown command '" + s + "'");
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> v = [] {
    std::vector<std::string> o;
    for (const auto& p : command_table()) o.push_back(p.second);
    return o;
  }();
  return v;
}

// ---------------------------------------------------------------- field reader

namespace {

// Object view that records which keys were read, so leftovers can be reported.
class Reader {
 public:
  Reader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_, "expected an object");
  }

  [[noreturn]] static void fail(const std::string& path, const std::string& what) {
    throw ConfigError((path.empty() ? std::string("/") : path) + ": " + what);
  }

  std::string at(const std::string& key) const { return path_ + "/" + key; }
  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }
  const Json& raw(const std::string& key) {
    if (!has(key)) fail(at(key), "required field missing");
    return j_.at(key);
  }

  double num(const std::string& key, double def) { return has(key) ? number(j_.at(key), at(key)) : def; }
  double num(const std::string& key) { return number(raw(key), at(key)); }
  long integer(const std::string& key, long def) {
    if (!has(key)) return def;
    const Json& v = j_.at(key);
    if (!v.is_number_integer()) fail(at(key), "expected an integer");
    return v.get<long>();
  }
  std::uint64_t u64(const std::string& key, std::uint64_t def) {
    if (!has(key)) return def;
    const Json& v = j_.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
      fail(at(key), "expected a non-negative integer");
    return v.get<std::uint64_t>();
  }
  bool flag(const std::string& key, bool def) {
    if (!has(key)) return def;
    if (!j_.at(key).is_boolean()) fail(at(key), "expected true or false");
    return j_.at(key).get<bool>();
  }
  std::string str(const std::string& key, const std::string& def) {
    if (!has(key)) return def;
    if (!j_.at(key).is_string()) fail(at(key), "expected a string");
    return j_.at(key).get<std::string>();
  }
  std::vector<double> list(const std::string& key, std::vector<double> def) {
    if (!has(key)) return def;
    return numbers(j_.at(key), at(key));
  }
  Point point(const std::string& key, int dim, Point def) {
    if (!has(key)) return def;
    const auto v = numbers(j_.at(key), at(key));
    if (int(v.size()) != dim) fail(at(key), "expected " + std::to_string(dim) + " components");
    Point p{0, 0, 0};
    for (int a = 0; a < dim; ++a) p[a] = v[a];
    return p;
  }

  // Unknown keys are errors: a misspelled unit suffix must not silently fall back to a default.
  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) fail(at(k), "unknown field");
  }

  static double number(const Json& v, const std::string& path) {
    if (!v.is_number()) fail(path, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(path, "expected a finite number");
    return x;
  }
  static std::vector<double> numbers(const Json& v, const std::string& path) {
    if (!v.is_array()) fail(path, "expected an array of numbers");
    std::vector<double> o;
    for (std::size_t i = 0; i < v.size(); ++i) o.push_back(number(v[i], path + "/" + std::to_string(i)));
    return o;
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class F>
auto guarded(const std::string& path, F f) {
  try {
    return f();
  } catch (const ConfigError& e) {
    if (e.what()[0] == '/') throw;
    Reader::fail(path, e.what());
  } catch (const std::exception& e) {
    Reader::fail(path, e.what());
  }
}

Point unit(Point p, int dim, const std::string& path) {
  double n = 0.0;
  for (int a = 0; a < dim; ++a) n += p[a] * p[a];
  n = std::sqrt(n);
  if (!(n > 0.0)) Reader::fail(path, "zero direction");
  for (int a = 0; a < dim; ++a) p[a] /= n;
  return p;
}

}  // namespace

// ---------------------------------------------------------------- typed blocks

MediumSpec parse_medium(const Json& j, const std::string& path) {
  Reader r(j, path);
  MediumSpec m;
  m.dim = int(r.integer("dim", 1));
  if (m.dim < 1 || m.dim > 3) Reader::fail(r.at("dim"), "dimension must be 1, 2 or 3");
  if (r.has("profile")) {
    Reader p(r.raw("profile"), r.at("profile"));
    const double th = p.num("theta0", 0.25), M = p.num("M", 1.0), m1 = p.num("m1", 2.0), a1 = p.num("alpha1", 0.5);
    const double scale = p.num("scale", 1.0);
    p.finish();
    m.profile = guarded(r.at("profile"), [&] {
      auto prof = IgnitionProfile::make(th, M, m1, a1);
      return scale == 1.0 ? prof : prof.scaled(scale);
    });
  }
  if (r.has("g")) {
    Reader g(r.raw("g"), r.at("g"));
    const std::string kind = g.str("kind", "zero");
    static const std::vector<std::pair<std::string, Bump::Kind>> kinds{
        {"zero", Bump::Kind::Zero}, {"hat", Bump::Kind::Hat}, {"power", Bump::Kind::Power},
        {"table", Bump::Kind::Table}, {"indexed", Bump::Kind::Indexed}};
    auto it = std::find_if(kinds.begin(), kinds.end(), [&](const auto& k) { return k.first == kind; });
    if (it == kinds.end()) Reader::fail(g.at("kind"), "unknown bump kind '" + kind + "'");
    m.g.kind = it->second;
    m.g.amplitude = g.num("amplitude", 1.0);
    m.g.radius = g.num("radius_len", 1.0);
    m.g.decay = g.num("decay", 3.0);
    if (g.has("stretch")) {
      const auto s = Reader::numbers(g.raw("stretch"), g.at("stretch"));
      if (int(s.size()) != m.dim) Reader::fail(g.at("stretch"), "expected one factor per dimension");
      for (int a = 0; a < m.dim; ++a) m.g.stretch[a] = s[a];
    }
    m.g.table = g.list("table", {});
    m.g.table_step = g.num("table_step_len", 0.1);
    g.finish();
    if (m.g.amplitude < 0.0) Reader::fail(g.at("amplitude"), "must be >= 0");
    if (m.g.kind == Bump::Kind::Table && m.g.table.size() < 2) Reader::fail(g.at("table"), "needs at least two samples");
  }
  if (r.has("a_map")) {
    Reader a(r.raw("a_map"), r.at("a_map"));
    const std::string kind = a.str("kind", "identity");
    static const std::vector<std::pair<std::string, AmplitudeMap::Kind>> kinds{
        {"identity", AmplitudeMap::Kind::Identity}, {"constant", AmplitudeMap::Kind::Constant},
        {"bernoulli", AmplitudeMap::Kind::Bernoulli}, {"uniform", AmplitudeMap::Kind::Uniform},
        {"index_power", AmplitudeMap::Kind::IndexPower}};
    auto it = std::find_if(kinds.begin(), kinds.end(), [&](const auto& k) { return k.first == kind; });
    if (it == kinds.end()) Reader::fail(a.at("kind"), "unknown amplitude map '" + kind + "'");
    m.a_map.kind = it->second;
    m.a_map.value = a.num("value", 1.0);
    m.a_map.p = a.num("p", 0.5);
    m.a_map.lo = a.num("lo", 0.0);
    m.a_map.hi = a.num("hi", 1.0);
    m.a_map.gamma = a.num("gamma", 12.0);
    m.a_map.j_max = int(a.integer("j_max", 8));
    a.finish();
    if (m.a_map.p < 0.0 || m.a_map.p > 1.0) Reader::fail(a.at("p"), "must lie in [0, 1]");
  }
  if (r.has("range_len")) m.range = r.num("range_len");
  m.n4 = r.num("n4_len", 1.0);
  m.window_cap = r.num("window_cap_len", 0.0);
  if (r.has("period")) {
    const auto p = Reader::numbers(r.raw("period"), r.at("period"));
    if (int(p.size()) != m.dim) Reader::fail(r.at("period"), "expected one entry per dimension");
    for (int a = 0; a < m.dim; ++a) m.period[a] = std::int64_t(p[a]);
  }
  r.finish();
  guarded(path, [&] { (void)RandomMedium(m); return 0; });
  return m;
}

Json medium_to_json(const MediumSpec& m) {
  static const char* g_kinds[] = {"zero", "hat", "power", "table", "indexed"};
  static const char* a_kinds[] = {"identity", "constant", "bernoulli", "uniform", "index_power"};
  const auto& p = m.profile;
  Json j{{"dim", m.dim},
         {"profile",
          {{"theta0", p.theta0()}, {"M", p.lipschitz() / p.scale()}, {"m1", p.m1()},
           {"alpha1", p.alpha1() / p.scale()}, {"scale", p.scale()}}},
         {"g",
          {{"kind", g_kinds[int(m.g.kind)]}, {"amplitude", m.g.amplitude}, {"radius_len", m.g.radius},
           {"decay", m.g.decay}, {"table_step_len", m.g.table_step}}},
         {"a_map",
          {{"kind", a_kinds[int(m.a_map.kind)]}, {"value", m.a_map.value}, {"p", m.a_map.p}, {"lo", m.a_map.lo},
           {"hi", m.a_map.hi}, {"gamma", m.a_map.gamma}, {"j_max", m.a_map.j_max}}},
         {"n4_len", m.n4},
         {"window_cap_len", m.window_cap}};
  j["g"]["stretch"] = std::vector<double>(m.g.stretch.begin(), m.g.stretch.begin() + m.dim);
  if (!m.g.table.empty()) j["g"]["table"] = m.g.table;
  if (m.range) j["range_len"] = *m.range;
  return j;
}

SetDescriptor parse_set(const Json& j, int dim, const std::string& path) {
  Reader r(j, path);
  const std::string kind = r.str("kind", "");
  SetDescriptor out;
  if (kind == "ball") {
    out = Ball{r.point("center_len", dim, {0, 0, 0}), r.num("radius_len")};
    if (!(std::get<Ball>(out).radius > 0.0)) Reader::fail(r.at("radius_len"), "must be > 0");
  } else if (kind == "box") {
    Box b{r.point("lo_len", dim, {0, 0, 0}), r.point("hi_len", dim, {0, 0, 0})};
    if (!r.has("lo_len") || !r.has("hi_len")) Reader::fail(path, "box needs lo_len and hi_len");
    for (int a = 0; a < dim; ++a)
      if (!(b.hi[a] > b.lo[a])) Reader::fail(r.at("hi_len"), "must exceed lo_len componentwise");
    out = b;
  } else if (kind == "halfspace") {
    if (!r.has("normal")) Reader::fail(r.at("normal"), "required field missing");
    out = HalfSpace{unit(r.point("normal", dim, {1, 0, 0}), dim, r.at("normal")), r.num("offset_len", 0.0)};
  } else if (kind == "polytope") {
    const Json& faces = r.raw("faces");
    if (!faces.is_array() || faces.empty()) Reader::fail(r.at("faces"), "expected a non-empty array");
    Polytope p;
    for (std::size_t i = 0; i < faces.size(); ++i) {
      const std::string fp = r.at("faces") + "/" + std::to_string(i);
      Reader f(faces[i], fp);
      if (!f.has("normal")) Reader::fail(f.at("normal"), "required field missing");
      p.faces.push_back({unit(f.point("normal", dim, {1, 0, 0}), dim, f.at("normal")), f.num("offset_len", 0.0)});
      f.finish();
    }
    out = p;
  } else if (kind == "whole") {
    out = WholeSpace{};
  } else {
    Reader::fail(r.at("kind"), "expected ball, box, halfspace, polytope or whole");
  }
  r.finish();
  return out;
}

SpeedTable parse_speed(const Json& j, int dim, const std::string& path) {
  Reader r(j, path);
  SpeedTable t;
  if (r.has("constant")) {
    const double c = r.num("constant");
    if (!(c > 0.0)) Reader::fail(r.at("constant"), "must be > 0");
    t = SpeedTable::constant(dim, c, std::size_t(r.integer("count", dim == 3 ? 3 : 64)));
  } else if (r.has("csv_path")) {
    const std::string p = r.str("csv_path", "");
    t = guarded(r.at("csv_path"), [&] { return read_speed_csv(p, dim); });
  } else if (r.has("directions")) {
    const Json& d = r.raw("directions");
    const auto c = r.list("c", {});
    if (!d.is_array() || d.size() != c.size())
      Reader::fail(r.at("c"), "needs one speed per direction");
    t.dim = dim;
    for (std::size_t i = 0; i < d.size(); ++i) {
      const std::string dp = r.at("directions") + "/" + std::to_string(i);
      const auto v = Reader::numbers(d[i], dp);
      if (int(v.size()) != dim) Reader::fail(dp, "expected " + std::to_string(dim) + " components");
      Point e{0, 0, 0};
      for (int a = 0; a < dim; ++a) e[a] = v[a];
      t.add(unit(e, dim, dp), c[i]);
    }
  } else {
    Reader::fail(path, "expected one of constant, csv_path, directions");
  }
  r.finish();
  guarded(path, [&] { t.validate(); return 0; });
  return t;
}

Json constants_to_json(const Constants& k) {
  return Json{{"c0", k.c0},       {"kappa0_time", k.kappa0},   {"mu_star", k.mu_star},
              {"kappa_star_time", k.kappa_star}, {"M_star", k.M_star}, {"D2", k.D2},
              {"h_len", k.h},      {"t_end_time", k.t_end}};
}

Constants constants_from_json(const Json& j, const std::string& path) {
  Reader r(j, path);
  Constants k;
  k.c0 = r.num("c0", 0.0);
  k.kappa0 = r.num("kappa0_time", 0.0);
  k.mu_star = r.num("mu_star", 0.0);
  k.kappa_star = r.num("kappa_star_time", 0.0);
  k.M_star = r.num("M_star", 0.0);
  k.D2 = r.num("D2", 0.0);
  k.h = r.num("h_len", 0.0);
  k.t_end = r.num("t_end_time", 0.0);
  r.finish();
  return k;
}

// ---------------------------------------------------------------- config

namespace {

const std::set<std::string>& top_keys() {
  static const std::set<std::string> k{"command", "medium", "seeds", "output_dir", "tolerances", "params"};
  return k;
}

std::vector<std::uint64_t> parse_seeds(const Json& doc) {
  if (!doc.contains("seeds")) return {0};
  const Json& s = doc.at("seeds");
  std::vector<std::uint64_t> out;
  if (s.is_array()) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (!s[i].is_number_unsigned() && !(s[i].is_number_integer() && s[i].get<long long>() >= 0))
        Reader::fail("/seeds/" + std::to_string(i), "expected a non-negative integer");
      out.push_back(s[i].get<std::uint64_t>());
    }
  } else {
    Reader r(s, "/seeds");
    const auto first = r.u64("first", 0);
    const auto count = r.u64("count", 1);
    r.finish();
    for (std::uint64_t i = 0; i < count; ++i) out.push_back(first + i);
  }
  if (out.empty()) Reader::fail("/seeds", "at least one seed is required");
  std::set<std::uint64_t> uniq(out.begin(), out.end());
  if (uniq.size() != out.size()) Reader::fail("/seeds", "duplicate seeds");
  return out;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(Json doc) {
  if (!doc.is_object()) Reader::fail("", "config must be an object");
  for (const auto& [k, v] : doc.items())
    if (!top_keys().count(k)) Reader::fail("/" + k, "unknown field");
  if (!doc.contains("command") || !doc.at("command").is_string()) Reader::fail("/command", "required string missing");
  ExperimentConfig c;
  c.command_ = parse_command(doc.at("command").get<std::string>());
  if (doc.contains("output_dir") && !doc.at("output_dir").is_string())
    Reader::fail("/output_dir", "expected a string");
  if (doc.contains("params") && !doc.at("params").is_object()) Reader::fail("/params", "expected an object");
  c.doc_ = std::move(doc);
  (void)c.seeds();
  if (c.doc_.contains("medium")) (void)parse_medium(c.doc_.at("medium"));
  return c;
}

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return from_json(std::move(doc));
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string ExperimentConfig::canonical() const { return doc_.dump(); }

std::string ExperimentConfig::hash() const {
  Json d = doc_;
  d.erase("output_dir");
  return sha256_hex(d.dump());
}

std::string ExperimentConfig::output_dir() const {
  return doc_.contains("output_dir") ? doc_.at("output_dir").get<std::string>() : std::string("frontlab_out");
}

std::vector<std::uint64_t> ExperimentConfig::seeds() const { return parse_seeds(doc_); }

ExperimentConfig ExperimentConfig::with_command(Command c) const {
  ExperimentConfig o = *this;
  o.command_ = c;
  o.doc_["command"] = command_name(c);
  return o;
}

ExperimentConfig ExperimentConfig::with_seed_offset(std::uint64_t k) const {
  if (k == 0) return *this;
  ExperimentConfig o = *this;
  auto s = seeds();
  for (auto& x : s) x += k;
  o.doc_["seeds"] = s;
  return o;
}

ExperimentConfig ExperimentConfig::with_output_dir(const std::string& dir) const {
  ExperimentConfig o = *this;
  o.doc_["output_dir"] = dir;
  return o;
}

// ---------------------------------------------------------------- manifest

bool RunManifest::jobs_ok() const {
  return std::all_of(jobs.begin(), jobs.end(), [](const JobRecord& j) { return j.status == "ok"; });
}

bool RunManifest::assertions_ok() const {
  return std::all_of(assertions.begin(), assertions.end(), [](const AssertionRecord& a) { return a.passed; });
}

int RunManifest::exit_code(bool strict) const {
  if (!jobs_ok()) return 1;
  if (strict && !assertions_ok()) return 2;
  return 0;
}

Json RunManifest::to_json() const {
  Json j{{"config_hash", config_hash}, {"tool_version", tool_version}, {"command", command}, {"constants", constants}};
  j["jobs"] = Json::array();
  for (const auto& x : jobs)
    j["jobs"].push_back({{"name", x.name}, {"seed", x.seed}, {"status", x.status}, {"steps", x.steps},
                         {"wall_seconds", x.wall_seconds}, {"message", x.message}});
  j["files"] = Json::array();
  for (const auto& f : files) j["files"].push_back({{"path", f.path}, {"sha256", f.sha256}, {"bytes", f.bytes}});
  j["assertions"] = Json::array();
  for (const auto& a : assertions)
    j["assertions"].push_back(
        {{"name", a.name}, {"passed", a.passed}, {"value", a.value}, {"limit", a.limit}, {"detail", a.detail}});
  return j;
}

// ---------------------------------------------------------------- run context

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt_num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

struct Csv {
  std::ostringstream os;
  explicit Csv(const std::string& hash, const std::string& header) {
    os << "# config_sha256=" << hash << "\n" << header << "\n";
  }
  template <class... T>
  void row(const T&... xs) {
    bool first = true;
    ((os << (first ? "" : ",") << cell(xs), first = false), ...);
    os << "\n";
  }
  static std::string cell(double x) { return fmt_num(x); }
  static std::string cell(int x) { return std::to_string(x); }
  static std::string cell(long x) { return std::to_string(x); }
  static std::string cell(unsigned long x) { return std::to_string(x); }
  static std::string cell(unsigned long long x) { return std::to_string(x); }
  static std::string cell(bool x) { return x ? "1" : "0"; }
  static std::string cell(const std::string& x) { return x; }
  static std::string cell(const char* x) { return x; }
};

struct Tolerances {
  double c0_rel = 0.02;
  double speed_bound_rel = 0.02;
  double fluct_slope_max = 0.9;
  double additivity_exponent_max = 1.0;
  double hj_symdiff_factor = 3.0;
  double homog_symdiff_frac = 0.1;
  double exclusivity_sup = 0.06;
};

Tolerances parse_tolerances(const Json& doc) {
  Tolerances t;
  if (!doc.contains("tolerances")) return t;
  Reader r(doc.at("tolerances"), "/tolerances");
  t.c0_rel = r.num("c0_rel", t.c0_rel);
  t.speed_bound_rel = r.num("speed_bound_rel", t.speed_bound_rel);
  t.fluct_slope_max = r.num("fluct_slope_max", t.fluct_slope_max);
  t.additivity_exponent_max = r.num("additivity_exponent_max", t.additivity_exponent_max);
  t.hj_symdiff_factor = r.num("hj_symdiff_factor", t.hj_symdiff_factor);
  t.homog_symdiff_frac = r.num("homog_symdiff_frac", t.homog_symdiff_frac);
  t.exclusivity_sup = r.num("exclusivity_sup", t.exclusivity_sup);
  r.finish();
  return t;
}

class Context {
 public:
  Context(const ExperimentConfig& cfg, const RunOptions& opt)
      : cfg(cfg), hash(cfg.hash()), seeds(cfg.seeds()), tol(parse_tolerances(cfg.doc())),
        workers(resolve_workers(opt.workers)), out(opt.out_dir.empty() ? cfg.output_dir() : opt.out_dir) {
    manifest.config_hash = hash;
    manifest.command = command_name(cfg.command());
    params_json = cfg.doc().contains("params") ? &cfg.doc().at("params") : &empty_params();
    params = std::make_unique<Reader>(*params_json, "/params");
  }

  static const Json& empty_params() {
    static const Json e = Json::object();
    return e;
  }

  MediumSpec medium() const {
    if (!cfg.doc().contains("medium")) return MediumSpec{};
    return parse_medium(cfg.doc().at("medium"));
  }

  void write_text(const std::string& rel, const std::string& text) {
    const fs::path p = fs::path(out) / rel;
    fs::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary);
    f << text;
    if (!f) throw std::runtime_error("cannot write " + p.string());
  }
  void write_csv(const std::string& rel, const Csv& c) { write_text(rel, c.os.str()); }
  void write_json(const std::string& rel, Json j) {
    j["config_hash"] = hash;
    write_text(rel, j.dump(2) + "\n");
  }
  void write_field_file(const std::string& rel, const ScalarField& f) {
    const fs::path p = fs::path(out) / rel;
    fs::create_directories(p.parent_path());
    write_field(p.string(), f);
  }

  void check(const std::string& name, bool passed, double value, double limit, const std::string& detail) {
    manifest.assertions.push_back({name, passed, value, limit, detail});
    if (!passed) log_warn("assertion " + name + " failed: " + detail);
  }

  void job(const std::string& name, std::uint64_t seed, std::size_t steps, double wall) {
    manifest.jobs.push_back({name, seed, "ok", steps, wall, ""});
  }

  const ExperimentConfig& cfg;
  std::string hash;
  std::vector<std::uint64_t> seeds;
  Tolerances tol;
  int workers;
  std::string out;
  const Json* params_json;
  std::unique_ptr<Reader> params;
  RunManifest manifest;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double resolved_theta_star(const IgnitionProfile& p, double ts) { return ts > 0.0 ? ts : p.theta1() / 4.0; }

std::vector<Point> parse_directions(Reader& r, const std::string& key, int dim) {
  if (!r.has(key)) {
    if (dim == 1) return {{1, 0, 0}};
    return SpeedTable::direction_sample(dim, dim == 2 ? 8 : 1);
  }
  const Json& d = r.raw(key);
  if (d.is_object()) {
    Reader c(d, r.at(key));
    const long n = c.integer("count", 8);
    c.finish();
    if (n < 1) Reader::fail(r.at(key) + "/count", "must be >= 1");
    if (dim == 1) return n == 1 ? std::vector<Point>{{1, 0, 0}} : std::vector<Point>{{1, 0, 0}, {-1, 0, 0}};
    return SpeedTable::direction_sample(dim, std::size_t(n));
  }
  if (!d.is_array() || d.empty()) Reader::fail(r.at(key), "expected a non-empty array or {count}");
  std::vector<Point> out;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const std::string p = r.at(key) + "/" + std::to_string(i);
    const auto v = Reader::numbers(d[i], p);
    if (int(v.size()) != dim) Reader::fail(p, "expected " + std::to_string(dim) + " components");
    Point e{0, 0, 0};
    for (int a = 0; a < dim; ++a) e[a] = v[a];
    out.push_back(unit(e, dim, p));
  }
  return out;
}

EnsembleSpec parse_ensemble(Context& c, Reader& r) {
  EnsembleSpec s;
  s.medium = c.medium();
  s.seeds = c.seeds;
  s.h = r.num("h_len", s.h);
  s.probes = r.list("probes_len", {32, 64, 128});
  s.back = r.num("back_len", s.back);
  s.ahead = r.num("ahead_len", s.ahead);
  s.transverse = r.num("transverse_len", s.transverse);
  s.t_end = r.num("t_end_time", 0.0);
  s.theta_star = r.num("theta_star", 0.0);
  s.bootstrap = int(r.integer("bootstrap", s.bootstrap));
  s.bootstrap_seed = r.u64("bootstrap_seed", s.bootstrap_seed);
  s.workers = c.workers;
  return s;
}

void record_ensemble_jobs(Context& c, const HalfspaceEnsemble& ens, const std::string& tag) {
  for (const auto& m : ens.members) {
    c.job(tag, m.seed, m.steps, m.wall_seconds);
    if (m.window_clipped) c.manifest.jobs.back().message = "envelope window clipped";
  }
}

std::string dir_label(const Point& e, int dim) {
  std::string s;
  for (int a = 0; a < dim; ++a) s += (a ? " " : "") + fmt_num(e[a]);
  return s;
}

void record_profile_constants(Context& c, const MediumSpec& m, double theta_star) {
  c.manifest.constants["theta_star"] = resolved_theta_star(m.profile, theta_star);
  c.manifest.constants["c0"] = compute_c0(m.profile);
}

// speed bounds shared by front-speed and homogenize's estimated tables
void check_speed_row(Context& c, const SpeedRow& row, const MediumSpec& m, double c0, int dim) {
  const RandomMedium med(m);
  const double lip = m.profile.lipschitz() * med.envelope_bound();
  const double lo = c0 * (1.0 - c.tol.speed_bound_rel), hi = 2.0 * std::sqrt(lip) * (1.0 + c.tol.speed_bound_rel);
  std::ostringstream d;
  d << "c*(" << dir_label(row.e, dim) << ") = " << row.c_star << " in [" << lo << ", " << hi << "]";
  c.check("speed_bounds", row.c_star >= lo && row.c_star <= hi, row.c_star, hi, d.str());
  if (med.homogeneous()) {
    const double rel = std::abs(row.c_star - c0) / c0;
    std::ostringstream o;
    o << "homogeneous c* = " << row.c_star << " vs c0 = " << c0 << ", rel " << rel;
    c.check("c0_match", rel <= c.tol.c0_rel, rel, c.tol.c0_rel, o.str());
  }
}

// ---------------------------------------------------------------- command bodies

void cmd_simulate(Context& c) {
  Reader& r = *c.params;
  const MediumSpec base = c.medium();
  const int d = base.dim;
  const double h = r.num("h_len", 0.1);
  const Point lo = r.point("lo_len", d, {-20, -20, -20});
  const Point hi = r.point("hi_len", d, {20, 20, 20});
  const SetDescriptor S = r.has("set") ? parse_set(r.raw("set"), d, r.at("set")) : SetDescriptor{Ball{{0, 0, 0}, 5.0}};
  const std::string datum = r.str("datum", "mollified");
  const double theta_star = resolved_theta_star(base.profile, r.num("theta_star", 0.0));
  const double amplitude = r.num("amplitude", 1.0 - theta_star);
  const double t_end = r.num("t_end_time", 10.0);
  std::vector<double> snaps = r.list("snapshots_time", {});
  const bool arrival = r.flag("arrival", true);
  const std::string bc = r.str("boundary", "frozen");
  r.finish();
  if (!(h > 0.0)) Reader::fail("/params/h_len", "must be > 0");
  if (!(t_end >= 0.0)) Reader::fail("/params/t_end_time", "must be >= 0");
  if (datum != "mollified" && datum != "step") Reader::fail("/params/datum", "expected mollified or step");
  if (bc != "frozen" && bc != "neumann") Reader::fail("/params/boundary", "expected frozen or neumann");
  for (std::size_t i = 0; i < snaps.size(); ++i)
    if (snaps[i] < 0.0 || snaps[i] > t_end) Reader::fail("/params/snapshots_time/" + std::to_string(i), "outside [0, t_end]");
  snaps.push_back(0.0);
  snaps.push_back(t_end);
  std::sort(snaps.begin(), snaps.end());
  snaps.erase(std::unique(snaps.begin(), snaps.end()), snaps.end());
  const GridSpec g = guarded("/params", [&] { return GridSpec::covering(d, lo, hi, h); });
  record_profile_constants(c, base, theta_star);

  Csv sum(c.hash, "seed,t,steps,max_u,reached_measure");
  for (const auto seed : c.seeds) {
    const auto t0 = std::chrono::steady_clock::now();
    MediumSpec ms = base;
    ms.seed = seed;
    const RandomMedium med(ms);
    ScalarField init;
    if (datum == "mollified") {
      DatumOptions o;
      o.theta_star = theta_star;
      init = build_initial_datum(S, ms.profile, g, o).field;
    } else {
      init = step_datum(S, g, amplitude);
    }
    SolverOptions so;
    so.boundary = Boundary::frozen();
    if (bc == "neumann")
      for (int a = 0; a < 3; ++a) so.boundary.lower[a].kind = so.boundary.upper[a].kind = BoundaryKind::Neumann;
    SolverState st(std::move(init), make_grid_reaction(med, g), so);
    SnapshotObserver snap(snaps);
    ArrivalObserver arr(1.0 - theta_star);
    std::vector<Observer*> obs{&snap};
    if (arrival) obs.push_back(&arr);
    const RunSummary rs = run(st, t_end, obs);
    const std::string dir = "seed_" + std::to_string(seed) + "/";
    for (std::size_t i = 0; i < snap.snapshots().size(); ++i) {
      const auto& f = snap.snapshots()[i];
      char name[64];
      std::snprintf(name, sizeof name, "snapshot_%03zu.flf", i);
      c.write_field_file(dir + name, f);
      double mx = 0.0;
      for (double v : f.values) mx = std::max(mx, v);
      sum.row(seed, f.t, i == snap.snapshots().size() - 1 ? rs.steps : std::size_t(0), mx,
              mask_measure(g, reached_set(f, 1.0 - theta_star)));
    }
    if (arrival) {
      const auto map = arrival_times(arr);
      ScalarField af(g);
      af.values = map.times;
      af.t = t_end;
      c.write_field_file(dir + "arrival.flf", af);
    }
    c.job("simulate", seed, rs.steps, seconds_since(t0));
    if (rs.clamp_warning) c.manifest.jobs.back().message = "clamp warning: total " + fmt_num(rs.clamp_total);
  }
  c.write_csv("summary.csv", sum);
}

void cmd_front_speed(Context& c) {
  Reader& r = *c.params;
  EnsembleSpec spec = parse_ensemble(c, r);
  const int d = spec.medium.dim;
  const auto dirs = parse_directions(r, "directions", d);
  r.finish();
  guarded("/params", [&] { spec.validate(); return 0; });
  record_profile_constants(c, spec.medium, spec.theta_star);
  const double c0 = compute_c0(spec.medium.profile);

  Csv table(c.hash, "direction,e_x,e_y,e_z,c_star,stderr,ci_lo,ci_hi,tbar,amplitude,gamma,l_min,l_max");
  Csv arrivals(c.hash, "direction,seed,probe_len,T_time");
  std::vector<SpeedRow> rows;
  for (std::size_t k = 0; k < dirs.size(); ++k) {
    const auto ens = run_halfspace_ensemble(spec, dirs[k]);
    record_ensemble_jobs(c, ens, "front-speed dir " + std::to_string(k));
    for (const auto& m : ens.members)
      for (std::size_t j = 0; j < ens.probes.size(); ++j) arrivals.row(k, m.seed, ens.probes[j], m.T[j]);
    const SpeedRow row = fit_front_speed(ens, spec);
    rows.push_back(row);
    table.row(k, row.e[0], row.e[1], row.e[2], row.c_star, row.stderr_c, row.ci_lo, row.ci_hi, row.tbar,
              row.amplitude, row.gamma, row.l_min, row.l_max);
    check_speed_row(c, row, spec.medium, c0, d);
  }
  c.write_csv("speed_table.csv", table);
  c.write_csv("arrivals.csv", arrivals);
}

void write_fluctuations(Context& c, const FluctuationReport& rep) {
  Csv per(c.hash, "distance_len,mean_time,sd_time,q05,q25,q50,q75,q95");
  for (const auto& s : rep.per_distance)
    per.row(s.distance, s.mean, s.sd, s.quantiles[0], s.quantiles[1], s.quantiles[2], s.quantiles[3], s.quantiles[4]);
  c.write_csv("fluctuations.csv", per);
  Csv fit(c.hash, "exponent,ci_lo,ci_hi,prefactor,tail_C,tail_rms,rho,beta1");
  fit.row(rep.exponent, rep.ci_lo, rep.ci_hi, rep.prefactor, rep.tail_C, rep.tail_rms, rep.rho, rep.beta1);
  c.write_csv("fluctuation_fit.csv", fit);
}

void cmd_fluctuations(Context& c) {
  Reader& r = *c.params;
  EnsembleSpec spec = parse_ensemble(c, r);
  const int d = spec.medium.dim;
  const Point e = unit(r.point("e", d, {1, 0, 0}), d, "/params/e");
  r.finish();
  guarded("/params", [&] { spec.validate(); return 0; });
  record_profile_constants(c, spec.medium, spec.theta_star);
  const auto ens = run_halfspace_ensemble(spec, e);
  record_ensemble_jobs(c, ens, "fluctuations");
  const auto rep = fluctuation_stats(ens, spec);
  write_fluctuations(c, rep);
  std::ostringstream o;
  o << "slope " << rep.exponent << " CI [" << rep.ci_lo << ", " << rep.ci_hi << "]";
  c.check("fluctuation_slope", rep.exponent <= c.tol.fluct_slope_max && rep.ci_hi < 1.0, rep.exponent,
          c.tol.fluct_slope_max, o.str());
}

void cmd_additivity(Context& c) {
  Reader& r = *c.params;
  EnsembleSpec spec = parse_ensemble(c, r);
  const int d = spec.medium.dim;
  const Point e = unit(r.point("e", d, {1, 0, 0}), d, "/params/e");
  std::vector<std::array<double, 2>> pairs;
  if (r.has("pairs_len")) {
    const Json& p = r.raw("pairs_len");
    if (!p.is_array() || p.empty()) Reader::fail("/params/pairs_len", "expected a non-empty array of [l, m]");
    for (std::size_t i = 0; i < p.size(); ++i) {
      const auto v = Reader::numbers(p[i], "/params/pairs_len/" + std::to_string(i));
      if (v.size() != 2) Reader::fail("/params/pairs_len/" + std::to_string(i), "expected [l, m]");
      pairs.push_back({v[0], v[1]});
    }
  } else {
    pairs = {{32, 32}, {64, 64}, {128, 128}};
  }
  r.finish();
  std::vector<double> probes = spec.probes;
  for (const auto& p : pairs) probes.insert(probes.end(), {p[0], p[1], p[0] + p[1]});
  std::sort(probes.begin(), probes.end());
  probes.erase(std::unique(probes.begin(), probes.end()), probes.end());
  spec.probes = probes;
  guarded("/params", [&] { spec.validate(); return 0; });
  record_profile_constants(c, spec.medium, spec.theta_star);
  const auto ens = run_halfspace_ensemble(spec, e);
  record_ensemble_jobs(c, ens, "additivity");
  const auto rep = mean_linearity(ens, pairs, spec);
  Csv t(c.hash, "l_len,m_len,defect_time,stderr_time");
  for (const auto& row : rep.rows) t.row(row.l, row.m, row.D, row.err);
  c.write_csv("additivity.csv", t);
  Csv fit(c.hash, "exponent,ci_lo,ci_hi");
  fit.row(rep.exponent, rep.ci_lo, rep.ci_hi);
  c.write_csv("additivity_fit.csv", fit);
  std::ostringstream o;
  o << "defect growth exponent " << rep.exponent << " CI [" << rep.ci_lo << ", " << rep.ci_hi << "]";
  c.check("additivity_exponent", rep.exponent < c.tol.additivity_exponent_max, rep.exponent,
          c.tol.additivity_exponent_max, o.str());
}

void cmd_wulff(Context& c) {
  Reader& r = *c.params;
  WulffSpec s;
  s.medium = c.medium();
  s.h = r.num("h_len", s.h);
  s.source_radius = r.num("source_radius_len", s.source_radius);
  s.t_end = r.num("t_end_time", s.t_end);
  s.domain = r.num("domain_len", 0.0);
  s.theta_star = r.num("theta_star", 0.0);
  s.angles = std::size_t(r.integer("angles", long(s.angles)));
  r.finish();
  if (s.medium.dim != 2) Reader::fail("/medium/dim", "wulff needs a 2D medium");
  record_profile_constants(c, s.medium, s.theta_star);
  Csv t(c.hash, "seed,angle,radius_len_per_time");
  Csv sup(c.hash, "seed,e_x,e_y,support");
  for (const auto seed : c.seeds) {
    const auto t0 = std::chrono::steady_clock::now();
    s.seed = seed;
    s.medium.seed = seed;
    const auto w = estimate_wulff(s);
    for (std::size_t i = 0; i < w.angle.size(); ++i) t.row(seed, w.angle[i], w.radius[i]);
    for (std::size_t i = 0; i < w.directions.size(); ++i)
      sup.row(seed, w.directions[i][0], w.directions[i][1], w.support[i]);
    c.job("wulff", seed, 0, seconds_since(t0));
  }
  c.write_csv("wulff.csv", t);
  c.write_csv("wulff_support.csv", sup);
}

void cmd_hj(Context& c) {
  Reader& r = *c.params;
  const int d = int(r.integer("dim", 2));
  if (d < 2 || d > 3) Reader::fail("/params/dim", "hj runs in 2 or 3 dimensions");
  const SetDescriptor A = r.has("set") ? parse_set(r.raw("set"), d, "/params/set") : SetDescriptor{Ball{{0, 0, 0}, 1.0}};
  const SpeedTable speed = parse_speed(r.raw("speed"), d, "/params/speed");
  const double t = r.num("t_time", 1.0);
  const double h = r.num("h_len", 1.0 / 64);
  const std::string method = r.str("method", "both");
  HJOptions ho;
  ho.directions = std::size_t(r.integer("directions", 0));
  ho.max_gap = r.num("max_gap", ho.max_gap);
  ho.safety = r.num("safety", ho.safety);
  double reach = 2.0;
  if (const auto* b = std::get_if<Ball>(&A)) reach = std::abs(b->center[0]) + std::abs(b->center[1]) + b->radius;
  if (const auto* bx = std::get_if<Box>(&A))
    for (int a = 0; a < d; ++a) reach = std::max({reach, std::abs(bx->lo[a]), std::abs(bx->hi[a])});
  const double half = reach + speed.max_speed() * t + 0.5;
  const Point lo = r.point("lo_len", d, {-half, -half, -half});
  const Point hi = r.point("hi_len", d, {half, half, half});
  r.finish();
  if (method != "both" && method != "convex" && method != "levelset")
    Reader::fail("/params/method", "expected both, convex or levelset");
  if (!(t >= 0.0)) Reader::fail("/params/t_time", "must be >= 0");
  const GridSpec g = guarded("/params", [&] { return GridSpec::covering(d, lo, hi, h); });

  const auto t0 = std::chrono::steady_clock::now();
  Csv sum(c.hash, "method,measure,perimeter,symdiff");
  std::optional<ReachabilitySet> cv, ls;
  if (method != "levelset") {
    cv = theta_convex(A, speed, t, d, ho);
    if (d == 2 && !cv->polygon.v.empty()) {
      Csv poly(c.hash, "x_len,y_len");
      for (const auto& v : cv->polygon.v) poly.row(v[0], v[1]);
      c.write_csv("theta_polygon.csv", poly);
    }
  }
  if (method != "convex") {
    ls = levelset_evolve(A, g, speed, t, ho);
    c.write_field_file("levelset.flf", ls->v);
  }
  const double perim = (cv && d == 2 && !cv->polygon.v.empty()) ? polygon_perimeter(cv->polygon) : 0.0;
  double sd = 0.0;
  if (cv && ls) {
    sd = symmetric_difference(g, cv->mask(g), ls->mask(g));
    if (perim > 0.0) {
      std::ostringstream o;
      o << "symdiff " << sd << " vs " << c.tol.hj_symdiff_factor << " h perimeter = " << c.tol.hj_symdiff_factor * h * perim;
      c.check("hj_consistency", sd <= c.tol.hj_symdiff_factor * h * perim, sd, c.tol.hj_symdiff_factor * h * perim,
              o.str());
    }
  }
  if (cv) sum.row("convex", cv->measure(), perim, sd);
  if (ls) sum.row("levelset", ls->measure(), perim, sd);
  c.write_csv("hj_summary.csv", sum);
  c.job("hj", 0, 0, seconds_since(t0));
}

// c* table for homogenization: given, or estimated from half-space ensembles.
SpeedTable homog_speed(Context& c, Reader& r, const MediumSpec& m) {
  const int d = m.dim;
  const Json& sj = r.raw("speed");
  if (!(sj.is_object() && sj.contains("estimate"))) return parse_speed(sj, d, "/params/speed");
  Reader outer(sj, "/params/speed");
  Reader er(outer.raw("estimate"), "/params/speed/estimate");
  EnsembleSpec es = parse_ensemble(c, er);
  es.medium = m;
  const auto dirs = parse_directions(er, "directions", d);
  er.finish();
  outer.finish();
  guarded("/params/speed/estimate", [&] { es.validate(); return 0; });
  const double c0 = compute_c0(m.profile);
  std::vector<SpeedRow> rows;
  Csv t(c.hash, "direction,e_x,e_y,e_z,c_star,stderr,ci_lo,ci_hi");
  for (std::size_t k = 0; k < dirs.size(); ++k) {
    const auto ens = run_halfspace_ensemble(es, dirs[k]);
    record_ensemble_jobs(c, ens, "speed estimate dir " + std::to_string(k));
    rows.push_back(fit_front_speed(ens, es));
    const auto& row = rows.back();
    t.row(k, row.e[0], row.e[1], row.e[2], row.c_star, row.stderr_c, row.ci_lo, row.ci_hi);
    check_speed_row(c, row, m, c0, d);
  }
  c.write_csv("speed_table.csv", t);
  return speed_table(rows, d);
}

void cmd_homogenize(Context& c) {
  Reader& r = *c.params;
  HomogSpec s;
  s.medium = c.medium();
  s.seeds = c.seeds;
  const int d = s.medium.dim;
  if (r.has("set")) s.A = parse_set(r.raw("set"), d, "/params/set");
  s.epsilons = r.list("epsilons", {0.125, 0.0625, 0.03125});
  s.times = r.list("times_time", {1.0});
  s.delta = r.num("delta_len", s.delta);
  s.h_micro = r.num("h_micro_len", s.h_micro);
  s.y_shift = r.point("y_shift_len", d, {0, 0, 0});
  s.psi_margin = r.num("psi_margin_len", 0.0);
  s.margin = r.num("margin_len", s.margin);
  s.workers = c.workers;
  if (!r.has("speed")) Reader::fail("/params/speed", "required field missing");
  guarded("/params", [&] {
    HomogSpec probe = s;
    probe.speed = SpeedTable::constant(d, 1.0, d == 2 ? 8 : 1);
    if (d >= 2) probe.validate();
    return 0;
  });
  s.speed = homog_speed(c, r, s.medium);
  r.finish();
  guarded("/params", [&] { s.validate(); return 0; });
  record_profile_constants(c, s.medium, 0.0);
  const auto rep = run_homogenization(s);
  Csv rows(c.hash, "epsilon,t_time,seed,interior_sup,exterior_sup,symdiff,theta_measure,degenerate");
  for (const auto& row : rep.rows) {
    rows.row(row.epsilon, row.t, row.seed, row.error.interior_sup, row.error.exterior_sup, row.error.symdiff,
             row.error.theta_measure, row.error.degenerate);
    c.job("homogenize eps " + fmt_num(row.epsilon), row.seed, row.steps, row.wall_seconds);
  }
  c.write_csv("homog.csv", rows);
  Csv worst(c.hash, "epsilon,t_time,interior_sup,exterior_sup,symdiff,theta_measure");
  for (const auto& w : rep.worst)
    worst.row(w.epsilon, w.t, w.error.interior_sup, w.error.exterior_sup, w.error.symdiff, w.error.theta_measure);
  c.write_csv("homog_worst.csv", worst);

  // worst is epsilon-major then time; compare consecutive epsilons at equal t
  const std::size_t nt = s.times.size();
  bool mono = true;
  std::ostringstream o;
  for (std::size_t k = nt; k < rep.worst.size(); ++k) {
    const auto& a = rep.worst[k - nt].error;
    const auto& b = rep.worst[k].error;
    if (b.interior_sup > a.interior_sup || b.exterior_sup > a.exterior_sup) {
      mono = false;
      o << "eps " << rep.worst[k].epsilon << " t " << rep.worst[k].t << ": (" << b.interior_sup << ", "
        << b.exterior_sup << ") after (" << a.interior_sup << ", " << a.exterior_sup << "); ";
    }
  }
  c.check("homog_monotone", mono, mono ? 0.0 : 1.0, 0.0, mono ? "sup errors non-increasing in epsilon" : o.str());
  for (std::size_t k = rep.worst.size() - nt; k < rep.worst.size(); ++k) {
    const auto& w = rep.worst[k];
    const double lim = c.tol.homog_symdiff_frac * w.error.theta_measure;
    std::ostringstream q;
    q << "eps " << w.epsilon << " t " << w.t << ": symdiff " << w.error.symdiff << " vs " << lim;
    c.check("homog_symdiff", w.error.symdiff <= lim, w.error.symdiff, lim, q.str());
  }
}

void cmd_exclusivity(Context& c) {
  Reader& r = *c.params;
  ExclusivitySpec s;
  s.medium = c.medium();
  s.seeds = c.seeds;
  const int d = s.medium.dim;
  s.e = unit(r.point("e", d, {1, 0, 0}), d, "/params/e");
  s.a = r.num("a", s.a);
  s.horizon = r.num("horizon_time", s.horizon);
  s.h = r.num("h_len", s.h);
  s.c_star = r.num("c_star", 0.0);
  s.margin_lo = r.num("margin_lo", s.margin_lo);
  s.margin_hi = r.num("margin_hi", s.margin_hi);
  s.burn_in = r.num("burn_in_time", s.burn_in);
  s.samples = std::size_t(r.integer("samples", long(s.samples)));
  s.theta_star = r.num("theta_star", 0.0);
  s.M_star = r.num("M_star", 0.0);
  s.enforce_range = r.flag("enforce_range", true);
  s.transverse = r.num("transverse_len", s.transverse);
  s.workers = c.workers;
  r.finish();
  record_profile_constants(c, s.medium, s.theta_star);
  const auto t0 = std::chrono::steady_clock::now();
  const auto rec = exclusivity_probe(s);
  c.job("exclusivity", c.seeds.front(), 0, seconds_since(t0));
  c.manifest.constants["exclusivity_a"] = rec.a;
  c.manifest.constants["exclusivity_range_enforced"] = rec.range_enforced;
  Csv t(c.hash, "t_time,ahead_sup");
  for (std::size_t i = 0; i < rec.times.size(); ++i) t.row(rec.times[i], rec.ahead_sup[i]);
  c.write_csv("exclusivity.csv", t);
  std::ostringstream o;
  o << "sup ahead after burn-in " << rec.worst_after_burn_in << " vs " << c.tol.exclusivity_sup;
  c.check("exclusivity_sup", rec.worst_after_burn_in <= c.tol.exclusivity_sup, rec.worst_after_burn_in,
          c.tol.exclusivity_sup, o.str());
}

void cmd_perturb(Context& c) {
  Reader& r = *c.params;
  PerturbationSpec s;
  s.medium = c.medium();
  s.seeds = c.seeds;
  const std::string kind = r.str("kind", "both");
  s.eta = r.num("eta", s.eta);
  s.t0 = r.num("t0_time", s.t0);
  s.y = r.num("y_len", s.y);
  s.R = r.num("R_len", 0.0);
  s.h = r.num("h_len", s.h);
  s.factor = r.num("factor", s.factor);
  s.theta_star = r.num("theta_star", 0.0);
  s.enforce_range = r.flag("enforce_range", true);
  s.workers = c.workers;
  if (r.has("constants")) s.constants = constants_from_json(r.raw("constants"), "/params/constants");
  if (r.has("constants_path")) {
    const std::string p = r.str("constants_path", "");
    std::ifstream in(p);
    if (!in) Reader::fail("/params/constants_path", "cannot read " + p);
    Json j;
    try {
      j = Json::parse(in);
    } catch (const Json::parse_error& e) {
      Reader::fail("/params/constants_path", e.what());
    }
    j.erase("config_hash");
    s.constants = constants_from_json(j, "/params/constants_path");
  }
  r.finish();
  std::vector<PerturbationKind> kinds;
  if (kind == "level_set" || kind == "both") kinds.push_back(PerturbationKind::LevelSet);
  if (kind == "uniform" || kind == "both") kinds.push_back(PerturbationKind::Uniform);
  if (kinds.empty()) Reader::fail("/params/kind", "expected level_set, uniform or both");
  record_profile_constants(c, s.medium, s.theta_star);
  if (!(s.constants.M_star > 0.0)) {
    CalibrationSpec cs;
    cs.profile = s.medium.profile;
    cs.h = s.h;
    cs.theta_star = s.theta_star;
    s.constants = calibrate(cs);
  }
  c.manifest.constants["calibrated"] = constants_to_json(s.constants);
  Csv t(c.hash, "kind,seed,T1_time,T2_time,bound_time,holds");
  for (const auto k : kinds) {
    s.kind = k;
    const std::string name = k == PerturbationKind::LevelSet ? "level_set" : "uniform";
    const auto t0 = std::chrono::steady_clock::now();
    const auto rep = perturbation_check(s);
    const double wall = seconds_since(t0) / double(std::max<std::size_t>(1, rep.rows.size()));
    for (const auto& row : rep.rows) {
      t.row(name, row.seed, row.T1, row.T2, row.bound, row.holds);
      c.job("perturb " + name, row.seed, 0, wall);
    }
    c.manifest.constants["perturb_" + name] = {{"slack_time", rep.slack}, {"M_star", rep.M_star}, {"R_len", rep.R}};
    std::size_t bad = 0;
    for (const auto& row : rep.rows) bad += !row.holds;
    c.check("perturbation_" + name, rep.all_hold, double(bad), 0.0,
            std::to_string(bad) + " of " + std::to_string(rep.rows.size()) + " pairs violate the inequality");
  }
  c.write_csv("perturb.csv", t);
}

void cmd_calibrate(Context& c) {
  Reader& r = *c.params;
  const MediumSpec m = c.medium();
  CalibrationSpec s;
  s.profile = m.profile;
  s.h = r.num("h_len", s.h);
  s.t_end = r.num("t_end_time", s.t_end);
  s.theta_star = r.num("theta_star", 0.0);
  s.probes = r.list("probes_len", s.probes);
  r.finish();
  if (!RandomMedium(m).homogeneous()) Reader::fail("/medium", "calibrate needs a homogeneous medium block");
  record_profile_constants(c, m, s.theta_star);
  const auto t0 = std::chrono::steady_clock::now();
  const Constants k = calibrate(s);
  c.job("calibrate", 0, 0, seconds_since(t0));
  c.manifest.constants["calibrated"] = constants_to_json(k);
  c.write_json("constants_" + c.hash.substr(0, 16) + ".json", constants_to_json(k));
  c.check("mu_star_positive", k.mu_star > 0.0, k.mu_star, 0.0, "mu* = " + fmt_num(k.mu_star));
  c.check("kappa0_bounded", k.kappa0 <= s.t_end / 2, k.kappa0, s.t_end / 2, "kappa0 = " + fmt_num(k.kappa0));
}

// Files of an earlier manifest in the same directory are removed so the new inventory is complete.
void clear_previous(const fs::path& out) {
  const fs::path m = out / "manifest.json";
  if (!fs::exists(m)) return;
  try {
    std::ifstream in(m);
    const Json j = Json::parse(in);
    for (const auto& f : j.at("files")) fs::remove(out / f.at("path").get<std::string>());
  } catch (const std::exception& e) {
    log_warn("could not read previous manifest in " + out.string() + ": " + e.what());
  }
  fs::remove(m);
}

}  // namespace

RunManifest run_experiment(const ExperimentConfig& input, const RunOptions& opt) {
  const ExperimentConfig cfg = input.with_seed_offset(opt.seed_offset);
  Context c(cfg, opt);
  const fs::path out(c.out);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec || !fs::is_directory(out)) throw ConfigError("/output_dir: cannot create " + out.string());
  clear_previous(out);
  c.write_text("config.json", cfg.canonical() + "\n");

  using Body = void (*)(Context&);
  static const std::vector<std::pair<Command, Body>> bodies{
      {Command::Simulate, cmd_simulate},       {Command::FrontSpeed, cmd_front_speed},
      {Command::Fluctuations, cmd_fluctuations}, {Command::Additivity, cmd_additivity},
      {Command::Wulff, cmd_wulff},             {Command::HJ, cmd_hj},
      {Command::Homogenize, cmd_homogenize},   {Command::Exclusivity, cmd_exclusivity},
      {Command::Perturb, cmd_perturb},         {Command::Calibrate, cmd_calibrate}};
  const auto it = std::find_if(bodies.begin(), bodies.end(), [&](const auto& b) { return b.first == cfg.command(); });
  try {
    it->second(c);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    c.manifest.jobs.push_back({command_name(cfg.command()), 0, "failed", 0, 0.0, e.what()});
    log_warn(std::string("job failed: ") + e.what());
  }

  // Inventory: everything under the output directory except the manifest itself, sorted.
  std::vector<std::string> paths;
  for (const auto& entry : fs::recursive_directory_iterator(out))
    if (entry.is_regular_file()) {
      const std::string rel = fs::relative(entry.path(), out).generic_string();
      if (rel != "manifest.json") paths.push_back(rel);
    }
  std::sort(paths.begin(), paths.end());
  for (const auto& p : paths) {
    const fs::path full = out / p;
    c.manifest.files.push_back({p, sha256_file(full.string()), fs::file_size(full)});
  }
  std::ofstream mf(out / "manifest.json");
  mf << c.manifest.to_json().dump(2) << "\n";
  return c.manifest;
}

}  // namespace frontlab
