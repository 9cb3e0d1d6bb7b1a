#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "frontlab/errors.hpp"
#include "frontlab/hj.hpp"
#include "frontlab/init_data.hpp"
#include "frontlab/io.hpp"
#include "frontlab/medium.hpp"
#include "frontlab/solver.hpp"
#include "frontlab/speed.hpp"

namespace py = pybind11;
using namespace frontlab;

namespace {

Point to_point(const std::vector<double>& v) {
  if (v.empty() || v.size() > 3) throw py::value_error("points need 1 to 3 coordinates");
  Point p{0, 0, 0};
  for (std::size_t a = 0; a < v.size(); ++a) p[a] = v[a];
  return p;
}

py::dict speed_row_dict(const SpeedRow& r) {
  py::dict d;
  d["e"] = std::vector<double>(r.e.begin(), r.e.end());
  d["c_star"] = r.c_star;
  d["stderr"] = r.stderr_c;
  d["ci"] = py::make_tuple(r.ci_lo, r.ci_hi);
  d["tbar"] = r.tbar;
  d["mean_T"] = r.mean_T;
  d["sd_T"] = r.sd_T;
  return d;
}

py::array_t<double> field_array(const ScalarField& f) {
  std::vector<py::ssize_t> shape;
  for (int a = 0; a < f.grid.dim; ++a) shape.push_back(py::ssize_t(f.grid.shape[a]));
  py::array_t<double> out(shape);
  std::copy(f.values.begin(), f.values.end(), out.mutable_data());
  return out;
}

}  // namespace

PYBIND11_MODULE(_frontlab, m) {
  m.doc() = "Stationary random ignition reactions: fronts, speeds, effective dynamics";
  m.attr("__version__") = kToolVersion;

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ConstructionError>(m, "ConstructionError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<IntegrationError>(m, "IntegrationError", PyExc_RuntimeError);

  py::class_<IgnitionProfile>(m, "IgnitionProfile")
      .def(py::init([](double theta0, double M, double m1, double alpha1) {
             return IgnitionProfile::make(theta0, M, m1, alpha1);
           }),
           py::arg("theta0") = 0.25, py::arg("M") = 1.0, py::arg("m1") = 2.0, py::arg("alpha1") = 0.5)
      .def("__call__", &IgnitionProfile::operator(), py::arg("u"))
      .def_property_readonly("theta0", &IgnitionProfile::theta0)
      .def_property_readonly("theta1", &IgnitionProfile::theta1)
      .def_property_readonly("lipschitz", &IgnitionProfile::lipschitz)
      .def_property_readonly("join", &IgnitionProfile::join);

  m.def("compute_c0", [](const IgnitionProfile& p) { return compute_c0(p); }, py::arg("profile"),
        "Ignition front speed of the profile by shooting.");

  m.def(
      "sample_site",
      [](std::uint64_t seed, const std::vector<std::int64_t>& k) {
        Lattice l{0, 0, 0};
        for (std::size_t a = 0; a < std::min<std::size_t>(3, k.size()); ++a) l[a] = k[a];
        return sample_site(seed, l);
      },
      py::arg("seed"), py::arg("k"));

  py::class_<RandomMedium>(m, "Medium")
      .def(py::init([](const std::string& spec_json, std::uint64_t seed) {
             MediumSpec s = parse_medium(Json::parse(spec_json));
             s.seed = seed;
             return RandomMedium(s);
           }),
           py::arg("spec_json"), py::arg("seed") = 0, "Medium from a JSON medium block.")
      .def("envelope", [](const RandomMedium& r, const std::vector<double>& x) { return r.envelope(to_point(x)); })
      .def("reaction", [](const RandomMedium& r, const std::vector<double>& x, double u) { return r.eval(to_point(x), u); })
      .def_property_readonly("dim", &RandomMedium::dim)
      .def_property_readonly("envelope_bound", &RandomMedium::envelope_bound)
      .def_property_readonly("homogeneous", &RandomMedium::homogeneous)
      .def("to_json", [](const RandomMedium& r) { return medium_to_json(r.spec()).dump(); });

  m.def(
      "estimate_front_speed",
      [](const std::string& medium_json, const std::vector<std::uint64_t>& seeds, const std::vector<double>& e,
         const std::vector<double>& probes, double h, int workers) {
        EnsembleSpec s;
        s.medium = parse_medium(Json::parse(medium_json));
        s.seeds = seeds;
        s.probes = probes;
        s.h = h;
        s.workers = workers;
        py::gil_scoped_release release;
        const auto row = estimate_front_speed(s, to_point(e));
        py::gil_scoped_acquire acquire;
        return speed_row_dict(row);
      },
      py::arg("medium_json"), py::arg("seeds"), py::arg("e"), py::arg("probes"), py::arg("h") = 0.25,
      py::arg("workers") = 0);

  m.def(
      "theta_convex_polygon",
      [](const std::vector<std::vector<double>>& dirs, const std::vector<double>& c, double radius, double t) {
        if (dirs.size() != c.size()) throw py::value_error("one speed per direction");
        SpeedTable tab;
        tab.dim = 2;
        for (std::size_t i = 0; i < dirs.size(); ++i) tab.add(to_point(dirs[i]), c[i]);
        const auto r = theta_convex(Ball{{0, 0, 0}, radius}, tab, t, 2);
        std::vector<std::pair<double, double>> v;
        for (const auto& p : r.polygon.v) v.emplace_back(p[0], p[1]);
        return v;
      },
      py::arg("directions"), py::arg("c"), py::arg("radius"), py::arg("t"),
      "Vertices of the convex reached set from the ball B_radius(0) in 2D.");

  m.def(
      "mollified_datum_1d",
      [](double radius, double h, double half_width) {
        const auto g = GridSpec::covering(1, {-half_width, 0, 0}, {half_width, 0, 0}, h);
        const auto d = build_initial_datum(Ball{{0, 0, 0}, radius}, IgnitionProfile::make(0.25, 1, 2, 0.5), g);
        py::dict out;
        out["field"] = field_array(d.field);
        out["R0"] = d.R0;
        out["min_defect"] = d.min_defect;
        return out;
      },
      py::arg("radius"), py::arg("h"), py::arg("half_width"));

  m.def("read_field", [](const std::string& path) {
    const auto f = read_field(path);
    py::dict out;
    out["values"] = field_array(f);
    out["h"] = f.grid.h;
    out["t"] = f.t;
    out["origin"] = std::vector<double>(f.grid.origin.begin(), f.grid.origin.begin() + f.grid.dim);
    return out;
  });

  m.def("sha256", [](const std::string& s) { return sha256_hex(s); });
  m.def("config_hash", [](const std::string& cfg) { return ExperimentConfig::parse(cfg).hash(); });
  m.def(
      "run_experiment",
      [](const std::string& cfg, const std::string& out_dir, int workers, std::uint64_t seed_offset) {
        const auto c = ExperimentConfig::parse(cfg);
        RunOptions o;
        o.out_dir = out_dir;
        o.workers = workers;
        o.seed_offset = seed_offset;
        RunManifest man;
        {
          py::gil_scoped_release release;
          man = run_experiment(c, o);
        }
        return man.to_json().dump();
      },
      py::arg("config_json"), py::arg("out_dir") = "", py::arg("workers") = 0, py::arg("seed_offset") = 0,
      "Runs a config and returns the manifest as JSON text.");
}
