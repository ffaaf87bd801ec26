#include "rydpair/angular.hpp"
#include "rydpair/config.hpp"
#include "rydpair/errors.hpp"
#include "rydpair/radial.hpp"

#include <pybind11/eigen.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <limits>
#include <memory>

namespace py = pybind11;
using namespace rydpair;

namespace {

HalfInteger half(double v) { return HalfInteger::from_double(v); }

MatrixElements &elements() {
  static MatrixElements me(SpeciesDatabase::builtin());
  return me;
}

const SpeciesModel &model(const StateOne &s) { return SpeciesDatabase::builtin().species(s.species); }

RunConfig config_from(const std::string &json) {
  nlohmann::ordered_json doc;
  try {
    doc = nlohmann::ordered_json::parse(json);
  } catch (const nlohmann::ordered_json::parse_error &e) {
    throw ConfigError(e.what());
  }
  return RunConfig::from_json(doc);
}

// Curves as a (curves x distances) table with NaN where a curve is absent.
py::dict curves_dict(const PotentialCurves &c) {
  const auto n = static_cast<Eigen::Index>(c.points.size());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  Eigen::VectorXd r(n);
  Eigen::MatrixXd energy = Eigen::MatrixXd::Constant(c.curve_count, n, nan);
  Eigen::MatrixXd overlap = Eigen::MatrixXd::Constant(c.curve_count, n, nan);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto &p = c.points[k];
    r(k) = p.r_m;
    if (!p.ok) continue;
    for (Eigen::Index i = 0; i < p.energies_ghz.size(); ++i) {
      energy(p.curve[i], k) = p.energies_ghz(i) - c.reference_energy_ghz;
      overlap(p.curve[i], k) = p.overlaps(i);
    }
  }
  py::dict d;
  d["r_m"] = r;
  d["energy_ghz"] = energy;
  d["overlap"] = overlap;
  d["leroy_radius_m"] = c.leroy_radius_m;
  d["reference_energy_ghz"] = c.reference_energy_ghz;
  return d;
}

} // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Rydberg pair potentials, Stark and Zeeman maps and multipole matrix elements";
  m.attr("__version__") = kVersion;

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DataFileError>(m, "DataFileError", PyExc_IOError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  py::class_<StateOne>(m, "State")
      .def(py::init([](const std::string &species, int n, int l, double j, double mj) {
             return make_state(species, n, l, j, mj);
           }),
           py::arg("species"), py::arg("n"), py::arg("l"), py::arg("j"), py::arg("mj"))
      .def_static("parse", &parse_state, py::arg("species"), py::arg("text"))
      .def_readonly("species", &StateOne::species)
      .def_readonly("n", &StateOne::n)
      .def_readonly("l", &StateOne::l)
      .def_property_readonly("j", [](const StateOne &s) { return s.j.value(); })
      .def_property_readonly("mj", [](const StateOne &s) { return s.mj.value(); })
      .def("__repr__", [](const StateOne &s) { return "<State " + s.label() + ">"; })
      .def("__str__", &StateOne::label)
      .def(py::self == py::self);

  m.def("level_energy_ghz", [](const StateOne &s) { return level_energy(model(s), s).ghz(); }, py::arg("state"),
        "Unperturbed level energy in GHz (negative, relative to the ionization limit).");
  m.def("quantum_defect", [](const StateOne &s) { return quantum_defect(model(s), s.n, s.l, s.j); },
        py::arg("state"));
  m.def(
      "leroy_radius_um",
      [](const StateOne &a, const StateOne &b) { return leroy_radius(model(a), a, model(b), b) * 1e6; },
      py::arg("first"), py::arg("second"));

  m.def(
      "wigner_3j",
      [](double j1, double j2, double j3, double m1, double m2, double m3) {
        return wigner_3j(ThreeJKey(half(j1), half(j2), half(j3), half(m1), half(m2), half(m3)));
      },
      py::arg("j1"), py::arg("j2"), py::arg("j3"), py::arg("m1"), py::arg("m2"), py::arg("m3"));
  m.def(
      "wigner_6j",
      [](double j1, double j2, double j3, double j4, double j5, double j6) {
        return wigner_6j(half(j1), half(j2), half(j3), half(j4), half(j5), half(j6));
      },
      py::arg("j1"), py::arg("j2"), py::arg("j3"), py::arg("j4"), py::arg("j5"), py::arg("j6"));

  m.def(
      "radial_element",
      [](const StateOne &bra, const StateOne &ket, int kappa, const std::string &method) {
        return radial_matrix_element(model(bra), bra, model(ket), ket, kappa, radial_method_from_string(method));
      },
      py::arg("bra"), py::arg("ket"), py::arg("kappa") = 1, py::arg("method") = "numerov",
      "<bra| r^kappa |ket> in a0^kappa.");
  m.def(
      "multipole_element",
      [](const StateOne &bra, const StateOne &ket, int kappa, int q) {
        return elements().multipole(bra, ket, kappa, q);
      },
      py::arg("bra"), py::arg("ket"), py::arg("kappa") = 1, py::arg("q") = 0,
      "<bra| p_{kappa q} |ket> in e a0^kappa.");

  m.def(
      "_pair_potential",
      [](const std::string &json) {
        const auto config = config_from(json);
        config.validate("pair-potential");
        auto ctx = make_context(config);
        PairSystem sys(*ctx.me, config.pair_spec(), config.fields(), config.theta_rad());
        const auto grid = config.r_grid_m();
        const auto curves = [&] {
          py::gil_scoped_release release;
          return solve_curves(sys, sys.spec().target, grid);
        }();
        py::dict d = curves_dict(curves);
        d["basis_size"] = sys.size();
        d["block_count"] = sys.blocks().size();
        return d;
      },
      py::arg("config_json"));

  m.def(
      "_field_map",
      [](const std::string &json, bool electric) {
        const auto config = config_from(json);
        const auto kind = electric ? FieldKind::Electric : FieldKind::Magnetic;
        config.validate(electric ? "stark-map" : "zeeman-map");
        auto ctx = make_context(config);
        SingleBasisSpec bs;
        bs.species = config.species(0);
        bs.n_min = config.get_int("n_min");
        bs.n_max = config.get_int("n_max");
        bs.l_max = config.get_int("l_max");
        for (double mj : config.get_doubles("mj")) bs.mj_values.push_back(half(mj));
        const auto basis = build_single_basis(*ctx.db, bs);
        const int count = config.get_int("scan_points");
        const double lo = config.get_double("scan_min"), hi = config.get_double("scan_max");
        const double scale = electric ? 0.1 : 1e-4;
        std::vector<double> fields(count);
        for (int i = 0; i < count; ++i) fields[i] = scale * (count == 1 ? lo : lo + (hi - lo) * i / (count - 1));
        const auto d3 = config.get_doubles("scan_direction");
        const auto map = field_map(*ctx.me, basis, kind, fields, Eigen::Vector3d(d3.at(0), d3.at(1), d3.at(2)),
                                   config.fields());
        Eigen::MatrixXd energy = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(basis.size()), count,
                                                           std::numeric_limits<double>::quiet_NaN());
        Eigen::VectorXd scan(count);
        for (int k = 0; k < count; ++k) {
          scan(k) = fields[k] / scale;
          const auto &p = map.points[k];
          for (std::size_t i = 0; i < p.energies_ghz.size(); ++i) energy(static_cast<Eigen::Index>(i), k) = p.energies_ghz[i];
        }
        std::vector<std::string> labels;
        for (const auto &s : basis) labels.push_back(s.label());
        py::dict d;
        d["field"] = scan;
        d["energy_ghz"] = energy;
        d["basis"] = labels;
        return d;
      },
      py::arg("config_json"), py::arg("electric"));
}
