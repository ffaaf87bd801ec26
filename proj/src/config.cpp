#include "rydpair/config.hpp"

#include "rydpair/errors.hpp"
#include "rydpair/units.hpp"

#include <cmath>
#include <fstream>
#include <regex>
#include <sstream>

namespace rydpair {

using ojson = nlohmann::ordered_json;

const char *const kVersion = "1.0.0";

namespace {

int parse_twice(const std::string &text) {
  const auto slash = text.find('/');
  try {
    if (slash == std::string::npos) return 2 * std::stoi(text);
    if (text.substr(slash + 1) != "2") throw ConfigError("angular momenta must be written as k/2");
    return std::stoi(text.substr(0, slash));
  } catch (const std::logic_error &) {
    throw ConfigError("cannot read angular momentum '" + text + "'");
  }
}

int letter_to_l(char c) {
  for (int l = 0; l < 21; ++l)
    if (orbital_letter(l) == c) return l;
  throw ConfigError(std::string("unknown orbital letter '") + c + "'");
}

Eigen::Vector3d vector3(const ojson &v, const std::string &key) {
  if (!v.is_array() || v.size() != 3) throw ConfigError(key + " must be a list of three numbers");
  Eigen::Vector3d out;
  for (int i = 0; i < 3; ++i) {
    if (!v[i].is_number()) throw ConfigError(key + " must be a list of three numbers");
    out(i) = v[i].get<double>();
  }
  return out;
}

std::string read_file(const std::filesystem::path &file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw DataFileError("cannot read " + file.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

} // namespace

StateOne parse_state(const std::string &species, const std::string &text) {
  static const std::regex re(R"(^\s*(\d+)\s*([a-z])\s*(\d+/2)\s*(?:,?\s*(?:mj\s*=\s*)?([+-]?\d+/2))\s*$)");
  std::smatch m;
  if (!std::regex_match(text, m, re)) {
    throw ConfigError("cannot read state '" + text + "'; expected e.g. '59d3/2 mj=3/2'");
  }
  StateOne s{species, std::stoi(m[1]), letter_to_l(m[2].str()[0]), HalfInteger::from_twice(parse_twice(m[3])),
             HalfInteger::from_twice(parse_twice(m[4]))};
  s.validate();
  return s;
}

std::string format_state(const StateOne &s) { return s.level_label() + " mj=" + s.mj.str(); }

const ojson &RunConfig::defaults() {
  static const ojson d = ojson::parse(R"({
    "species": "Rb",
    "species2": null,
    "state1": "60s1/2 mj=1/2",
    "state2": null,
    "data_file": null,
    "cache_file": null,
    "radial_method": "numerov",
    "grid_step": 0.01,
    "output_dir": ".",

    "delta_n": 2,
    "delta_l": 2,
    "energy_window_GHz": 30.0,
    "order": 3,
    "M": [],
    "inversion": true,
    "reflection": true,
    "permutation": true,
    "dressed": true,
    "single_delta_n": 4,
    "single_delta_l": 4,

    "efield_mV_per_cm": [0.0, 0.0, 0.0],
    "bfield_G": [0.0, 0.0, 0.0],
    "diamagnetic": true,
    "theta_deg": 0.0,

    "r_min_um": 2.0,
    "r_max_um": 10.0,
    "r_points": 200,

    "admixture_detuning_GHz": null,
    "admixture_bin_GHz": 0.1,
    "evolution_r_um": null,
    "evolution_t_max_us": 1.0,
    "evolution_points": 201,
    "spectrum_theta_deg": [],
    "spectrum_min_weight": 1e-4,
    "spectrum_merge_MHz": 0.1,

    "convergence_tolerance_MHz": null,
    "convergence_steps": 3,
    "relax_delta_n": 1,
    "relax_delta_l": 1,
    "relax_window_GHz": 10.0,

    "scan_min": 0.0,
    "scan_max": 100.0,
    "scan_points": 101,
    "scan_direction": [0.0, 0.0, 1.0],
    "n_min": 40,
    "n_max": 44,
    "l_max": 43,
    "mj": [],
    "kappa": 1,
    "q": 0
  })");
  return d;
}

RunConfig::RunConfig() : doc_(defaults()) {}

RunConfig RunConfig::from_json(const ojson &doc) {
  if (!doc.is_object()) throw ConfigError("configuration must be a JSON object");
  RunConfig c;
  for (const auto &[key, value] : doc.items()) c.set_json(key, value);
  return c;
}

RunConfig RunConfig::from_file(const std::filesystem::path &file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot read configuration file " + file.string());
  ojson doc;
  try {
    doc = ojson::parse(in, nullptr, true, true);
  } catch (const ojson::parse_error &e) {
    throw ConfigError("configuration file " + file.string() + " is not valid JSON: " + e.what());
  }
  return from_json(doc);
}

void RunConfig::set_json(const std::string &key, const ojson &value) {
  if (!defaults().contains(key)) throw ConfigError("unknown configuration key '" + key + "'");
  doc_[key] = value;
}

void RunConfig::set(const std::string &key, const std::string &value) {
  ojson v;
  try {
    v = ojson::parse(value);
  } catch (const ojson::parse_error &) {
    v = value;
  }
  set_json(key, v);
}

const ojson &RunConfig::at(const std::string &key) const {
  const auto it = doc_.find(key);
  if (it == doc_.end()) throw ConfigError("missing configuration key '" + key + "'");
  return *it;
}

bool RunConfig::is_null(const std::string &key) const { return at(key).is_null(); }

double RunConfig::get_double(const std::string &key) const {
  const auto &v = at(key);
  if (!v.is_number()) throw ConfigError(key + " must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(key + " must be finite");
  return d;
}

int RunConfig::get_int(const std::string &key) const {
  const auto &v = at(key);
  if (!v.is_number_integer()) throw ConfigError(key + " must be an integer");
  return v.get<int>();
}

bool RunConfig::get_bool(const std::string &key) const {
  const auto &v = at(key);
  if (!v.is_boolean()) throw ConfigError(key + " must be true or false");
  return v.get<bool>();
}

std::string RunConfig::get_string(const std::string &key) const {
  const auto &v = at(key);
  if (!v.is_string()) throw ConfigError(key + " must be a string");
  return v.get<std::string>();
}

std::vector<double> RunConfig::get_doubles(const std::string &key) const {
  const auto &v = at(key);
  if (v.is_number()) return {v.get<double>()};
  if (!v.is_array()) throw ConfigError(key + " must be a list of numbers");
  std::vector<double> out;
  for (const auto &x : v) {
    if (!x.is_number()) throw ConfigError(key + " must be a list of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

std::string RunConfig::species(int which) const {
  if (which == 1 && !is_null("species2")) return get_string("species2");
  return get_string("species");
}

StateOne RunConfig::state(int which) const {
  if (which == 1 && !is_null("state2")) return parse_state(species(1), get_string("state2"));
  return parse_state(species(which), get_string("state1"));
}

StateTwo RunConfig::pair_target() const { return {state(0), state(1)}; }

PairBasisSpec RunConfig::pair_spec() const {
  PairBasisSpec s;
  s.target = pair_target();
  s.delta_n = get_int("delta_n");
  s.delta_l = get_int("delta_l");
  s.energy_window_ghz = get_double("energy_window_GHz");
  s.order = get_int("order");
  for (double m : get_doubles("M")) {
    const double twice = 2.0 * m;
    if (std::abs(twice - std::round(twice)) > 1e-9) throw ConfigError("M values must be integers or half-integers");
    s.m_values.push_back(HalfInteger::from_twice(static_cast<int>(std::lround(twice))));
  }
  s.symmetry = {get_bool("inversion"), get_bool("reflection"), get_bool("permutation")};
  s.dressed = get_bool("dressed");
  s.single_delta_n = get_int("single_delta_n");
  s.single_delta_l = get_int("single_delta_l");
  s.validate();
  return s;
}

FieldConfig RunConfig::fields() const {
  FieldConfig f;
  f.efield_v_per_m = vector3(at("efield_mV_per_cm"), "efield_mV_per_cm") * 0.1;
  f.bfield_tesla = vector3(at("bfield_G"), "bfield_G") * 1e-4;
  f.diamagnetic = get_bool("diamagnetic");
  f.validate();
  return f;
}

double RunConfig::theta_rad() const { return get_double("theta_deg") * units::pi / 180.0; }

std::vector<double> RunConfig::r_grid_m() const {
  const int n = get_int("r_points");
  if (n < 1) throw ConfigError("r_points must be positive");
  return log_grid(get_double("r_min_um") * 1e-6, get_double("r_max_um") * 1e-6, static_cast<std::size_t>(n));
}

RadialMethod RunConfig::radial_method() const {
  try {
    return radial_method_from_string(get_string("radial_method"));
  } catch (const ConfigError &) {
    throw;
  } catch (const std::exception &e) {
    throw ConfigError(e.what());
  }
}

GridSpec RunConfig::grid() const {
  GridSpec g;
  g.step = get_double("grid_step");
  if (!(g.step > 0.0) || g.step > 0.1) throw ConfigError("grid_step must lie in (0, 0.1]");
  return g;
}

std::filesystem::path RunConfig::output_dir() const { return get_string("output_dir"); }

std::optional<std::filesystem::path> RunConfig::cache_file() const {
  if (is_null("cache_file")) return std::nullopt;
  return std::filesystem::path(get_string("cache_file"));
}

std::optional<std::filesystem::path> RunConfig::data_file() const {
  if (is_null("data_file")) return std::nullopt;
  return std::filesystem::path(get_string("data_file"));
}

void RunConfig::validate(const std::string &command) const {
  radial_method();
  grid();
  output_dir();
  cache_file();
  data_file();
  if (command == "pair-potential") {
    pair_spec();
    fields();
    const double theta = get_double("theta_deg");
    if (theta < 0.0 || theta > 180.0) throw ConfigError("theta_deg must lie in [0, 180]");
    r_grid_m();
    if (!is_null("admixture_detuning_GHz")) {
      get_double("admixture_detuning_GHz");
      if (!(get_double("admixture_bin_GHz") > 0.0)) throw ConfigError("admixture_bin_GHz must be positive");
    }
    if (!is_null("evolution_r_um")) {
      if (!(get_double("evolution_r_um") > 0.0)) throw ConfigError("evolution_r_um must be positive");
      if (!(get_double("evolution_t_max_us") > 0.0)) throw ConfigError("evolution_t_max_us must be positive");
      if (get_int("evolution_points") < 2) throw ConfigError("evolution_points must be at least 2");
      for (double t : get_doubles("spectrum_theta_deg"))
        if (t < 0.0 || t > 180.0) throw ConfigError("spectrum_theta_deg entries must lie in [0, 180]");
      if (get_double("spectrum_min_weight") < 0.0) throw ConfigError("spectrum_min_weight must be non-negative");
      if (get_double("spectrum_merge_MHz") < 0.0) throw ConfigError("spectrum_merge_MHz must be non-negative");
    }
    if (!is_null("convergence_tolerance_MHz")) {
      if (!(get_double("convergence_tolerance_MHz") > 0.0)) throw ConfigError("convergence_tolerance_MHz must be positive");
      if (get_int("convergence_steps") < 2) throw ConfigError("convergence_steps must be at least 2");
      if (get_int("relax_delta_n") < 0 || get_int("relax_delta_l") < 0 || get_double("relax_window_GHz") < 0.0)
        throw ConfigError("relaxation steps must be non-negative");
    }
  } else if (command == "stark-map" || command == "zeeman-map") {
    fields();
    if (get_int("scan_points") < 1) throw ConfigError("scan_points must be positive");
    if (get_double("scan_max") < get_double("scan_min")) throw ConfigError("scan_max must not be below scan_min");
    if (vector3(at("scan_direction"), "scan_direction").norm() == 0.0) throw ConfigError("scan_direction is zero");
    if (get_int("n_min") < 1 || get_int("n_max") < get_int("n_min")) throw ConfigError("invalid n_min/n_max");
    if (get_int("l_max") < 0) throw ConfigError("l_max must be non-negative");
    for (double m : get_doubles("mj"))
      if (std::abs(2.0 * m - std::round(2.0 * m)) > 1e-9 || std::lround(2.0 * m) % 2 == 0)
        throw ConfigError("mj values must be half-integers");
  } else if (command == "matrix-element") {
    state(0);
    state(1);
    if (get_int("kappa") < 0) throw ConfigError("kappa must be non-negative");
    if (std::abs(get_int("q")) > get_int("kappa")) throw ConfigError("|q| must not exceed kappa");
  } else if (command == "state-info") {
    state(0);
  }
}

RunContext make_context(const RunConfig &config) {
  RunContext ctx;
  if (const auto file = config.data_file()) {
    const std::string bytes = read_file(*file);
    ctx.db = std::make_shared<SpeciesDatabase>(SpeciesDatabase::parse(bytes));
    ctx.data_source = file->string();
    ctx.data_sha256 = sha256_hex(bytes);
  } else {
    ctx.db = std::make_shared<SpeciesDatabase>(SpeciesDatabase::builtin());
    ctx.data_source = "builtin";
    ctx.data_sha256 = sha256_hex(ctx.db->dump());
  }
  for (int which : {0, 1}) {
    const auto name = config.species(which);
    if (!ctx.db->has_species(name)) throw ConfigError("unknown species '" + name + "'");
  }
  const auto method = config.radial_method();
  const auto grid = config.grid();
  std::shared_ptr<ElementCache> cache;
  if (const auto file = config.cache_file()) {
    cache = std::make_shared<ElementCache>(*file, element_version_stamp(*ctx.db, grid));
  }
  ctx.me = std::make_shared<MatrixElements>(*ctx.db, method, grid, cache);
  return ctx;
}

ojson reproducibility_record(const RunConfig &config, const RunContext &context, const std::string &command) {
  ojson rec;
  rec["program"] = "rydpair";
  rec["version"] = kVersion;
  rec["command"] = command;
  rec["config"] = config.json();
  rec["data"] = {{"source", context.data_source}, {"sha256", context.data_sha256}};
  rec["element_stamp"] = element_version_stamp(*context.db, context.me->grid());
  return rec;
}

} // namespace rydpair
