#include "rydpair/species.hpp"

#include "rydpair/errors.hpp"
#include "rydpair/units.hpp"

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace rydpair {

namespace detail {
const char *builtin_species_json();
}

namespace {

using nlohmann::json;

void check_keys(const json &obj, const std::set<std::string> &allowed, const std::string &where) {
  if (!obj.is_object()) throw DataFileError(where + ": expected an object");
  for (const auto &[key, value] : obj.items()) {
    if (!allowed.contains(key)) throw DataFileError(where + ": unknown key '" + key + "'");
  }
}

template <class T> T required(const json &obj, const char *key, const std::string &where) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw DataFileError(where + ": missing key '" + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception &e) {
    throw DataFileError(where + ": bad value for '" + key + "': " + e.what());
  }
}

template <class T> T optional_value(const json &obj, const char *key, T fallback, const std::string &where) {
  const auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception &e) {
    throw DataFileError(where + ": bad value for '" + key + "': " + e.what());
  }
}

SpeciesModel parse_species(const json &obj) {
  const std::string where = "species '" + obj.value("name", std::string("?")) + "'";
  check_keys(obj,
             {"name", "mass_u", "Z", "alpha_d_au", "r_c_a0", "polarization_n_min", "model_potential",
              "quantum_defects"},
             where);
  SpeciesModel m;
  m.name = required<std::string>(obj, "name", where);
  if (obj.contains("mass_u") && !obj.at("mass_u").is_null()) m.mass_u = required<double>(obj, "mass_u", where);
  m.Z = required<int>(obj, "Z", where);
  m.alpha_d_au = required<double>(obj, "alpha_d_au", where);
  m.r_c_a0 = required<double>(obj, "r_c_a0", where);
  m.polarization_n_min = optional_value<int>(obj, "polarization_n_min", 0, where);

  for (const auto &mp : required<json>(obj, "model_potential", where)) {
    check_keys(mp, {"l", "a1", "a2", "a3", "a4", "r_c_a0"}, where + " model_potential");
    ModelPotentialCoefficients c;
    c.l = required<int>(mp, "l", where);
    c.a1 = required<double>(mp, "a1", where);
    c.a2 = required<double>(mp, "a2", where);
    c.a3 = required<double>(mp, "a3", where);
    c.a4 = required<double>(mp, "a4", where);
    if (mp.contains("r_c_a0")) c.r_c_a0 = required<double>(mp, "r_c_a0", where);
    m.model_potential.push_back(c);
  }
  std::sort(m.model_potential.begin(), m.model_potential.end(),
            [](const auto &a, const auto &b) { return a.l < b.l; });

  for (const auto &rec : required<json>(obj, "quantum_defects", where)) {
    check_keys(rec, {"l", "j", "delta0", "delta2", "delta4", "delta6", "source"}, where + " quantum_defects");
    const int l = required<int>(rec, "l", where);
    HalfInteger j;
    try {
      j = HalfInteger::from_double(required<double>(rec, "j", where));
    } catch (const std::invalid_argument &e) {
      throw DataFileError(where + ": " + e.what());
    }
    QuantumDefectSeries s;
    s.delta0 = required<double>(rec, "delta0", where);
    s.delta2 = optional_value<double>(rec, "delta2", 0.0, where);
    s.delta4 = optional_value<double>(rec, "delta4", 0.0, where);
    s.delta6 = optional_value<double>(rec, "delta6", 0.0, where);
    s.source = optional_value<std::string>(rec, "source", "", where);
    if (!m.defects.emplace(std::pair{l, j.twice()}, s).second) {
      throw DataFileError(where + ": duplicate defect record for l=" + std::to_string(l) + " j=" + j.str());
    }
  }
  m.validate();
  return m;
}

json to_json(const SpeciesModel &m) {
  json obj;
  obj["name"] = m.name;
  obj["mass_u"] = m.mass_u ? json(*m.mass_u) : json(nullptr);
  obj["Z"] = m.Z;
  obj["alpha_d_au"] = m.alpha_d_au;
  obj["r_c_a0"] = m.r_c_a0;
  obj["polarization_n_min"] = m.polarization_n_min;
  json mps = json::array();
  for (const auto &c : m.model_potential) {
    json e{{"l", c.l}, {"a1", c.a1}, {"a2", c.a2}, {"a3", c.a3}, {"a4", c.a4}};
    if (c.r_c_a0) e["r_c_a0"] = *c.r_c_a0;
    mps.push_back(e);
  }
  obj["model_potential"] = mps;
  json qds = json::array();
  for (const auto &[key, s] : m.defects) {
    qds.push_back({{"l", key.first},
                   {"j", 0.5 * key.second},
                   {"delta0", s.delta0},
                   {"delta2", s.delta2},
                   {"delta4", s.delta4},
                   {"delta6", s.delta6},
                   {"source", s.source}});
  }
  obj["quantum_defects"] = qds;
  return obj;
}

} // namespace

char orbital_letter(int l) {
  static constexpr char letters[] = "spdfghiklmnoqrtuvwxyz";
  if (l >= 0 && l < static_cast<int>(sizeof(letters) - 1)) return letters[l];
  return '?';
}

bool StateOne::is_valid() const noexcept {
  if (n < 1 || l < 0 || l >= n) return false;
  if (j.is_integer() || mj.is_integer()) return false;
  const int twice_l = 2 * l;
  if (j.twice() != twice_l + 1 && j.twice() != twice_l - 1) return false;
  if (j.twice() < 1) return false;
  if (std::abs(mj.twice()) > j.twice()) return false;
  return true;
}

void StateOne::validate() const {
  if (!is_valid()) throw InvalidStateError("invalid state: " + label());
}

std::string StateOne::level_label() const {
  std::ostringstream os;
  os << n << orbital_letter(l) << j.str();
  return os.str();
}

std::string StateOne::label() const {
  std::ostringstream os;
  os << species << ' ' << level_label() << " mj=" << mj.str();
  return os.str();
}

StateOne make_state(std::string species, int n, int l, double j, double mj) {
  StateOne s{std::move(species), n, l, HalfInteger::from_double(j), HalfInteger::from_double(mj)};
  s.validate();
  return s;
}

double QuantumDefectSeries::evaluate(int n) const {
  const double x = static_cast<double>(n) - delta0;
  if (x <= 0.0) throw DomainError("quantum defect series evaluated at n <= delta0");
  const double inv2 = 1.0 / (x * x);
  return delta0 + inv2 * (delta2 + inv2 * (delta4 + inv2 * delta6));
}

void SpeciesModel::validate() const {
  const std::string where = "species '" + name + "'";
  if (name.empty()) throw DataFileError("species without a name");
  if (Z < 1) throw DataFileError(where + ": Z must be >= 1");
  if (alpha_d_au < 0.0) throw DataFileError(where + ": alpha_d must be >= 0");
  if (!(r_c_a0 > 0.0)) throw DataFileError(where + ": r_c must be > 0");
  if (mass_u && !(*mass_u > 0.0)) throw DataFileError(where + ": mass must be > 0");
  if (model_potential.empty()) throw DataFileError(where + ": model potential needs at least one l entry");
  for (const auto &c : model_potential) {
    if (c.r_c_a0 && !(*c.r_c_a0 > 0.0)) throw DataFileError(where + ": per-l r_c must be > 0");
  }
  for (const auto &[key, s] : defects) {
    const auto [l, twice_j] = key;
    if (l < 0 || (twice_j != 2 * l + 1 && twice_j != 2 * l - 1) || twice_j < 1) {
      throw DataFileError(where + ": defect record with inconsistent l/j");
    }
  }
}

double SpeciesModel::rydberg_constant() const {
  if (!mass_u) return units::rydberg_infinity;
  const double m_atom = *mass_u * units::atomic_mass_unit;
  return units::rydberg_infinity / (1.0 + units::electron_mass / m_atom);
}

const QuantumDefectSeries *SpeciesModel::defect_series(int l, HalfInteger j) const {
  const auto it = defects.find({l, j.twice()});
  return it == defects.end() ? nullptr : &it->second;
}

int SpeciesModel::max_defect_l() const {
  int lmax = -1;
  for (const auto &[key, s] : defects) lmax = std::max(lmax, key.first);
  return lmax;
}

const ModelPotentialCoefficients &SpeciesModel::potential_for(int l) const {
  const ModelPotentialCoefficients *best = &model_potential.front();
  for (const auto &c : model_potential) {
    if (c.l <= l) best = &c;
  }
  return *best;
}

double SpeciesModel::core_radius(int l) const {
  const auto &c = potential_for(l);
  return c.r_c_a0 ? *c.r_c_a0 : r_c_a0;
}

std::uint64_t SpeciesModel::content_hash() const {
  std::uint64_t h = 1469598103934665603ull;
  auto mix_bytes = [&h](const void *p, std::size_t n) {
    const auto *b = static_cast<const unsigned char *>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ull;
    }
  };
  auto mix = [&](double v) { mix_bytes(&v, sizeof v); };
  mix_bytes(name.data(), name.size());
  mix(mass_u.value_or(-1.0));
  mix(Z);
  mix(alpha_d_au);
  mix(r_c_a0);
  mix(polarization_n_min);
  for (const auto &c : model_potential) {
    for (double v : {double(c.l), c.a1, c.a2, c.a3, c.a4, c.r_c_a0.value_or(-1.0)}) mix(v);
  }
  for (const auto &[key, s] : defects) {
    for (double v : {double(key.first), double(key.second), s.delta0, s.delta2, s.delta4, s.delta6}) mix(v);
  }
  return h;
}

double LevelEnergy::ghz() const { return units::joule_to_ghz(joules); }
double LevelEnergy::hartree() const { return units::joule_to_hartree(joules); }

double quantum_defect(const SpeciesModel &model, int n, int l, HalfInteger j) {
  const auto *series = model.defect_series(l, j);
  if (series == nullptr) return 0.0;
  return series->evaluate(n);
}

LevelEnergy level_energy(const SpeciesModel &model, int n, int l, HalfInteger j) {
  StateOne probe{model.name, n, l, j, HalfInteger::from_twice(j.twice())};
  probe.validate();

  const double hcR = units::planck * units::speed_of_light * model.rydberg_constant();
  LevelEnergy e;
  if (const auto *series = model.defect_series(l, j)) {
    const double n_star = n - series->evaluate(n);
    e.joules = -hcR / (n_star * n_star);
    e.source = EnergySource::DefectSeries;
    e.n_star = n_star;
    return e;
  }

  // Hydrogenic fine structure plus the core-polarization shift.
  const double a2 = units::fine_structure * units::fine_structure;
  const double nd = n;
  const double fs = 1.0 + a2 / (nd * nd) * (nd / (j.value() + 0.5) - 0.75);
  double value = -hcR / (nd * nd) * fs;
  if (l > 0 && model.alpha_d_au > 0.0 && n >= model.polarization_n_min) {
    value -= units::hartree * 3.0 * model.alpha_d_au / (4.0 * std::pow(nd, 3) * std::pow(double(l), 5));
  }
  e.joules = value;
  e.source = EnergySource::Hydrogenic;
  e.n_star = std::sqrt(-hcR / value);
  return e;
}

double leroy_radius_hydrogen(int n, int l) {
  const double n2 = double(n) * n;
  return units::bohr_radius * std::sqrt(8.0 * n2 * (5.0 * n2 + 1.0 - 3.0 * l * (l + 1.0)));
}

std::string sha256_hex(const std::string &bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return os.str();
}

SpeciesDatabase SpeciesDatabase::parse(const std::string &text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error &e) {
    throw DataFileError(std::string("species file is not valid JSON: ") + e.what());
  }
  check_keys(doc, {"format_version", "g_s", "g_l", "species"}, "species file");
  const int version = required<int>(doc, "format_version", "species file");
  if (version != 1) throw DataFileError("unsupported species file version " + std::to_string(version));

  SpeciesDatabase db;
  db.g_s_ = optional_value<double>(doc, "g_s", db.g_s_, "species file");
  db.g_l_ = optional_value<double>(doc, "g_l", db.g_l_, "species file");
  for (const auto &obj : required<json>(doc, "species", "species file")) {
    auto m = parse_species(obj);
    const std::string name = m.name;
    if (!db.species_.emplace(name, std::move(m)).second) throw DataFileError("duplicate species '" + name + "'");
  }
  return db;
}

SpeciesDatabase SpeciesDatabase::load(const std::filesystem::path &file) {
  std::ifstream in(file);
  if (!in) throw DataFileError("cannot open species file " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

const SpeciesDatabase &SpeciesDatabase::builtin() {
  static const SpeciesDatabase db = parse(detail::builtin_species_json());
  return db;
}

std::string SpeciesDatabase::dump() const {
  json doc;
  doc["format_version"] = 1;
  doc["g_s"] = g_s_;
  doc["g_l"] = g_l_;
  json arr = json::array();
  for (const auto &[name, m] : species_) arr.push_back(to_json(m));
  doc["species"] = arr;
  return doc.dump(1) + "\n";
}

void SpeciesDatabase::save(const std::filesystem::path &file) const {
  std::ofstream out(file);
  if (!out) throw DataFileError("cannot write species file " + file.string());
  out << dump();
}

const SpeciesModel &SpeciesDatabase::species(const std::string &name) const {
  const auto it = species_.find(name);
  if (it == species_.end()) throw ConfigError("unknown species '" + name + "'");
  return it->second;
}

bool SpeciesDatabase::has_species(const std::string &name) const { return species_.contains(name); }

std::vector<std::string> SpeciesDatabase::species_names() const {
  std::vector<std::string> names;
  for (const auto &[name, m] : species_) names.push_back(name);
  return names;
}

void SpeciesDatabase::add_species(SpeciesModel model) {
  model.validate();
  species_.insert_or_assign(model.name, std::move(model));
}

std::string SpeciesDatabase::version_stamp() const { return sha256_hex(dump()).substr(0, 16); }

} // namespace rydpair
