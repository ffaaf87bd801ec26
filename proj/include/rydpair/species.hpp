#pragma once

#include "rydpair/half_integer.hpp"

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace rydpair {

/// Single-atom Rydberg state |n l j mj> of one valence electron (s = 1/2).
struct StateOne {
  std::string species;
  int n = 0;
  int l = 0;
  HalfInteger j = HalfInteger::from_twice(1);
  HalfInteger mj = HalfInteger::from_twice(1);

  auto operator<=>(const StateOne &) const = default;

  /// Throws InvalidStateError when the quantum numbers are inconsistent.
  void validate() const;
  bool is_valid() const noexcept;
  std::string label() const; // e.g. "Rb 59d3/2 mj=3/2"
  std::string level_label() const; // e.g. "59d3/2"
};

StateOne make_state(std::string species, int n, int l, double j, double mj);
char orbital_letter(int l);

/// delta = d0 + d2/(n-d0)^2 + d4/(n-d0)^4 + d6/(n-d0)^6
struct QuantumDefectSeries {
  double delta0 = 0.0;
  double delta2 = 0.0;
  double delta4 = 0.0;
  double delta6 = 0.0;
  std::string source;

  double evaluate(int n) const;
  bool operator==(const QuantumDefectSeries &) const = default;
};

/// Parametric model potential coefficients for one orbital angular momentum.
struct ModelPotentialCoefficients {
  int l = 0;
  double a1 = 0.0;
  double a2 = 0.0;
  double a3 = 0.0;
  double a4 = 0.0;
  std::optional<double> r_c_a0; // per-l core radius; species value otherwise
  bool operator==(const ModelPotentialCoefficients &) const = default;
};

struct SpeciesModel {
  std::string name;
  std::optional<double> mass_u; // absent means infinite nuclear mass
  int Z = 1;
  double alpha_d_au = 0.0;
  double r_c_a0 = 1.0;
  int polarization_n_min = 0;
  std::vector<ModelPotentialCoefficients> model_potential; // sorted by l
  std::map<std::pair<int, int>, QuantumDefectSeries> defects; // (l, 2j)

  /// Checks the documented invariants; throws DataFileError.
  void validate() const;

  /// Modified Rydberg constant R* in 1/m.
  double rydberg_constant() const;
  const QuantumDefectSeries *defect_series(int l, HalfInteger j) const;
  int max_defect_l() const;
  /// Coefficients for l, falling back to the highest tabulated l.
  const ModelPotentialCoefficients &potential_for(int l) const;
  double core_radius(int l) const;
  /// Cheap hash over every numeric field; used for in-memory memo keys.
  std::uint64_t content_hash() const;

  bool operator==(const SpeciesModel &) const = default;
};

enum class EnergySource { DefectSeries, Hydrogenic };

struct LevelEnergy {
  double joules = 0.0;
  EnergySource source = EnergySource::DefectSeries;
  double n_star = 0.0; // effective principal quantum number

  double ghz() const;
  double hartree() const;
};

/// Immutable collection of species models plus global constants. Loaded from
/// the JSON species file; `version_stamp` hashes the file contents.
class SpeciesDatabase {
public:
  SpeciesDatabase() = default;

  static SpeciesDatabase load(const std::filesystem::path &file);
  static SpeciesDatabase parse(const std::string &text);
  /// Database of the built-in defaults (data/species.json compiled in).
  static const SpeciesDatabase &builtin();

  std::string dump() const;
  void save(const std::filesystem::path &file) const;

  const SpeciesModel &species(const std::string &name) const;
  bool has_species(const std::string &name) const;
  std::vector<std::string> species_names() const;
  void add_species(SpeciesModel model);

  double g_s() const { return g_s_; }
  double g_l() const { return g_l_; }
  void set_g_factors(double g_s, double g_l) {
    g_s_ = g_s;
    g_l_ = g_l;
  }

  /// Hash of the canonical dump; changes whenever any value changes.
  std::string version_stamp() const;

  bool operator==(const SpeciesDatabase &) const = default;

private:
  double g_s_ = 2.0023193;
  double g_l_ = 1.0;
  std::map<std::string, SpeciesModel> species_;
};

double quantum_defect(const SpeciesModel &model, int n, int l, HalfInteger j);
LevelEnergy level_energy(const SpeciesModel &model, int n, int l, HalfInteger j);
inline LevelEnergy level_energy(const SpeciesModel &model, const StateOne &s) {
  return level_energy(model, s.n, s.l, s.j);
}

/// Closed-form Le Roy radius of a hydrogen pair in identical (n, l) states.
double leroy_radius_hydrogen(int n, int l);

/// SHA-256 digest rendered as lowercase hex.
std::string sha256_hex(const std::string &bytes);

} // namespace rydpair
