#include "doctest.h"

#include "rydpair/errors.hpp"
#include "rydpair/species.hpp"
#include "rydpair/units.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

using namespace rydpair;

namespace {

SpeciesModel bare_hydrogen() {
  SpeciesModel m;
  m.name = "Hinf";
  m.Z = 1;
  m.model_potential.push_back({});
  return m;
}

nlohmann::json read_data_file() {
  std::ifstream in(std::string(RYDPAIR_SOURCE_DIR) + "/data/species.json");
  REQUIRE(in.good());
  return nlohmann::json::parse(in);
}

} // namespace

TEST_CASE("state validation") {
  CHECK(make_state("Rb", 60, 0, 0.5, 0.5).is_valid());
  CHECK_FALSE(StateOne{"Rb", 3, 3, HalfInteger::from_twice(7), HalfInteger::from_twice(1)}.is_valid());
  CHECK_FALSE(StateOne{"Rb", 5, 1, HalfInteger::from_twice(5), HalfInteger::from_twice(1)}.is_valid());
  CHECK_FALSE(StateOne{"Rb", 5, 1, HalfInteger::from_twice(3), HalfInteger::from_twice(5)}.is_valid());
  CHECK_FALSE(StateOne{"Rb", 5, 0, HalfInteger::from_twice(1), HalfInteger::from_twice(0)}.is_valid());
  CHECK_THROWS_AS(make_state("Rb", 5, 5, 5.5, 0.5), InvalidStateError);
  CHECK(make_state("Rb", 59, 2, 1.5, 0.5).level_label() == "59d3/2");
}

TEST_CASE("quantum defect series") {
  QuantumDefectSeries s{3.13, 0.205, 0.0, 0.0, ""};
  CHECK(s.evaluate(60) == doctest::Approx(3.13 + 0.205 / (56.87 * 56.87)).epsilon(1e-14));
  CHECK(s.evaluate(60) == doctest::Approx(3.1300634).epsilon(1e-7));

  const auto &h = SpeciesDatabase::builtin().species("H");
  for (int l = 0; l < 5; ++l) CHECK(quantum_defect(h, 20, l, HalfInteger::from_twice(2 * l + 1)) == 0.0);

  // Independent re-evaluation of the Rb s1/2 series straight from the data file.
  const auto doc = read_data_file();
  double d0 = 0, d2 = 0, d4 = 0, d6 = 0;
  for (const auto &sp : doc["species"]) {
    if (sp["name"] != "Rb") continue;
    for (const auto &q : sp["quantum_defects"]) {
      if (q["l"] == 0) {
        d0 = q["delta0"];
        d2 = q["delta2"];
        d4 = q["delta4"];
        d6 = q["delta6"];
      }
    }
  }
  const double x = 43.0 - d0;
  const double oracle = d0 + d2 / std::pow(x, 2) + d4 / std::pow(x, 4) + d6 / std::pow(x, 6);
  const auto &rb = SpeciesDatabase::builtin().species("Rb");
  CHECK(quantum_defect(rb, 43, 0, HalfInteger::from_twice(1)) == doctest::Approx(oracle).epsilon(1e-15));

  // Converges monotonically toward delta0.
  double prev = 1e9;
  for (int n = 10; n < 200; n += 10) {
    const double d = quantum_defect(rb, n, 0, HalfInteger::from_twice(1));
    CHECK(std::abs(d - d0) <= std::abs(prev - d0));
    prev = d;
  }
}

TEST_CASE("level energies") {
  const auto h = bare_hydrogen();
  const auto e1 = level_energy(h, 1, 0, HalfInteger::from_twice(1));
  // The defect-series path is not used for bare hydrogen; the fine-structure term is ~1e-5 relative.
  CHECK(units::joule_to_ev(e1.joules) == doctest::Approx(-13.6057).epsilon(2e-5));

  SpeciesModel hq = h;
  hq.defects[{0, 1}] = QuantumDefectSeries{};
  const auto q1 = level_energy(hq, 1, 0, HalfInteger::from_twice(1));
  const auto q2 = level_energy(hq, 2, 0, HalfInteger::from_twice(1));
  CHECK(q1.source == EnergySource::DefectSeries);
  CHECK(units::joule_to_ev(q1.joules) == doctest::Approx(-13.605693).epsilon(1e-7));
  CHECK(q2.joules / q1.joules == doctest::Approx(0.25).epsilon(1e-15));

  // The defect series and the hydrogenic formula agree to within the fine-structure size.
  for (int n = 2; n < 40; n += 7) {
    const auto a = level_energy(hq, n, 0, HalfInteger::from_twice(1));
    const auto b = level_energy(h, n, 0, HalfInteger::from_twice(1));
    const double fs = std::abs(a.joules) * units::fine_structure * units::fine_structure / n;
    CHECK(std::abs(a.joules - b.joules) <= fs);
  }

  const auto &rb = SpeciesDatabase::builtin().species("Rb");
  for (int l : {0, 1, 2, 3, 6}) {
    double prev = -1.0;
    for (int n = l + 5; n < 150; ++n) {
      const double e = level_energy(rb, n, l, HalfInteger::from_twice(2 * l + 1)).joules;
      CHECK(e < 0.0);
      if (prev < 0.0) CHECK(e > prev);
      prev = e;
    }
  }
  CHECK(level_energy(rb, 60, 7, HalfInteger::from_twice(15)).source == EnergySource::Hydrogenic);
  CHECK_THROWS_AS(level_energy(rb, 5, 5, HalfInteger::from_twice(11)), InvalidStateError);
}

TEST_CASE("Foerster defect from the data file") {
  const auto &rb = SpeciesDatabase::builtin().species("Rb");
  const double dd = 2.0 * level_energy(rb, 59, 2, HalfInteger::from_twice(3)).joules;
  const double pf = level_energy(rb, 61, 1, HalfInteger::from_twice(1)).joules +
                    level_energy(rb, 57, 3, HalfInteger::from_twice(5)).joules;
  CHECK(std::abs(units::joule_to_mhz(pf - dd)) == doctest::Approx(8.69).epsilon(0.03));
}

TEST_CASE("database file handling") {
  const auto &db = SpeciesDatabase::builtin();
  for (const char *name : {"Li", "Na", "K", "Rb", "Cs"}) CHECK(db.has_species(name));
  CHECK_THROWS_AS(db.species("Xx"), ConfigError);

  const auto again = SpeciesDatabase::parse(db.dump());
  CHECK(again == db);
  CHECK(again.dump() == db.dump());
  CHECK(again.version_stamp() == db.version_stamp());

  auto doc = read_data_file();
  doc["species"][0]["bogus"] = 1;
  CHECK_THROWS_AS(SpeciesDatabase::parse(doc.dump()), DataFileError);
  doc = read_data_file();
  doc["species"][3]["quantum_defects"][0]["delta8"] = 0.1;
  CHECK_THROWS_AS(SpeciesDatabase::parse(doc.dump()), DataFileError);
  CHECK_THROWS_AS(SpeciesDatabase::parse("{ not json"), DataFileError);

  doc = read_data_file();
  doc["species"][3]["quantum_defects"][0]["delta2"] = 0.2;
  CHECK(SpeciesDatabase::parse(doc.dump()).version_stamp() != db.version_stamp());

  doc = read_data_file();
  doc["species"][0]["Z"] = 0;
  CHECK_THROWS_AS(SpeciesDatabase::parse(doc.dump()), DataFileError);
}

TEST_CASE("hydrogen Le Roy radius closed form") {
  CHECK(leroy_radius_hydrogen(1, 0) / units::bohr_radius == doctest::Approx(std::sqrt(48.0)).epsilon(1e-14));
}
