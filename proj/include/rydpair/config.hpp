#pragma once

#include "rydpair/fields.hpp"
#include "rydpair/pair.hpp"
#include "rydpair/solver.hpp"

#include "json.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace rydpair {

/// Parses "59d3/2 mj=3/2" (or "59d3/2 3/2") for the given species.
StateOne parse_state(const std::string &species, const std::string &text);
/// Inverse of parse_state.
std::string format_state(const StateOne &s);

/// Run configuration: one JSON object with unit-suffixed keys. Unknown keys
/// are rejected; missing keys take their defaults.
class RunConfig {
public:
  RunConfig();

  static const nlohmann::ordered_json &defaults();
  static RunConfig from_file(const std::filesystem::path &file);
  static RunConfig from_json(const nlohmann::ordered_json &doc);

  /// Command-line override; the value is read as JSON when it parses,
  /// otherwise as a plain string.
  void set(const std::string &key, const std::string &value);
  void set_json(const std::string &key, const nlohmann::ordered_json &value);

  /// Checks every value that is used by `command`; throws ConfigError.
  void validate(const std::string &command) const;

  const nlohmann::ordered_json &json() const { return doc_; }

  std::string species(int which) const;
  StateOne state(int which) const;
  StateTwo pair_target() const;
  PairBasisSpec pair_spec() const;
  FieldConfig fields() const;
  double theta_rad() const;
  std::vector<double> r_grid_m() const;
  RadialMethod radial_method() const;
  GridSpec grid() const;
  std::filesystem::path output_dir() const;
  std::optional<std::filesystem::path> cache_file() const;
  std::optional<std::filesystem::path> data_file() const;

  double get_double(const std::string &key) const;
  int get_int(const std::string &key) const;
  bool get_bool(const std::string &key) const;
  std::string get_string(const std::string &key) const;
  bool is_null(const std::string &key) const;
  std::vector<double> get_doubles(const std::string &key) const;

private:
  const nlohmann::ordered_json &at(const std::string &key) const;
  nlohmann::ordered_json doc_;
};

/// Species data and matrix elements for a run, plus what is needed to
/// reproduce it.
struct RunContext {
  std::shared_ptr<SpeciesDatabase> db;
  std::shared_ptr<MatrixElements> me;
  std::string data_source; // "builtin" or the file path
  std::string data_sha256;
};

RunContext make_context(const RunConfig &config);

/// Resolved config, data hash, cache stamp and program version.
nlohmann::ordered_json reproducibility_record(const RunConfig &config, const RunContext &context,
                                              const std::string &command);

extern const char *const kVersion;

} // namespace rydpair
