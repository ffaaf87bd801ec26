#pragma once

#include "rydpair/radial.hpp"
#include "rydpair/species.hpp"

#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <tuple>
#include <vector>

struct sqlite3;

namespace rydpair {

/// Key of a radial multipole element. mj and q are not part of it: the
/// Wigner-Eckart factor is recomputed on every use.
struct MultipoleElementKey {
  std::string species;
  int n = 0, l = 0, twice_j = 1;
  int np = 0, lp = 0, twice_jp = 1;
  int kappa = 0;
  RadialMethod method = RadialMethod::Numerov;

  static MultipoleElementKey make(const StateOne &bra, const StateOne &ket, int kappa, RadialMethod method);
  auto tie() const { return std::tie(species, n, l, twice_j, np, lp, twice_jp, kappa, method); }
  bool operator<(const MultipoleElementKey &o) const { return tie() < o.tie(); }
  bool operator==(const MultipoleElementKey &o) const { return tie() == o.tie(); }
};

/// Radial-element cache: an in-memory table in front of an optional SQLite
/// file (WAL journal). Entries written under a different version stamp are
/// discarded when the file is opened.
class ElementCache {
public:
  ElementCache();
  ElementCache(const std::filesystem::path &file, std::string version_stamp);
  ~ElementCache();
  ElementCache(const ElementCache &) = delete;
  ElementCache &operator=(const ElementCache &) = delete;

  std::optional<double> find(const MultipoleElementKey &key);
  void store(const MultipoleElementKey &key, double value);
  double get_or_compute(const MultipoleElementKey &key, const std::function<double()> &compute);

  /// Writes pending entries to disk.
  void flush();
  void clear();

  std::size_t computations() const { return computations_.load(); }
  std::size_t hits() const { return hits_.load(); }
  std::size_t size() const;
  const std::string &version_stamp() const { return stamp_; }
  const std::filesystem::path &path() const { return path_; }
  bool persistent() const { return db_ != nullptr; }
  /// True when the file was unreadable and has been recreated.
  bool rebuilt() const { return rebuilt_; }
  /// True when the file held entries for another stamp that were dropped.
  bool invalidated() const { return invalidated_; }

  /// Reads stamp and entry count of a cache file without modifying it.
  struct FileInfo {
    bool exists = false;
    bool readable = false;
    std::string version_stamp;
    std::size_t entries = 0;
  };
  static FileInfo inspect(const std::filesystem::path &file);

private:
  void open_file();
  void load_all();

  std::filesystem::path path_;
  std::string stamp_;
  sqlite3 *db_ = nullptr;
  bool rebuilt_ = false;
  bool invalidated_ = false;

  mutable std::shared_mutex mutex_;
  std::map<MultipoleElementKey, double> table_;
  std::vector<std::pair<MultipoleElementKey, double>> pending_;
  std::mutex db_mutex_;
  std::atomic<std::size_t> computations_{0};
  std::atomic<std::size_t> hits_{0};
};

/// Version stamp for cached elements: species data hash plus grid settings.
std::string element_version_stamp(const SpeciesDatabase &db, GridSpec grid);

enum class MomentumOperator { Orbital, Spin };

/// Multipole selection rules: parity/triangle in l, triangle in j, mj = mj' + q.
bool multipole_allowed(const StateOne &bra, const StateOne &ket, int kappa, int q);
/// Momentum rules: same n and l, |j - j'| <= 1, mj = mj' + q.
bool momentum_allowed(const StateOne &bra, const StateOne &ket, int q);

/// Single-atom matrix elements in atomic units, backed by an ElementCache.
class MatrixElements {
public:
  explicit MatrixElements(const SpeciesDatabase &db, RadialMethod method = RadialMethod::Numerov,
                          GridSpec grid = {}, std::shared_ptr<ElementCache> cache = nullptr);

  /// <n l j| r^kappa |n' l' j'> in a0^kappa.
  double radial(const StateOne &bra, const StateOne &ket, int kappa);

  /// <bra| p_{kappa q} |ket> in e a0^kappa. With cull = false the selection
  /// rules are left to the algebra.
  double multipole(const StateOne &bra, const StateOne &ket, int kappa, int q, bool cull = true);

  /// <bra| l_q or s_q |ket> in units of hbar.
  double momentum(const StateOne &bra, MomentumOperator op, int q, const StateOne &ket);

  const SpeciesDatabase &database() const { return *db_; }
  RadialMethod method() const { return method_; }
  GridSpec grid() const { return grid_; }
  ElementCache &cache() { return *cache_; }
  std::shared_ptr<ElementCache> cache_ptr() const { return cache_; }

private:
  const SpeciesDatabase *db_;
  RadialMethod method_;
  GridSpec grid_;
  std::shared_ptr<ElementCache> cache_;
};

} // namespace rydpair
