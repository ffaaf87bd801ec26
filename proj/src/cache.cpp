#include "rydpair/errors.hpp"
#include "rydpair/operators.hpp"

#include <sqlite3.h>

#include <iostream>
#include <sstream>

namespace rydpair {

namespace {

constexpr const char *kSchema = R"sql(
CREATE TABLE IF NOT EXISTS meta (key TEXT PRIMARY KEY, value TEXT NOT NULL);
CREATE TABLE IF NOT EXISTS elements (
  species TEXT NOT NULL, n INTEGER NOT NULL, l INTEGER NOT NULL, j2 INTEGER NOT NULL,
  np INTEGER NOT NULL, lp INTEGER NOT NULL, jp2 INTEGER NOT NULL,
  kappa INTEGER NOT NULL, method INTEGER NOT NULL, value REAL NOT NULL,
  PRIMARY KEY (species, n, l, j2, np, lp, jp2, kappa, method)) WITHOUT ROWID;
)sql";

constexpr std::size_t kFlushBatch = 2000;

bool exec(sqlite3 *db, const char *sql) { return sqlite3_exec(db, sql, nullptr, nullptr, nullptr) == SQLITE_OK; }

std::string read_stamp(sqlite3 *db) {
  sqlite3_stmt *st = nullptr;
  std::string stamp;
  if (sqlite3_prepare_v2(db, "SELECT value FROM meta WHERE key = 'version'", -1, &st, nullptr) == SQLITE_OK) {
    if (sqlite3_step(st) == SQLITE_ROW) stamp = reinterpret_cast<const char *>(sqlite3_column_text(st, 0));
  }
  sqlite3_finalize(st);
  return stamp;
}

bool healthy(sqlite3 *db) {
  sqlite3_stmt *st = nullptr;
  bool ok = false;
  if (sqlite3_prepare_v2(db, "PRAGMA quick_check", -1, &st, nullptr) == SQLITE_OK && sqlite3_step(st) == SQLITE_ROW) {
    const auto *txt = reinterpret_cast<const char *>(sqlite3_column_text(st, 0));
    ok = txt && std::string(txt) == "ok";
  }
  sqlite3_finalize(st);
  return ok;
}

} // namespace

MultipoleElementKey MultipoleElementKey::make(const StateOne &bra, const StateOne &ket, int kappa,
                                              RadialMethod method) {
  MultipoleElementKey k;
  k.species = bra.species;
  k.kappa = kappa;
  k.method = method;
  auto a = std::tuple(bra.n, bra.l, bra.j.twice());
  auto b = std::tuple(ket.n, ket.l, ket.j.twice());
  if (b < a) std::swap(a, b);
  std::tie(k.n, k.l, k.twice_j) = a;
  std::tie(k.np, k.lp, k.twice_jp) = b;
  return k;
}

ElementCache::ElementCache() = default;

ElementCache::ElementCache(const std::filesystem::path &file, std::string version_stamp)
    : path_(file), stamp_(std::move(version_stamp)) {
  open_file();
}

ElementCache::~ElementCache() {
  try {
    flush();
  } catch (...) {
  }
  if (db_) sqlite3_close(db_);
}

void ElementCache::open_file() {
  auto try_open = [this]() -> bool {
    if (sqlite3_open_v2(path_.string().c_str(), &db_, SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX,
                        nullptr) != SQLITE_OK) {
      return false;
    }
    sqlite3_busy_timeout(db_, 10000);
    if (!exec(db_, "PRAGMA journal_mode=WAL") || !exec(db_, "PRAGMA synchronous=NORMAL")) return false;
    if (!healthy(db_)) return false;
    return exec(db_, kSchema);
  };
  if (!path_.parent_path().empty()) std::filesystem::create_directories(path_.parent_path());
  if (!try_open()) {
    std::cerr << "warning: element cache " << path_ << " is unreadable; rebuilding it from scratch\n";
    if (db_) sqlite3_close(db_);
    db_ = nullptr;
    std::error_code ec;
    for (const char *suffix : {"", "-wal", "-shm"}) std::filesystem::remove(path_.string() + suffix, ec);
    rebuilt_ = true;
    if (!try_open()) throw DataFileError("cannot create element cache at " + path_.string());
  }
  const std::string stored = read_stamp(db_);
  if (stored != stamp_) {
    if (!stored.empty()) invalidated_ = true;
    exec(db_, "DELETE FROM elements");
    sqlite3_stmt *st = nullptr;
    sqlite3_prepare_v2(db_, "INSERT OR REPLACE INTO meta (key, value) VALUES ('version', ?)", -1, &st, nullptr);
    sqlite3_bind_text(st, 1, stamp_.c_str(), -1, SQLITE_TRANSIENT);
    sqlite3_step(st);
    sqlite3_finalize(st);
  }
  load_all();
}

void ElementCache::load_all() {
  sqlite3_stmt *st = nullptr;
  if (sqlite3_prepare_v2(db_, "SELECT species, n, l, j2, np, lp, jp2, kappa, method, value FROM elements", -1, &st,
                         nullptr) != SQLITE_OK) {
    return;
  }
  std::unique_lock lock(mutex_);
  while (sqlite3_step(st) == SQLITE_ROW) {
    MultipoleElementKey k;
    k.species = reinterpret_cast<const char *>(sqlite3_column_text(st, 0));
    k.n = sqlite3_column_int(st, 1);
    k.l = sqlite3_column_int(st, 2);
    k.twice_j = sqlite3_column_int(st, 3);
    k.np = sqlite3_column_int(st, 4);
    k.lp = sqlite3_column_int(st, 5);
    k.twice_jp = sqlite3_column_int(st, 6);
    k.kappa = sqlite3_column_int(st, 7);
    k.method = static_cast<RadialMethod>(sqlite3_column_int(st, 8));
    table_[k] = sqlite3_column_double(st, 9);
  }
  sqlite3_finalize(st);
}

std::optional<double> ElementCache::find(const MultipoleElementKey &key) {
  std::shared_lock lock(mutex_);
  const auto it = table_.find(key);
  if (it == table_.end()) return std::nullopt;
  ++hits_;
  return it->second;
}

void ElementCache::store(const MultipoleElementKey &key, double value) {
  bool need_flush = false;
  {
    std::unique_lock lock(mutex_);
    // Last writer wins; identical inputs give identical values anyway.
    table_[key] = value;
    if (db_) {
      pending_.emplace_back(key, value);
      need_flush = pending_.size() >= kFlushBatch;
    }
  }
  if (need_flush) flush();
}

double ElementCache::get_or_compute(const MultipoleElementKey &key, const std::function<double()> &compute) {
  if (auto v = find(key)) return *v;
  const double value = compute();
  ++computations_;
  store(key, value);
  return value;
}

void ElementCache::flush() {
  if (!db_) return;
  std::vector<std::pair<MultipoleElementKey, double>> batch;
  {
    std::unique_lock lock(mutex_);
    batch.swap(pending_);
  }
  if (batch.empty()) return;
  std::lock_guard guard(db_mutex_);
  exec(db_, "BEGIN IMMEDIATE");
  sqlite3_stmt *st = nullptr;
  sqlite3_prepare_v2(db_,
                     "INSERT OR REPLACE INTO elements (species, n, l, j2, np, lp, jp2, kappa, method, value) "
                     "VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?)",
                     -1, &st, nullptr);
  for (const auto &[k, v] : batch) {
    sqlite3_bind_text(st, 1, k.species.c_str(), -1, SQLITE_TRANSIENT);
    sqlite3_bind_int(st, 2, k.n);
    sqlite3_bind_int(st, 3, k.l);
    sqlite3_bind_int(st, 4, k.twice_j);
    sqlite3_bind_int(st, 5, k.np);
    sqlite3_bind_int(st, 6, k.lp);
    sqlite3_bind_int(st, 7, k.twice_jp);
    sqlite3_bind_int(st, 8, k.kappa);
    sqlite3_bind_int(st, 9, static_cast<int>(k.method));
    sqlite3_bind_double(st, 10, v);
    sqlite3_step(st);
    sqlite3_reset(st);
  }
  sqlite3_finalize(st);
  if (!exec(db_, "COMMIT")) {
    exec(db_, "ROLLBACK");
    throw DataFileError("cannot write element cache " + path_.string());
  }
}

void ElementCache::clear() {
  {
    std::unique_lock lock(mutex_);
    table_.clear();
    pending_.clear();
  }
  if (db_) {
    std::lock_guard guard(db_mutex_);
    exec(db_, "DELETE FROM elements");
  }
}

std::size_t ElementCache::size() const {
  std::shared_lock lock(mutex_);
  return table_.size();
}

ElementCache::FileInfo ElementCache::inspect(const std::filesystem::path &file) {
  FileInfo info;
  info.exists = std::filesystem::exists(file);
  if (!info.exists) return info;
  sqlite3 *db = nullptr;
  if (sqlite3_open_v2(file.string().c_str(), &db, SQLITE_OPEN_READONLY, nullptr) == SQLITE_OK && healthy(db)) {
    info.version_stamp = read_stamp(db);
    sqlite3_stmt *st = nullptr;
    if (sqlite3_prepare_v2(db, "SELECT COUNT(*) FROM elements", -1, &st, nullptr) == SQLITE_OK &&
        sqlite3_step(st) == SQLITE_ROW) {
      info.entries = static_cast<std::size_t>(sqlite3_column_int64(st, 0));
      info.readable = true;
    }
    sqlite3_finalize(st);
  }
  if (db) sqlite3_close(db);
  return info;
}

std::string element_version_stamp(const SpeciesDatabase &db, GridSpec grid) {
  std::ostringstream os;
  os.precision(17);
  os << db.version_stamp() << ";h=" << grid.step << ";g_s=" << db.g_s();
  return os.str();
}

} // namespace rydpair
