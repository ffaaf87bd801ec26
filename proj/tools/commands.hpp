#pragma once

#include "rydpair/config.hpp"

#include <iosfwd>
#include <string>

namespace rydpair::cli {

enum ExitCode { Ok = 0, Failure = 1, Config = 2, Numerical = 3, Data = 4 };

int pair_potential(const RunConfig &config, std::ostream &out);
int field_map_command(const RunConfig &config, FieldKind kind, std::ostream &out);
int matrix_element(const RunConfig &config, std::ostream &out);
int state_info(const RunConfig &config, std::ostream &out);
int cache_inspect(const RunConfig &config, std::ostream &out);
int cache_clear(const RunConfig &config, std::ostream &out);

/// Runs `body` and maps library exceptions onto exit codes.
template <typename F> int guarded(std::ostream &err, F &&body);

} // namespace rydpair::cli

#include "rydpair/errors.hpp"

#include <ostream>

template <typename F> int rydpair::cli::guarded(std::ostream &err, F &&body) {
  try {
    return body();
  } catch (const ConfigError &e) {
    err << "configuration error: " << e.what() << '\n';
    return Config;
  } catch (const DataFileError &e) {
    err << "data file error: " << e.what() << '\n';
    return Data;
  } catch (const NumericalError &e) {
    err << "numerical failure: " << e.what() << '\n';
    return Numerical;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return Failure;
  }
}
