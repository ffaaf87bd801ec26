#include "commands.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <map>

using namespace rydpair;

int main(int argc, char **argv) {
  CLI::App app{"Rydberg pair potentials, Stark and Zeeman maps, matrix elements"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  std::string config_file;
  app.add_option("--config", config_file, "JSON configuration file")->check(CLI::ExistingFile);

  // Every configuration key can be overridden as --key VALUE; the value is
  // read as JSON when it parses, otherwise as a string.
  std::map<std::string, std::string> overrides;
  for (const auto &[key, value] : RunConfig::defaults().items()) {
    app.add_option("--" + key, overrides[key], "default: " + value.dump())->group("Configuration");
  }
  app.fallthrough();

  auto *pair = app.add_subcommand("pair-potential", "potential curves, admixture cut, spectrum and evolution");
  auto *stark = app.add_subcommand("stark-map", "single-atom energies versus electric field (mV/cm)");
  auto *zeeman = app.add_subcommand("zeeman-map", "single-atom energies versus magnetic field (G)");
  auto *element = app.add_subcommand("matrix-element", "multipole element between state1 and state2");
  auto *info = app.add_subcommand("state-info", "energy, quantum defect and Le Roy radius of state1");
  auto *cache = app.add_subcommand("cache", "inspect or clear the matrix element cache");
  auto *inspect = cache->add_subcommand("inspect", "show stamp and entry count");
  auto *clear = cache->add_subcommand("clear", "delete all cached entries");
  cache->require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::Config;
  }

  return cli::guarded(std::cerr, [&] {
    RunConfig config = config_file.empty() ? RunConfig() : RunConfig::from_file(config_file);
    for (const auto &[key, value] : overrides) {
      if (app.count("--" + key) > 0) config.set(key, value);
    }
    std::ostream &out = std::cout;
    if (pair->parsed()) return cli::pair_potential(config, out);
    if (stark->parsed()) return cli::field_map_command(config, FieldKind::Electric, out);
    if (zeeman->parsed()) return cli::field_map_command(config, FieldKind::Magnetic, out);
    if (element->parsed()) return cli::matrix_element(config, out);
    if (info->parsed()) return cli::state_info(config, out);
    if (inspect->parsed()) return cli::cache_inspect(config, out);
    if (clear->parsed()) return cli::cache_clear(config, out);
    return static_cast<int>(cli::Failure);
  });
}
