#include "commands.hpp"

#include "rydpair/errors.hpp"
#include "rydpair/radial.hpp"
#include "rydpair/units.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

namespace rydpair::cli {

using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

std::ofstream open_output(const fs::path &dir, const std::string &name) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  std::ofstream out(dir / name);
  if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
  out << std::setprecision(12);
  return out;
}

void write_json(const fs::path &dir, const std::string &name, const ojson &doc) {
  auto out = open_output(dir, name);
  out << doc.dump(2) << '\n';
}

ojson curve_failures(const PotentialCurves &curves) {
  ojson list = ojson::array();
  for (const auto &p : curves.points)
    if (!p.ok) list.push_back({{"R_m", p.r_m}, {"error", p.error}});
  return list;
}

std::vector<double> linspace(double a, double b, int count) {
  std::vector<double> out(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out[i] = count == 1 ? a : a + (b - a) * i / (count - 1);
  return out;
}

void write_admixture_csv(std::ostream &os, const std::vector<AdmixturePoint> &cut, double leroy_m) {
  os << "R_m,R_over_RLR,epsilon,states\n";
  for (const auto &p : cut) os << p.r_m << ',' << p.r_m / leroy_m << ',' << p.epsilon << ',' << p.states << '\n';
}

// Single-point solve at distance r for angle theta; throws on failure.
CurvePoint solve_at(MatrixElements &me, const PairBasisSpec &spec, const FieldConfig &fields, double theta,
                    double r_m) {
  PairSystem sys(me, spec, fields, theta);
  auto curves = solve_curves(sys, spec.target, {r_m});
  const auto &p = curves.points.front();
  if (!p.ok) throw NumericalError("diagonalization failed at R = " + std::to_string(r_m) + " m: " + p.error);
  return p;
}

} // namespace

int pair_potential(const RunConfig &config, std::ostream &out) {
  config.validate("pair-potential");
  auto ctx = make_context(config);
  const auto dir = config.output_dir();
  auto record = reproducibility_record(config, ctx, "pair-potential");
  const auto fields = config.fields();
  const double theta = config.theta_rad();
  const auto grid = config.r_grid_m();
  ojson failures = {{"curves", ojson::array()}, {"spectrum", ojson::array()}};

  PairBasisSpec spec = config.pair_spec();
  ConvergenceReport report;
  if (!config.is_null("convergence_tolerance_MHz")) {
    const auto schedule =
        relaxation_schedule(spec, static_cast<std::size_t>(config.get_int("convergence_steps")),
                            config.get_int("relax_delta_n"), config.get_int("relax_delta_l"),
                            config.get_double("relax_window_GHz"));
    report = converge_basis(*ctx.me, schedule, fields, theta, grid, config.get_double("convergence_tolerance_MHz") * 1e-3);
    spec = report.final_spec;
    out << "basis convergence: " << (report.converged ? "converged" : "not converged") << " after "
        << report.steps.size() << " steps\n";
  }

  PairSystem sys(*ctx.me, spec, fields, theta);
  if (report.steps.empty()) {
    report.steps.push_back({spec, sys.size(), std::numeric_limits<double>::infinity()});
    report.final_spec = spec;
  }
  {
    auto os = open_output(dir, "convergence.json");
    write_convergence_json(os, report);
  }
  {
    auto os = open_output(dir, "basis.json");
    sys.write_basis_json(os);
  }
  out << "pair basis: " << sys.size() << " states in " << sys.blocks().size() << " blocks, R_LR = "
      << sys.leroy_radius_m() * 1e6 << " um\n";

  const auto problem = curve_problem(sys, spec.target);
  const auto curves = solve_curves(problem, grid);
  {
    auto os = open_output(dir, "curves.csv");
    write_curves_csv(os, curves);
  }
  failures["curves"] = curve_failures(curves);
  std::size_t below = 0;
  for (const auto &p : curves.points) below += p.below_leroy ? 1 : 0;
  failures["below_leroy_points"] = below;
  out << "curves: " << curves.curve_count << " curves on " << curves.points.size() << " distances\n";

  if (!config.is_null("admixture_detuning_GHz")) {
    const auto cut =
        admixture_cut(curves, config.get_double("admixture_detuning_GHz"), config.get_double("admixture_bin_GHz"));
    auto os = open_output(dir, "admixture.csv");
    write_admixture_csv(os, cut, curves.leroy_radius_m);
  }

  if (!config.is_null("evolution_r_um")) {
    const double r = config.get_double("evolution_r_um") * 1e-6;
    const auto times = linspace(0.0, config.get_double("evolution_t_max_us") * 1e-6, config.get_int("evolution_points"));
    auto thetas = config.get_doubles("spectrum_theta_deg");
    if (thetas.empty()) thetas.push_back(config.get_double("theta_deg"));
    auto spectrum = open_output(dir, "spectrum.csv");
    spectrum << "theta_deg,freq_MHz,weight\n";
    bool evolved = false;
    for (double deg : thetas) {
      try {
        const auto point = solve_at(*ctx.me, spec, fields, units::deg_to_rad(deg), r);
        const auto lines =
            frequency_spectrum(point, config.get_double("spectrum_min_weight"), config.get_double("spectrum_merge_MHz"));
        write_spectrum_csv(spectrum, deg, lines, false);
        if (!evolved && deg == thetas.front()) {
          auto os = open_output(dir, "evolution.csv");
          write_evolution_csv(os, times, time_evolution(point, times));
          evolved = true;
        }
      } catch (const NumericalError &e) {
        failures["spectrum"].push_back({{"theta_deg", deg}, {"error", e.what()}});
      }
    }
  }

  write_json(dir, "failures.json", failures);
  write_json(dir, "run.json", record);
  const bool failed = !failures["curves"].empty() || !failures["spectrum"].empty();
  if (failed) {
    out << "some points failed; see failures.json\n";
    return Numerical;
  }
  return Ok;
}

int field_map_command(const RunConfig &config, FieldKind kind, std::ostream &out) {
  const std::string command = kind == FieldKind::Electric ? "stark-map" : "zeeman-map";
  config.validate(command);
  auto ctx = make_context(config);
  const auto dir = config.output_dir();

  SingleBasisSpec bs;
  bs.species = config.species(0);
  bs.n_min = config.get_int("n_min");
  bs.n_max = config.get_int("n_max");
  bs.l_max = config.get_int("l_max");
  for (double m : config.get_doubles("mj")) bs.mj_values.push_back(HalfInteger::from_twice(static_cast<int>(std::lround(2 * m))));
  const auto basis = build_single_basis(*ctx.db, bs);
  if (basis.empty()) throw ConfigError("the single-atom basis is empty");

  // Scan values are in mV/cm or G.
  const double scale = kind == FieldKind::Electric ? 0.1 : 1e-4;
  auto magnitudes = linspace(config.get_double("scan_min"), config.get_double("scan_max"), config.get_int("scan_points"));
  for (double &m : magnitudes) m *= scale;
  const auto d = config.get_doubles("scan_direction");
  const Eigen::Vector3d direction(d.at(0), d.at(1), d.at(2));

  const auto map = field_map(*ctx.me, basis, kind, magnitudes, direction, config.fields());
  {
    auto os = open_output(dir, "field_map.csv");
    write_field_map_csv(os, map);
  }
  ojson failures = {{"points", ojson::array()}};
  for (const auto &p : map.points)
    if (!p.ok) failures["points"].push_back({{"field_SI", p.field}, {"error", p.error}});
  write_json(dir, "failures.json", failures);
  write_json(dir, "run.json", reproducibility_record(config, ctx, command));
  out << command << ": " << basis.size() << " states, " << map.points.size() << " field values\n";
  if (!failures["points"].empty()) {
    out << "some points failed; see failures.json\n";
    return Numerical;
  }
  return Ok;
}

int matrix_element(const RunConfig &config, std::ostream &out) {
  config.validate("matrix-element");
  auto ctx = make_context(config);
  const auto bra = config.state(0);
  const auto ket = config.state(1);
  const int kappa = config.get_int("kappa");
  const int q = config.get_int("q");
  const std::size_t before = ctx.me->cache().computations();
  const double radial = ctx.me->radial(bra, ket, kappa);
  const double element = ctx.me->multipole(bra, ket, kappa, q);
  const bool cached = ctx.me->cache().computations() == before;
  ctx.me->cache().flush();
  out << std::setprecision(10);
  out << "bra: " << bra.label() << '\n';
  out << "ket: " << ket.label() << '\n';
  out << "kappa: " << kappa << "  q: " << q << '\n';
  out << "radial (a0^kappa): " << radial << '\n';
  out << "multipole (e a0^kappa): " << element << '\n';
  out << "allowed: " << (multipole_allowed(bra, ket, kappa, q) ? "yes" : "no") << '\n';
  out << "cache: " << (cached ? "hit" : "computed") << '\n';
  return Ok;
}

int state_info(const RunConfig &config, std::ostream &out) {
  config.validate("state-info");
  auto ctx = make_context(config);
  const auto s = config.state(0);
  const auto &model = ctx.db->species(s.species);
  const auto level = level_energy(model, s);
  const double rlr = leroy_radius(model, s, model, s, config.radial_method(), config.grid());
  out << std::setprecision(10);
  out << "state: " << s.label() << '\n';
  out << "energy (GHz): " << level.ghz() << '\n';
  out << "energy (eV): " << units::joule_to_ev(level.joules) << '\n';
  out << "effective n: " << level.n_star << '\n';
  out << "quantum defect: " << s.n - level.n_star << '\n';
  out << "energy source: " << (level.source == EnergySource::Hydrogenic ? "hydrogenic" : "defect series") << '\n';
  out << "Le Roy radius, identical pair (um): " << rlr * 1e6 << '\n';
  out << "Le Roy radius, hydrogen bound (um): " << leroy_radius_hydrogen(s.n, s.l) * 1e6 << '\n';
  return Ok;
}

int cache_inspect(const RunConfig &config, std::ostream &out) {
  const auto file = config.cache_file();
  if (!file) throw ConfigError("cache_file is not set");
  const auto info = ElementCache::inspect(*file);
  out << "file: " << file->string() << '\n';
  if (!info.exists) {
    out << "status: missing\n";
    return Ok;
  }
  if (!info.readable) {
    out << "status: unreadable\n";
    return Data;
  }
  RunConfig probe = config;
  auto ctx = make_context(probe);
  const bool current = info.version_stamp == ctx.me->cache().version_stamp();
  out << "status: " << (current ? "current" : "stale") << '\n';
  out << "stamp: " << info.version_stamp << '\n';
  out << "entries: " << info.entries << '\n';
  return Ok;
}

int cache_clear(const RunConfig &config, std::ostream &out) {
  const auto file = config.cache_file();
  if (!file) throw ConfigError("cache_file is not set");
  auto ctx = make_context(config);
  ctx.me->cache().clear();
  out << "cleared " << file->string() << '\n';
  return Ok;
}

} // namespace rydpair::cli
