#include "doctest.h"

#include "rydpair/errors.hpp"
#include "rydpair/solver.hpp"
#include "rydpair/units.hpp"

#include <cmath>
#include <sstream>

using namespace rydpair;

namespace {

const double kHartreeGhz = units::hartree / units::planck * 1e-9;

SparseMatrix sparse(const Eigen::MatrixXd &m) { return m.sparseView(); }

// |dd> at zero, |pf> at delta, coupling c3 / R^3 (GHz with R in micrometers).
CurveProblem forster_toy(double delta, double c3) {
  CurveProblem p;
  p.hamiltonian = [=](double r) {
    const double v = c3 / std::pow(r * 1e6, 3);
    Eigen::MatrixXd h(2, 2);
    h << 0.0, v, v, delta;
    return sparse(h);
  };
  p.blocks = {{0, 1}};
  p.probe = Eigen::Vector2d(1.0, 0.0);
  return p;
}

double fit_slope(const std::vector<double> &x, const std::vector<double> &y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sx += x[k];
    sy += y[k];
    sxx += x[k] * x[k];
    sxy += x[k] * y[k];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

PairBasisSpec spec_for(const StateOne &a, const StateOne &b, int dn, int dl, double window, int order) {
  PairBasisSpec s;
  s.target = {a, b};
  s.delta_n = dn;
  s.delta_l = dl;
  s.energy_window_ghz = window;
  s.order = order;
  return s;
}

} // namespace

TEST_CASE("log grid") {
  const auto g = log_grid(1e-6, 1e-4, 3);
  CHECK(g[0] == 1e-6);
  CHECK(g[1] == doctest::Approx(1e-5).epsilon(1e-12));
  CHECK(g[2] == 1e-4);
  CHECK(log_grid(2e-6, 3e-6).size() == 200);
  CHECK_THROWS_AS(log_grid(0.0, 1.0, 3), ConfigError);
  CHECK_THROWS_AS(log_grid(2.0, 1.0, 3), ConfigError);
}

TEST_CASE("two-level Forster toy") {
  const double delta = 0.00869, c3 = 7.0;
  const auto problem = forster_toy(delta, c3);
  const auto grid = log_grid(5e-6, 20e-6, 40);
  const auto curves = solve_curves(problem, grid);
  REQUIRE(curves.points.size() == grid.size());
  for (const auto &pt : curves.points) {
    REQUIRE(pt.ok);
    const double v = c3 / std::pow(pt.r_m * 1e6, 3);
    const double root = std::sqrt(delta * delta / 4 + v * v);
    CHECK(std::abs(pt.energies_ghz(0) - (delta / 2 - root)) < 1e-10);
    CHECK(std::abs(pt.energies_ghz(1) - (delta / 2 + root)) < 1e-10);
    CHECK(std::abs(pt.overlaps.sum() - 1.0) < 1e-12);
    // Lower branch is the dd-like one at large R for delta > 0.
    const double mix = std::atan2(2 * v, -delta) / 2;
    CHECK(std::abs(pt.overlaps(0) - std::pow(std::sin(mix), 2)) < 1e-10);

    // Two-level evolution and spectrum.
    const double split = 2 * root;
    std::vector<double> times;
    for (int k = 0; k < 30; ++k) times.push_back(k * 7e-9);
    const auto p = time_evolution(pt, times);
    const double a0 = pt.overlaps(0), a1 = pt.overlaps(1);
    for (std::size_t k = 0; k < times.size(); ++k) {
      const double s = std::sin(units::pi * split * 1e9 * times[k]);
      CHECK(std::abs(p[k] - (1.0 - 4 * a0 * a1 * s * s)) < 1e-10);
    }
    const auto lines = frequency_spectrum(pt);
    REQUIRE(lines.size() == 1);
    CHECK(std::abs(lines[0].freq_mhz - split * 1e3) < 1e-7);
    CHECK(std::abs(lines[0].weight - a0 * a1) < 1e-14);
    CHECK(dominance(lines) == 1.0);
  }
  // Curves keep their identity: ids follow the energy order here.
  for (const auto &pt : curves.points) CHECK(pt.curve == std::vector<int>{0, 1});

  // Halving the spacing keeps the topology.
  const auto fine = solve_curves(problem, log_grid(5e-6, 20e-6, 79));
  for (std::size_t k = 0; k < grid.size(); ++k) CHECK(fine.points[2 * k].curve == curves.points[k].curve);
}

TEST_CASE("resonant evolution and spectrum") {
  CurvePoint pt;
  pt.energies_ghz = Eigen::Vector2d(-0.0046, 0.0046);
  pt.overlaps = Eigen::Vector2d(0.5, 0.5);
  pt.amplitudes = Eigen::Vector2d(std::sqrt(0.5), std::sqrt(0.5));
  std::vector<double> t;
  for (int k = 0; k <= 100; ++k) t.push_back(k * 1e-9);
  const auto p = time_evolution(pt, t);
  for (std::size_t k = 0; k < t.size(); ++k) {
    const double c = std::cos(units::pi * 9.2e6 * t[k]);
    CHECK(std::abs(p[k] - c * c) < 1e-12);
  }
  CurvePoint single;
  single.energies_ghz = Eigen::VectorXd::Constant(1, 3.0);
  single.overlaps = Eigen::VectorXd::Ones(1);
  for (double v : time_evolution(single, t)) CHECK(std::abs(v - 1.0) < 1e-14);
  CHECK(frequency_spectrum(single).empty());

  CurvePoint three;
  three.energies_ghz = Eigen::Vector3d(0.0, 0.001, 0.00105);
  three.overlaps = Eigen::Vector3d(0.5, 0.3, 0.2);
  const auto raw = frequency_spectrum(three);
  CHECK(raw.size() == 3);
  const auto merged = frequency_spectrum(three, 0.0, 0.1);
  REQUIRE(merged.size() == 2);
  CHECK(merged[0].weight == doctest::Approx(0.25));
  CHECK(merged[0].freq_mhz == doctest::Approx((0.15 * 1.0 + 0.1 * 1.05) / 0.25));
  CHECK(merged[1].weight == doctest::Approx(0.06));
  CHECK(dominance(merged) == doctest::Approx(0.25 / 0.31));
  CHECK(frequency_spectrum(three, 0.1).size() == 1);
}

TEST_CASE("linking follows eigenvector character through crossings") {
  // Two uncoupled states crossing at R = 10 um plus a coupled spectator.
  CurveProblem p;
  p.hamiltonian = [](double r) {
    const double x = r * 1e6;
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(3, 3);
    h(0, 0) = 1.0 / std::pow(x, 3) - 1e-3;
    h(1, 1) = 0.0;
    h(2, 2) = 0.5;
    h(1, 2) = h(2, 1) = 1e-4;
    return sparse(h);
  };
  p.blocks = {{0, 1, 2}};
  p.probe = Eigen::Vector3d(1.0, 0.0, 0.0);
  const auto curves = solve_curves(p, log_grid(5e-6, 20e-6, 50));
  const auto &first = curves.points.front(), &last = curves.points.back();
  // The probe starts above state 1 and ends below it, on the same curve.
  REQUIRE(first.overlaps(1) > 0.99);
  REQUIRE(last.overlaps(0) > 0.99);
  const int id = first.curve[1];
  for (const auto &pt : curves.points) {
    Eigen::Index k = 0;
    pt.overlaps.maxCoeff(&k);
    CHECK(pt.curve[k] == id);
  }
  CHECK(last.curve[0] == id);

  // Equal overlaps are resolved by the smaller energy jump.
  CurveProblem deg;
  deg.hamiltonian = [](double r) {
    Eigen::MatrixXd h(2, 2);
    if (r < 1.5e-6) h << 0.0, 0.0, 0.0, 1.0;
    else h << 0.5, 0.5, 0.5, 0.5;
    return sparse(h);
  };
  deg.blocks = {{0, 1}};
  deg.probe = Eigen::Vector2d(1.0, 0.0);
  const auto dc = solve_curves(deg, {1e-6, 2e-6});
  CHECK(dc.points[1].curve == std::vector<int>{0, 1});
  deg.hamiltonian = [](double r) {
    Eigen::MatrixXd h(2, 2);
    if (r < 1.5e-6) h << 1.0, 0.0, 0.0, 0.0;
    else h << 0.5, -0.5, -0.5, 0.5;
    return sparse(h);
  };
  deg.blocks = {{1, 0}};
  const auto dc2 = solve_curves(deg, {1e-6, 2e-6});
  CHECK(dc2.points[0].curve == dc2.points[1].curve);
}

TEST_CASE("invalid points are skipped") {
  auto p = forster_toy(0.01, 5.0);
  auto inner = p.hamiltonian;
  p.hamiltonian = [inner](double r) -> SparseMatrix {
    if (std::abs(r - 1e-5) < 1e-12) throw NumericalError("injected failure");
    return inner(r);
  };
  const auto curves = solve_curves(p, {8e-6, 1e-5, 1.2e-5});
  CHECK(curves.points[0].ok);
  CHECK_FALSE(curves.points[1].ok);
  CHECK(curves.points[1].error.find("injected") != std::string::npos);
  CHECK(curves.points[2].ok);
  CHECK(curves.points[2].curve == curves.points[0].curve);
  std::ostringstream os;
  write_curves_csv(os, curves);
  std::istringstream in(os.str());
  std::string line;
  int rows = 0;
  std::getline(in, line);
  CHECK(line == "R_m,curve_id,energy_GHz,overlap");
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 4);
}

TEST_CASE("admixture cut") {
  PotentialCurves c;
  c.reference_energy_ghz = 10.0;
  CurvePoint pt;
  pt.r_m = 1e-6;
  pt.energies_ghz = Eigen::Vector3d(7.95, 8.02, 9.0);
  pt.amplitudes = Eigen::Vector3d(0.3, -0.4, 0.8);
  pt.overlaps = pt.amplitudes.cwiseAbs2();
  c.points = {pt};
  auto cut = admixture_cut(c, -2.0, 0.2);
  REQUIRE(cut.size() == 1);
  CHECK(cut[0].epsilon == doctest::Approx(0.7));
  CHECK(cut[0].states == 2);
  cut = admixture_cut(c, -50.0, 0.2);
  CHECK(cut[0].epsilon == 0.0);
  CHECK_THROWS_AS(admixture_cut(c, -2.0, 0.0), ConfigError);
}

TEST_CASE("block eigenvalues equal the full matrix") {
  const auto &db = SpeciesDatabase::builtin();
  MatrixElements me(db);
  const auto s = make_state("Rb", 50, 0, 0.5, 0.5);
  PairSystem sys(me, spec_for(s, s, 1, 1, 30.0, 3));
  REQUIRE(sys.size() <= 200);
  REQUIRE(sys.blocks().size() > 1);
  SolveOptions all;
  all.probe_blocks_only = false;
  SolveOptions full = all;
  full.use_blocks = false;
  const std::vector<double> grid = {2e-6, 4e-6, 8e-6};
  const auto a = solve_curves(sys, sys.spec().target, grid, all);
  const auto b = solve_curves(sys, sys.spec().target, grid, full);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Eigen::MatrixXd h(sys.hamiltonian(grid[k]));
    const Eigen::VectorXd ref = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(h).eigenvalues();
    REQUIRE(a.points[k].energies_ghz.size() == ref.size());
    const double scale = ref.cwiseAbs().maxCoeff();
    CHECK((a.points[k].energies_ghz - ref).cwiseAbs().maxCoeff() <= 1e-10 * scale);
    CHECK((b.points[k].energies_ghz - ref).cwiseAbs().maxCoeff() <= 1e-10 * scale);
    CHECK(std::abs(a.points[k].overlaps.sum() - 1.0) < 1e-12);
  }
  // Only the probe blocks are solved by default.
  const auto probe_only = solve_curves(sys, sys.spec().target, grid);
  CHECK(probe_only.states.size() < sys.size());
  CHECK(std::abs(probe_only.points[0].overlaps.sum() - 1.0) < 1e-12);
}

TEST_CASE("van der Waals slope against second-order perturbation") {
  const auto &db = SpeciesDatabase::builtin();
  MatrixElements me(db);
  const auto s = make_state("Rb", 60, 0, 0.5, 0.5);
  auto spec = spec_for(s, s, 2, 1, 50.0, 3);
  spec.m_values = {HalfInteger::from_int(1)};
  PairSystem sys(me, spec);

  // Oracle: sum over all product states inside the same truncation.
  SingleBasisSpec sb;
  sb.species = "Rb";
  sb.n_min = 58;
  sb.n_max = 62;
  sb.l_min = 0;
  sb.l_max = 1;
  const auto basis = build_single_basis(db, sb);
  const Eigen::VectorXd e = unperturbed_energies_ghz(db, basis);
  const StateTwo target{s, s};
  const double e0 = 2 * e(std::find(basis.begin(), basis.end(), s) - basis.begin());
  double c6 = 0.0; // GHz * (a0)^6, to be divided by R^6
  for (std::size_t i = 0; i < basis.size(); ++i) {
    for (std::size_t j = 0; j < basis.size(); ++j) {
      const double ej = e(i) + e(j);
      if (std::abs(ej - e0) > 50.0 || (basis[i] == s && basis[j] == s)) continue;
      const double v = multipole_coupling(me, {basis[i], basis[j]}, target, 1, 1) * kHartreeGhz;
      if (v != 0.0) c6 += v * v / (e0 - ej);
    }
  }
  REQUIRE(c6 > 0.0);

  const auto grid = log_grid(3e-6, 10e-6, 12);
  const auto curves = solve_curves(sys, target, grid);
  const auto tracked = tracked_energies(curves);
  std::vector<double> x, y;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double shift = tracked[k] - curves.reference_energy_ghz;
    x.push_back(std::log(grid[k]));
    y.push_back(std::log(std::abs(shift)));
  }
  const double slope = fit_slope(x, y);
  MESSAGE("vdW slope " << slope);
  CHECK(std::abs(slope + 6.0) < 0.1);

  const double r = grid.back();
  const double oracle = c6 * std::pow(units::bohr_radius / r, 6);
  const double shift = tracked.back() - curves.reference_energy_ghz;
  CHECK(std::abs(shift - oracle) <= 0.01 * std::abs(oracle));
}

TEST_CASE("quadrupole-quadrupole term scales as R^-5") {
  const auto &db = SpeciesDatabase::builtin();
  MatrixElements me(db);
  const auto d = make_state("Rb", 40, 2, 2.5, 2.5);
  auto spec = spec_for(d, d, 1, 2, 25.0, 5);
  spec.m_values = {HalfInteger::from_int(5)};
  PairSystem sys(me, spec);
  const auto grid = log_grid(8e-6, 20e-6, 8);
  const auto c3 = tracked_energies(solve_curves(curve_problem(sys, spec.target, 3), grid));
  const auto c5 = tracked_energies(solve_curves(curve_problem(sys, spec.target, 5), grid));
  std::vector<double> x, y;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    x.push_back(std::log(grid[k]));
    y.push_back(std::log(std::abs(c5[k] - c3[k])));
  }
  const double slope = fit_slope(x, y);
  MESSAGE("order 5 minus order 3 slope " << slope);
  CHECK(std::abs(slope + 5.0) < 0.1);
}

TEST_CASE("basis convergence") {
  const auto &db = SpeciesDatabase::builtin();
  MatrixElements me(db);
  const auto s = make_state("Rb", 60, 0, 0.5, 0.5);
  auto initial = spec_for(s, s, 1, 1, 10.0, 3);
  initial.m_values = {HalfInteger::from_int(1)};
  const auto schedule = relaxation_schedule(initial, 4, 1, 1, 10.0);
  CHECK(schedule[2].delta_n == 3);
  CHECK(schedule[3].energy_window_ghz == 40.0);
  const auto far = converge_basis(me, schedule, {}, 0.0, log_grid(30e-6, 50e-6, 5), 1e-4);
  CHECK(far.converged);
  CHECK(far.steps.size() == 2);
  CHECK(far.final_spec.delta_n == 1);

  const auto near = converge_basis(me, schedule, {}, 0.0, log_grid(1.5e-6, 3e-6, 5), 1e-9);
  CHECK_FALSE(near.converged);
  CHECK(near.steps.size() == 4);
  std::ostringstream os;
  write_convergence_json(os, near);
  CHECK(os.str().find("\"converged\": false") != std::string::npos);
  CHECK_THROWS_AS(relaxation_schedule(initial, 0, 1, 1, 1.0), ConfigError);
}

TEST_CASE("spectrum and evolution csv") {
  std::ostringstream os;
  write_spectrum_csv(os, 14.0, {{9.2, 0.25}});
  CHECK(os.str() == "theta_deg,freq_MHz,weight\n14,9.2,0.25\n");
  std::ostringstream ev;
  write_evolution_csv(ev, {0.0, 1e-7}, {1.0, 0.5});
  CHECK(ev.str() == "t_us,p_probe\n0,1\n0.1,0.5\n");
  CHECK_THROWS_AS(write_evolution_csv(ev, {0.0}, {}), ConfigError);
}
