#include "doctest.h"
#include "test_helpers.hpp"

#include "rydpair/angular.hpp"
#include "rydpair/errors.hpp"
#include "rydpair/fields.hpp"
#include "rydpair/units.hpp"

#include <complex>
#include <random>
#include <sstream>

using namespace rydpair;
using cd = std::complex<double>;

namespace {

const double kStark = units::ea0 / units::planck * 1e-9;
const double kBohr = units::bohr_magneton / units::planck * 1e-9;
const double kDia = units::elementary_charge * units::elementary_charge * units::bohr_radius * units::bohr_radius /
                    (12.0 * units::electron_mass) / units::planck * 1e-9;

std::vector<StateOne> rb_basis(int nmin, int nmax, int lmax) {
  SingleBasisSpec spec;
  spec.species = "Rb";
  spec.n_min = nmin;
  spec.n_max = nmax;
  spec.l_max = lmax;
  return build_single_basis(SpeciesDatabase::builtin(), spec);
}

double hermitian_defect(const Eigen::MatrixXcd &m) { return (m - m.adjoint()).cwiseAbs().maxCoeff(); }

// <l ml| f(theta, phi) |l' ml'> by quadrature; f must be a low-order trig polynomial.
template <typename F> cd orbital_element(int l, int ml, int lp, int mlp, F f) {
  static std::vector<double> x, w;
  if (x.empty()) gauss_legendre(48, x, w);
  const int nphi = 64;
  cd sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double th = std::acos(x[i]);
    const double radial_part = ylm0(l, ml, th) * ylm0(lp, mlp, th);
    for (int k = 0; k < nphi; ++k) {
      const double ph = 2.0 * pi * k / nphi;
      sum += w[i] * (2.0 * pi / nphi) * radial_part * std::exp(cd(0.0, (mlp - ml) * ph)) * f(th, ph);
    }
  }
  return sum;
}

// Coupled-basis element of an orbital operator from the uncoupled quadrature.
template <typename F> cd coupled_element(const StateOne &a, const StateOne &b, F f) {
  cd sum = 0.0;
  for (int ms2 : {-1, 1}) {
    const int ml2a = a.mj.twice() - ms2, ml2b = b.mj.twice() - ms2;
    if (std::abs(ml2a) > 2 * a.l || std::abs(ml2b) > 2 * b.l) continue;
    sum += spin_cg(a.l, a.j.twice(), a.mj.twice(), ms2) * spin_cg(b.l, b.j.twice(), b.mj.twice(), ms2) *
           orbital_element(a.l, ml2a / 2, b.l, ml2b / 2, f);
  }
  return sum;
}

// Reflection through the xz plane and inversion as permutation-with-phase matrices.
Eigen::MatrixXd reflection(const std::vector<StateOne> &basis) {
  const auto n = static_cast<Eigen::Index>(basis.size());
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    StateOne mirrored = basis[i];
    mirrored.mj = -basis[i].mj;
    const auto it = std::find(basis.begin(), basis.end(), mirrored);
    REQUIRE(it != basis.end());
    const int e = basis[i].l + (basis[i].mj.twice() - basis[i].j.twice()) / 2;
    r(it - basis.begin(), i) = (e % 2 == 0) ? 1.0 : -1.0;
  }
  return r;
}

Eigen::MatrixXd inversion(const std::vector<StateOne> &basis) {
  Eigen::VectorXd d(static_cast<Eigen::Index>(basis.size()));
  for (std::size_t i = 0; i < basis.size(); ++i) d(static_cast<Eigen::Index>(i)) = basis[i].l % 2 ? -1.0 : 1.0;
  return d.asDiagonal();
}

bool mj_conserving(const Eigen::MatrixXcd &v, const std::vector<StateOne> &basis) {
  for (Eigen::Index i = 0; i < v.rows(); ++i)
    for (Eigen::Index k = 0; k < v.cols(); ++k)
      if (basis[i].mj != basis[k].mj && v(i, k) != cd(0.0)) return false;
  return true;
}

bool commutes(const Eigen::MatrixXcd &v, const Eigen::MatrixXd &s) {
  const Eigen::MatrixXcd sc = s.cast<cd>();
  return (sc * v - v * sc).cwiseAbs().maxCoeff() <= 1e-12 * v.cwiseAbs().maxCoeff();
}

} // namespace

TEST_CASE("spherical field components") {
  auto c = spherical_field_components({0, 0, 2.5});
  CHECK(c.zero == cd(2.5));
  CHECK(c.plus == cd(0.0));
  CHECK(c.minus == cd(0.0));
  c = spherical_field_components({3.0, 0, 0});
  CHECK(std::abs(c.plus - cd(-3.0 / std::sqrt(2.0))) < 1e-15);
  CHECK(std::abs(c.minus - cd(3.0 / std::sqrt(2.0))) < 1e-15);
  CHECK(c.zero == cd(0.0));
  c = spherical_field_components({0, 1.0, 0});
  CHECK(std::abs(c.plus - cd(0, -1.0 / std::sqrt(2.0))) < 1e-15);
  CHECK(std::abs(c.minus - cd(0, -1.0 / std::sqrt(2.0))) < 1e-15);

  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 100; ++i) {
    const Eigen::Vector3d v(u(rng), u(rng), u(rng));
    const Eigen::Vector3cd back = cartesian_field(spherical_field_components(v));
    CHECK((back - v.cast<cd>()).cwiseAbs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("single-atom basis construction") {
  const auto basis = rb_basis(58, 60, 3);
  CHECK(basis.size() == 3 * (2 + 2 + 4 + 4 + 6 + 6 + 8));
  const auto e = unperturbed_energies_ghz(SpeciesDatabase::builtin(), basis);
  for (Eigen::Index i = 1; i < e.size(); ++i) CHECK(e(i) >= e(i - 1));
  SingleBasisSpec spec;
  spec.species = "Rb";
  spec.n_min = 55;
  spec.n_max = 65;
  spec.l_max = 2;
  spec.mj_values = {HalfInteger::from_twice(1)};
  spec.energy_center_ghz = level_energy(SpeciesDatabase::builtin().species("Rb"), 60, 0, 1_h).ghz();
  spec.energy_halfwidth_ghz = 40.0;
  for (const auto &s : build_single_basis(SpeciesDatabase::builtin(), spec)) {
    CHECK(s.mj == HalfInteger::from_twice(1));
    CHECK(std::abs(level_energy(SpeciesDatabase::builtin().species("Rb"), s).ghz() - *spec.energy_center_ghz) <= 40.0);
  }
  spec.n_max = 10;
  CHECK_THROWS_AS(build_single_basis(SpeciesDatabase::builtin(), spec), ConfigError);
}

TEST_CASE("Stark operator") {
  const auto &db = SpeciesDatabase::builtin();
  MatrixElements me(db);
  const auto basis = rb_basis(58, 60, 3);
  CHECK(stark_operator(me, basis, Eigen::Vector3d::Zero()).cwiseAbs().maxCoeff() == 0.0);

  const auto vz = stark_operator(me, basis, {0, 0, 1.0});
  CHECK(mj_conserving(vz, basis));
  for (const Eigen::Vector3d &e : {Eigen::Vector3d(0, 0, 1), Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(0.3, -0.7, 0.2)}) {
    const auto v = stark_operator(me, basis, e);
    CHECK(hermitian_defect(v) <= 1e-12 * v.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < v.rows(); ++i)
      for (Eigen::Index k = 0; k < v.cols(); ++k)
        if (std::abs(basis[i].l - basis[k].l) != 1) CHECK(v(i, k) == cd(0.0));
  }
  // Linear in the field.
  const auto v1 = stark_operator(me, basis, {0.2, 0, 0.5});
  const auto v2 = stark_operator(me, basis, {0.4, 0, 1.0});
  CHECK((v2 - 2.0 * v1).cwiseAbs().maxCoeff() <= 1e-14 * v2.cwiseAbs().maxCoeff());

  // s1/2 - p1/2 coupling along z: |<s|z|p>| = radial / 3 for mj = 1/2.
  const auto s = make_state("Rb", 60, 0, 0.5, 0.5), p = make_state("Rb", 60, 1, 0.5, 0.5);
  const double ez = 1.0;
  const auto v = stark_operator(me, {s, p}, {0, 0, ez});
  CHECK(near(std::abs(v(0, 1)), kStark * ez * std::abs(me.radial(s, p, 1)) / 3.0, 1e-12, 0));

  // Two-level shift vs second-order perturbation theory.
  SingleAtomSystem sys(me, {s, p}, FieldConfig{{0, 0, ez}, Eigen::Vector3d::Zero(), true});
  sys.diagonalize();
  const auto e0 = unperturbed_energies_ghz(db, {s, p});
  const double delta = e0(0) - e0(1);
  const double pt2 = std::norm(v(0, 1)) / delta;
  const int is = delta < 0 ? 0 : 1; // s lies below p for Rb
  CHECK(near(sys.energies()(is) - e0(0), pt2, 1e-5, 0));
}

TEST_CASE("Zeeman operator") {
  const auto &db = SpeciesDatabase::builtin();
  MatrixElements me(db);
  const double b = 1e-3;
  for (double mj : {-0.5, 0.5}) {
    const auto s = make_state("Rb", 50, 0, 0.5, mj);
    const auto v = zeeman_operator(me, {s}, {0, 0, b}, false);
    CHECK(near(v(0, 0).real(), db.g_s() * kBohr * b * mj, 1e-13, 0));
    CHECK(v(0, 0).imag() == 0.0);
  }
  // Lande g for p3/2 mj = 3/2 with g_l = 1.
  const auto p = make_state("Rb", 50, 1, 1.5, 1.5);
  CHECK(near(zeeman_operator(me, {p}, {0, 0, b}, false)(0, 0).real(), kBohr * b * (1.0 + db.g_s() * 0.5), 1e-13, 0));

  const auto basis = rb_basis(59, 60, 3);
  for (const Eigen::Vector3d &bv : {Eigen::Vector3d(0, 0, 0.01), Eigen::Vector3d(0.01, 0, 0), Eigen::Vector3d(0.003, 0.004, -0.002)}) {
    const auto v = zeeman_operator(me, basis, bv, true);
    CHECK(hermitian_defect(v) <= 1e-12 * v.cwiseAbs().maxCoeff());
  }
  CHECK(mj_conserving(zeeman_operator(me, basis, {0, 0, 0.01}, true), basis));
}

TEST_CASE("diamagnetic term") {
  const auto &db = SpeciesDatabase::builtin();
  MatrixElements me(db);
  // s state: e^2 B^2 <r^2> / (12 m_e), any direction.
  const auto s = make_state("Rb", 50, 0, 0.5, 0.5);
  for (const Eigen::Vector3d &bv : {Eigen::Vector3d(0, 0, 0.5), Eigen::Vector3d(0.3, -0.4, 0.1)}) {
    const auto d = diamagnetic_operator(me, {s}, bv);
    CHECK(near(d(0, 0).real(), kDia * bv.squaredNorm() * me.radial(s, s, 2), 1e-12, 0));
  }

  // Full angular structure vs direct quadrature of |r x B|^2 for d states.
  const Eigen::Vector3d bv(0.3, -0.5, 0.8);
  std::vector<StateOne> basis;
  for (int l : {0, 2})
    for (int tj = 2 * l - 1; tj <= 2 * l + 1; tj += 2)
      for (int tm = -tj; tm <= tj && tj > 0; tm += 2)
        basis.push_back({"Rb", 50, l, HalfInteger::from_twice(tj), HalfInteger::from_twice(tm)});
  const auto d = diamagnetic_operator(me, basis, bv);
  const Eigen::Vector3d bhat = bv.normalized();
  auto sin2 = [&](double th, double ph) {
    const double c = std::sin(th) * std::cos(ph) * bhat.x() + std::sin(th) * std::sin(ph) * bhat.y() +
                     std::cos(th) * bhat.z();
    return 1.0 - c * c;
  };
  double worst = 0.0;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    for (std::size_t k = 0; k < basis.size(); ++k) {
      const cd expected = 1.5 * kDia * bv.squaredNorm() * me.radial(basis[i], basis[k], 2) *
                          coupled_element(basis[i], basis[k], sin2);
      worst = std::max(worst, std::abs(d(i, k) - expected) / std::abs(d(0, 0)));
    }
  }
  CHECK(worst < 1e-12);

  // Quadratic in B (no linear slope) and positive semidefinite.
  const auto basis2 = rb_basis(58, 60, 3);
  const auto d1 = diamagnetic_operator(me, basis2, {0.01, 0.02, -0.03});
  const auto d2 = diamagnetic_operator(me, basis2, {-0.02, -0.04, 0.06});
  CHECK((d2 - 4.0 * d1).cwiseAbs().maxCoeff() <= 1e-13 * d2.cwiseAbs().maxCoeff());
  const auto ev = eigvalsh(d1);
  CHECK(ev.minCoeff() >= -1e-12 * ev.cwiseAbs().maxCoeff());
  CHECK(hermitian_defect(d1) <= 1e-12 * d1.cwiseAbs().maxCoeff());

  // The energy difference with and without the diamagnetic term scales as B^2.
  const auto s60 = make_state("Rb", 60, 0, 0.5, 0.5);
  auto shift = [&](double b, bool dia) {
    SingleAtomSystem sys(me, basis2, FieldConfig{Eigen::Vector3d::Zero(), {0, 0, b}, dia});
    sys.diagonalize();
    const int i = sys.index_of(s60);
    Eigen::Index k = 0;
    sys.vectors().row(i).cwiseAbs().maxCoeff(&k);
    return sys.energies()(k);
  };
  const double r1 = shift(1e-3, true) - shift(1e-3, false);
  const double r2 = shift(2e-3, true) - shift(2e-3, false);
  CHECK(r1 > 0.0);
  CHECK(near(r2 / r1, 4.0, 1e-3, 0));
}

TEST_CASE("field symmetry ledger") {
  const auto &db = SpeciesDatabase::builtin();
  MatrixElements me(db);
  const auto basis = rb_basis(59, 60, 3);
  const auto sigma = reflection(basis);
  const auto parity = inversion(basis);
  const Eigen::Vector3d dirs[3] = {{1e-2, 0, 0}, {0, 1e-2, 0}, {0, 0, 1e-2}};
  // Rotation about z, reflection through xz, inversion for x, y, z fields.
  const bool vm[3][3] = {{false, false, true}, {false, true, false}, {true, true, true}};
  const bool ve[3][3] = {{false, false, true}, {true, false, true}, {false, false, false}};
  for (int d = 0; d < 3; ++d) {
    const auto m = zeeman_operator(me, basis, dirs[d], true);
    const auto e = stark_operator(me, basis, dirs[d]);
    CHECK(mj_conserving(m, basis) == vm[0][d]);
    CHECK(commutes(m, sigma) == vm[1][d]);
    CHECK(commutes(m, parity) == vm[2][d]);
    CHECK(mj_conserving(e, basis) == ve[0][d]);
    CHECK(commutes(e, sigma) == ve[1][d]);
    CHECK(commutes(e, parity) == ve[2][d]);
  }
}

TEST_CASE("single-atom system") {
  const auto &db = SpeciesDatabase::builtin();
  MatrixElements me(db);
  const auto basis = rb_basis(59, 60, 3);
  SingleAtomSystem free(me, basis, {});
  free.diagonalize();
  const auto e0 = unperturbed_energies_ghz(db, basis);
  CHECK((free.energies() - e0).cwiseAbs().maxCoeff() == 0.0);
  CHECK(free.blocks().size() == basis.size());

  SingleAtomSystem sys(me, basis, FieldConfig{{0.5, 0, 1.0}, {0, 0, 1e-4}, true});
  CHECK(sys.is_real());
  sys.diagonalize();
  const auto v = sys.real_vectors();
  CHECK((v.transpose() * v - Eigen::MatrixXd::Identity(v.cols(), v.cols())).cwiseAbs().maxCoeff() < 1e-12);
  const Eigen::MatrixXcd h = sys.hamiltonian();
  const Eigen::MatrixXcd back = sys.vectors() * sys.energies().cast<cd>().asDiagonal() * sys.vectors().adjoint();
  CHECK((back - h).cwiseAbs().maxCoeff() < 1e-9);

  SingleAtomSystem cplx(me, basis, FieldConfig{{0, 1.0, 0}, Eigen::Vector3d::Zero(), true});
  CHECK_FALSE(cplx.is_real());
  cplx.diagonalize();
  CHECK_THROWS_AS(cplx.real_vectors(), ConfigError);
  CHECK(hermitian_defect(cplx.hamiltonian()) <= 1e-12 * cplx.hamiltonian().cwiseAbs().maxCoeff());
  FieldConfig bad;
  bad.efield_v_per_m.x() = std::nan("");
  CHECK_THROWS_AS(SingleAtomSystem(me, basis, bad), ConfigError);
}

TEST_CASE("field maps") {
  const auto &db = SpeciesDatabase::builtin();
  MatrixElements me(db);
  const auto basis = rb_basis(59, 60, 3);
  const auto map = field_map(me, basis, FieldKind::Electric, {0.0, 1.0, 2.0}, {0, 0, 1});
  REQUIRE(map.points.size() == 3);
  const auto e0 = unperturbed_energies_ghz(db, basis);
  for (std::size_t k = 0; k < basis.size(); ++k) {
    CHECK(map.points[0].energies_ghz[k] == e0(static_cast<Eigen::Index>(k)));
    CHECK(map.points[0].overlaps[k] == 1.0);
  }
  std::ostringstream os;
  write_field_map_csv(os, map);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "field_mV_per_cm,energy_GHz,label,overlap");
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  CHECK(rows == static_cast<int>(3 * basis.size()));
  std::ostringstream again;
  write_field_map_csv(again, field_map(me, basis, FieldKind::Electric, {0.0, 1.0, 2.0}, {0, 0, 1}));
  CHECK(again.str() == os.str());

  // A failing point does not stop the scan.
  const auto partial = field_map(me, basis, FieldKind::Electric, {0.0, std::nan(""), 1.0}, {0, 0, 1});
  CHECK(partial.points[0].ok);
  CHECK_FALSE(partial.points[1].ok);
  CHECK(partial.points[2].ok);

  // Magnetic scan along z with a background field equals a direct build.
  FieldConfig bg;
  bg.bfield_tesla = {0.002, 0, 0.001};
  const auto mag = field_map(me, basis, FieldKind::Magnetic, {0.003}, {0, 0, 1}, bg);
  SingleAtomSystem direct(me, basis, FieldConfig{Eigen::Vector3d::Zero(), {0.002, 0, 0.004}, true});
  direct.diagonalize();
  for (std::size_t k = 0; k < basis.size(); ++k)
    CHECK(near(mag.points[0].energies_ghz[k], direct.energies()(static_cast<Eigen::Index>(k)), 1e-14, 1e-9));
}

TEST_CASE("polarizability converges with the n window") {
  const auto &db = SpeciesDatabase::builtin();
  MatrixElements me(db);
  const auto s = make_state("Rb", 60, 0, 0.5, 0.5);
  auto alpha = [&](int dn) {
    SingleBasisSpec spec;
    spec.species = "Rb";
    spec.n_min = 60 - dn;
    spec.n_max = 60 + dn;
    spec.l_max = 4;
    spec.mj_values = {1_h};
    const auto basis = build_single_basis(db, spec);
    const double e0 = level_energy(db.species("Rb"), s).ghz();
    // Least-squares fit of E - E0 = -alpha F^2 / 2 on small fields.
    double num = 0, den = 0;
    for (double f : {0.5, 1.0, 1.5, 2.0}) {
      SingleAtomSystem sys(me, basis, FieldConfig{{0, 0, f}, Eigen::Vector3d::Zero(), true});
      sys.diagonalize();
      Eigen::Index k = 0;
      sys.vectors().row(sys.index_of(s)).cwiseAbs().maxCoeff(&k);
      num += (sys.energies()(k) - e0) * f * f;
      den += f * f * f * f;
    }
    return -2.0 * num / den;
  };
  const double a3 = alpha(3), a5 = alpha(5);
  CHECK(a3 > 0.0);
  CHECK(near(a5, a3, 0.01, 0));
}

TEST_CASE("Stark fan of a hydrogen-like manifold") {
  const auto &db = SpeciesDatabase::builtin();
  MatrixElements me(db);
  SingleBasisSpec spec;
  spec.species = "Na";
  spec.n_min = 41;
  spec.n_max = 43;
  spec.l_max = 42;
  spec.mj_values = {1_h};
  const auto basis = build_single_basis(db, spec);
  const double center = level_energy(db.species("Na"), 42, 20, 41_h).ghz();
  auto width = [&](double f) {
    SingleAtomSystem sys(me, basis, FieldConfig{{0, 0, f}, Eigen::Vector3d::Zero(), true});
    sys.diagonalize();
    double lo = 1e300, hi = -1e300;
    for (Eigen::Index k = 0; k < sys.energies().size(); ++k) {
      Eigen::Index arg = 0;
      sys.vectors().col(k).cwiseAbs().maxCoeff(&arg);
      const auto &st = basis[arg];
      if (st.n == 42 && st.l >= 3) {
        lo = std::min(lo, sys.energies()(k));
        hi = std::max(hi, sys.energies()(k));
      }
    }
    return std::pair(hi - lo, 0.5 * (hi + lo) - center);
  };
  // Linear fan below the Inglis-Teller field: width tracks 3 n (n - 1) e a0 F.
  const auto [w1, c1] = width(50.0);
  const auto [w2, c2] = width(100.0);
  CHECK(near(w2 / w1, 2.0, 0.05, 0));
  CHECK(near(w1, 3.0 * 42 * 41 * kStark * 50.0, 0.1, 0));
}
