#include "rydpair/fields.hpp"

#include "rydpair/angular.hpp"
#include "rydpair/errors.hpp"
#include "rydpair/units.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <tuple>

namespace rydpair {

namespace {

using cd = std::complex<double>;

// Conversion factors to h*GHz.
const double kStarkGhz = units::ea0 / units::planck * 1e-9;             // per (V/m) per a0
const double kZeemanGhz = units::bohr_magneton / units::planck * 1e-9;  // per tesla per hbar
const double kDiamagneticGhz = units::elementary_charge * units::elementary_charge * units::bohr_radius *
                               units::bohr_radius / (12.0 * units::electron_mass) / units::planck * 1e-9; // per T^2 a0^2

int mj_diff(const StateOne &a, const StateOne &b) { return (a.mj.twice() - b.mj.twice()) / 2; }

// r.F = r_0 F_0 - r_{+1} F_{-1} - r_{-1} F_{+1}: the component of F paired with r_q.
cd paired_component(const SphericalComponents &f, int q) {
  if (q == 0) return f.zero;
  return q == 1 ? -f.minus : -f.plus;
}

} // namespace

void FieldConfig::validate() const {
  if (!efield_v_per_m.allFinite() || !bfield_tesla.allFinite()) throw ConfigError("field components must be finite");
}

SphericalComponents spherical_field_components(const Eigen::Vector3d &v) {
  const double s = 1.0 / std::sqrt(2.0);
  return {-s * cd(v.x(), v.y()), s * cd(v.x(), -v.y()), cd(v.z(), 0.0)};
}

Eigen::Vector3cd cartesian_field(const SphericalComponents &c) {
  const double s = 1.0 / std::sqrt(2.0);
  // F_x = (F_- - F_+)/sqrt2, F_y = i (F_- + F_+)/sqrt2.
  return {s * (c.minus - c.plus), cd(0.0, s) * (c.minus + c.plus), c.zero};
}

std::vector<StateOne> build_single_basis(const SpeciesDatabase &db, const SingleBasisSpec &spec) {
  const SpeciesModel &model = db.species(spec.species);
  if (spec.n_min > spec.n_max || spec.l_min > spec.l_max || spec.l_min < 0) {
    throw ConfigError("empty single-atom basis window");
  }
  struct Entry {
    double e;
    StateOne s;
  };
  std::vector<Entry> entries;
  for (int n = std::max(1, spec.n_min); n <= spec.n_max; ++n) {
    for (int l = spec.l_min; l <= std::min(spec.l_max, n - 1); ++l) {
      for (int tj : {2 * l - 1, 2 * l + 1}) {
        if (tj < 1) continue;
        StateOne level{spec.species, n, l, HalfInteger::from_twice(tj), HalfInteger::from_twice(tj)};
        if (!level.is_valid()) continue;
        double e = 0.0;
        try {
          e = level_energy(model, level).ghz();
        } catch (const InvalidStateError &) {
          continue;
        }
        if (spec.energy_center_ghz && std::abs(e - *spec.energy_center_ghz) > spec.energy_halfwidth_ghz) continue;
        for (int tm = -tj; tm <= tj; tm += 2) {
          const auto mj = HalfInteger::from_twice(tm);
          if (!spec.mj_values.empty() &&
              std::find(spec.mj_values.begin(), spec.mj_values.end(), mj) == spec.mj_values.end()) {
            continue;
          }
          StateOne s = level;
          s.mj = mj;
          entries.push_back({e, s});
        }
      }
    }
  }
  std::sort(entries.begin(), entries.end(), [](const Entry &a, const Entry &b) {
    return std::tie(a.e, a.s.n, a.s.l, a.s.j, a.s.mj) < std::tie(b.e, b.s.n, b.s.l, b.s.j, b.s.mj);
  });
  std::vector<StateOne> out;
  out.reserve(entries.size());
  for (auto &e : entries) out.push_back(std::move(e.s));
  return out;
}

Eigen::VectorXd unperturbed_energies_ghz(const SpeciesDatabase &db, const std::vector<StateOne> &basis) {
  Eigen::VectorXd e(static_cast<Eigen::Index>(basis.size()));
  for (std::size_t i = 0; i < basis.size(); ++i) {
    e(static_cast<Eigen::Index>(i)) = level_energy(db.species(basis[i].species), basis[i]).ghz();
  }
  return e;
}

Eigen::MatrixXcd stark_operator(MatrixElements &me, const std::vector<StateOne> &basis, const Eigen::Vector3d &efield) {
  const auto n = static_cast<Eigen::Index>(basis.size());
  Eigen::MatrixXcd v = Eigen::MatrixXcd::Zero(n, n);
  if (efield.squaredNorm() == 0.0) return v;
  const auto f = spherical_field_components(efield);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < n; ++k) {
      const auto &a = basis[i], &b = basis[k];
      if (std::abs(a.l - b.l) != 1 || a.species != b.species) continue;
      const int q = mj_diff(a, b);
      if (std::abs(q) > 1) continue;
      const double p = me.multipole(a, b, 1, q);
      if (p != 0.0) v(i, k) = -kStarkGhz * p * paired_component(f, q);
    }
  }
  return v;
}

Eigen::MatrixXcd diamagnetic_operator(MatrixElements &me, const std::vector<StateOne> &basis,
                                      const Eigen::Vector3d &bfield) {
  const auto n = static_cast<Eigen::Index>(basis.size());
  Eigen::MatrixXcd v = Eigen::MatrixXcd::Zero(n, n);
  if (bfield.squaredNorm() == 0.0) return v;
  const auto b = spherical_field_components(bfield);
  const double b2 = bfield.squaredNorm();
  const double r3 = std::sqrt(3.0), r32 = std::sqrt(1.5);
  // Coefficient of the rank-2 component q.
  auto rank2 = [&](int q) -> cd {
    switch (q) {
    case 0: return -(b.zero * b.zero + b.plus * b.minus);
    case 1: return r3 * b.zero * b.minus;
    case -1: return r3 * b.zero * b.plus;
    case 2: return -r32 * b.minus * b.minus;
    default: return -r32 * b.plus * b.plus;
    }
  };
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < n; ++k) {
      const auto &x = basis[i], &y = basis[k];
      const int dl = std::abs(x.l - y.l);
      if ((dl != 0 && dl != 2) || x.species != y.species) continue;
      const int q = mj_diff(x, y);
      if (std::abs(q) > 2) continue;
      cd ang = 0.0;
      if (q == 0 && dl == 0) ang += b2 * angular_multipole(x.l, x.j, x.mj, 0, 0, y.l, y.j, y.mj);
      ang += rank2(q) * angular_multipole(x.l, x.j, x.mj, 2, q, y.l, y.j, y.mj);
      if (ang == cd(0.0)) continue;
      v(i, k) = kDiamagneticGhz * me.radial(x, y, 2) * ang;
    }
  }
  return v;
}

Eigen::MatrixXcd zeeman_operator(MatrixElements &me, const std::vector<StateOne> &basis, const Eigen::Vector3d &bfield,
                                 bool include_diamagnetic) {
  const auto n = static_cast<Eigen::Index>(basis.size());
  Eigen::MatrixXcd v = Eigen::MatrixXcd::Zero(n, n);
  if (bfield.squaredNorm() == 0.0) return v;
  const auto b = spherical_field_components(bfield);
  const double gl = me.database().g_l(), gs = me.database().g_s();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < n; ++k) {
      const auto &x = basis[i], &y = basis[k];
      if (x.n != y.n || x.l != y.l || x.species != y.species) continue;
      const int q = mj_diff(x, y);
      if (std::abs(q) > 1) continue;
      const double m = gl * me.momentum(x, MomentumOperator::Orbital, q, y) +
                       gs * me.momentum(x, MomentumOperator::Spin, q, y);
      if (m != 0.0) v(i, k) = kZeemanGhz * m * paired_component(b, q);
    }
  }
  if (include_diamagnetic) v += diamagnetic_operator(me, basis, bfield);
  return v;
}

SingleAtomSystem::SingleAtomSystem(MatrixElements &me, std::vector<StateOne> basis, FieldConfig fields)
    : basis_(std::move(basis)), fields_(std::move(fields)) {
  fields_.validate();
  if (basis_.empty()) throw ConfigError("empty single-atom basis");
  const auto e0 = unperturbed_energies_ghz(me.database(), basis_);
  h_ = e0.cast<cd>().asDiagonal();
  h_ += stark_operator(me, basis_, fields_.efield_v_per_m);
  h_ += zeeman_operator(me, basis_, fields_.bfield_tesla, fields_.diamagnetic);
  real_ = rydpair::is_real(h_);
  blocks_ = connected_blocks(h_);
}

void SingleAtomSystem::diagonalize() {
  const auto n = h_.rows();
  struct Eig {
    double e;
    Eigen::VectorXcd v;
  };
  std::vector<Eig> all;
  all.reserve(static_cast<std::size_t>(n));
  for (const auto &block : blocks_) {
    const auto m = static_cast<Eigen::Index>(block.size());
    Eigen::MatrixXcd sub(m, m);
    for (Eigen::Index a = 0; a < m; ++a)
      for (Eigen::Index b = 0; b < m; ++b) sub(a, b) = h_(block[a], block[b]);
    Eigen::VectorXd values;
    Eigen::MatrixXcd vecs;
    if (real_) {
      auto es = eigh(Eigen::MatrixXd(sub.real()));
      values = es.values;
      vecs = es.vectors.cast<cd>();
    } else {
      auto es = eigh(sub);
      values = es.values;
      vecs = es.vectors;
    }
    for (Eigen::Index k = 0; k < m; ++k) {
      Eigen::VectorXcd full = Eigen::VectorXcd::Zero(n);
      for (Eigen::Index a = 0; a < m; ++a) full(block[a]) = vecs(a, k);
      all.push_back({values(k), std::move(full)});
    }
  }
  std::stable_sort(all.begin(), all.end(), [](const Eig &a, const Eig &b) { return a.e < b.e; });
  energies_.resize(n);
  vectors_.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    energies_(k) = all[k].e;
    vectors_.col(k) = all[k].v;
  }
  done_ = true;
}

Eigen::MatrixXd SingleAtomSystem::real_vectors() const {
  if (!real_) throw ConfigError("single-atom Hamiltonian is complex; fields must lie in the xz plane");
  return vectors_.real();
}

int SingleAtomSystem::index_of(const StateOne &s) const {
  const auto it = std::find(basis_.begin(), basis_.end(), s);
  return it == basis_.end() ? -1 : static_cast<int>(it - basis_.begin());
}

FieldMapResult field_map(MatrixElements &me, const std::vector<StateOne> &basis, FieldKind kind,
                         const std::vector<double> &magnitudes, const Eigen::Vector3d &direction,
                         const FieldConfig &background) {
  if (direction.norm() == 0.0) throw ConfigError("field direction must be nonzero");
  background.validate();
  const Eigen::Vector3d u = direction.normalized();
  FieldMapResult out;
  out.kind = kind;
  out.basis = basis;
  SingleAtomSystem bg(me, basis, background);
  const Eigen::MatrixXcd &h0 = bg.hamiltonian();
  Eigen::MatrixXcd lin, quad;
  if (kind == FieldKind::Electric) {
    lin = stark_operator(me, basis, u);
    quad = Eigen::MatrixXcd::Zero(h0.rows(), h0.cols());
  } else {
    lin = zeeman_operator(me, basis, u, false);
    quad = Eigen::MatrixXcd::Zero(h0.rows(), h0.cols());
    if (background.diamagnetic) {
      quad = diamagnetic_operator(me, basis, u);
      if (background.has_bfield()) {
        const Eigen::Vector3d &b0 = background.bfield_tesla;
        lin += 0.5 * (diamagnetic_operator(me, basis, b0 + u) - diamagnetic_operator(me, basis, b0 - u));
      }
    }
  }
  for (double f : magnitudes) {
    FieldMapPoint pt;
    pt.field = f;
    try {
      if (!std::isfinite(f)) throw ConfigError("non-finite field value");
      const Eigen::MatrixXcd h = h0 + f * lin + (f * f) * quad;
      const auto blocks = connected_blocks(h);
      std::vector<std::tuple<double, int, double>> rows;
      for (const auto &block : blocks) {
        const auto m = static_cast<Eigen::Index>(block.size());
        Eigen::MatrixXcd sub(m, m);
        for (Eigen::Index a = 0; a < m; ++a)
          for (Eigen::Index b = 0; b < m; ++b) sub(a, b) = h(block[a], block[b]);
        Eigen::VectorXd values;
        Eigen::MatrixXd weights;
        if (rydpair::is_real(sub)) {
          auto es = eigh(Eigen::MatrixXd(sub.real()));
          values = es.values;
          weights = es.vectors.array().square();
        } else {
          auto es = eigh(sub);
          values = es.values;
          weights = es.vectors.cwiseAbs2();
        }
        for (Eigen::Index k = 0; k < m; ++k) {
          Eigen::Index arg = 0;
          const double w = weights.col(k).maxCoeff(&arg);
          rows.emplace_back(values(k), block[arg], w);
        }
      }
      std::stable_sort(rows.begin(), rows.end(),
                       [](const auto &a, const auto &b) { return std::get<0>(a) < std::get<0>(b); });
      for (const auto &[e, label, w] : rows) {
        pt.energies_ghz.push_back(e);
        pt.labels.push_back(label);
        pt.overlaps.push_back(w);
      }
    } catch (const std::exception &ex) {
      pt.ok = false;
      pt.error = ex.what();
    }
    out.points.push_back(std::move(pt));
  }
  return out;
}

void write_field_map_csv(std::ostream &os, const FieldMapResult &map) {
  const bool electric = map.kind == FieldKind::Electric;
  os << (electric ? "field_mV_per_cm" : "field_G") << ",energy_GHz,label,overlap\n";
  const auto old = os.precision(12);
  for (const auto &pt : map.points) {
    if (!pt.ok) continue;
    const double f = electric ? pt.field * 10.0 : pt.field * 1e4;
    for (std::size_t k = 0; k < pt.energies_ghz.size(); ++k) {
      os << f << ',' << pt.energies_ghz[k] << ',' << map.basis[pt.labels[k]].label() << ',' << pt.overlaps[k] << '\n';
    }
  }
  os.precision(old);
}

} // namespace rydpair
