#include "rydpair/pair.hpp"

#include "rydpair/eigen_solver.hpp"
#include "rydpair/errors.hpp"
#include "rydpair/geometry.hpp"
#include "rydpair/units.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <set>

namespace rydpair {

namespace {

constexpr double kHartreeGhz = units::hartree / units::planck * 1e-9;
// Eigenvalues closer than this are treated as one degenerate level (GHz).
constexpr double kDegeneracyGhz = 1e-8;

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return std::round(r);
}

int sign_of(int exponent) { return exponent % 2 == 0 ? 1 : -1; }

// Reflection phase (-1)^(l + mj - j) of one atom.
int reflection_phase(const StateOne &s) { return sign_of(s.l + (s.mj - s.j).as_int()); }

// The orbit sums below rely on each term being bitwise invariant under the
// symmetry operations, so the q and kappa sums are evaluated in symmetric
// pairs: (A_q B_-q + A_-q B_q) and (V_k1k2 + V_k2k1).
template <typename A, typename B> double kappa_term(int k1, int k2, A &&a, B &&b) {
  const int kmin = std::min(k1, k2);
  double sum = multipole_weight(k1, k2, 0) * (a(k1, 0) * b(k2, 0));
  for (int q = 1; q <= kmin; ++q) {
    const double pair = a(k1, q) * b(k2, -q) + a(k1, -q) * b(k2, q);
    sum += multipole_weight(k1, k2, q) * pair;
  }
  return k2 % 2 ? -sum : sum;
}

template <typename A, typename B> double order_term(int rho, A &&a, B &&b) {
  double total = 0.0;
  for (int k1 = 1; k1 <= rho - 2; ++k1) {
    const int k2 = rho - 1 - k1;
    if (k1 > k2) break;
    double v = kappa_term(k1, k2, a, b);
    if (k1 < k2) v = v + kappa_term(k2, k1, a, b);
    total += v;
  }
  return total;
}

SparseMatrix from_triplets(Eigen::Index rows, Eigen::Index cols, std::vector<Eigen::Triplet<double>> &t) {
  SparseMatrix m(rows, cols);
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

SparseMatrix dense_to_sparse(const Eigen::MatrixXd &d) {
  std::vector<Eigen::Triplet<double>> t;
  for (Eigen::Index i = 0; i < d.rows(); ++i)
    for (Eigen::Index k = 0; k < d.cols(); ++k)
      if (d(i, k) != 0.0) t.emplace_back(i, k, d(i, k));
  return from_triplets(d.rows(), d.cols(), t);
}

struct Window {
  int n_min, n_max, l_min, l_max;
  bool contains(const StateOne &s) const { return s.n >= n_min && s.n <= n_max && s.l >= l_min && s.l <= l_max; }
};

Window window_for(const std::vector<StateOne> &targets, int dn, int dl) {
  Window w{1 << 30, 0, 1 << 30, 0};
  for (const auto &t : targets) {
    w.n_min = std::min(w.n_min, t.n - dn);
    w.n_max = std::max(w.n_max, t.n + dn);
    w.l_min = std::min(w.l_min, t.l - dl);
    w.l_max = std::max(w.l_max, t.l + dl);
  }
  w.n_min = std::max(w.n_min, 1);
  w.l_min = std::max(w.l_min, 0);
  return w;
}

// Index of the eigenvector with the largest weight on bare state `row`.
Eigen::Index leading_eigenvector(const Eigen::MatrixXd &v, Eigen::Index row) {
  Eigen::Index k = 0;
  v.row(row).cwiseAbs().maxCoeff(&k);
  return k;
}

} // namespace

std::string StateTwo::label() const { return first.label() + "; " + second.label(); }

void StateTwo::validate() const {
  first.validate();
  second.validate();
}

void PairBasisSpec::validate() const {
  target.validate();
  if (delta_n < 0 || delta_l < 0 || single_delta_n < 0 || single_delta_l < 0) {
    throw ConfigError("basis windows must be non-negative");
  }
  if (!(energy_window_ghz > 0.0)) throw ConfigError("energy window must be positive");
  if (order < 3 || order > 8) throw ConfigError("multipole order must lie between 3 and 8");
}

const SparseMatrix &AtomSet::p(int kappa, int q) const {
  const auto it = multipole.find({kappa, q});
  if (it == multipole.end()) throw ConfigError("multipole operator not prepared");
  return it->second;
}

double multipole_weight(int kappa1, int kappa2, int q) {
  return std::sqrt(binomial(kappa1 + kappa2, kappa1 + q) * binomial(kappa1 + kappa2, kappa2 + q));
}

double multipole_coupling(MatrixElements &me, const StateTwo &bra, const StateTwo &ket, int kappa1, int kappa2) {
  auto a = [&](int k, int q) { return me.multipole(bra.first, ket.first, k, q); };
  auto b = [&](int k, int q) { return me.multipole(bra.second, ket.second, k, q); };
  return kappa_term(kappa1, kappa2, a, b);
}

PairSystem::PairSystem(MatrixElements &me, PairBasisSpec spec, FieldConfig lab_fields, double theta)
    : spec_(std::move(spec)), lab_fields_(std::move(lab_fields)), theta_(theta) {
  spec_.validate();
  lab_fields_.validate();
  check_interaction_angle(theta_);
  require_xz_plane(lab_fields_);
  calc_fields_ = rotate_fields(lab_fields_, theta_);
  dressed_ = spec_.dressed && !lab_fields_.is_zero();
  db_ = &me.database();
  method_ = me.method();
  grid_ = me.grid();

  const bool homo = homonuclear();
  const bool zero_fields = lab_fields_.is_zero();
  use_inversion_ = spec_.symmetry.inversion && homo && zero_fields;
  use_reflection_ = spec_.symmetry.reflection && zero_fields;
  use_permutation_ = spec_.symmetry.permutation && homo && spec_.order == 3;

  build_atoms(me);
  build_products();
  build_product_operators(me);
  symmetrize();

  SparseMatrix pattern = h0_;
  for (const auto &[rho, c] : c_) pattern += c;
  blocks_ = sparse_blocks(pattern);

  const auto &m1 = db_->species(spec_.target.first.species);
  const auto &m2 = db_->species(spec_.target.second.species);
  leroy_radius_ = leroy_radius(m1, spec_.target.first, m2, spec_.target.second, method_, grid_);
}

void PairSystem::build_atoms(MatrixElements &me) {
  const auto &t = spec_.target;
  const bool homo = homonuclear();
  auto make_atom = [&](const std::string &species, const std::vector<StateOne> &targets) {
    auto atom = std::make_shared<AtomSet>();
    atom->species = species;
    const Window w = window_for(targets, spec_.delta_n, spec_.delta_l);
    if (!dressed_) {
      SingleBasisSpec sb;
      sb.species = species;
      sb.n_min = w.n_min;
      sb.n_max = w.n_max;
      sb.l_min = w.l_min;
      sb.l_max = w.l_max;
      atom->labels = build_single_basis(*db_, sb);
      atom->energies_ghz = unperturbed_energies_ghz(*db_, atom->labels);
      return atom;
    }
    const Window wide = window_for(targets, spec_.delta_n + spec_.single_delta_n, spec_.delta_l + spec_.single_delta_l);
    SingleBasisSpec sb;
    sb.species = species;
    sb.n_min = wide.n_min;
    sb.n_max = wide.n_max;
    sb.l_min = 0;
    sb.l_max = wide.l_max;
    atom->bare_basis = build_single_basis(*db_, sb);
    atom->dressed = true;

    SingleAtomSystem calc(me, atom->bare_basis, calc_fields_);
    calc.diagonalize();
    const Eigen::MatrixXd v = calc.real_vectors();
    std::vector<int> keep;
    for (Eigen::Index k = 0; k < v.cols(); ++k) {
      Eigen::Index row = 0;
      v.col(k).cwiseAbs().maxCoeff(&row);
      const StateOne &lead = atom->bare_basis[row];
      if (!w.contains(lead)) continue;
      keep.push_back(static_cast<int>(k));
      atom->labels.push_back(lead);
    }
    atom->energies_ghz.resize(static_cast<Eigen::Index>(keep.size()));
    atom->vectors.resize(v.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t c = 0; c < keep.size(); ++c) {
      atom->energies_ghz(static_cast<Eigen::Index>(c)) = calc.energies()(keep[c]);
      atom->vectors.col(static_cast<Eigen::Index>(c)) = v.col(keep[c]);
    }
    auto lab = std::make_shared<SingleAtomSystem>(me, atom->bare_basis, lab_fields_);
    lab->diagonalize();
    lab_systems_[species] = lab;
    return atom;
  };

  if (homo) {
    atom1_ = atom2_ = make_atom(t.first.species, {t.first, t.second});
  } else {
    atom1_ = make_atom(t.first.species, {t.first});
    atom2_ = make_atom(t.second.species, {t.second});
  }

  auto energy_of = [&](const AtomSet &atom, const StateOne &s) {
    if (!dressed_) return level_energy(db_->species(s.species), s).ghz();
    const auto &lab = *lab_systems_.at(atom.species);
    const Eigen::Index k = leading_eigenvector(lab.real_vectors(), lab.index_of(s));
    return lab.energies()(k);
  };
  target_energy_ = energy_of(*atom1_, t.first) + energy_of(*atom2_, t.second);
}

void PairSystem::build_products() {
  const auto &a1 = *atom1_;
  const auto &a2 = *atom2_;
  std::vector<std::pair<int, int>> products;
  for (std::size_t i = 0; i < a1.labels.size(); ++i) {
    for (std::size_t j = 0; j < a2.labels.size(); ++j) {
      const double e = a1.energies_ghz(static_cast<Eigen::Index>(i)) + a2.energies_ghz(static_cast<Eigen::Index>(j));
      if (std::abs(e - target_energy_) > spec_.energy_window_ghz) continue;
      if (!spec_.m_values.empty()) {
        const HalfInteger m = a1.labels[i].mj + a2.labels[j].mj;
        if (std::find(spec_.m_values.begin(), spec_.m_values.end(), m) == spec_.m_values.end()) continue;
      }
      products.emplace_back(static_cast<int>(i), static_cast<int>(j));
    }
  }
  if (products.empty()) throw ConfigError("the pair basis is empty; widen the windows");

  // Keep only single-atom states that occur in some product.
  auto compress = [](AtomSet &atom, const std::vector<char> &used) {
    std::vector<int> map(atom.labels.size(), -1);
    std::vector<StateOne> labels;
    std::vector<double> energies;
    std::vector<Eigen::Index> cols;
    for (std::size_t i = 0; i < atom.labels.size(); ++i) {
      if (!used[i]) continue;
      map[i] = static_cast<int>(labels.size());
      labels.push_back(atom.labels[i]);
      energies.push_back(atom.energies_ghz(static_cast<Eigen::Index>(i)));
      cols.push_back(static_cast<Eigen::Index>(i));
    }
    if (atom.dressed) {
      Eigen::MatrixXd v(atom.vectors.rows(), static_cast<Eigen::Index>(cols.size()));
      for (std::size_t c = 0; c < cols.size(); ++c) v.col(static_cast<Eigen::Index>(c)) = atom.vectors.col(cols[c]);
      atom.vectors = std::move(v);
    }
    atom.labels = std::move(labels);
    atom.energies_ghz = Eigen::Map<Eigen::VectorXd>(energies.data(), static_cast<Eigen::Index>(energies.size()));
    return map;
  };
  if (atom1_ == atom2_) {
    std::vector<char> used(atom1_->labels.size(), 0);
    for (const auto &[i, j] : products) used[i] = used[j] = 1;
    const auto map = compress(*atom1_, used);
    for (auto &[i, j] : products) {
      i = map[i];
      j = map[j];
    }
  } else {
    std::vector<char> u1(atom1_->labels.size(), 0), u2(atom2_->labels.size(), 0);
    for (const auto &[i, j] : products) u1[i] = u2[j] = 1;
    const auto m1 = compress(*atom1_, u1);
    const auto m2 = compress(*atom2_, u2);
    for (auto &[i, j] : products) {
      i = m1[i];
      j = m2[j];
    }
  }
  products_ = std::move(products);
  product_index_.clear();
  for (std::size_t k = 0; k < products_.size(); ++k) product_index_[products_[k]] = static_cast<int>(k);
}

void PairSystem::build_product_operators(MatrixElements &me) {
  const int kappa_max = spec_.order - 2;
  auto prepare = [&](AtomSet &atom) {
    const auto n = static_cast<Eigen::Index>(atom.labels.size());
    for (int kappa = 1; kappa <= kappa_max; ++kappa) {
      for (int q = -kappa; q <= kappa; ++q) {
        if (!atom.dressed) {
          std::vector<Eigen::Triplet<double>> t;
          for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index k = 0; k < n; ++k) {
              const auto &a = atom.labels[i], &b = atom.labels[k];
              if ((a.mj - b.mj).twice() != 2 * q || std::abs(a.l - b.l) > kappa) continue;
              const double v = me.multipole(a, b, kappa, q);
              if (v != 0.0) t.emplace_back(i, k, v);
            }
          }
          atom.multipole[{kappa, q}] = from_triplets(n, n, t);
        } else {
          const auto nb = static_cast<Eigen::Index>(atom.bare_basis.size());
          std::vector<Eigen::Triplet<double>> t;
          for (Eigen::Index i = 0; i < nb; ++i) {
            for (Eigen::Index k = 0; k < nb; ++k) {
              const auto &a = atom.bare_basis[i], &b = atom.bare_basis[k];
              if ((a.mj - b.mj).twice() != 2 * q || std::abs(a.l - b.l) > kappa) continue;
              const double v = me.multipole(a, b, kappa, q);
              if (v != 0.0) t.emplace_back(i, k, v);
            }
          }
          const SparseMatrix bare = from_triplets(nb, nb, t);
          const Eigen::MatrixXd pw = bare * atom.vectors;
          const Eigen::MatrixXd dressed = atom.vectors.transpose() * pw;
          atom.multipole[{kappa, q}] = dense_to_sparse(dressed);
        }
      }
    }
    if (!atom.dressed && !lab_fields_.is_zero()) {
      SingleAtomSystem sys(me, atom.labels, calc_fields_);
      const Eigen::MatrixXcd &h = sys.hamiltonian();
      if (!is_real(h)) throw ConfigError("single-atom field operator is complex");
      Eigen::MatrixXd f = h.real();
      f.diagonal() -= atom.energies_ghz;
      atom.field = dense_to_sparse(f);
    }
  };
  prepare(*atom1_);
  if (atom2_ != atom1_) prepare(*atom2_);

  const auto &a1 = *atom1_;
  const auto &a2 = *atom2_;
  const auto np = static_cast<Eigen::Index>(products_.size());
  const auto n2 = static_cast<std::size_t>(a2.labels.size());
  std::vector<int> index(a1.labels.size() * n2, -1);
  for (std::size_t k = 0; k < products_.size(); ++k) {
    index[static_cast<std::size_t>(products_[k].first) * n2 + static_cast<std::size_t>(products_[k].second)] =
        static_cast<int>(k);
  }
  auto lookup = [&](int i, int j) { return index[static_cast<std::size_t>(i) * n2 + static_cast<std::size_t>(j)]; };

  // Diagonal energies plus the single-atom field terms of the bare path.
  {
    std::vector<Eigen::Triplet<double>> t;
    const bool with_field = !dressed_ && !lab_fields_.is_zero();
    for (Eigen::Index k = 0; k < np; ++k) {
      const auto [i, j] = products_[k];
      if (!with_field) {
        t.emplace_back(k, k, a1.energies_ghz(i) + a2.energies_ghz(j));
        continue;
      }
      std::set<int> cols;
      for (SparseMatrix::InnerIterator it(a1.field, i); it; ++it)
        if (int c = lookup(static_cast<int>(it.col()), j); c >= 0) cols.insert(c);
      for (SparseMatrix::InnerIterator it(a2.field, j); it; ++it)
        if (int c = lookup(i, static_cast<int>(it.col())); c >= 0) cols.insert(c);
      cols.insert(static_cast<int>(k));
      for (int c : cols) {
        const auto [i2, j2] = products_[c];
        const double f1 = j == j2 ? a1.field.coeff(i, i2) : 0.0;
        const double f2 = i == i2 ? a2.field.coeff(j, j2) : 0.0;
        double v = f1 + f2;
        if (c == k) v = (a1.energies_ghz(i) + a2.energies_ghz(j)) + v;
        if (v != 0.0) t.emplace_back(k, c, v);
      }
    }
    product_h0_ = from_triplets(np, np, t);
  }

  for (int rho = 3; rho <= spec_.order; ++rho) {
    std::vector<Eigen::Triplet<double>> t;
    std::vector<int> cols;
    for (Eigen::Index k = 0; k < np; ++k) {
      const auto [i, j] = products_[k];
      cols.clear();
      for (int k1 = 1; k1 <= rho - 2; ++k1) {
        const int k2 = rho - 1 - k1;
        const int kmin = std::min(k1, k2);
        for (int q = -kmin; q <= kmin; ++q) {
          const SparseMatrix &p1 = a1.p(k1, q);
          const SparseMatrix &p2 = a2.p(k2, -q);
          for (SparseMatrix::InnerIterator it1(p1, i); it1; ++it1) {
            for (SparseMatrix::InnerIterator it2(p2, j); it2; ++it2) {
              const int c = lookup(static_cast<int>(it1.col()), static_cast<int>(it2.col()));
              if (c >= 0) cols.push_back(c);
            }
          }
        }
      }
      std::sort(cols.begin(), cols.end());
      cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
      for (int c : cols) {
        const auto [i2, j2] = products_[c];
        auto a = [&](int kappa, int q) { return a1.p(kappa, q).coeff(i, i2); };
        auto b = [&](int kappa, int q) { return a2.p(kappa, q).coeff(j, j2); };
        const double v = order_term(rho, a, b);
        if (v != 0.0) t.emplace_back(k, c, v);
      }
    }
    product_c_[rho] = from_triplets(np, np, t);
  }
}

void PairSystem::symmetrize() {
  std::map<StateOne, int> index1, index2;
  for (std::size_t i = 0; i < atom1_->labels.size(); ++i) index1[atom1_->labels[i]] = static_cast<int>(i);
  for (std::size_t i = 0; i < atom2_->labels.size(); ++i) index2[atom2_->labels[i]] = static_cast<int>(i);

  // Generators act on product indices: returns (image, phase).
  enum Gen { Inversion = 0, Reflection = 1, Permutation = 2 };
  auto apply = [&](int gen, int k) -> std::pair<int, int> {
    const auto [i, j] = products_[static_cast<std::size_t>(k)];
    const StateOne &s1 = atom1_->labels[i];
    const StateOne &s2 = atom2_->labels[j];
    std::pair<int, int> image;
    int phase = 1;
    if (gen == Reflection) {
      StateOne r1 = s1, r2 = s2;
      r1.mj = -s1.mj;
      r2.mj = -s2.mj;
      const auto f1 = index1.find(r1);
      const auto f2 = index2.find(r2);
      if (f1 == index1.end() || f2 == index2.end()) throw NumericalError("basis not closed under reflection");
      image = {f1->second, f2->second};
      phase = reflection_phase(s1) * reflection_phase(s2);
    } else {
      image = {j, i};
      phase = gen == Inversion ? -sign_of(s1.l + s2.l) : -1;
    }
    const auto it = product_index_.find(image);
    if (it == product_index_.end()) throw NumericalError("basis not closed under a symmetry operation");
    return {it->second, phase};
  };

  struct Orbit {
    std::vector<int> gens;                  // active generator ids
    std::vector<std::pair<int, int>> member; // per subset mask: (product, phase)
  };
  std::vector<Orbit> orbits;
  std::vector<int> orbit_of(products_.size(), -1);
  struct Pending {
    int orbit;
    std::vector<int> chi; // per active generator
    PairState state;
  };
  std::vector<Pending> pending;

  for (std::size_t k0 = 0; k0 < products_.size(); ++k0) {
    if (orbit_of[k0] >= 0) continue;
    const auto [i0, j0] = products_[k0];
    const HalfInteger m = atom1_->labels[i0].mj + atom2_->labels[j0].mj;
    Orbit orbit;
    if (use_inversion_) orbit.gens.push_back(Inversion);
    if (use_reflection_ && m.twice() == 0) orbit.gens.push_back(Reflection);
    if (use_permutation_) orbit.gens.push_back(Permutation);
    const int ng = static_cast<int>(orbit.gens.size());
    orbit.member.resize(std::size_t{1} << ng);
    for (int mask = 0; mask < (1 << ng); ++mask) {
      int k = static_cast<int>(k0), phase = 1;
      for (int g = 0; g < ng; ++g) {
        if (!(mask >> g & 1)) continue;
        const auto [img, ph] = apply(orbit.gens[g], k);
        k = img;
        phase *= ph;
      }
      orbit.member[mask] = {k, phase};
    }
    const int id = static_cast<int>(orbits.size());
    for (const auto &[k, ph] : orbit.member) orbit_of[k] = id;
    // The smallest product index represents the orbit.
    int rep = static_cast<int>(k0);
    for (const auto &[k, ph] : orbit.member) rep = std::min(rep, k);
    for (int chars = 0; chars < (1 << ng); ++chars) {
      std::vector<int> chi(ng);
      for (int g = 0; g < ng; ++g) chi[g] = (chars >> g & 1) ? -1 : 1;
      std::map<int, double> coeff;
      for (int mask = 0; mask < (1 << ng); ++mask) {
        int c = orbit.member[mask].second;
        for (int g = 0; g < ng; ++g)
          if (mask >> g & 1) c *= chi[g];
        coeff[orbit.member[mask].first] += c;
      }
      double norm2 = 0.0;
      for (const auto &[k, c] : coeff) norm2 += c * c;
      if (norm2 == 0.0) continue;
      const double norm = std::sqrt(norm2);
      PairState s;
      s.first = products_[rep].first;
      s.second = products_[rep].second;
      s.m = m;
      s.energy_ghz = atom1_->energies_ghz(s.first) + atom2_->energies_ghz(s.second);
      for (int g = 0; g < ng; ++g) {
        if (orbit.gens[g] == Inversion) s.inversion = chi[g];
        if (orbit.gens[g] == Reflection) s.reflection = chi[g];
        if (orbit.gens[g] == Permutation) s.permutation = chi[g];
      }
      for (const auto &[k, c] : coeff)
        if (c != 0.0) s.components.emplace_back(k, c / norm);
      pending.push_back({id, chi, std::move(s)});
    }
    orbits.push_back(std::move(orbit));
  }

  // Order by symmetry sector, M and energy so that blocks are contiguous.
  std::vector<std::size_t> order(pending.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto &x = pending[a].state, &y = pending[b].state;
    return std::tie(x.inversion, x.reflection, x.permutation, x.m, x.energy_ghz, x.first, x.second) <
           std::tie(y.inversion, y.reflection, y.permutation, y.m, y.energy_ghz, y.first, y.second);
  });
  std::vector<Pending> sorted;
  sorted.reserve(pending.size());
  for (auto i : order) sorted.push_back(std::move(pending[i]));
  std::vector<std::vector<int>> states_of_orbit(orbits.size());
  std::vector<double> norm_of(sorted.size());
  for (std::size_t s = 0; s < sorted.size(); ++s) states_of_orbit[sorted[s].orbit].push_back(static_cast<int>(s));
  // Norms of the unnormalized orbit sums.
  for (std::size_t s = 0; s < sorted.size(); ++s) {
    const auto &orbit = orbits[sorted[s].orbit];
    const int ng = static_cast<int>(orbit.gens.size());
    std::map<int, double> coeff;
    for (int mask = 0; mask < (1 << ng); ++mask) {
      int c = orbit.member[mask].second;
      for (int g = 0; g < ng; ++g)
        if (mask >> g & 1) c *= sorted[s].chi[g];
      coeff[orbit.member[mask].first] += c;
    }
    double n2 = 0.0;
    for (const auto &[k, c] : coeff) n2 += c * c;
    norm_of[s] = std::sqrt(n2);
  }

  auto character = [](const std::vector<int> &chi, int mask) {
    int c = 1;
    for (std::size_t g = 0; g < chi.size(); ++g)
      if (mask >> g & 1) c *= chi[g];
    return c;
  };

  auto transform = [&](const SparseMatrix &op) {
    std::vector<Eigen::Triplet<double>> t;
    std::vector<int> neighbours;
    for (std::size_t o = 0; o < orbits.size(); ++o) {
      const auto &orb = orbits[o];
      neighbours.clear();
      for (const auto &[k, ph] : orb.member)
        for (SparseMatrix::InnerIterator it(op, k); it; ++it) neighbours.push_back(orbit_of[it.col()]);
      std::sort(neighbours.begin(), neighbours.end());
      neighbours.erase(std::unique(neighbours.begin(), neighbours.end()), neighbours.end());
      for (int o2 : neighbours) {
        const auto &orb2 = orbits[o2];
        for (int s : states_of_orbit[o]) {
          for (int s2 : states_of_orbit[o2]) {
            const auto &chi = sorted[s].chi, &chi2 = sorted[s2].chi;
            // A common generator with opposite characters pairs the terms so
            // that symmetry-forbidden elements cancel exactly.
            int g0 = -1, g0b = -1;
            for (std::size_t g = 0; g < orb.gens.size() && g0 < 0; ++g) {
              for (std::size_t h = 0; h < orb2.gens.size(); ++h) {
                if (orb.gens[g] == orb2.gens[h] && chi[g] != chi2[h]) {
                  g0 = static_cast<int>(g);
                  g0b = static_cast<int>(h);
                  break;
                }
              }
            }
            auto term = [&](int mask, int mask2) {
              const auto [k, ph] = orb.member[mask];
              const auto [k2, ph2] = orb2.member[mask2];
              const double c = op.coeff(k, k2);
              if (c == 0.0) return 0.0;
              return (character(chi, mask) * character(chi2, mask2) * ph * ph2) * c;
            };
            double sum = 0.0;
            const int n1 = 1 << orb.gens.size(), n2 = 1 << orb2.gens.size();
            for (int mask = 0; mask < n1; ++mask) {
              if (g0 >= 0 && (mask >> g0 & 1)) continue;
              for (int mask2 = 0; mask2 < n2; ++mask2) {
                if (g0 >= 0) {
                  sum += term(mask, mask2) + term(mask ^ (1 << g0), mask2 ^ (1 << g0b));
                } else {
                  sum += term(mask, mask2);
                }
              }
            }
            if (sum == 0.0) continue;
            t.emplace_back(s, s2, sum / (norm_of[s] * norm_of[s2]));
          }
        }
      }
    }
    const auto n = static_cast<Eigen::Index>(sorted.size());
    return from_triplets(n, n, t);
  };

  h0_ = transform(product_h0_);
  c_.clear();
  for (const auto &[rho, c] : product_c_) c_[rho] = transform(c);
  states_.clear();
  states_.reserve(sorted.size());
  for (auto &p : sorted) states_.push_back(std::move(p.state));
}

SparseMatrix PairSystem::transformation() const {
  std::vector<Eigen::Triplet<double>> t;
  for (std::size_t s = 0; s < states_.size(); ++s)
    for (const auto &[k, c] : states_[s].components) t.emplace_back(k, static_cast<Eigen::Index>(s), c);
  return from_triplets(static_cast<Eigen::Index>(products_.size()), static_cast<Eigen::Index>(states_.size()), t);
}

StateTwo PairSystem::label(std::size_t k) const {
  return {atom1_->labels[states_[k].first], atom2_->labels[states_[k].second]};
}

SparseMatrix PairSystem::hamiltonian(double r_m, std::optional<int> max_order) const {
  if (!(r_m > 0.0)) throw ConfigError("interatomic distance must be positive");
  SparseMatrix h = h0_;
  const double x = units::bohr_radius / r_m;
  for (const auto &[rho, c] : c_) {
    if (max_order && rho > *max_order) continue;
    h += (kHartreeGhz * std::pow(x, rho)) * c;
  }
  return h;
}

std::vector<double> PairSystem::single_probe(const AtomSet &atom, const StateOne &lab) const {
  std::vector<double> out(atom.labels.size(), 0.0);
  if (!atom.dressed) {
    for (const auto &c : rotate_state(lab, theta_)) {
      const auto it = std::find(atom.labels.begin(), atom.labels.end(), c.state);
      if (it != atom.labels.end()) out[static_cast<std::size_t>(it - atom.labels.begin())] = c.coefficient;
    }
    return out;
  }
  // Field-dressed lab state: projection of the bare state onto the degenerate
  // level that carries most of its weight.
  const auto &sys = *lab_systems_.at(atom.species);
  const Eigen::MatrixXd v = sys.real_vectors();
  const Eigen::Index row = sys.index_of(lab);
  const Eigen::Index lead = leading_eigenvector(v, row);
  Eigen::VectorXd state = Eigen::VectorXd::Zero(v.rows());
  for (Eigen::Index k = 0; k < v.cols(); ++k) {
    if (std::abs(sys.energies()(k) - sys.energies()(lead)) <= kDegeneracyGhz) state += v(row, k) * v.col(k);
  }
  state.normalize();
  const Eigen::MatrixXd d = rotation_matrix(atom.bare_basis, theta_);
  const Eigen::VectorXd c = atom.vectors.transpose() * (d * state);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = c(static_cast<Eigen::Index>(i));
  return out;
}

Eigen::VectorXd PairSystem::probe(const StateTwo &lab) const {
  lab.validate();
  if (lab.first.species != atom1_->species || lab.second.species != atom2_->species) {
    throw ConfigError("probe species do not match the pair basis");
  }
  const auto c1 = single_probe(*atom1_, lab.first);
  const auto c2 = atom2_ == atom1_ && lab.second == lab.first ? c1 : single_probe(*atom2_, lab.second);
  Eigen::VectorXd out(static_cast<Eigen::Index>(states_.size()));
  for (std::size_t s = 0; s < states_.size(); ++s) {
    double sum = 0.0;
    for (const auto &[k, c] : states_[s].components) {
      const auto [i, j] = products_[static_cast<std::size_t>(k)];
      sum += c * c1[i] * c2[j];
    }
    out(static_cast<Eigen::Index>(s)) = sum;
  }
  return out;
}

void PairSystem::write_basis_json(std::ostream &os) const {
  nlohmann::ordered_json doc;
  doc["target"] = spec_.target.label();
  doc["theta_deg"] = theta_ * 180.0 / units::pi;
  doc["dressed"] = dressed_;
  doc["order"] = spec_.order;
  doc["delta_n"] = spec_.delta_n;
  doc["delta_l"] = spec_.delta_l;
  doc["energy_window_GHz"] = spec_.energy_window_ghz;
  doc["target_energy_GHz"] = target_energy_;
  doc["symmetries"] = {{"inversion", use_inversion_}, {"reflection", use_reflection_}, {"permutation", use_permutation_}};
  auto &list = doc["states"] = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < states_.size(); ++k) {
    const auto l = label(k);
    nlohmann::ordered_json s;
    s["first"] = l.first.label();
    s["second"] = l.second.label();
    s["M"] = states_[k].m.value();
    s["energy_GHz"] = states_[k].energy_ghz;
    if (states_[k].inversion) s["inversion"] = states_[k].inversion > 0 ? "g" : "u";
    if (states_[k].reflection) s["reflection"] = states_[k].reflection > 0 ? "+" : "-";
    if (states_[k].permutation) s["permutation"] = states_[k].permutation > 0 ? "s" : "a";
    list.push_back(std::move(s));
  }
  os << doc.dump(1) << '\n';
}

std::vector<std::vector<int>> sparse_blocks(const SparseMatrix &pattern) {
  const int n = static_cast<int>(pattern.rows());
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (int k = 0; k < n; ++k) {
    for (SparseMatrix::InnerIterator it(pattern, k); it; ++it) {
      if (it.value() == 0.0) continue;
      const int a = find(k), b = find(static_cast<int>(it.col()));
      if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
  }
  std::vector<std::vector<int>> blocks;
  std::vector<int> slot(n, -1);
  for (int i = 0; i < n; ++i) {
    const int r = find(i);
    if (slot[r] < 0) {
      slot[r] = static_cast<int>(blocks.size());
      blocks.emplace_back();
    }
    blocks[slot[r]].push_back(i);
  }
  return blocks;
}

} // namespace rydpair
