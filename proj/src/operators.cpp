#include "rydpair/operators.hpp"

#include "rydpair/angular.hpp"
#include "rydpair/errors.hpp"

#include <cmath>

namespace rydpair {

namespace {

const HalfInteger kSpin = HalfInteger::from_twice(1);

bool j_triangle(HalfInteger j, HalfInteger jp, int kappa) {
  return triangle(j, jp, HalfInteger::from_int(kappa));
}

} // namespace

bool multipole_allowed(const StateOne &bra, const StateOne &ket, int kappa, int q) {
  if (bra.species != ket.species || kappa < 0 || std::abs(q) > kappa) return false;
  if ((bra.l + ket.l + kappa) % 2 != 0) return false;
  if (bra.l + ket.l < kappa || std::abs(bra.l - ket.l) > kappa) return false;
  if (!j_triangle(bra.j, ket.j, kappa)) return false;
  return bra.mj == ket.mj + HalfInteger::from_int(q);
}

bool momentum_allowed(const StateOne &bra, const StateOne &ket, int q) {
  if (bra.species != ket.species || std::abs(q) > 1) return false;
  if (bra.n != ket.n || bra.l != ket.l) return false;
  if (!j_triangle(bra.j, ket.j, 1)) return false;
  return bra.mj == ket.mj + HalfInteger::from_int(q);
}

MatrixElements::MatrixElements(const SpeciesDatabase &db, RadialMethod method, GridSpec grid,
                               std::shared_ptr<ElementCache> cache)
    : db_(&db), method_(method), grid_(grid), cache_(cache ? std::move(cache) : std::make_shared<ElementCache>()) {}

double MatrixElements::radial(const StateOne &bra, const StateOne &ket, int kappa) {
  if (bra.species != ket.species) throw ConfigError("radial element between different species");
  const auto key = MultipoleElementKey::make(bra, ket, kappa, method_);
  return cache_->get_or_compute(key, [&] {
    const SpeciesModel &model = db_->species(bra.species);
    // Evaluate in canonical order so the stored value does not depend on the caller.
    StateOne a = bra, b = ket;
    if (std::tuple(b.n, b.l, b.j.twice()) < std::tuple(a.n, a.l, a.j.twice())) std::swap(a, b);
    return radial_matrix_element(model, a, b, kappa, method_, grid_);
  });
}

double MatrixElements::multipole(const StateOne &bra, const StateOne &ket, int kappa, int q, bool cull) {
  if (cull && !multipole_allowed(bra, ket, kappa, q)) return 0.0;
  if (bra.species != ket.species) return 0.0;
  const double ang = angular_multipole(bra.l, bra.j, bra.mj, kappa, q, ket.l, ket.j, ket.mj);
  if (ang == 0.0 && cull) return 0.0;
  const double value = radial(bra, ket, kappa) * ang;
  return value == 0.0 ? 0.0 : value;
}

double MatrixElements::momentum(const StateOne &bra, MomentumOperator op, int q, const StateOne &ket) {
  if (!momentum_allowed(bra, ket, q)) return 0.0;
  const int l = bra.l;
  double reduced = 0.0;
  if (op == MomentumOperator::Orbital) {
    const double lred = std::sqrt(static_cast<double>(l) * (l + 1) * (2 * l + 1));
    reduced = reduced_coupled_orbital(l, kSpin, bra.j, l, ket.j, 1, lred);
  } else {
    reduced = reduced_coupled_spin(l, kSpin, bra.j, kSpin, ket.j, 1, reduced_J(kSpin));
  }
  const double value = wigner_eckart(bra.j, bra.mj, 1, q, ket.j, ket.mj, reduced);
  return value == 0.0 ? 0.0 : value;
}

} // namespace rydpair
