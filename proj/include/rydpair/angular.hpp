#pragma once

#include "rydpair/half_integer.hpp"

#include <Eigen/Dense>

#include <array>

namespace rydpair {

/// Six angular-momentum arguments of a 3j or 6j symbol.
struct WignerSymbolKey {
  std::array<HalfInteger, 6> args{};

  bool operator==(const WignerSymbolKey &) const = default;
};

/// |a - b| <= c <= a + b and a + b + c integer.
bool triangle(HalfInteger a, HalfInteger b, HalfInteger c);

/// Key for (j1 j2 j3; m1 m2 m3); `selection_ok` tells whether the triangle and
/// m-sum conditions hold, i.e. whether the symbol can be nonzero.
struct ThreeJKey : WignerSymbolKey {
  ThreeJKey(HalfInteger j1, HalfInteger j2, HalfInteger j3, HalfInteger m1, HalfInteger m2, HalfInteger m3);
  bool selection_ok = false;
};

/// Key for {j1 j2 j3; j4 j5 j6}; `selection_ok` checks all four triads.
struct SixJKey : WignerSymbolKey {
  SixJKey(HalfInteger j1, HalfInteger j2, HalfInteger j3, HalfInteger j4, HalfInteger j5, HalfInteger j6);
  bool selection_ok = false;
};

enum class WignerMethod {
  Automatic, // exact below the size threshold, recurrence above
  Exact,     // Racah sum in exact integer arithmetic
  Recurrence // Schulten-Gordon three-term recurrence
};

/// Symbols whose summed arguments exceed this use the recurrence.
inline constexpr int kExactArgumentSumLimit = 80;

double wigner_3j(const ThreeJKey &key, WignerMethod method = WignerMethod::Automatic);
double wigner_6j(const SixJKey &key, WignerMethod method = WignerMethod::Automatic);

inline double wigner_3j(HalfInteger j1, HalfInteger j2, HalfInteger j3, HalfInteger m1, HalfInteger m2,
                        HalfInteger m3) {
  return wigner_3j(ThreeJKey(j1, j2, j3, m1, m2, m3));
}
inline double wigner_6j(HalfInteger j1, HalfInteger j2, HalfInteger j3, HalfInteger j4, HalfInteger j5,
                        HalfInteger j6) {
  return wigner_6j(SixJKey(j1, j2, j3, j4, j5, j6));
}

/// Integer-argument convenience overloads.
double wigner_3j(int j1, int j2, int j3, int m1, int m2, int m3);
double wigner_6j(int j1, int j2, int j3, int j4, int j5, int j6);

/// Clebsch-Gordan coefficient <j1 m1; j2 m2 | J M>.
double clebsch_gordan(HalfInteger j1, HalfInteger m1, HalfInteger j2, HalfInteger m2, HalfInteger J, HalfInteger M);

/// Wigner small-d element d^j_{m m'}(theta) = <j m| exp(-i theta J_y) |j m'>.
double wigner_d(HalfInteger j, HalfInteger m, HalfInteger mp, double theta);

/// Full (2j+1)x(2j+1) d-matrix, rows/cols ordered m = -j .. j.
Eigen::MatrixXd wigner_d_matrix(HalfInteger j, double theta);

/// (l || Y_kappa || l').
double reduced_Y(int l, int kappa, int lp);

/// (J || J_1 || J) in units of hbar.
double reduced_J(HalfInteger J);

/// Reduced element in the coupled basis for an operator acting on the orbital
/// part only (commutes with spin).
double reduced_coupled_orbital(int l, HalfInteger s, HalfInteger j, int lp, HalfInteger jp, int kappa,
                               double reduced_orbital);

/// Reduced element in the coupled basis for an operator acting on the spin
/// only (commutes with l).
double reduced_coupled_spin(int l, HalfInteger s, HalfInteger j, HalfInteger sp, HalfInteger jp, int kappa,
                            double reduced_spin);

/// <j mj| T_{kappa q} |j' mj'> from the coupled reduced element.
double wigner_eckart(HalfInteger j, HalfInteger mj, int kappa, int q, HalfInteger jp, HalfInteger mjp,
                     double reduced);

/// Angular multipole element <l s j mj| sqrt(4pi/(2k+1)) Y_{kq} |l' s j' mj'>.
double angular_multipole(int l, HalfInteger j, HalfInteger mj, int kappa, int q, int lp, HalfInteger jp,
                         HalfInteger mjp);

} // namespace rydpair
