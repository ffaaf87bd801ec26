#pragma once

#include "rydpair/species.hpp"

#include <iosfwd>
#include <memory>
#include <vector>

namespace rydpair {

enum class RadialMethod { Numerov, Whittaker };

const char *to_string(RadialMethod m);
RadialMethod radial_method_from_string(const std::string &s);

/// Wave functions live on the lattice x_k = k * step with x = sqrt(r / a0).
/// Sharing the lattice lets two functions be multiplied index by index.
struct GridSpec {
  double step = 0.01;
  bool operator==(const GridSpec &) const = default;
};

/// X(x) = x^{3/2} Psi(r), r in Bohr radii, Psi in a0^{-3/2}.
struct RadialWavefunction {
  StateOne state;
  RadialMethod method = RadialMethod::Numerov;
  double step = 0.01;
  int first_index = 0; // values[0] sits at x = first_index * step
  std::vector<double> values;
  double norm_residual = 0.0;   // |1 - norm| before the final rescale
  bool inner_truncated = false; // inward divergence was cut off
  double truncation_r_a0 = 0.0;
  bool out_of_validated_range = false; // n < 30

  double x(std::size_t k) const { return (first_index + static_cast<double>(k)) * step; }
  double r_a0(std::size_t k) const { return x(k) * x(k); }
  /// Psi_rad at grid point k in a0^{-3/2}.
  double psi(std::size_t k) const;
  int last_index() const { return first_index + static_cast<int>(values.size()) - 1; }
};

/// Marinescu-type model potential in atomic units (Hartree, r in a0).
struct ModelPotential {
  ModelPotential(const SpeciesModel &model, int l, HalfInteger j, double g_s = 2.0023193);

  int Z = 1;
  double a1 = 0, a2 = 0, a3 = 0, a4 = 0;
  double alpha_d = 0.0;
  double r_c = 1.0;
  double g_s = 2.0023193;
  double l_dot_s = 0.0;
  bool spin_orbit = true;

  double coulomb(double r) const;
  double polarization(double r) const;
  double spin_orbit_term(double r) const;
  double operator()(double r) const { return coulomb(r) + polarization(r) + spin_orbit_term(r); }
};

/// Coulomb function from the Whittaker function W_{n*, l+1/2}, on the same
/// lattice as the Numerov solution.
RadialWavefunction whittaker_wavefunction(const SpeciesModel &model, const StateOne &state, GridSpec grid = {});

/// Inward Numerov integration of the model-potential equation in x = sqrt(r)
/// at the externally supplied level energy.
RadialWavefunction numerov_wavefunction(const SpeciesModel &model, const StateOne &state, const LevelEnergy &energy,
                                        GridSpec grid = {}, double g_s = 2.0023193);

/// Variant taking an explicit potential (r in a0 -> Hartree).
RadialWavefunction numerov_wavefunction(const StateOne &state, double energy_hartree,
                                        const std::function<double(double)> &potential, GridSpec grid = {});

RadialWavefunction compute_wavefunction(const SpeciesModel &model, const StateOne &state, RadialMethod method,
                                        GridSpec grid = {}, double g_s = 2.0023193);

/// Memoized wave function (thread safe); the key is species, n, l, j, method and grid.
std::shared_ptr<const RadialWavefunction> cached_wavefunction(const SpeciesModel &model, const StateOne &state,
                                                              RadialMethod method, GridSpec grid = {},
                                                              double g_s = 2.0023193);
void clear_wavefunction_cache();

/// Integral of Psi1 Psi2 r^{2+kappa} dr in units of a0^kappa.
double radial_integral(const RadialWavefunction &a, const RadialWavefunction &b, int kappa);

/// <n l j| r^kappa |n' l' j'> in a0^kappa.
double radial_matrix_element(const SpeciesModel &model_bra, const StateOne &bra, const SpeciesModel &model_ket,
                             const StateOne &ket, int kappa, RadialMethod method = RadialMethod::Numerov,
                             GridSpec grid = {});
inline double radial_matrix_element(const SpeciesModel &model, const StateOne &bra, const StateOne &ket, int kappa,
                                    RadialMethod method = RadialMethod::Numerov, GridSpec grid = {}) {
  return radial_matrix_element(model, bra, model, ket, kappa, method, grid);
}

/// R_LR = 2 (sqrt<r^2>_1 + sqrt<r^2>_2), in meters.
double leroy_radius(const SpeciesModel &m1, const StateOne &s1, const SpeciesModel &m2, const StateOne &s2,
                    RadialMethod method = RadialMethod::Numerov, GridSpec grid = {});

/// Two columns: r (a0), Psi_rad (a0^{-3/2}).
void write_wavefunction(std::ostream &os, const RadialWavefunction &wf);

} // namespace rydpair
