#pragma once

#include "rydpair/eigen_solver.hpp"
#include "rydpair/operators.hpp"

#include <Eigen/Dense>

#include <complex>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace rydpair {

/// Static homogeneous fields. E in V/m, B in tesla.
struct FieldConfig {
  Eigen::Vector3d efield_v_per_m = Eigen::Vector3d::Zero();
  Eigen::Vector3d bfield_tesla = Eigen::Vector3d::Zero();
  bool diamagnetic = true;

  bool has_efield() const { return efield_v_per_m.squaredNorm() > 0.0; }
  bool has_bfield() const { return bfield_tesla.squaredNorm() > 0.0; }
  bool is_zero() const { return !has_efield() && !has_bfield(); }
  /// Throws ConfigError on non-finite components.
  void validate() const;
};

/// F_{+1}, F_{-1}, F_0 with F_{+-1} = -+(F_x +- i F_y)/sqrt2.
struct SphericalComponents {
  std::complex<double> plus, minus, zero;
};

SphericalComponents spherical_field_components(const Eigen::Vector3d &v);
Eigen::Vector3cd cartesian_field(const SphericalComponents &c);

/// Single-atom basis: all valid |n l j mj> with n in [n_min, n_max],
/// l <= l_max, optional mj whitelist and optional energy window.
struct SingleBasisSpec {
  std::string species;
  int n_min = 1;
  int n_max = 1;
  int l_min = 0;
  int l_max = 0;
  std::vector<HalfInteger> mj_values; // empty: all
  std::optional<double> energy_center_ghz;
  double energy_halfwidth_ghz = 0.0;
};

/// States sorted by (energy, n, l, j, mj).
std::vector<StateOne> build_single_basis(const SpeciesDatabase &db, const SingleBasisSpec &spec);

/// Operator matrices below are in units of h*GHz.
Eigen::VectorXd unperturbed_energies_ghz(const SpeciesDatabase &db, const std::vector<StateOne> &basis);

/// -d.E with d = e r.
Eigen::MatrixXcd stark_operator(MatrixElements &me, const std::vector<StateOne> &basis, const Eigen::Vector3d &efield);

/// (muB/hbar)(g_l l + g_s s).B, plus the diamagnetic term if requested.
Eigen::MatrixXcd zeeman_operator(MatrixElements &me, const std::vector<StateOne> &basis, const Eigen::Vector3d &bfield,
                                 bool include_diamagnetic);

/// |d x B|^2 / (8 m_e).
Eigen::MatrixXcd diamagnetic_operator(MatrixElements &me, const std::vector<StateOne> &basis,
                                      const Eigen::Vector3d &bfield);

/// Atom-field Hamiltonian H = diag(E_nlj) + V_e + V_m and its eigenstates.
class SingleAtomSystem {
public:
  SingleAtomSystem(MatrixElements &me, std::vector<StateOne> basis, FieldConfig fields);

  const std::vector<StateOne> &basis() const { return basis_; }
  const FieldConfig &fields() const { return fields_; }
  const Eigen::MatrixXcd &hamiltonian() const { return h_; }
  bool is_real() const { return real_; }

  /// Diagonalizes each connected block of H; results sorted by energy.
  void diagonalize();
  bool diagonalized() const { return done_; }
  const Eigen::VectorXd &energies() const { return energies_; }
  const Eigen::MatrixXcd &vectors() const { return vectors_; }
  /// Eigenvectors as a real matrix; throws ConfigError if H is complex.
  Eigen::MatrixXd real_vectors() const;
  /// Connected blocks of H (indices into the basis).
  const std::vector<std::vector<int>> &blocks() const { return blocks_; }

  int index_of(const StateOne &s) const;

private:
  std::vector<StateOne> basis_;
  FieldConfig fields_;
  Eigen::MatrixXcd h_;
  bool real_ = true;
  bool done_ = false;
  Eigen::VectorXd energies_;
  Eigen::MatrixXcd vectors_;
  std::vector<std::vector<int>> blocks_;
};

enum class FieldKind { Electric, Magnetic };

struct FieldMapPoint {
  double field = 0.0; // V/m or tesla
  bool ok = true;
  std::string error;
  std::vector<double> energies_ghz;
  std::vector<int> labels; // basis index of the leading character
  std::vector<double> overlaps; // weight of the leading character
};

struct FieldMapResult {
  FieldKind kind = FieldKind::Electric;
  std::vector<StateOne> basis;
  std::vector<FieldMapPoint> points;
};

/// Scans the field magnitude along a fixed direction on top of `background`.
/// A failing point is recorded and the scan continues.
FieldMapResult field_map(MatrixElements &me, const std::vector<StateOne> &basis, FieldKind kind,
                         const std::vector<double> &magnitudes, const Eigen::Vector3d &direction,
                         const FieldConfig &background = {});

/// Columns: field (mV/cm or G), energy_GHz, label, overlap.
void write_field_map_csv(std::ostream &os, const FieldMapResult &map);

} // namespace rydpair
