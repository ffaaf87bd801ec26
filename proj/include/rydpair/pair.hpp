#pragma once

#include "rydpair/fields.hpp"
#include "rydpair/operators.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace rydpair {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Product state |first; second>. The atoms may belong to different species.
struct StateTwo {
  StateOne first;
  StateOne second;

  HalfInteger total_m() const { return first.mj + second.mj; }
  int parity() const { return (first.l + second.l) % 2 ? -1 : 1; }
  bool homonuclear() const { return first.species == second.species; }
  std::string label() const;
  void validate() const;
  auto operator<=>(const StateTwo &) const = default;
};

/// Which symmetrizations to apply where they are exact. Inversion and
/// permutation need a homonuclear pair, inversion and reflection need zero
/// fields, permutation needs pure dipole-dipole interaction, and reflection
/// acts on the M = 0 states only.
struct SymmetryOptions {
  bool inversion = true;
  bool reflection = true;
  bool permutation = true;
};

struct PairBasisSpec {
  StateTwo target;
  int delta_n = 2;                   // |n - n_target| per atom
  int delta_l = 2;                   // |l - l_target| per atom
  double energy_window_ghz = 30.0;   // |E_pair - E_target|
  int order = 3;                     // largest rho = kappa1 + kappa2 + 1 kept
  std::vector<HalfInteger> m_values; // allowed M = mj1 + mj2; empty: all
  SymmetryOptions symmetry;
  bool dressed = true;               // field-dressed pair basis when fields are present
  int single_delta_n = 4;            // single-atom window for the dressing
  int single_delta_l = 4;
  void validate() const;
};

/// One symmetry-adapted pair state: a normalized combination over the orbit
/// of a representative product state. Tags are +1/-1, or 0 when unused.
struct PairState {
  int first = 0, second = 0; // representative, indices into the atom sets
  HalfInteger m;
  int inversion = 0;   // p: +1 gerade, -1 ungerade
  int reflection = 0;  // d
  int permutation = 0; // f
  double energy_ghz = 0.0;
  std::vector<std::pair<int, double>> components; // product index, coefficient
};

/// States available to one atom: bare levels, or eigenstates of the
/// single-atom field Hamiltonian labeled by their leading bare component.
struct AtomSet {
  std::string species;
  std::vector<StateOne> labels;
  Eigen::VectorXd energies_ghz;
  bool dressed = false;
  std::vector<StateOne> bare_basis; // dressed only
  Eigen::MatrixXd vectors;          // dressed only: column k is state k in bare_basis
  std::map<std::pair<int, int>, SparseMatrix> multipole; // (kappa, q) in e a0^kappa
  SparseMatrix field; // bare basis with fields: single-atom field operator (GHz)

  const SparseMatrix &p(int kappa, int q) const;
};

/// sqrt(C(k1+k2, k1+q) C(k1+k2, k2+q)).
double multipole_weight(int kappa1, int kappa2, int q);

/// Pair multipole coupling of order (kappa1, kappa2) between product states,
/// with the interatomic axis along z, in e^2 a0^(kappa1+kappa2).
double multipole_coupling(MatrixElements &me, const StateTwo &bra, const StateTwo &ket, int kappa1, int kappa2);

/// Pair Hamiltonian ingredients in the calculation frame:
/// H(R) = H0 + F + sum_rho C_rho E_h (a0 / R)^rho.
class PairSystem {
public:
  /// Fields are given in the lab frame and must lie in the xz plane; theta
  /// is the angle between the interatomic axis and the lab z axis.
  PairSystem(MatrixElements &me, PairBasisSpec spec, FieldConfig lab_fields = {}, double theta = 0.0);

  const PairBasisSpec &spec() const { return spec_; }
  const FieldConfig &lab_fields() const { return lab_fields_; }
  const FieldConfig &calc_fields() const { return calc_fields_; }
  double theta() const { return theta_; }
  bool dressed() const { return dressed_; }
  bool homonuclear() const { return spec_.target.homonuclear(); }

  const AtomSet &atom(int which) const { return which == 0 ? *atom1_ : *atom2_; }
  std::size_t product_size() const { return products_.size(); }
  std::pair<int, int> product(std::size_t k) const { return products_[k]; }

  std::size_t size() const { return states_.size(); }
  const std::vector<PairState> &states() const { return states_; }
  StateTwo label(std::size_t k) const;

  /// Pair energy of the target, bare or field-dressed (GHz).
  double target_energy_ghz() const { return target_energy_; }

  /// Diagonal plus field part (GHz) and the coefficient of each order in
  /// units of E_h a0^rho, all in the symmetrized basis.
  const SparseMatrix &h0() const { return h0_; }
  const std::map<int, SparseMatrix> &interaction() const { return c_; }
  /// Product-basis counterparts.
  const SparseMatrix &product_h0() const { return product_h0_; }
  const std::map<int, SparseMatrix> &product_interaction() const { return product_c_; }
  /// Columns: symmetrized states in the product basis.
  SparseMatrix transformation() const;

  /// H(R) in GHz with R in meters.
  SparseMatrix hamiltonian(double r_m, std::optional<int> max_order = std::nullopt) const;

  /// Connected blocks of the full nonzero pattern.
  const std::vector<std::vector<int>> &blocks() const { return blocks_; }

  /// The lab-frame state rotated into the calculation frame (and dressed by
  /// the fields when applicable), projected onto the basis.
  Eigen::VectorXd probe(const StateTwo &lab) const;

  /// Le Roy radius of the target (meters).
  double leroy_radius_m() const { return leroy_radius_; }

  void write_basis_json(std::ostream &os) const;

private:
  void build_atoms(MatrixElements &me);
  void build_products();
  void build_product_operators(MatrixElements &me);
  void symmetrize();
  std::vector<double> single_probe(const AtomSet &atom, const StateOne &lab) const;

  PairBasisSpec spec_;
  FieldConfig lab_fields_, calc_fields_;
  double theta_ = 0.0;
  bool dressed_ = false;
  std::shared_ptr<AtomSet> atom1_, atom2_;
  std::vector<std::pair<int, int>> products_;
  std::map<std::pair<int, int>, int> product_index_;
  double target_energy_ = 0.0;
  double leroy_radius_ = 0.0;
  SparseMatrix product_h0_;
  std::map<int, SparseMatrix> product_c_;
  std::vector<PairState> states_;
  SparseMatrix h0_;
  std::map<int, SparseMatrix> c_;
  std::vector<std::vector<int>> blocks_;
  bool use_inversion_ = false, use_reflection_ = false, use_permutation_ = false;
  const SpeciesDatabase *db_ = nullptr;
  RadialMethod method_ = RadialMethod::Numerov;
  GridSpec grid_;
  std::map<std::string, std::shared_ptr<SingleAtomSystem>> lab_systems_;
};

/// Connected components of a sparse pattern, ordered by smallest index.
std::vector<std::vector<int>> sparse_blocks(const SparseMatrix &pattern);

} // namespace rydpair
