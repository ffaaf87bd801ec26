#pragma once

#include "rydpair/pair.hpp"

#include <Eigen/Dense>

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace rydpair {

/// A distance-dependent Hamiltonian with a fixed block structure and a probe
/// state, all in one basis. Energies in GHz, distances in meters.
struct CurveProblem {
  std::function<SparseMatrix(double)> hamiltonian;
  std::vector<std::vector<int>> blocks;
  Eigen::VectorXd probe;
  double reference_energy_ghz = 0.0;
  double leroy_radius_m = 0.0;
};

CurveProblem curve_problem(const PairSystem &sys, const StateTwo &probe, std::optional<int> max_order = std::nullopt);

struct SolveOptions {
  bool probe_blocks_only = true; // skip blocks the probe has no weight in
  bool use_blocks = true;        // false: one dense solve of the selected states
  bool keep_vectors = false;
  double tie_tolerance = 1e-9;
};

/// Eigenpairs at one distance. Energies ascending; curve[k] is the id of the
/// curve the k-th eigenvalue belongs to.
struct CurvePoint {
  double r_m = 0.0;
  bool ok = true;
  bool below_leroy = false;
  std::string error;
  Eigen::VectorXd energies_ghz;
  Eigen::VectorXd overlaps; // a_k = |<probe|phi_k>|^2
  Eigen::VectorXd amplitudes; // <phi_k|probe>
  std::vector<int> curve;
  Eigen::MatrixXd vectors; // rows: selected states (see PotentialCurves::states)
};

struct PotentialCurves {
  double reference_energy_ghz = 0.0;
  double leroy_radius_m = 0.0;
  std::vector<int> states; // basis indices the eigenvectors are expressed in
  std::vector<CurvePoint> points;
  int curve_count = 0;
};

/// Logarithmically spaced distances, inclusive.
std::vector<double> log_grid(double r_min_m, double r_max_m, std::size_t count = 200);

/// Diagonalizes at each distance and links eigenpairs of neighboring valid
/// points by maximal eigenvector overlap. A failing point is marked invalid
/// and linking continues from the last valid point.
PotentialCurves solve_curves(const CurveProblem &problem, const std::vector<double> &r_grid,
                             const SolveOptions &options = {});
PotentialCurves solve_curves(const PairSystem &sys, const StateTwo &probe, const std::vector<double> &r_grid,
                             const SolveOptions &options = {});

/// Admixture amplitude |<Psi|probe>| summed over eigenstates whose detuning
/// from the reference lies within bin_ghz/2 of detuning_ghz.
struct AdmixturePoint {
  double r_m = 0.0;
  double epsilon = 0.0;
  int states = 0;
};
std::vector<AdmixturePoint> admixture_cut(const PotentialCurves &curves, double detuning_ghz, double bin_ghz);

/// p(t) = |sum_k a_k exp(i E_k t / hbar)|^2 for times in seconds.
std::vector<double> time_evolution(const CurvePoint &point, const std::vector<double> &times_s);

struct SpectralLine {
  double freq_mhz = 0.0; // (E_m - E_n)/h > 0
  double weight = 0.0;   // a_m a_n
};

/// All pair frequencies with weight above min_weight, sorted by descending
/// weight. Lines closer than merge_mhz are merged (weights summed).
std::vector<SpectralLine> frequency_spectrum(const CurvePoint &point, double min_weight = 0.0,
                                             double merge_mhz = 0.0);

/// Weight share of the strongest line.
double dominance(const std::vector<SpectralLine> &lines);

/// Energy (GHz) of the eigenstate with the largest probe overlap at each point,
/// NaN at invalid points.
std::vector<double> tracked_energies(const PotentialCurves &curves);

struct ConvergenceStep {
  PairBasisSpec spec;
  std::size_t basis_size = 0;
  double drift_ghz = 0.0; // against the previous step; infinity for the first
};

struct ConvergenceReport {
  std::vector<ConvergenceStep> steps;
  bool converged = false;
  PairBasisSpec final_spec;
};

/// initial, initial + relax, initial + 2 relax, ...
std::vector<PairBasisSpec> relaxation_schedule(const PairBasisSpec &initial, std::size_t steps, int add_delta_n,
                                               int add_delta_l, double add_window_ghz);

/// Solves each spec in turn and stops once the tracked curve of the probe moves
/// by less than tolerance_ghz over r_grid. The final spec is the smaller basis
/// of the converged pair.
ConvergenceReport converge_basis(MatrixElements &me, const std::vector<PairBasisSpec> &schedule,
                                 const FieldConfig &lab_fields, double theta, const std::vector<double> &r_grid,
                                 double tolerance_ghz);

/// Columns R_m, curve_id, energy_GHz, overlap; energies relative to the reference.
void write_curves_csv(std::ostream &os, const PotentialCurves &curves);
/// Columns theta_deg, freq_MHz, weight.
void write_spectrum_csv(std::ostream &os, double theta_deg, const std::vector<SpectralLine> &lines,
                        bool header = true);
/// Columns t_us, p_probe.
void write_evolution_csv(std::ostream &os, const std::vector<double> &times_s, const std::vector<double> &p);
void write_convergence_json(std::ostream &os, const ConvergenceReport &report);

} // namespace rydpair
