#include "rydpair/solver.hpp"

#include "rydpair/eigen_solver.hpp"
#include "rydpair/errors.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <future>
#include <limits>
#include <numeric>
#include <ostream>
#include <thread>

namespace rydpair {

namespace {

constexpr double kTwoPi = 6.283185307179586;
// Overlaps below this are not considered when linking; whatever is left
// unmatched is paired in energy order.
constexpr double kLinkFloor = 1e-2;

struct BlockSolution {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};

struct RawPoint {
  bool ok = true;
  std::string error;
  std::vector<BlockSolution> blocks;
};

RawPoint diagonalize_point(const CurveProblem &problem, const std::vector<std::vector<int>> &blocks, double r) {
  RawPoint out;
  try {
    const SparseMatrix h = problem.hamiltonian(r);
    for (const auto &block : blocks) {
      const auto n = static_cast<Eigen::Index>(block.size());
      Eigen::MatrixXd sub(n, n);
      for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = 0; b < n; ++b) sub(a, b) = h.coeff(block[a], block[b]);
      auto es = eigh(sub);
      if (!es.values.allFinite()) throw NumericalError("non-finite eigenvalues");
      out.blocks.push_back({std::move(es.values), std::move(es.vectors)});
    }
  } catch (const NumericalError &e) {
    out.ok = false;
    out.error = e.what();
    out.blocks.clear();
  }
  return out;
}

// Assigns each current eigenvector to a previous one. Largest overlaps go
// first; overlaps within tol of each other are resolved by the smallest
// energy jump.
std::vector<int> link_block(const BlockSolution &prev, const BlockSolution &cur, double tol) {
  const Eigen::Index n = cur.values.size();
  const Eigen::MatrixXd o = (prev.vectors.transpose() * cur.vectors).cwiseAbs();
  struct Candidate {
    double overlap, jump;
    Eigen::Index i, j;
  };
  std::vector<Candidate> cand;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (o(i, j) >= kLinkFloor) cand.push_back({o(i, j), std::abs(prev.values(i) - cur.values(j)), i, j});
  std::sort(cand.begin(), cand.end(), [](const Candidate &a, const Candidate &b) {
    if (a.overlap != b.overlap) return a.overlap > b.overlap;
    if (a.jump != b.jump) return a.jump < b.jump;
    return std::tie(a.i, a.j) < std::tie(b.i, b.j);
  });
  std::vector<int> from(static_cast<std::size_t>(n), -1); // cur -> prev
  std::vector<char> prev_used(static_cast<std::size_t>(n), 0);
  std::size_t p = 0;
  while (p < cand.size()) {
    const auto &head = cand[p];
    if (prev_used[head.i] || from[head.j] >= 0) {
      ++p;
      continue;
    }
    std::size_t best = p;
    for (std::size_t q = p + 1; q < cand.size() && cand[q].overlap >= head.overlap - tol; ++q) {
      const auto &c = cand[q];
      if (prev_used[c.i] || from[c.j] >= 0) continue;
      if (c.jump < cand[best].jump) best = q;
    }
    prev_used[cand[best].i] = 1;
    from[cand[best].j] = static_cast<int>(cand[best].i);
    if (best == p) ++p;
  }
  std::vector<int> free_prev;
  for (Eigen::Index i = 0; i < n; ++i)
    if (!prev_used[i]) free_prev.push_back(static_cast<int>(i));
  std::size_t next = 0;
  for (Eigen::Index j = 0; j < n; ++j)
    if (from[j] < 0) from[j] = free_prev[next++];
  return from;
}

} // namespace

CurveProblem curve_problem(const PairSystem &sys, const StateTwo &probe, std::optional<int> max_order) {
  CurveProblem p;
  p.hamiltonian = [&sys, max_order](double r) { return sys.hamiltonian(r, max_order); };
  p.blocks = sys.blocks();
  p.probe = sys.probe(probe);
  p.reference_energy_ghz = sys.target_energy_ghz();
  p.leroy_radius_m = sys.leroy_radius_m();
  return p;
}

std::vector<double> log_grid(double r_min_m, double r_max_m, std::size_t count) {
  if (!(r_min_m > 0.0) || !(r_max_m >= r_min_m) || count == 0) throw ConfigError("invalid distance grid");
  if (count == 1) return {r_min_m};
  std::vector<double> out(count);
  const double a = std::log(r_min_m), b = std::log(r_max_m);
  for (std::size_t k = 0; k < count; ++k) out[k] = std::exp(a + (b - a) * static_cast<double>(k) / (count - 1.0));
  out.front() = r_min_m;
  out.back() = r_max_m;
  return out;
}

PotentialCurves solve_curves(const CurveProblem &problem, const std::vector<double> &r_grid,
                             const SolveOptions &options) {
  PotentialCurves out;
  out.reference_energy_ghz = problem.reference_energy_ghz;
  out.leroy_radius_m = problem.leroy_radius_m;

  std::vector<std::vector<int>> blocks;
  for (const auto &block : problem.blocks) {
    bool hit = !options.probe_blocks_only;
    for (int k : block) hit |= problem.probe(k) != 0.0;
    if (hit) blocks.push_back(block);
  }
  if (!options.use_blocks && !blocks.empty()) {
    std::vector<int> all;
    for (const auto &b : blocks) all.insert(all.end(), b.begin(), b.end());
    std::sort(all.begin(), all.end());
    blocks = {all};
  }
  for (const auto &b : blocks) out.states.insert(out.states.end(), b.begin(), b.end());
  const auto nsel = static_cast<Eigen::Index>(out.states.size());

  // Position of each block's rows within the selected states.
  std::vector<Eigen::Index> offset(blocks.size() + 1, 0);
  for (std::size_t b = 0; b < blocks.size(); ++b) offset[b + 1] = offset[b] + static_cast<Eigen::Index>(blocks[b].size());
  std::vector<Eigen::VectorXd> probe_block(blocks.size());
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    probe_block[b].resize(static_cast<Eigen::Index>(blocks[b].size()));
    for (std::size_t k = 0; k < blocks[b].size(); ++k) probe_block[b](k) = problem.probe(blocks[b][k]);
  }

  const std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
  std::optional<RawPoint> last;
  std::vector<int> last_ids; // curve id per (block, local index), flattened by offset
  out.points.reserve(r_grid.size());

  for (std::size_t start = 0; start < r_grid.size(); start += workers) {
    const std::size_t stop = std::min(r_grid.size(), start + workers);
    std::vector<std::future<RawPoint>> jobs;
    for (std::size_t k = start; k < stop; ++k)
      jobs.push_back(std::async(workers > 1 ? std::launch::async : std::launch::deferred, diagonalize_point,
                                std::cref(problem), std::cref(blocks), r_grid[k]));
    for (std::size_t k = start; k < stop; ++k) {
      RawPoint raw = jobs[k - start].get();
      CurvePoint pt;
      pt.r_m = r_grid[k];
      pt.below_leroy = r_grid[k] < problem.leroy_radius_m;
      pt.ok = raw.ok;
      pt.error = raw.error;
      if (raw.ok) {
        std::vector<int> ids(static_cast<std::size_t>(nsel));
        if (!last) {
          std::iota(ids.begin(), ids.end(), 0);
        } else {
          for (std::size_t b = 0; b < blocks.size(); ++b) {
            const auto from = link_block(last->blocks[b], raw.blocks[b], options.tie_tolerance);
            for (std::size_t j = 0; j < from.size(); ++j) ids[offset[b] + j] = last_ids[offset[b] + from[j]];
          }
        }
        // Flatten and sort by energy; ties keep block order.
        Eigen::VectorXd e(nsel), amp(nsel);
        for (std::size_t b = 0; b < blocks.size(); ++b) {
          e.segment(offset[b], raw.blocks[b].values.size()) = raw.blocks[b].values;
          amp.segment(offset[b], raw.blocks[b].values.size()) = raw.blocks[b].vectors.transpose() * probe_block[b];
        }
        std::vector<Eigen::Index> order(static_cast<std::size_t>(nsel));
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&e](Eigen::Index a, Eigen::Index b) { return e(a) < e(b); });
        pt.energies_ghz.resize(nsel);
        pt.amplitudes.resize(nsel);
        pt.curve.resize(static_cast<std::size_t>(nsel));
        for (Eigen::Index k2 = 0; k2 < nsel; ++k2) {
          pt.energies_ghz(k2) = e(order[k2]);
          pt.amplitudes(k2) = amp(order[k2]);
          pt.curve[k2] = ids[order[k2]];
        }
        pt.overlaps = pt.amplitudes.cwiseAbs2();
        if (options.keep_vectors) {
          pt.vectors = Eigen::MatrixXd::Zero(nsel, nsel);
          std::vector<std::size_t> block_of(static_cast<std::size_t>(nsel));
          for (std::size_t b = 0; b < blocks.size(); ++b)
            for (Eigen::Index j = offset[b]; j < offset[b + 1]; ++j) block_of[j] = b;
          for (Eigen::Index k2 = 0; k2 < nsel; ++k2) {
            const Eigen::Index g = order[k2];
            const auto b = block_of[g];
            pt.vectors.col(k2).segment(offset[b], offset[b + 1] - offset[b]) = raw.blocks[b].vectors.col(g - offset[b]);
          }
        }
        last = std::move(raw);
        last_ids = std::move(ids);
      }
      out.points.push_back(std::move(pt));
    }
  }
  out.curve_count = static_cast<int>(nsel);
  return out;
}

PotentialCurves solve_curves(const PairSystem &sys, const StateTwo &probe, const std::vector<double> &r_grid,
                             const SolveOptions &options) {
  return solve_curves(curve_problem(sys, probe), r_grid, options);
}

std::vector<AdmixturePoint> admixture_cut(const PotentialCurves &curves, double detuning_ghz, double bin_ghz) {
  if (!(bin_ghz > 0.0)) throw ConfigError("admixture bin width must be positive");
  std::vector<AdmixturePoint> out;
  for (const auto &pt : curves.points) {
    if (!pt.ok) continue;
    AdmixturePoint a;
    a.r_m = pt.r_m;
    for (Eigen::Index k = 0; k < pt.energies_ghz.size(); ++k) {
      const double d = pt.energies_ghz(k) - curves.reference_energy_ghz - detuning_ghz;
      if (std::abs(d) <= 0.5 * bin_ghz) {
        a.epsilon += std::abs(pt.amplitudes(k));
        ++a.states;
      }
    }
    out.push_back(a);
  }
  return out;
}

std::vector<double> time_evolution(const CurvePoint &point, const std::vector<double> &times_s) {
  if (!point.ok) throw NumericalError("time evolution at an invalid point");
  const Eigen::VectorXd &a = point.overlaps;
  const double total = a.sum();
  const double mean = total > 0.0 ? a.dot(point.energies_ghz) / total : 0.0;
  std::vector<double> out;
  out.reserve(times_s.size());
  for (double t : times_s) {
    std::complex<double> sum = 0.0;
    for (Eigen::Index k = 0; k < a.size(); ++k) {
      if (a(k) == 0.0) continue;
      sum += a(k) * std::polar(1.0, kTwoPi * (point.energies_ghz(k) - mean) * 1e9 * t);
    }
    out.push_back(std::norm(sum));
  }
  return out;
}

std::vector<SpectralLine> frequency_spectrum(const CurvePoint &point, double min_weight, double merge_mhz) {
  if (!point.ok) throw NumericalError("spectrum at an invalid point");
  const Eigen::VectorXd &a = point.overlaps;
  const double amax = a.size() ? a.maxCoeff() : 0.0;
  std::vector<Eigen::Index> live;
  for (Eigen::Index k = 0; k < a.size(); ++k)
    if (a(k) > 0.0 && a(k) * amax > min_weight) live.push_back(k);
  std::vector<SpectralLine> lines;
  for (std::size_t x = 0; x < live.size(); ++x) {
    for (std::size_t y = x + 1; y < live.size(); ++y) {
      const double w = a(live[x]) * a(live[y]);
      if (w <= min_weight) continue;
      const double f = std::abs(point.energies_ghz(live[y]) - point.energies_ghz(live[x])) * 1e3;
      lines.push_back({f, w});
    }
  }
  if (merge_mhz > 0.0 && !lines.empty()) {
    std::sort(lines.begin(), lines.end(), [](const auto &p, const auto &q) { return p.freq_mhz < q.freq_mhz; });
    std::vector<SpectralLine> merged;
    double first = lines.front().freq_mhz, fw = 0.0, w = 0.0;
    for (const auto &l : lines) {
      if (l.freq_mhz - first > merge_mhz) {
        merged.push_back({fw / w, w});
        first = l.freq_mhz;
        fw = w = 0.0;
      }
      fw += l.freq_mhz * l.weight;
      w += l.weight;
    }
    merged.push_back({fw / w, w});
    lines = std::move(merged);
  }
  std::stable_sort(lines.begin(), lines.end(), [](const auto &p, const auto &q) {
    if (p.weight != q.weight) return p.weight > q.weight;
    return p.freq_mhz < q.freq_mhz;
  });
  return lines;
}

double dominance(const std::vector<SpectralLine> &lines) {
  double total = 0.0, top = 0.0;
  for (const auto &l : lines) {
    total += l.weight;
    top = std::max(top, l.weight);
  }
  return total > 0.0 ? top / total : 0.0;
}

std::vector<double> tracked_energies(const PotentialCurves &curves) {
  std::vector<double> out;
  for (const auto &pt : curves.points) {
    if (!pt.ok || pt.overlaps.size() == 0) {
      out.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    Eigen::Index k = 0;
    pt.overlaps.maxCoeff(&k);
    out.push_back(pt.energies_ghz(k));
  }
  return out;
}

std::vector<PairBasisSpec> relaxation_schedule(const PairBasisSpec &initial, std::size_t steps, int add_delta_n,
                                               int add_delta_l, double add_window_ghz) {
  if (steps == 0) throw ConfigError("relaxation schedule needs at least one step");
  if (add_delta_n < 0 || add_delta_l < 0 || add_window_ghz < 0.0) throw ConfigError("relaxation must not shrink the basis");
  std::vector<PairBasisSpec> out;
  for (std::size_t k = 0; k < steps; ++k) {
    auto s = initial;
    s.delta_n += static_cast<int>(k) * add_delta_n;
    s.delta_l += static_cast<int>(k) * add_delta_l;
    s.energy_window_ghz += static_cast<double>(k) * add_window_ghz;
    out.push_back(s);
  }
  return out;
}

ConvergenceReport converge_basis(MatrixElements &me, const std::vector<PairBasisSpec> &schedule,
                                 const FieldConfig &lab_fields, double theta, const std::vector<double> &r_grid,
                                 double tolerance_ghz) {
  if (schedule.empty()) throw ConfigError("empty relaxation schedule");
  if (!(tolerance_ghz > 0.0)) throw ConfigError("convergence tolerance must be positive");
  ConvergenceReport report;
  report.final_spec = schedule.back();
  std::vector<double> previous;
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    PairSystem sys(me, schedule[k], lab_fields, theta);
    const auto curves = solve_curves(sys, schedule[k].target, r_grid);
    const auto tracked = tracked_energies(curves);
    ConvergenceStep step;
    step.spec = schedule[k];
    step.basis_size = sys.size();
    step.drift_ghz = std::numeric_limits<double>::infinity();
    if (!previous.empty()) {
      double drift = 0.0;
      bool any = false;
      for (std::size_t i = 0; i < tracked.size(); ++i) {
        if (std::isnan(tracked[i]) || std::isnan(previous[i])) continue;
        drift = std::max(drift, std::abs(tracked[i] - previous[i]));
        any = true;
      }
      if (any) step.drift_ghz = drift;
    }
    report.steps.push_back(step);
    if (step.drift_ghz < tolerance_ghz) {
      report.converged = true;
      report.final_spec = schedule[k - 1];
      break;
    }
    previous = tracked;
  }
  return report;
}

void write_curves_csv(std::ostream &os, const PotentialCurves &curves) {
  os << "R_m,curve_id,energy_GHz,overlap\n";
  const auto old = os.precision(12);
  for (const auto &pt : curves.points) {
    if (!pt.ok) continue;
    for (Eigen::Index k = 0; k < pt.energies_ghz.size(); ++k) {
      os << pt.r_m << ',' << pt.curve[k] << ',' << pt.energies_ghz(k) - curves.reference_energy_ghz << ','
         << pt.overlaps(k) << '\n';
    }
  }
  os.precision(old);
}

void write_spectrum_csv(std::ostream &os, double theta_deg, const std::vector<SpectralLine> &lines, bool header) {
  if (header) os << "theta_deg,freq_MHz,weight\n";
  const auto old = os.precision(12);
  for (const auto &l : lines) os << theta_deg << ',' << l.freq_mhz << ',' << l.weight << '\n';
  os.precision(old);
}

void write_evolution_csv(std::ostream &os, const std::vector<double> &times_s, const std::vector<double> &p) {
  if (times_s.size() != p.size()) throw ConfigError("time and probability samples differ in length");
  os << "t_us,p_probe\n";
  const auto old = os.precision(12);
  for (std::size_t k = 0; k < p.size(); ++k) os << times_s[k] * 1e6 << ',' << p[k] << '\n';
  os.precision(old);
}

void write_convergence_json(std::ostream &os, const ConvergenceReport &report) {
  nlohmann::ordered_json doc;
  doc["converged"] = report.converged;
  auto spec_json = [](const PairBasisSpec &s) {
    return nlohmann::ordered_json{{"delta_n", s.delta_n}, {"delta_l", s.delta_l},
                                  {"energy_window_GHz", s.energy_window_ghz}, {"order", s.order}};
  };
  doc["final"] = spec_json(report.final_spec);
  auto &steps = doc["steps"] = nlohmann::ordered_json::array();
  for (const auto &s : report.steps) {
    auto j = spec_json(s.spec);
    j["basis_size"] = s.basis_size;
    if (std::isfinite(s.drift_ghz)) j["drift_GHz"] = s.drift_ghz;
    else j["drift_GHz"] = nullptr;
    steps.push_back(j);
  }
  os << doc.dump(2) << '\n';
}

} // namespace rydpair
