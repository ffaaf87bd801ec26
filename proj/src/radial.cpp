#include "rydpair/radial.hpp"

#include "rydpair/errors.hpp"
#include "rydpair/units.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_sf_gamma.h>
#include <gsl/gsl_sf_hyperg.h>
#include <gsl/gsl_spline.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <shared_mutex>
#include <tuple>

namespace rydpair {

namespace {

constexpr double kLn10 = 2.302585092994046;

struct GslQuiet {
  GslQuiet() { gsl_set_error_handler_off(); }
};
const GslQuiet gsl_quiet;

int outer_index(int n, double step) {
  const double x_out = std::sqrt(2.0 * n * (n + 15.0));
  return static_cast<int>(std::ceil(x_out / step));
}

// Centrifugal coefficient of the x = sqrt(r) equation.
double centrifugal(int l) { return (2.0 * l + 0.5) * (2.0 * l + 1.5); }

// Cuts the inward divergence: once the classically allowed region has been
// seen, the first point in a forbidden region where |X| grows inward marks
// the start of the kept range. Returns the first kept index into `values`.
std::size_t find_inner_cut(const std::vector<double> &values, const std::vector<double> &g) {
  bool allowed_seen = false;
  for (std::size_t k = values.size() - 1; k > 0; --k) {
    if (g[k] < 0.0) allowed_seen = true;
    if (!std::isfinite(values[k - 1])) return k;
    if (allowed_seen && g[k - 1] > 0.0 && std::abs(values[k - 1]) > std::abs(values[k])) return k;
  }
  return 0;
}

void finalize(RadialWavefunction &wf, std::vector<double> values, const std::vector<double> &g, int first_index,
              bool renormalize) {
  const std::size_t cut = find_inner_cut(values, g);
  wf.inner_truncated = cut > 0;
  wf.first_index = first_index + static_cast<int>(cut);
  wf.truncation_r_a0 = cut > 0 ? std::pow(wf.first_index * wf.step, 2) : 0.0;
  wf.values.assign(values.begin() + static_cast<std::ptrdiff_t>(cut), values.end());

  double norm = 0.0;
  for (std::size_t k = 0; k < wf.values.size(); ++k) {
    const double x = wf.x(k);
    norm += wf.values[k] * wf.values[k] * x * x;
  }
  norm *= 2.0 * wf.step;
  if (!std::isfinite(norm) || norm <= 0.0) {
    throw NumericalError("radial wave function of " + wf.state.level_label() + " is not normalizable");
  }
  wf.norm_residual = std::abs(1.0 - norm);
  const double scale = renormalize ? 1.0 / std::sqrt(norm) : 1.0;

  // Sign: positive at the outermost antinode.
  double sign = 1.0;
  for (std::size_t k = wf.values.size() - 2; k > 0; --k) {
    const double a = std::abs(wf.values[k]);
    if (a > std::abs(wf.values[k + 1]) && a >= std::abs(wf.values[k - 1])) {
      sign = wf.values[k] > 0.0 ? 1.0 : -1.0;
      break;
    }
  }
  for (auto &v : wf.values) v *= sign * scale;
  wf.out_of_validated_range = wf.state.n < 30;
}

} // namespace

const char *to_string(RadialMethod m) { return m == RadialMethod::Numerov ? "numerov" : "whittaker"; }

RadialMethod radial_method_from_string(const std::string &s) {
  if (s == "numerov") return RadialMethod::Numerov;
  if (s == "whittaker") return RadialMethod::Whittaker;
  throw ConfigError("unknown radial method '" + s + "' (expected numerov or whittaker)");
}

double RadialWavefunction::psi(std::size_t k) const {
  const double xv = x(k);
  return values[k] / (xv * std::sqrt(xv));
}

ModelPotential::ModelPotential(const SpeciesModel &model, int l, HalfInteger j, double gs)
    : Z(model.Z), alpha_d(model.alpha_d_au), r_c(model.core_radius(l)), g_s(gs) {
  const auto &c = model.potential_for(l);
  a1 = c.a1;
  a2 = c.a2;
  a3 = c.a3;
  a4 = c.a4;
  const double jv = j.value();
  l_dot_s = 0.5 * (jv * (jv + 1.0) - l * (l + 1.0) - 0.75);
}

double ModelPotential::coulomb(double r) const {
  const double z_eff = 1.0 + (Z - 1) * std::exp(-a1 * r) - r * (a3 + a4 * r) * std::exp(-a2 * r);
  return -z_eff / r;
}

double ModelPotential::polarization(double r) const {
  if (alpha_d == 0.0) return 0.0;
  const double r2 = r * r;
  return -alpha_d / (2.0 * r2 * r2) * (1.0 - std::exp(-std::pow(r / r_c, 6)));
}

double ModelPotential::spin_orbit_term(double r) const {
  if (!spin_orbit || r <= r_c || l_dot_s == 0.0) return 0.0;
  const double a2 = units::fine_structure * units::fine_structure;
  return g_s * a2 * l_dot_s / (4.0 * r * r * r);
}

RadialWavefunction numerov_wavefunction(const StateOne &state, double energy,
                                        const std::function<double(double)> &potential, GridSpec grid) {
  if (!(grid.step > 0.0)) throw ConfigError("grid step must be positive");
  RadialWavefunction wf;
  wf.state = state;
  wf.method = RadialMethod::Numerov;
  wf.step = grid.step;

  const int N = outer_index(state.n, grid.step);
  const double h = grid.step;
  const double c = centrifugal(state.l);
  // Index i corresponds to x = (i + 1) h, so the lattice starts at x = h.
  std::vector<double> g(N), f(N), X(N, 0.0);
  for (int i = 0; i < N; ++i) {
    const double x = (i + 1) * h;
    const double r = x * x;
    g[i] = c / r + 8.0 * r * (potential(r) - energy);
    f[i] = 1.0 - h * h * g[i] / 12.0;
  }
  X[N - 1] = 0.0;
  X[N - 2] = 1e-30;
  constexpr double big = 1e200;
  bool allowed_seen = false;
  int stop = 0;
  for (int i = N - 2; i > 0; --i) {
    X[i - 1] = ((12.0 - 10.0 * f[i]) * X[i] - f[i + 1] * X[i + 1]) / f[i - 1];
    if (std::abs(X[i - 1]) > big) {
      for (int k = i - 1; k < N; ++k) X[k] /= big;
    }
    if (g[i] < 0.0) allowed_seen = true;
    // Stop once the divergent inner branch takes over; finalize cuts there.
    if (allowed_seen && g[i - 1] > 0.0 && std::abs(X[i - 1]) > std::abs(X[i])) {
      stop = i - 1;
      break;
    }
  }
  std::vector<double> values(X.begin() + stop, X.end());
  std::vector<double> gg(g.begin() + stop, g.end());
  finalize(wf, std::move(values), gg, stop + 1, true);
  return wf;
}

RadialWavefunction numerov_wavefunction(const SpeciesModel &model, const StateOne &state, const LevelEnergy &energy,
                                        GridSpec grid, double g_s) {
  state.validate();
  const ModelPotential pot(model, state.l, state.j, g_s);
  return numerov_wavefunction(state, energy.hartree(), [&pot](double r) { return pot(r); }, grid);
}

RadialWavefunction whittaker_wavefunction(const SpeciesModel &model, const StateOne &state, GridSpec grid) {
  state.validate();
  if (!(grid.step > 0.0)) throw ConfigError("grid step must be positive");
  const auto level = level_energy(model, state);
  const double ns = level.n_star;
  const int l = state.l;
  if (!(ns > l)) {
    throw DomainError("effective principal quantum number " + std::to_string(ns) + " <= l for " + state.label());
  }
  RadialWavefunction wf;
  wf.state = state;
  wf.method = RadialMethod::Whittaker;
  wf.step = grid.step;

  const double h = grid.step;
  const int N = outer_index(state.n, h);
  const double log_norm =
      -0.5 * (2.0 * std::log(ns) + gsl_sf_lngamma(ns + l + 1.0) + gsl_sf_lngamma(ns - l));
  const double a = l + 1.0 - ns; // 1/2 + m - k with m = l + 1/2, k = n*
  const double b = 2.0 * l + 2.0;
  const double c = centrifugal(l);
  const double e_h = -0.5 / (ns * ns); // hydrogenic energy at n*

  std::vector<double> values(N, 0.0), g(N, 0.0);
  bool allowed_seen = false;
  int stop = 0;
  for (int i = N - 1; i >= 0; --i) {
    const double x = (i + 1) * h;
    const double r = x * x;
    g[i] = c / r + 8.0 * r * (-1.0 / r - e_h);
    const double z = 2.0 * r / ns;
    gsl_sf_result_e10 res;
    const int status = gsl_sf_hyperg_U_e10_e(a, b, z, &res);
    if (status != GSL_SUCCESS || !std::isfinite(res.val)) {
      values[i] = std::numeric_limits<double>::infinity(); // the inner cut stops here
      stop = i;
      break;
    }
    if (res.val == 0.0) continue; // node of a polynomial solution
    const double log_u = std::log(std::abs(res.val)) + res.e10 * kLn10;
    const int sign = res.val > 0.0 ? 1 : -1;
    // W = e^{-z/2} z^{l+1} U; Psi = W / r. X = x^{3/2} Psi.
    const double log_w = -0.5 * z + (l + 1.0) * std::log(z) + log_u;
    const double log_x = log_norm + log_w - std::log(r) + 1.5 * std::log(x);
    values[i] = sign * std::exp(log_x);
    if (i + 1 < N) {
      if (g[i + 1] < 0.0) allowed_seen = true;
      if (allowed_seen && g[i] > 0.0 && std::abs(values[i]) > std::abs(values[i + 1])) {
        stop = i;
        break;
      }
    }
  }
  // The analytic normalization is exact only for integer n*; the residual is
  // kept as a diagnostic and the function rescaled on the grid.
  values.erase(values.begin(), values.begin() + stop);
  g.erase(g.begin(), g.begin() + stop);
  finalize(wf, std::move(values), g, stop + 1, true);
  return wf;
}

RadialWavefunction compute_wavefunction(const SpeciesModel &model, const StateOne &state, RadialMethod method,
                                        GridSpec grid, double g_s) {
  if (method == RadialMethod::Whittaker) return whittaker_wavefunction(model, state, grid);
  return numerov_wavefunction(model, state, level_energy(model, state), grid, g_s);
}

namespace {

using WfKey = std::tuple<std::uint64_t, int, int, int, int, double, double>;

struct WfMemo {
  std::shared_mutex mutex;
  std::map<WfKey, std::shared_ptr<const RadialWavefunction>> table;
};

WfMemo &wf_memo() {
  static WfMemo m;
  return m;
}

constexpr std::size_t kMaxCachedWavefunctions = 4096;

} // namespace

std::shared_ptr<const RadialWavefunction> cached_wavefunction(const SpeciesModel &model, const StateOne &state,
                                                              RadialMethod method, GridSpec grid, double g_s) {
  const WfKey key{model.content_hash(), state.n, state.l, state.j.twice(), static_cast<int>(method), grid.step, g_s};
  auto &memo = wf_memo();
  {
    std::shared_lock lock(memo.mutex);
    if (auto it = memo.table.find(key); it != memo.table.end()) return it->second;
  }
  StateOne canonical = state;
  canonical.mj = state.j;
  auto wf = std::make_shared<const RadialWavefunction>(compute_wavefunction(model, canonical, method, grid, g_s));
  std::unique_lock lock(memo.mutex);
  if (memo.table.size() >= kMaxCachedWavefunctions) memo.table.clear();
  return memo.table.emplace(key, std::move(wf)).first->second;
}

void clear_wavefunction_cache() {
  auto &memo = wf_memo();
  std::unique_lock lock(memo.mutex);
  memo.table.clear();
}

double radial_integral(const RadialWavefunction &a, const RadialWavefunction &b, int kappa) {
  if (kappa < 0) throw ConfigError("multipole order must be >= 0");
  double sum = 0.0;
  const int p = 2 + 2 * kappa;
  if (std::abs(a.step - b.step) <= 1e-15 * a.step) {
    const int lo = std::max(a.first_index, b.first_index);
    const int hi = std::min(a.last_index(), b.last_index());
    for (int i = lo; i <= hi; ++i) {
      const double x = i * a.step;
      sum += a.values[i - a.first_index] * b.values[i - b.first_index] * std::pow(x, p);
    }
    sum *= 2.0 * a.step;
  } else {
    // Different lattices: spline the second function onto the first.
    const std::size_t nb = b.values.size();
    std::vector<double> xb(nb);
    for (std::size_t k = 0; k < nb; ++k) xb[k] = b.x(k);
    gsl_interp_accel *acc = gsl_interp_accel_alloc();
    gsl_spline *spline = gsl_spline_alloc(gsl_interp_cspline, nb);
    gsl_spline_init(spline, xb.data(), b.values.data(), nb);
    for (std::size_t k = 0; k < a.values.size(); ++k) {
      const double x = a.x(k);
      if (x < xb.front() || x > xb.back()) continue;
      sum += a.values[k] * gsl_spline_eval(spline, x, acc) * std::pow(x, p);
    }
    gsl_spline_free(spline);
    gsl_interp_accel_free(acc);
    sum *= 2.0 * a.step;
  }
  if (!std::isfinite(sum)) throw NumericalError("radial integral diverged");
  return sum;
}

double radial_matrix_element(const SpeciesModel &model_bra, const StateOne &bra, const SpeciesModel &model_ket,
                             const StateOne &ket, int kappa, RadialMethod method, GridSpec grid) {
  const auto a = cached_wavefunction(model_bra, bra, method, grid);
  const auto b = cached_wavefunction(model_ket, ket, method, grid);
  // Order the operands canonically so that swapping bra and ket is bit-identical.
  if (std::tie(bra.species, bra.n, bra.l, bra.j) <= std::tie(ket.species, ket.n, ket.l, ket.j)) {
    return radial_integral(*a, *b, kappa);
  }
  return radial_integral(*b, *a, kappa);
}

double leroy_radius(const SpeciesModel &m1, const StateOne &s1, const SpeciesModel &m2, const StateOne &s2,
                    RadialMethod method, GridSpec grid) {
  const double r1 = radial_matrix_element(m1, s1, m1, s1, 2, method, grid);
  const double r2 = radial_matrix_element(m2, s2, m2, s2, 2, method, grid);
  return 2.0 * (std::sqrt(r1) + std::sqrt(r2)) * units::bohr_radius;
}

void write_wavefunction(std::ostream &os, const RadialWavefunction &wf) {
  os << "# " << wf.state.label() << " method=" << to_string(wf.method) << "\n# r_a0 psi_rad\n";
  for (std::size_t k = 0; k < wf.values.size(); ++k) os << wf.r_a0(k) << ' ' << wf.psi(k) << '\n';
}

} // namespace rydpair
