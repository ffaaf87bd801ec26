#include "rydpair/angular.hpp"

#include "rydpair/units.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <shared_mutex>
#include <unordered_map>
#include <vector>

namespace rydpair {

namespace {

namespace mp = boost::multiprecision;
using BigInt = mp::cpp_int;
using BigRational = mp::cpp_rational;
using BigFloat = mp::cpp_bin_float_50;

// Factorials are produced on demand and kept for the life of the process.
const BigInt &factorial(int n) {
  static std::vector<BigInt> table{BigInt(1)};
  static std::shared_mutex mutex;
  {
    std::shared_lock lock(mutex);
    if (n < static_cast<int>(table.size())) return table[n];
  }
  std::unique_lock lock(mutex);
  table.reserve(std::max<std::size_t>(table.size(), n + 64));
  while (static_cast<int>(table.size()) <= n) table.push_back(table.back() * BigInt(table.size()));
  return table[n];
}

struct KeyHash {
  std::size_t operator()(const WignerSymbolKey &k) const noexcept {
    std::size_t h = 1469598103934665603ull;
    for (const auto &a : k.args) {
      h ^= static_cast<std::size_t>(a.twice() + 4096);
      h *= 1099511628211ull;
    }
    return h;
  }
};

class SymbolMemo {
public:
  bool find(const WignerSymbolKey &k, double &value) const {
    std::shared_lock lock(mutex_);
    const auto it = table_.find(k);
    if (it == table_.end()) return false;
    value = it->second;
    return true;
  }
  void store(const WignerSymbolKey &k, double value) {
    std::unique_lock lock(mutex_);
    table_.emplace(k, value);
  }

private:
  mutable std::shared_mutex mutex_;
  std::unordered_map<WignerSymbolKey, double, KeyHash> table_;
};

// Integer from a half-integer combination known to be integral.
int as_int(HalfInteger h) { return h.as_int(); }

// sign * sqrt(prefactor) * sum, rounded once at the end.
double finish(int sign, const BigRational &prefactor, const BigRational &sum) {
  if (sum == 0) return 0.0;
  const BigFloat p = BigFloat(mp::numerator(prefactor)) / BigFloat(mp::denominator(prefactor));
  const BigFloat s = BigFloat(mp::numerator(sum)) / BigFloat(mp::denominator(sum));
  const BigFloat v = mp::sqrt(p) * s * sign;
  return v.convert_to<double>();
}

double threej_exact(const ThreeJKey &key) {
  const auto [j1, j2, j3, m1, m2, m3] = key.args;
  const int a = as_int(j1 + j2 - j3);
  const int b = as_int(j1 - j2 + j3);
  const int c = as_int(-j1 + j2 + j3);
  const int d = as_int(j1 + j2 + j3) + 1;
  BigRational prefactor(factorial(a) * factorial(b) * factorial(c), factorial(d));
  prefactor *= BigRational(factorial(as_int(j1 + m1)) * factorial(as_int(j1 - m1)) * factorial(as_int(j2 + m2)) *
                           factorial(as_int(j2 - m2)) * factorial(as_int(j3 + m3)) * factorial(as_int(j3 - m3)));

  const int t1 = as_int(j3 - j2 + m1);
  const int t2 = as_int(j3 - j1 - m2);
  const int t3 = as_int(j1 + j2 - j3);
  const int t4 = as_int(j1 - m1);
  const int t5 = as_int(j2 + m2);
  const int kmin = std::max({0, -t1, -t2});
  const int kmax = std::min({t3, t4, t5});
  BigRational sum(0);
  for (int k = kmin; k <= kmax; ++k) {
    BigInt denom = factorial(k) * factorial(t1 + k) * factorial(t2 + k) * factorial(t3 - k) * factorial(t4 - k) *
                   factorial(t5 - k);
    BigRational term(BigInt(1), denom);
    if (k % 2) sum -= term;
    else sum += term;
  }
  const int sign = parity_sign(as_int(j1 - j2 - m3));
  return finish(sign, prefactor, sum);
}

BigRational delta_squared(HalfInteger a, HalfInteger b, HalfInteger c) {
  return BigRational(factorial(as_int(a + b - c)) * factorial(as_int(a - b + c)) * factorial(as_int(-a + b + c)),
                     factorial(as_int(a + b + c) + 1));
}

double sixj_exact(const SixJKey &key) {
  const auto [j1, j2, j3, j4, j5, j6] = key.args;
  BigRational prefactor = delta_squared(j1, j2, j3) * delta_squared(j1, j5, j6) * delta_squared(j4, j2, j6) *
                          delta_squared(j4, j5, j3);
  const int a1 = as_int(j1 + j2 + j3);
  const int a2 = as_int(j1 + j5 + j6);
  const int a3 = as_int(j4 + j2 + j6);
  const int a4 = as_int(j4 + j5 + j3);
  const int b1 = as_int(j1 + j2 + j4 + j5);
  const int b2 = as_int(j2 + j3 + j5 + j6);
  const int b3 = as_int(j3 + j1 + j6 + j4);
  const int tmin = std::max({a1, a2, a3, a4});
  const int tmax = std::min({b1, b2, b3});
  BigRational sum(0);
  for (int t = tmin; t <= tmax; ++t) {
    BigInt denom = factorial(t - a1) * factorial(t - a2) * factorial(t - a3) * factorial(t - a4) *
                   factorial(b1 - t) * factorial(b2 - t) * factorial(b3 - t);
    BigRational term(factorial(t + 1), denom);
    if (t % 2) sum -= term;
    else sum += term;
  }
  return finish(1, prefactor, sum);
}

// Solves a three-term recurrence
//   j X(j+1) f(j+1) + Y(j) f(j) + (j+1) X(j) f(j-1) = 0
// on [jmin, jmax] (step 1) by recursing inward from both ends and matching
// in the middle. Returns the unnormalized solution.
template <class XFn, class YFn> std::vector<double> solve_recurrence(double jmin, int count, XFn X, YFn Y) {
  std::vector<double> f(count, 0.0);
  if (count == 1) {
    f[0] = 1.0;
    return f;
  }
  constexpr double big = 1e150;

  // Forward from jmin while the solution grows (classically forbidden side).
  int forward_end = -1; // last index computed by forward recursion
  if (jmin > 0.25) {
    f[0] = 1.0;
    double prev = 0.0;
    forward_end = 0;
    for (int i = 0; i + 1 < count; ++i) {
      const double j = jmin + i;
      const double next = -(Y(j) * f[i] + (j + 1.0) * X(j) * prev) / (j * X(j + 1.0));
      prev = f[i];
      f[i + 1] = next;
      forward_end = i + 1;
      if (std::abs(next) > big) {
        for (int k = 0; k <= i + 1; ++k) f[k] /= big;
        prev /= big;
      }
      if (std::abs(f[i + 1]) < std::abs(f[i]) && i + 2 < count) {
        // Entered the oscillatory region; compute one more point for matching.
        const double j2 = jmin + i + 1;
        f[i + 2] = -(Y(j2) * f[i + 1] + (j2 + 1.0) * X(j2) * f[i]) / (j2 * X(j2 + 1.0));
        forward_end = i + 2;
        break;
      }
    }
    if (forward_end == count - 1) return f;
  }

  // Backward from jmax down to the matching window.
  const int stop = forward_end < 0 ? 0 : std::max(0, forward_end - 2);
  std::vector<double> g(count, 0.0);
  g[count - 1] = 1.0;
  double after = 0.0;
  for (int i = count - 1; i > stop; --i) {
    const double j = jmin + i;
    const double next = -(Y(j) * g[i] + j * X(j + 1.0) * after) / ((j + 1.0) * X(j));
    after = g[i];
    g[i - 1] = next;
    if (std::abs(next) > big) {
      for (int k = i - 1; k < count; ++k) g[k] /= big;
      after /= big;
    }
  }
  if (forward_end < 0) return g;

  int match = stop;
  for (int i = stop; i <= forward_end; ++i) {
    if (std::abs(g[i]) > std::abs(g[match])) match = i;
  }
  const double scale = f[match] / g[match];
  for (int i = match; i < count; ++i) f[i] = g[i] * scale;
  return f;
}

struct Family {
  double jmin = 0.0;
  std::vector<double> values;
};

Family threej_family(double j2, double j3, double m2, double m3) {
  const double m1 = -m2 - m3;
  Family fam;
  fam.jmin = std::max(std::abs(j2 - j3), std::abs(m1));
  const double jmax = j2 + j3;
  const int count = static_cast<int>(std::lround(jmax - fam.jmin)) + 1;
  auto X = [&](double j) {
    const double v = (j * j - (j2 - j3) * (j2 - j3)) * ((j2 + j3 + 1.0) * (j2 + j3 + 1.0) - j * j) * (j * j - m1 * m1);
    return std::sqrt(std::max(v, 0.0));
  };
  auto Y = [&](double j) {
    return -(2.0 * j + 1.0) * (j2 * (j2 + 1.0) * m1 - j3 * (j3 + 1.0) * m1 - j * (j + 1.0) * (m3 - m2));
  };
  fam.values = solve_recurrence(fam.jmin, count, X, Y);
  double norm = 0.0;
  for (int i = 0; i < count; ++i) norm += (2.0 * (fam.jmin + i) + 1.0) * fam.values[i] * fam.values[i];
  const double sign_expected = parity_sign(static_cast<int>(std::lround(j2 - j3 - m1)));
  const double s = (fam.values.back() * sign_expected >= 0.0 ? 1.0 : -1.0) / std::sqrt(norm);
  for (auto &v : fam.values) v *= s;
  return fam;
}

Family sixj_family(double j2, double j3, double l1, double l2, double l3) {
  Family fam;
  fam.jmin = std::max(std::abs(j2 - j3), std::abs(l2 - l3));
  const double jmax = std::min(j2 + j3, l2 + l3);
  const int count = static_cast<int>(std::lround(jmax - fam.jmin)) + 1;
  auto X = [&](double j) {
    const double v = (j * j - (j2 - j3) * (j2 - j3)) * ((j2 + j3 + 1.0) * (j2 + j3 + 1.0) - j * j) *
                     (j * j - (l2 - l3) * (l2 - l3)) * ((l2 + l3 + 1.0) * (l2 + l3 + 1.0) - j * j);
    return std::sqrt(std::max(v, 0.0));
  };
  auto Y = [&](double j) {
    const double jj = j * (j + 1.0);
    const double a = j2 * (j2 + 1.0);
    const double b = j3 * (j3 + 1.0);
    const double c = l2 * (l2 + 1.0);
    const double d = l3 * (l3 + 1.0);
    const double e = l1 * (l1 + 1.0);
    return (2.0 * j + 1.0) * (jj * (-jj + a + b) + c * (jj + a - b) + d * (jj - a + b) - 2.0 * jj * e);
  };
  fam.values = solve_recurrence(fam.jmin, count, X, Y);
  double norm = 0.0;
  for (int i = 0; i < count; ++i) {
    norm += (2.0 * (fam.jmin + i) + 1.0) * (2.0 * l1 + 1.0) * fam.values[i] * fam.values[i];
  }
  const double sign_expected = parity_sign(static_cast<int>(std::lround(j2 + j3 + l2 + l3)));
  const double s = (fam.values.back() * sign_expected >= 0.0 ? 1.0 : -1.0) / std::sqrt(norm);
  for (auto &v : fam.values) v *= s;
  return fam;
}

double threej_recurrence(const ThreeJKey &key) {
  const auto [j1, j2, j3, m1, m2, m3] = key.args;
  const Family fam = threej_family(j2.value(), j3.value(), m2.value(), m3.value());
  const int idx = static_cast<int>(std::lround(j1.value() - fam.jmin));
  if (idx < 0 || idx >= static_cast<int>(fam.values.size())) return 0.0;
  return fam.values[idx];
}

double sixj_recurrence(const SixJKey &key) {
  const auto [j1, j2, j3, l1, l2, l3] = key.args;
  const Family fam = sixj_family(j2.value(), j3.value(), l1.value(), l2.value(), l3.value());
  const int idx = static_cast<int>(std::lround(j1.value() - fam.jmin));
  if (idx < 0 || idx >= static_cast<int>(fam.values.size())) return 0.0;
  return fam.values[idx];
}

int argument_sum(const WignerSymbolKey &key, int count) {
  int s = 0;
  for (int i = 0; i < count; ++i) s += key.args[i].twice();
  return s / 2;
}

SymbolMemo &memo3j() {
  static SymbolMemo m;
  return m;
}
SymbolMemo &memo6j() {
  static SymbolMemo m;
  return m;
}

} // namespace

bool triangle(HalfInteger a, HalfInteger b, HalfInteger c) {
  if (a.twice() < 0 || b.twice() < 0 || c.twice() < 0) return false;
  if ((a + b + c).twice() % 2 != 0) return false;
  return c.twice() >= std::abs(a.twice() - b.twice()) && c.twice() <= a.twice() + b.twice();
}

ThreeJKey::ThreeJKey(HalfInteger j1, HalfInteger j2, HalfInteger j3, HalfInteger m1, HalfInteger m2,
                     HalfInteger m3)
    : WignerSymbolKey{{j1, j2, j3, m1, m2, m3}} {
  selection_ok = triangle(j1, j2, j3) && (m1 + m2 + m3).twice() == 0 && std::abs(m1.twice()) <= j1.twice() &&
                 std::abs(m2.twice()) <= j2.twice() && std::abs(m3.twice()) <= j3.twice() &&
                 (j1 + m1).is_integer() && (j2 + m2).is_integer() && (j3 + m3).is_integer();
}

SixJKey::SixJKey(HalfInteger j1, HalfInteger j2, HalfInteger j3, HalfInteger j4, HalfInteger j5, HalfInteger j6)
    : WignerSymbolKey{{j1, j2, j3, j4, j5, j6}} {
  selection_ok = triangle(j1, j2, j3) && triangle(j1, j5, j6) && triangle(j4, j2, j6) && triangle(j4, j5, j3);
}

double wigner_3j(const ThreeJKey &key, WignerMethod method) {
  if (!key.selection_ok) return 0.0;
  if (method == WignerMethod::Exact) return threej_exact(key);
  if (method == WignerMethod::Recurrence) return threej_recurrence(key);
  double value = 0.0;
  if (memo3j().find(key, value)) return value;
  value = argument_sum(key, 3) <= kExactArgumentSumLimit ? threej_exact(key) : threej_recurrence(key);
  memo3j().store(key, value);
  return value;
}

double wigner_6j(const SixJKey &key, WignerMethod method) {
  if (!key.selection_ok) return 0.0;
  if (method == WignerMethod::Exact) return sixj_exact(key);
  if (method == WignerMethod::Recurrence) return sixj_recurrence(key);
  double value = 0.0;
  if (memo6j().find(key, value)) return value;
  value = argument_sum(key, 6) <= 2 * kExactArgumentSumLimit ? sixj_exact(key) : sixj_recurrence(key);
  memo6j().store(key, value);
  return value;
}

double wigner_3j(int j1, int j2, int j3, int m1, int m2, int m3) {
  return wigner_3j(HalfInteger::from_int(j1), HalfInteger::from_int(j2), HalfInteger::from_int(j3),
                   HalfInteger::from_int(m1), HalfInteger::from_int(m2), HalfInteger::from_int(m3));
}

double wigner_6j(int j1, int j2, int j3, int j4, int j5, int j6) {
  return wigner_6j(HalfInteger::from_int(j1), HalfInteger::from_int(j2), HalfInteger::from_int(j3),
                   HalfInteger::from_int(j4), HalfInteger::from_int(j5), HalfInteger::from_int(j6));
}

double clebsch_gordan(HalfInteger j1, HalfInteger m1, HalfInteger j2, HalfInteger m2, HalfInteger J, HalfInteger M) {
  const double w = wigner_3j(j1, j2, J, m1, m2, -M);
  if (w == 0.0) return 0.0;
  return parity_sign((j1 - j2 + M).as_int()) * std::sqrt(J.twice() + 1.0) * w;
}

namespace {

double wigner_d_sum(HalfInteger j, HalfInteger m, HalfInteger mp, double theta) {
  // d^j_{m m'} = sum_k (-1)^{k-m'+m} sqrt((j+m)!(j-m)!(j+m')!(j-m')!)
  //   / ((j+m'-k)! k! (j-k-m)! (k-m'+m)!) c^{2j-2k+m'-m} s^{2k-m'+m}
  const int jpm = (j + m).as_int(), jmm = (j - m).as_int();
  const int jpmp = (j + mp).as_int(), jmmp = (j - mp).as_int();
  const int dm = (m - mp).as_int();
  const long double c = std::cos(0.5L * theta);
  const long double s = std::sin(0.5L * theta);
  auto lf = [](int n) { return std::lgamma(static_cast<long double>(n) + 1.0L); };
  const long double pre = 0.5L * (lf(jpm) + lf(jmm) + lf(jpmp) + lf(jmmp));
  const int kmin = std::max(0, -dm);
  const int kmax = std::min(jpmp, jmm);
  long double sum = 0.0L;
  for (int k = kmin; k <= kmax; ++k) {
    const int pc = j.twice() - 2 * k - dm;
    const int ps = 2 * k + dm;
    const long double mag = std::exp(pre - lf(jpmp - k) - lf(k) - lf(jmm - k) - lf(k + dm));
    long double term = mag * std::pow(c, pc) * std::pow(s, ps);
    if ((k + dm) % 2 != 0) term = -term;
    sum += term;
  }
  return static_cast<double>(sum);
}

} // namespace

Eigen::MatrixXd wigner_d_matrix(HalfInteger j, double theta) {
  const int dim = j.twice() + 1;
  // Generator -i theta J_y = -(theta/2) (J_+ - J_-), real antisymmetric.
  Eigen::MatrixXd gen = Eigen::MatrixXd::Zero(dim, dim);
  const double jv = j.value();
  for (int i = 0; i + 1 < dim; ++i) {
    const double m = -jv + i; // J_+ |m> = sqrt(j(j+1) - m(m+1)) |m+1>
    const double c = std::sqrt(jv * (jv + 1.0) - m * (m + 1.0));
    gen(i + 1, i) -= 0.5 * theta * c;
    gen(i, i + 1) += 0.5 * theta * c;
  }
  return gen.exp();
}

double wigner_d(HalfInteger j, HalfInteger m, HalfInteger mp, double theta) {
  if (std::abs(m.twice()) > j.twice() || std::abs(mp.twice()) > j.twice()) return 0.0;
  if (!(j + m).is_integer() || !(j + mp).is_integer()) return 0.0;
  if (j.twice() <= 20) return wigner_d_sum(j, m, mp, theta);
  const auto d = wigner_d_matrix(j, theta);
  return d((m + j).as_int(), (mp + j).as_int());
}

double reduced_Y(int l, int kappa, int lp) {
  const double w = wigner_3j(l, kappa, lp, 0, 0, 0);
  if (w == 0.0) return 0.0;
  return parity_sign(l) * std::sqrt((2.0 * l + 1.0) * (2.0 * kappa + 1.0) * (2.0 * lp + 1.0) / (4.0 * units::pi)) *
         w;
}

double reduced_J(HalfInteger J) {
  const double v = J.value();
  return std::sqrt(v * (v + 1.0) * (2.0 * v + 1.0));
}

double reduced_coupled_orbital(int l, HalfInteger s, HalfInteger j, int lp, HalfInteger jp, int kappa,
                               double reduced_orbital) {
  const HalfInteger L = HalfInteger::from_int(l), Lp = HalfInteger::from_int(lp), K = HalfInteger::from_int(kappa);
  const double w = wigner_6j(L, j, s, jp, Lp, K);
  if (w == 0.0) return 0.0;
  const int phase = parity_sign((L + s + jp + K).as_int());
  return phase * reduced_orbital * std::sqrt((j.twice() + 1.0) * (jp.twice() + 1.0)) * w;
}

double reduced_coupled_spin(int l, HalfInteger s, HalfInteger j, HalfInteger sp, HalfInteger jp, int kappa,
                            double reduced_spin) {
  const HalfInteger L = HalfInteger::from_int(l), K = HalfInteger::from_int(kappa);
  const double w = wigner_6j(s, j, L, jp, sp, K);
  if (w == 0.0) return 0.0;
  const int phase = parity_sign((L + sp + j + K).as_int());
  return phase * reduced_spin * std::sqrt((j.twice() + 1.0) * (jp.twice() + 1.0)) * w;
}

double wigner_eckart(HalfInteger j, HalfInteger mj, int kappa, int q, HalfInteger jp, HalfInteger mjp,
                     double reduced) {
  if (reduced == 0.0) return 0.0;
  const double w = wigner_3j(j, HalfInteger::from_int(kappa), jp, -mj, HalfInteger::from_int(q), mjp);
  if (w == 0.0) return 0.0;
  return parity_sign((j - mj).as_int()) * reduced * w;
}

double angular_multipole(int l, HalfInteger j, HalfInteger mj, int kappa, int q, int lp, HalfInteger jp,
                         HalfInteger mjp) {
  const HalfInteger half = HalfInteger::from_twice(1);
  const double red_l = reduced_Y(l, kappa, lp);
  if (red_l == 0.0) return 0.0;
  const double red_j = reduced_coupled_orbital(l, half, j, lp, jp, kappa, red_l);
  const double value = wigner_eckart(j, mj, kappa, q, jp, mjp, red_j);
  return value * std::sqrt(4.0 * units::pi / (2.0 * kappa + 1.0));
}

} // namespace rydpair
