#pragma once

// Racah-sum reference values in GMP rational arithmetic. Independent of the
// library code paths; only used by tests.

#include <gmpxx.h>

#include <algorithm>
#include <cmath>

namespace oracle {

inline mpz_class fact(long n) {
  mpz_class r;
  mpz_fac_ui(r.get_mpz_t(), static_cast<unsigned long>(n));
  return r;
}

// Arguments are twice the angular momenta.
inline bool tri2(int a, int b, int c) {
  return a >= 0 && b >= 0 && c >= 0 && (a + b + c) % 2 == 0 && c >= std::abs(a - b) && c <= a + b;
}

inline double signed_sqrt(const mpq_class &square, int sign) {
  if (sign == 0 || square == 0) return 0.0;
  mpf_class f(square, 256);
  mpf_class r(0, 256);
  mpf_sqrt(r.get_mpf_t(), f.get_mpf_t());
  return sign * r.get_d();
}

inline double threej(int j1, int j2, int j3, int m1, int m2, int m3) {
  if (m1 + m2 + m3 != 0 || !tri2(j1, j2, j3)) return 0.0;
  if (std::abs(m1) > j1 || std::abs(m2) > j2 || std::abs(m3) > j3) return 0.0;
  if ((j1 + m1) % 2 || (j2 + m2) % 2 || (j3 + m3) % 2) return 0.0;
  const long a = (j1 + j2 - j3) / 2, b = (j1 - j2 + j3) / 2, c = (-j1 + j2 + j3) / 2, d = (j1 + j2 + j3) / 2 + 1;
  mpq_class pre(fact(a) * fact(b) * fact(c), fact(d));
  pre *= mpq_class(fact((j1 + m1) / 2) * fact((j1 - m1) / 2) * fact((j2 + m2) / 2) * fact((j2 - m2) / 2) *
                   fact((j3 + m3) / 2) * fact((j3 - m3) / 2));
  pre.canonicalize();
  mpq_class sum = 0;
  for (long k = 0; k <= d; ++k) {
    const long x1 = (j3 - j2 + m1) / 2 + k, x2 = (j3 - j1 - m2) / 2 + k, x3 = (j1 + j2 - j3) / 2 - k;
    const long x4 = (j1 - m1) / 2 - k, x5 = (j2 + m2) / 2 - k;
    if (x1 < 0 || x2 < 0 || x3 < 0 || x4 < 0 || x5 < 0) continue;
    mpq_class term(1, fact(k) * fact(x1) * fact(x2) * fact(x3) * fact(x4) * fact(x5));
    term.canonicalize();
    sum += (k % 2 ? -term : term);
  }
  const int phase = (((j1 - j2 - m3) / 2) % 2 == 0) ? 1 : -1;
  const int s = sgn(sum) * phase;
  return signed_sqrt(pre * sum * sum, s);
}

inline mpq_class delta2(int a, int b, int c) {
  mpq_class r(fact((a + b - c) / 2) * fact((a - b + c) / 2) * fact((-a + b + c) / 2), fact((a + b + c) / 2 + 1));
  r.canonicalize();
  return r;
}

inline double sixj(int j1, int j2, int j3, int j4, int j5, int j6) {
  if (!tri2(j1, j2, j3) || !tri2(j1, j5, j6) || !tri2(j4, j2, j6) || !tri2(j4, j5, j3)) return 0.0;
  const mpq_class pre = delta2(j1, j2, j3) * delta2(j1, j5, j6) * delta2(j4, j2, j6) * delta2(j4, j5, j3);
  const long a1 = (j1 + j2 + j3) / 2, a2 = (j1 + j5 + j6) / 2, a3 = (j4 + j2 + j6) / 2, a4 = (j4 + j5 + j3) / 2;
  const long b1 = (j1 + j2 + j4 + j5) / 2, b2 = (j2 + j3 + j5 + j6) / 2, b3 = (j3 + j1 + j6 + j4) / 2;
  mpq_class sum = 0;
  for (long t = std::max({a1, a2, a3, a4}); t <= std::min({b1, b2, b3}); ++t) {
    mpq_class term(fact(t + 1), fact(t - a1) * fact(t - a2) * fact(t - a3) * fact(t - a4) * fact(b1 - t) *
                                    fact(b2 - t) * fact(b3 - t));
    term.canonicalize();
    sum += (t % 2 ? -term : term);
  }
  return signed_sqrt(pre * sum * sum, sgn(sum));
}

} // namespace oracle
