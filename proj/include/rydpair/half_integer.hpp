#pragma once

#include <cmath>
#include <compare>
#include <cstdlib>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>

namespace rydpair {

/// Exact representation of integer and half-integer angular momenta. Stores
/// twice the value.
class HalfInteger {
public:
  constexpr HalfInteger() = default;

  static constexpr HalfInteger from_twice(int twice) {
    HalfInteger h;
    h.twice_ = twice;
    return h;
  }
  static constexpr HalfInteger from_int(int v) { return from_twice(2 * v); }
  /// Accepts only integer or half-integer values.
  static HalfInteger from_double(double v) {
    const double t = 2.0 * v;
    const long r = std::lround(t);
    if (std::abs(t - static_cast<double>(r)) > 1e-9) {
      throw std::invalid_argument("not a half-integer: " + std::to_string(v));
    }
    return from_twice(static_cast<int>(r));
  }

  constexpr int twice() const { return twice_; }
  constexpr double value() const { return 0.5 * twice_; }
  constexpr bool is_integer() const { return twice_ % 2 == 0; }
  /// Integer value; only meaningful when is_integer().
  constexpr int as_int() const { return twice_ / 2; }

  constexpr HalfInteger operator-() const { return from_twice(-twice_); }
  constexpr HalfInteger operator+(HalfInteger o) const { return from_twice(twice_ + o.twice_); }
  constexpr HalfInteger operator-(HalfInteger o) const { return from_twice(twice_ - o.twice_); }
  constexpr HalfInteger &operator+=(HalfInteger o) {
    twice_ += o.twice_;
    return *this;
  }
  constexpr HalfInteger &operator-=(HalfInteger o) {
    twice_ -= o.twice_;
    return *this;
  }

  constexpr auto operator<=>(const HalfInteger &) const = default;

  std::string str() const {
    if (is_integer()) return std::to_string(as_int());
    return std::to_string(twice_) + "/2";
  }

private:
  int twice_ = 0;
};

inline constexpr HalfInteger operator""_h(unsigned long long twice) {
  return HalfInteger::from_twice(static_cast<int>(twice));
}

inline std::ostream &operator<<(std::ostream &os, HalfInteger h) { return os << h.str(); }

/// (-1)^k for an integer-valued HalfInteger.
inline constexpr int parity_sign(HalfInteger k) { return (k.as_int() % 2 == 0) ? 1 : -1; }
inline constexpr int parity_sign(int k) { return (k % 2 == 0) ? 1 : -1; }

} // namespace rydpair

template <> struct std::hash<rydpair::HalfInteger> {
  std::size_t operator()(rydpair::HalfInteger h) const noexcept { return std::hash<int>{}(h.twice()); }
};
