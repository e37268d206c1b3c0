#pragma once

// Scalar forward-mode dual number with a fixed number of tangent slots.
// Used to obtain exact parameter derivatives of the scalar transform jets.

#include <array>
#include <cmath>
#include <cstddef>

namespace smoothflow {

template <std::size_t N>
struct Fwd {
  double v = 0.0;
  std::array<double, N> d{};

  Fwd() = default;
  Fwd(double value) : v(value) {}  // NOLINT(google-explicit-constructor)

  static Fwd variable(double value, std::size_t slot) {
    Fwd r(value);
    r.d[slot] = 1.0;
    return r;
  }

  Fwd& operator+=(const Fwd& o) { return *this = *this + o; }
  Fwd& operator-=(const Fwd& o) { return *this = *this - o; }
  Fwd& operator*=(const Fwd& o) { return *this = *this * o; }
  Fwd& operator/=(const Fwd& o) { return *this = *this / o; }

  friend Fwd operator+(const Fwd& a, const Fwd& b) {
    Fwd r(a.v + b.v);
    for (std::size_t i = 0; i < N; ++i) r.d[i] = a.d[i] + b.d[i];
    return r;
  }
  friend Fwd operator-(const Fwd& a, const Fwd& b) {
    Fwd r(a.v - b.v);
    for (std::size_t i = 0; i < N; ++i) r.d[i] = a.d[i] - b.d[i];
    return r;
  }
  friend Fwd operator-(const Fwd& a) {
    Fwd r(-a.v);
    for (std::size_t i = 0; i < N; ++i) r.d[i] = -a.d[i];
    return r;
  }
  friend Fwd operator*(const Fwd& a, const Fwd& b) {
    Fwd r(a.v * b.v);
    for (std::size_t i = 0; i < N; ++i) r.d[i] = a.d[i] * b.v + a.v * b.d[i];
    return r;
  }
  friend Fwd operator/(const Fwd& a, const Fwd& b) {
    Fwd r(a.v / b.v);
    const double inv = 1.0 / b.v;
    for (std::size_t i = 0; i < N; ++i) r.d[i] = (a.d[i] - r.v * b.d[i]) * inv;
    return r;
  }

  friend bool operator<(const Fwd& a, const Fwd& b) { return a.v < b.v; }
  friend bool operator>(const Fwd& a, const Fwd& b) { return a.v > b.v; }
  friend bool operator<=(const Fwd& a, const Fwd& b) { return a.v <= b.v; }
  friend bool operator>=(const Fwd& a, const Fwd& b) { return a.v >= b.v; }
};

template <std::size_t N>
Fwd<N> exp(const Fwd<N>& a) {
  const double e = std::exp(a.v);
  Fwd<N> r(e);
  for (std::size_t i = 0; i < N; ++i) r.d[i] = e * a.d[i];
  return r;
}

template <std::size_t N>
Fwd<N> log(const Fwd<N>& a) {
  Fwd<N> r(std::log(a.v));
  for (std::size_t i = 0; i < N; ++i) r.d[i] = a.d[i] / a.v;
  return r;
}

template <std::size_t N>
Fwd<N> pow(const Fwd<N>& a, double p) {
  const double val = std::pow(a.v, p);
  const double slope = p * std::pow(a.v, p - 1.0);
  Fwd<N> r(val);
  for (std::size_t i = 0; i < N; ++i) r.d[i] = slope * a.d[i];
  return r;
}

inline double value_of(double x) { return x; }
template <std::size_t N>
double value_of(const Fwd<N>& x) {
  return x.v;
}

/// log(1 + exp(x)) without overflow.
inline double softplus(double x) {
  return x > 30.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}
inline double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

template <std::size_t N>
Fwd<N> softplus(const Fwd<N>& a) {
  Fwd<N> r(softplus(a.v));
  const double s = logistic(a.v);
  for (std::size_t i = 0; i < N; ++i) r.d[i] = s * a.d[i];
  return r;
}

template <std::size_t N>
Fwd<N> logistic(const Fwd<N>& a) {
  const double s = logistic(a.v);
  Fwd<N> r(s);
  for (std::size_t i = 0; i < N; ++i) r.d[i] = s * (1.0 - s) * a.d[i];
  return r;
}

}  // namespace smoothflow
