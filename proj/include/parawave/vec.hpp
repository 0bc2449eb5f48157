#pragma once
// Small fixed-capacity real vectors for spatial dimension n in {1,2,3},
// plus a spacetime point type (time coordinate + spatial vector).
//
// The dimension is a runtime value (configs choose n), but it is tiny and
// bounded, so we store a fixed double[3] and carry the active length.  This
// keeps every geometric object trivially copyable and allocation-free.

#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <ostream>

#include "parawave/errors.hpp"

namespace parawave {

inline constexpr int kMaxDim = 3;

struct Vec {
  std::array<double, kMaxDim> a{0.0, 0.0, 0.0};
  int n = 0;

  Vec() = default;
  explicit Vec(int dim) : n(dim) {
    if (dim < 1 || dim > kMaxDim) throw InvalidInput("Vec: dimension must be 1..3");
  }
  Vec(std::initializer_list<double> xs) {
    if (xs.size() < 1 || xs.size() > static_cast<std::size_t>(kMaxDim))
      throw InvalidInput("Vec: dimension must be 1..3");
    n = static_cast<int>(xs.size());
    int i = 0;
    for (double x : xs) a[static_cast<std::size_t>(i++)] = x;
  }

  double& operator[](int i) { return a[static_cast<std::size_t>(i)]; }
  double operator[](int i) const { return a[static_cast<std::size_t>(i)]; }

  Vec& operator+=(const Vec& o) {
    for (int i = 0; i < n; ++i) a[static_cast<std::size_t>(i)] += o[i];
    return *this;
  }
  Vec& operator-=(const Vec& o) {
    for (int i = 0; i < n; ++i) a[static_cast<std::size_t>(i)] -= o[i];
    return *this;
  }
  Vec& operator*=(double s) {
    for (int i = 0; i < n; ++i) a[static_cast<std::size_t>(i)] *= s;
    return *this;
  }

  friend Vec operator+(Vec x, const Vec& y) { return x += y; }
  friend Vec operator-(Vec x, const Vec& y) { return x -= y; }
  friend Vec operator*(double s, Vec x) { return x *= s; }
  friend Vec operator*(Vec x, double s) { return x *= s; }

  friend bool operator==(const Vec& x, const Vec& y) {
    if (x.n != y.n) return false;
    for (int i = 0; i < x.n; ++i)
      if (x[i] != y[i]) return false;
    return true;
  }
};

inline double dot(const Vec& x, const Vec& y) {
  double s = 0.0;
  for (int i = 0; i < x.n; ++i) s += x[i] * y[i];
  return s;
}

inline double norm2(const Vec& x) { return dot(x, x); }
inline double norm(const Vec& x) { return std::sqrt(norm2(x)); }

inline double dist(const Vec& x, const Vec& y) { return norm(x - y); }

// Unit basis vector e_k in dimension n.
inline Vec basis(int n, int k) {
  Vec v(n);
  v[k] = 1.0;
  return v;
}

inline Vec zero(int n) { return Vec(n); }

inline std::ostream& operator<<(std::ostream& os, const Vec& v) {
  os << '(';
  for (int i = 0; i < v.n; ++i) os << (i ? "," : "") << v[i];
  return os << ')';
}

// A point (t, x) in spacetime R^{1+n}.
struct SpacetimePoint {
  double t = 0.0;
  Vec x;
};

inline double spacetime_dist(const SpacetimePoint& p, const SpacetimePoint& q) {
  const double dt = p.t - q.t;
  return std::sqrt(dt * dt + norm2(p.x - q.x));
}

}  // namespace parawave
