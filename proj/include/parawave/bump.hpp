#pragma once
// Radial frequency-side bump and its real-space transform.
//
// The frequency profile g0(s) = P(s/rho) with P(u) = 1 - S(S(S(u))),
// S(x) = x^2 (3 - 2x), is 1 at s=0, vanishes for s >= rho, and is flat to
// order 8 at both seams, so the real-space window decays like |x|^{-8}.
// With rho < 1 the hat is supported strictly inside the unit cube, so the
// integer translates of the real-space window form an exact partition of
// unity (Poisson summation picks out only the zero frequency).
//
// Real-space values are radial; they are served from a cubic-interpolated
// table backed by Gauss-Legendre quadrature of the radial Fourier inversion
// (cosine kernel in n=1, Hankel J0 in n=2, spherical sine kernel in n=3).

#include <array>
#include <memory>
#include <vector>

#include "parawave/errors.hpp"
#include "parawave/vec.hpp"

namespace parawave {

class Bump {
 public:
  explicit Bump(double rho = 0.75);

  double rho() const { return rho_; }

  // Frequency-side profile g0(|s|); support |s| < rho, g0(0) = 1.
  double hat_radial(double s) const;
  double hat(const Vec& xi) const;

  // Real-space window value at radius r in dimension n (table + cubic
  // interpolation; falls back to direct quadrature past the table range).
  double value_radial(int n, double r) const;
  double value(const Vec& x) const;

  // Direct quadrature of the radial inversion integral (reference path).
  double value_direct(int n, double r) const;

  // value at the origin = integral of the hat over R^n.
  double at_zero(int n) const;

 private:
  struct Table {
    double step = 0.0;
    std::vector<double> v;  // v[i] = value at r = i*step
  };
  const Table& table(int n) const;

  double rho_;
  std::shared_ptr<std::array<Table, kMaxDim>> tables_;  // lazy, per dimension
};

// One frequency atom of the periodized lattice window: offset m on the
// refinement lattice, coefficient b = M^{-n} g0(|m|/M).
struct WindowAtom {
  std::array<int, kMaxDim> m{0, 0, 0};
  double b = 0.0;
};

// All nonzero atoms (|m| < rho*M) of the window at refinement M in
// dimension n.  The m = 0 coefficient is M^{-n}; summing e^{-2 pi i h m.x0}
// over a complete residue system of x0 kills every other atom, which is what
// makes packet decompositions resum exactly.
std::vector<WindowAtom> window_atoms(const Bump& bump, int n, int refine);

// Sum of squared atom coefficients of window_atoms(bump, n, refine).
double window_atom_l2(const Bump& bump, int n, int refine);

}  // namespace parawave
