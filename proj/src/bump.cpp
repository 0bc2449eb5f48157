#include "parawave/bump.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

namespace parawave {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kGaussN = 512;

// Gauss-Legendre nodes/weights on [0,1].
struct Rule01 {
  std::array<double, kGaussN> x{}, w{};
  Rule01() {
    for (int i = 0; i < kGaussN; ++i) {
      double t = std::cos(kPi * (i + 0.75) / (kGaussN + 0.5));
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = t;
        for (int k = 2; k <= kGaussN; ++k) {
          const double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        const double dp = kGaussN * (t * p1 - p0) / (t * t - 1.0);
        const double dt = p1 / dp;
        t -= dt;
        if (std::abs(dt) < 1e-15) break;
      }
      double p0 = 1.0, p1 = t;
      for (int k = 2; k <= kGaussN; ++k) {
        const double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const double dp = kGaussN * (t * p1 - p0) / (t * t - 1.0);
      x[static_cast<std::size_t>(i)] = 0.5 * (t + 1.0);
      w[static_cast<std::size_t>(i)] = 1.0 / ((1.0 - t * t) * dp * dp);
    }
  }
};

const Rule01& rule01() {
  static const Rule01 r;
  return r;
}

double smoothstep(double x) { return x * x * (3.0 - 2.0 * x); }

std::mutex g_table_mutex;

}  // namespace

Bump::Bump(double rho) : rho_(rho), tables_(std::make_shared<std::array<Table, kMaxDim>>()) {
  if (!(rho > 0.0) || !(rho < 1.0))
    throw InvalidConfig("Bump: rho must lie in (0,1) for an exact partition of unity");
}

double Bump::hat_radial(double s) const {
  s = std::abs(s);
  if (s >= rho_) return 0.0;
  const double u = s / rho_;
  return 1.0 - smoothstep(smoothstep(smoothstep(u)));
}

double Bump::hat(const Vec& xi) const { return hat_radial(norm(xi)); }

double Bump::value_direct(int n, double r) const {
  if (n < 1 || n > kMaxDim) throw InvalidInput("Bump: dimension must be 1..3");
  r = std::abs(r);
  const auto& rule = rule01();
  double acc = 0.0;
  switch (n) {
    case 1:
      // 2 * int_0^rho g0(s) cos(2 pi s r) ds
      for (int i = 0; i < kGaussN; ++i) {
        const double s = rho_ * rule.x[static_cast<std::size_t>(i)];
        acc += rule.w[static_cast<std::size_t>(i)] * hat_radial(s) * std::cos(2.0 * kPi * s * r);
      }
      return 2.0 * rho_ * acc;
    case 2:
      // 2 pi * int_0^rho g0(s) J0(2 pi s r) s ds
      for (int i = 0; i < kGaussN; ++i) {
        const double s = rho_ * rule.x[static_cast<std::size_t>(i)];
        acc += rule.w[static_cast<std::size_t>(i)] * hat_radial(s) * s *
               std::cyl_bessel_j(0.0, 2.0 * kPi * s * r);
      }
      return 2.0 * kPi * rho_ * acc;
    case 3:
      // 4 pi * int_0^rho g0(s) s^2 sinc(2 pi s r) ds
      for (int i = 0; i < kGaussN; ++i) {
        const double s = rho_ * rule.x[static_cast<std::size_t>(i)];
        const double arg = 2.0 * kPi * s * r;
        const double sinc = arg < 1e-8 ? 1.0 - arg * arg / 6.0 : std::sin(arg) / arg;
        acc += rule.w[static_cast<std::size_t>(i)] * hat_radial(s) * s * s * sinc;
      }
      return 4.0 * kPi * rho_ * acc;
  }
  return 0.0;
}

double Bump::at_zero(int n) const { return value_direct(n, 0.0); }

const Bump::Table& Bump::table(int n) const {
  auto& slot = (*tables_)[static_cast<std::size_t>(n - 1)];
  std::lock_guard<std::mutex> lock(g_table_mutex);
  if (slot.v.empty()) {
    // n=1 serves the widest queries (tails out to tens of window widths);
    // the Bessel-backed higher dimensions keep a shorter range and fall back
    // to direct quadrature beyond it.
    const double r_max = n == 1 ? 64.0 : 24.0;
    const double step = n == 1 ? 1.0 / 1024.0 : 1.0 / 512.0;
    const auto count = static_cast<std::size_t>(std::llround(r_max / step)) + 3;
    slot.step = step;
    slot.v.resize(count);
    for (std::size_t i = 0; i < count; ++i)
      slot.v[i] = value_direct(n, static_cast<double>(i) * step);
  }
  return slot;
}

double Bump::value_radial(int n, double r) const {
  if (n < 1 || n > kMaxDim) throw InvalidInput("Bump: dimension must be 1..3");
  r = std::abs(r);
  const Table& tab = table(n);
  const double idx = r / tab.step;
  const auto i = static_cast<std::ptrdiff_t>(std::floor(idx));
  const auto last = static_cast<std::ptrdiff_t>(tab.v.size()) - 3;
  if (i >= last) return value_direct(n, r);
  const double t = idx - static_cast<double>(i);
  // Catmull-Rom through the four surrounding samples; even reflection at 0.
  auto at = [&](std::ptrdiff_t j) {
    return tab.v[static_cast<std::size_t>(j < 0 ? -j : j)];
  };
  const double p0 = at(i - 1), p1 = at(i), p2 = at(i + 1), p3 = at(i + 2);
  return 0.5 * (2.0 * p1 + (-p0 + p2) * t + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t * t +
                (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * t * t * t);
}

double Bump::value(const Vec& x) const { return value_radial(x.n, norm(x)); }

std::vector<WindowAtom> window_atoms(const Bump& bump, int n, int refine) {
  if (n < 1 || n > kMaxDim) throw InvalidInput("window_atoms: dimension must be 1..3");
  if (refine < 1) throw InvalidConfig("window_atoms: refine must be >= 1");
  const double M = refine;
  const int span = static_cast<int>(std::ceil(bump.rho() * M));
  const double scale = std::pow(M, -n);
  std::vector<WindowAtom> atoms;
  std::array<int, kMaxDim> m{0, 0, 0};
  for (m[0] = -span; m[0] <= span; ++m[0])
    for (m[1] = (n > 1 ? -span : 0); m[1] <= (n > 1 ? span : 0); ++m[1])
      for (m[2] = (n > 2 ? -span : 0); m[2] <= (n > 2 ? span : 0); ++m[2]) {
        double s2 = 0.0;
        for (int i = 0; i < n; ++i) s2 += static_cast<double>(m[i]) * m[i];
        const double g = bump.hat_radial(std::sqrt(s2) / M);
        if (g > 0.0) atoms.push_back(WindowAtom{m, scale * g});
      }
  return atoms;
}

double window_atom_l2(const Bump& bump, int n, int refine) {
  double s = 0.0;
  for (const auto& a : window_atoms(bump, n, refine)) s += a.b * a.b;
  return s;
}

}  // namespace parawave
