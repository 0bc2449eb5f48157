#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "parawave/bump.hpp"
#include "parawave/rng.hpp"

using namespace parawave;

TEST_CASE("bump: frequency profile shape") {
  const Bump b;
  CHECK(b.rho() == doctest::Approx(0.75));
  CHECK(b.hat_radial(0.0) == 1.0);
  CHECK(b.hat_radial(0.75) == 0.0);
  CHECK(b.hat_radial(0.9) == 0.0);
  CHECK(b.hat_radial(-0.2) == b.hat_radial(0.2));
  // Monotone decreasing on the support.
  double prev = 1.0;
  for (int i = 1; i <= 50; ++i) {
    const double g = b.hat_radial(0.75 * i / 50.0);
    CHECK(g <= prev + 1e-15);
    prev = g;
  }
  // Flat to high order at both seams.
  CHECK(1.0 - b.hat_radial(0.05 * 0.75) <= 1e-7);
  CHECK(b.hat_radial(0.95 * 0.75) <= 1e-6);

  CHECK(b.hat(Vec{0.3, 0.4}) == doctest::Approx(b.hat_radial(0.5)).epsilon(1e-15));

  CHECK_THROWS_AS(Bump(1.0), InvalidConfig);
  CHECK_THROWS_AS(Bump(0.0), InvalidConfig);
}

TEST_CASE("bump: value at the origin") {
  const Bump b;
  // n=1: the profile P satisfies P(u) + P(1-u) = 1, so the integral over the
  // support is exactly rho.
  CHECK(b.at_zero(1) == doctest::Approx(0.75).epsilon(1e-12));
  // Crude bracketing by the support volume in higher dimensions.
  CHECK(b.at_zero(2) > 0.0);
  CHECK(b.at_zero(2) < 3.14159265 * 0.75 * 0.75);
  CHECK(b.at_zero(3) > 0.0);
  CHECK(b.at_zero(3) < 4.18879 * 0.75 * 0.75 * 0.75);
  // The origin is the global maximum (transform of a nonnegative profile).
  for (double r : {0.3, 0.7, 1.1, 2.2, 5.0}) {
    CHECK(std::abs(b.value_radial(1, r)) < b.at_zero(1));
    CHECK(std::abs(b.value_radial(2, r)) < b.at_zero(2));
  }
}

TEST_CASE("bump: integer translates form a partition of unity (n=1)") {
  const Bump b;
  for (double x : {0.0, 0.1, 0.37, 0.5, 0.77}) {
    double s = 0.0;
    for (int k = -41; k <= 41; ++k) s += b.value_direct(1, x - k);
    CHECK(s == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("bump: lattice sums hit the zero-frequency mass (n=2,3)") {
  const Bump b;
  // Poisson summation: sum_k eta(k) = sum_m hat(m) = 1; the truncation tail
  // is governed by the |x|^{-8} decay.
  double s2 = 0.0;
  for (int i = -20; i <= 20; ++i)
    for (int j = -20; j <= 20; ++j) s2 += b.value_direct(2, std::hypot(double(i), double(j)));
  CHECK(s2 == doctest::Approx(1.0).epsilon(1e-7));

  double s3 = 0.0;
  for (int i = -12; i <= 12; ++i)
    for (int j = -12; j <= 12; ++j)
      for (int k = -12; k <= 12; ++k)
        s3 += b.value_direct(3, std::sqrt(double(i * i + j * j + k * k)));
  CHECK(s3 == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("bump: table agrees with direct quadrature") {
  const Bump b;
  auto rng = make_rng(23, 0);
  std::uniform_real_distribution<double> u1(0.0, 60.0), u2(0.0, 20.0);
  for (int i = 0; i < 40; ++i) {
    const double r1 = u1(rng);
    CHECK(std::abs(b.value_radial(1, r1) - b.value_direct(1, r1)) <= 2e-10);
    const double r2 = u2(rng);
    CHECK(std::abs(b.value_radial(2, r2) - b.value_direct(2, r2)) <= 5e-9);
    CHECK(std::abs(b.value_radial(3, r2) - b.value_direct(3, r2)) <= 5e-9);
  }
  // Past the table range the direct path serves queries transparently.
  CHECK(b.value_radial(2, 30.0) == doctest::Approx(b.value_direct(2, 30.0)).epsilon(1e-12));
  CHECK(b.value(Vec{0.25, -0.5}) ==
        doctest::Approx(b.value_radial(2, std::sqrt(0.3125))).epsilon(1e-12));
}

TEST_CASE("bump: real-space tail decays at order 8") {
  const Bump b;
  // Envelope through local maxima: env(r) = max |eta| over [r, r*2^{1/4}].
  // Least-squares slope of log env vs log r across [4, 45].
  std::vector<double> lr, lv;
  for (double r = 4.0; r < 45.0; r *= std::pow(2.0, 0.25)) {
    double env = 0.0;
    for (int i = 0; i < 48; ++i) {
      const double rr = r * std::pow(2.0, 0.25 * i / 48.0);
      env = std::max(env, std::abs(b.value_radial(1, rr)));
    }
    REQUIRE(env > 0.0);
    lr.push_back(std::log(r));
    lv.push_back(std::log(env));
  }
  const auto m = static_cast<double>(lr.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lr.size(); ++i) {
    sx += lr[i];
    sy += lv[i];
    sxx += lr[i] * lr[i];
    sxy += lr[i] * lv[i];
  }
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  CHECK(slope <= -6.5);
  // Magnitude sanity at a fixed distance.
  CHECK(std::abs(b.value_radial(1, 8.0)) <= 1e-4);
}

TEST_CASE("bump: window atoms") {
  const Bump b;
  // refine = 1 degenerates to the constant window.
  const auto trivial = window_atoms(b, 2, 1);
  REQUIRE(trivial.size() == 1);
  CHECK(trivial[0].m == std::array<int, kMaxDim>{0, 0, 0});
  CHECK(trivial[0].b == doctest::Approx(1.0));

  // n=1, M=16: support |m| < 12, i.e. m in [-11, 11].
  const auto a16 = window_atoms(b, 1, 16);
  CHECK(a16.size() == 23);
  double l2 = 0.0;
  for (const auto& a : a16) {
    CHECK(a.b > 0.0);
    l2 += a.b * a.b;
    // Radial symmetry.
    const double s = std::abs(a.m[0]) / 16.0;
    CHECK(a.b == doctest::Approx(b.hat_radial(s) / 16.0).epsilon(1e-15));
  }
  CHECK(window_atom_l2(b, 1, 16) == doctest::Approx(l2).epsilon(1e-15));

  // The zero atom always carries coefficient M^{-n}.
  const auto a8 = window_atoms(b, 2, 8);
  for (const auto& a : a8) {
    if (a.m == std::array<int, kMaxDim>{0, 0, 0})
      CHECK(a.b == doctest::Approx(1.0 / 64.0).epsilon(1e-15));
  }
  CHECK_THROWS_AS(window_atoms(b, 1, 0), InvalidConfig);
}
