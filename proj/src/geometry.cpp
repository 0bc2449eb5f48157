#include "parawave/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

namespace parawave {

namespace {

constexpr double kPi = std::numbers::pi;

// Nodes of the 64-point Gauss-Legendre rule on [-1,1], positive half.
// (Weights/nodes generated by Newton iteration at startup; 64 points gives
// far more accuracy than the 1e-3 comparisons these references feed.)
struct GaussLegendre {
  std::vector<double> x, w;
  explicit GaussLegendre(int npts) {
    x.resize(static_cast<std::size_t>(npts));
    w.resize(static_cast<std::size_t>(npts));
    for (int i = 0; i < npts; ++i) {
      // Initial guess (Chebyshev), then Newton on P_n.
      double t = std::cos(kPi * (i + 0.75) / (npts + 0.5));
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = t;
        for (int k = 2; k <= npts; ++k) {
          double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        double dp = npts * (t * p1 - p0) / (t * t - 1.0);
        double dt = p1 / dp;
        t -= dt;
        if (std::abs(dt) < 1e-15) break;
      }
      double p0 = 1.0, p1 = t;
      for (int k = 2; k <= npts; ++k) {
        double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      double dp = npts * (t * p1 - p0) / (t * t - 1.0);
      x[static_cast<std::size_t>(i)] = t;
      w[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - t * t) * dp * dp);
    }
  }
};

const GaussLegendre& gl64() {
  static const GaussLegendre rule(64);
  return rule;
}

double density(const Vec& xi, WeightRule rule) {
  return rule == WeightRule::graph ? std::sqrt(1.0 + norm2(xi)) : 1.0;
}

}  // namespace

FrequencyPoint paraboloid_lift(const Vec& xi) {
  return FrequencyPoint{xi, -0.5 * norm2(xi)};
}

double patch_radius(int n, PatchTier tier) {
  if (n < 1 || n > kMaxDim) throw InvalidInput("patch_radius: dimension must be 1..3");
  switch (tier) {
    case PatchTier::base: return 1.0 / (100.0 * n);
    case PatchTier::enlarged: return 1.0 / (50.0 * n);
    case PatchTier::omega: return 1.0 / (20.0 * n);
  }
  throw InvalidInput("patch_radius: bad tier");
}

Vec side_center(int n, int side) {
  if (side != 1 && side != 2) throw InvalidInput("side must be 1 or 2");
  Vec c = basis(n, 0);
  if (side == 2) c *= -1.0;
  return c;
}

double SurfacePatch::total_weight() const {
  double s = 0.0;
  for (double w : weights) s += w;
  return s;
}

double ball_volume(int n, double r) {
  switch (n) {
    case 1: return 2.0 * r;
    case 2: return kPi * r * r;
    case 3: return 4.0 / 3.0 * kPi * r * r * r;
    case 4: return kPi * kPi / 2.0 * r * r * r * r;
  }
  throw InvalidInput("ball_volume: dimension must be 1..4");
}

// --------------------------------------------------------------- disk ∩ box

namespace {

// Area of disk(0, r) ∩ {u <= x, v <= y}.
double disk_corner_area(double r, double x, double y) {
  if (r <= 0.0) return 0.0;
  if (x <= -r || y <= -r) return 0.0;
  const double xc = std::min(x, r);
  // len(u) = chord of the disk at abscissa u, capped at height y.
  //   c(u) = sqrt(r^2-u^2); len = y + c where c >= |y| controls, else 2c or 0.
  auto F2 = [&](double u) {  // antiderivative of 2 c(u)
    u = std::clamp(u, -r, r);
    return u * std::sqrt(std::max(0.0, r * r - u * u)) + r * r * std::asin(u / r);
  };
  auto F1 = [&](double u) {  // antiderivative of y + c(u)
    u = std::clamp(u, -r, r);
    return y * u + 0.5 * (u * std::sqrt(std::max(0.0, r * r - u * u)) + r * r * std::asin(u / r));
  };
  if (y >= r) return F2(xc) - F2(-r);
  const double ustar = std::sqrt(std::max(0.0, r * r - y * y));
  // Split [-r, xc] at -ustar, +ustar; inside |u| <= ustar the chord is capped
  // (len = y + c), outside it is full (y >= 0) or empty (y < 0).
  double a = -r;
  double total = 0.0;
  const double cuts[2] = {-ustar, ustar};
  for (double cut : cuts) {
    double b = std::clamp(cut, a, xc);
    if (b > a) {
      const double mid = 0.5 * (a + b);
      const bool capped = std::abs(mid) <= ustar;
      if (capped)
        total += F1(b) - F1(a);
      else if (y >= 0.0)
        total += F2(b) - F2(a);
      a = b;
    }
  }
  if (xc > a) {
    const double mid = 0.5 * (a + xc);
    const bool capped = std::abs(mid) <= ustar;
    if (capped)
      total += F1(xc) - F1(a);
    else if (y >= 0.0)
      total += F2(xc) - F2(a);
  }
  return std::max(0.0, total);
}

}  // namespace

double disk_rectangle_area(double cx, double cy, double r, double x0, double x1,
                           double y0, double y1) {
  if (x1 <= x0 || y1 <= y0) return 0.0;
  const double a = disk_corner_area(r, x1 - cx, y1 - cy) - disk_corner_area(r, x0 - cx, y1 - cy) -
                   disk_corner_area(r, x1 - cx, y0 - cy) + disk_corner_area(r, x0 - cx, y0 - cy);
  return std::max(0.0, a);
}

// ------------------------------------------------------------ patch builders

namespace {

// Measure of the lattice cell centered at `node` (side h) clipped to the disk
// (center `c`, radius r).  Dimension-specific exact/near-exact rules.
double clipped_cell_measure(int n, const Vec& node, double h, const Vec& c, double r) {
  if (n == 1) {
    const double lo = std::max(node[0] - 0.5 * h, c[0] - r);
    const double hi = std::min(node[0] + 0.5 * h, c[0] + r);
    return std::max(0.0, hi - lo);
  }
  if (n == 2) {
    return disk_rectangle_area(c[0], c[1], r, node[0] - 0.5 * h, node[0] + 0.5 * h,
                               node[1] - 0.5 * h, node[1] + 0.5 * h);
  }
  // n == 3: exact for fully inside/outside cells, midpoint subcells otherwise.
  const double d = dist(node, c);
  const double cr = 0.5 * std::sqrt(3.0) * h;  // cell circumradius
  if (d + cr <= r) return h * h * h;
  if (d - cr >= r) return 0.0;
  constexpr int S = 5;
  int inside = 0;
  Vec p(3);
  for (int i = 0; i < S; ++i)
    for (int j = 0; j < S; ++j)
      for (int k = 0; k < S; ++k) {
        p[0] = node[0] + h * ((i + 0.5) / S - 0.5);
        p[1] = node[1] + h * ((j + 0.5) / S - 0.5);
        p[2] = node[2] + h * ((k + 0.5) / S - 0.5);
        if (dist(p, c) <= r) ++inside;
      }
  return h * h * h * inside / double(S * S * S);
}

SurfacePatch build_patch(int n, const Vec& center, double radius, double h, WeightRule rule) {
  if (n < 1 || n > kMaxDim) throw InvalidInput("patch: dimension must be 1..3");
  if (!(radius > 0.0) || !(h > 0.0)) throw InvalidInput("patch: radius and spacing must be positive");
  SurfacePatch patch;
  patch.n = n;
  patch.center = center;
  patch.radius = radius;
  patch.h = h;
  patch.rule = rule;

  const int span = static_cast<int>(std::floor(radius / h)) + 1;
  std::map<std::array<int, kMaxDim>, std::size_t> node_of;
  std::array<int, kMaxDim> m{0, 0, 0};

  auto node_at = [&](const std::array<int, kMaxDim>& idx) {
    Vec p = center;
    for (int i = 0; i < n; ++i) p[i] += h * idx[i];
    return p;
  };

  // Pass 1: nodes inside the closed disk.
  auto for_each_index = [&](auto&& body) {
    for (m[0] = -span; m[0] <= span; ++m[0]) {
      for (m[1] = (n > 1 ? -span : 0); m[1] <= (n > 1 ? span : 0); ++m[1]) {
        for (m[2] = (n > 2 ? -span : 0); m[2] <= (n > 2 ? span : 0); ++m[2]) body(m);
      }
    }
  };
  for_each_index([&](const std::array<int, kMaxDim>& idx) {
    const Vec p = node_at(idx);
    if (dist(p, center) <= radius) {
      node_of[idx] = patch.nodes.size();
      patch.nodes.push_back(paraboloid_lift(p));
      patch.index.push_back(idx);
    }
  });
  if (patch.nodes.empty()) throw DegenerateGeometry("patch: no lattice nodes inside the cap");
  patch.weights.assign(patch.nodes.size(), 0.0);

  // Pass 2: distribute clipped-cell measure.  Cells whose node fell outside
  // the disk donate their sliver to the nearest inside node (stepping toward
  // the center), so the weights partition the disk measure exactly.
  for_each_index([&](const std::array<int, kMaxDim>& idx) {
    const Vec p = node_at(idx);
    const double meas = clipped_cell_measure(n, p, h, center, radius);
    if (meas <= 0.0) return;
    std::array<int, kMaxDim> target = idx;
    while (node_of.find(target) == node_of.end()) {
      // Step the largest-offset coordinate toward the center.
      int best = 0;
      for (int i = 1; i < n; ++i)
        if (std::abs(target[i]) > std::abs(target[best])) best = i;
      if (target[best] == 0) throw DegenerateGeometry("patch: cell re-assignment failed");
      target[best] += target[best] > 0 ? -1 : 1;
    }
    const std::size_t k = node_of[target];
    patch.weights[k] += meas * density(node_at(target), rule);
  });
  return patch;
}

}  // namespace

SurfacePatch make_patch(int n, int side, PatchTier tier, int resolution) {
  if (resolution < 1) throw InvalidConfig("make_patch: resolution must be >= 1");
  const double r = patch_radius(n, tier);
  const double frac = ball_volume(n, 1.0) / std::pow(2.0, n);
  const int K = std::max(1, static_cast<int>(std::ceil(std::pow(resolution / frac, 1.0 / n))));
  return build_patch(n, side_center(n, side), r, 2.0 * r / K, WeightRule::graph);
}

SurfacePatch make_patch_refined(int n, int side, PatchTier tier, double R, int refine) {
  if (refine < 1) throw InvalidConfig("make_patch_refined: refine must be >= 1");
  if (!(R >= 1.0)) throw InvalidConfig("make_patch_refined: R must be >= 1");
  const double h = 1.0 / (std::sqrt(R) * refine);
  return build_patch(n, side_center(n, side), patch_radius(n, tier), h, WeightRule::graph);
}

SurfacePatch make_custom_patch(const Vec& center, double radius, double h, WeightRule rule) {
  return build_patch(center.n, center, radius, h, rule);
}

double analytic_cap_measure(int n, const Vec& center, double radius, WeightRule rule) {
  const auto& rule64 = gl64();
  auto dens = [&](const Vec& p) { return density(p, rule); };
  if (n == 1) {
    double s = 0.0;
    Vec p(1);
    for (std::size_t i = 0; i < rule64.x.size(); ++i) {
      p[0] = center[0] + radius * rule64.x[i];
      s += rule64.w[i] * dens(p);
    }
    return s * radius;
  }
  if (n == 2) {
    // Polar around the center: smooth integrand, tensor GL in (rho, theta).
    double s = 0.0;
    Vec p(2);
    for (std::size_t i = 0; i < rule64.x.size(); ++i) {
      const double rho = 0.5 * radius * (rule64.x[i] + 1.0);
      double ring = 0.0;
      for (std::size_t j = 0; j < rule64.x.size(); ++j) {
        const double th = kPi * (rule64.x[j] + 1.0);
        p[0] = center[0] + rho * std::cos(th);
        p[1] = center[1] + rho * std::sin(th);
        ring += rule64.w[j] * dens(p);
      }
      s += rule64.w[i] * rho * ring;
    }
    return s * 0.5 * radius * kPi;
  }
  // n == 3: spherical shells, GL in (rho, cos phi, theta).
  double s = 0.0;
  Vec p(3);
  for (std::size_t i = 0; i < rule64.x.size(); ++i) {
    const double rho = 0.5 * radius * (rule64.x[i] + 1.0);
    double shell = 0.0;
    for (std::size_t j = 0; j < rule64.x.size(); ++j) {
      const double cph = rule64.x[j];
      const double sph = std::sqrt(std::max(0.0, 1.0 - cph * cph));
      for (std::size_t k = 0; k < rule64.x.size(); ++k) {
        const double th = kPi * (rule64.x[k] + 1.0);
        p[0] = center[0] + rho * sph * std::cos(th);
        p[1] = center[1] + rho * sph * std::sin(th);
        p[2] = center[2] + rho * cph;
        shell += rule64.w[j] * rule64.w[k] * dens(p);
      }
    }
    s += rule64.w[i] * rho * rho * shell;
  }
  return s * 0.5 * radius * kPi;
}

// ---------------------------------------------------------------- velocities

std::vector<std::array<int, kMaxDim>> velocity_grid(int n, [[maybe_unused]] int side, double R,
                                                    PatchTier tier) {
  if (!(R >= 1.0)) throw InvalidConfig("velocity_grid: R must be >= 1");
  const double r = patch_radius(n, tier);
  const double step = 1.0 / std::sqrt(R);
  const int span = static_cast<int>(std::floor(r / step));
  std::vector<std::array<int, kMaxDim>> out;
  std::array<int, kMaxDim> m{0, 0, 0};
  for (m[0] = -span; m[0] <= span; ++m[0])
    for (m[1] = (n > 1 ? -span : 0); m[1] <= (n > 1 ? span : 0); ++m[1])
      for (m[2] = (n > 2 ? -span : 0); m[2] <= (n > 2 ? span : 0); ++m[2]) {
        double d2 = 0.0;
        for (int i = 0; i < n; ++i) d2 += (m[i] * step) * (m[i] * step);
        if (d2 <= r * r) out.push_back(m);
      }
  return out;
}

Vec velocity_from_index(int n, int side, double R, const std::array<int, kMaxDim>& idx) {
  Vec v = side_center(n, side);
  const double step = 1.0 / std::sqrt(R);
  for (int i = 0; i < n; ++i) v[i] += step * idx[i];
  return v;
}

// --------------------------------------------------------------------- tubes

Tube make_tube(int n, double R, int side, const std::array<int, kMaxDim>& x_idx,
               const std::array<int, kMaxDim>& v_idx) {
  if (!(R >= 4.0)) throw InvalidInput("make_tube: R must be >= 4");
  Tube t;
  t.n = n;
  t.side = side;
  t.R = R;
  t.x_idx = x_idx;
  t.v_idx = v_idx;
  t.x0 = Vec(n);
  const double sr = std::sqrt(R);
  for (int i = 0; i < n; ++i) t.x0[i] = sr * x_idx[i];
  t.v = velocity_from_index(n, side, R, v_idx);
  const double r_enl = patch_radius(n, PatchTier::enlarged);
  if (dist(t.v, side_center(n, side)) > r_enl + 1e-12)
    throw InvalidInput("make_tube: velocity outside the enlarged cap");
  return t;
}

Tube tube_from_points(int n, double R, int side, const Vec& x0, const Vec& v, double snap_tol) {
  const double sr = std::sqrt(R);
  std::array<int, kMaxDim> xi{0, 0, 0}, vi{0, 0, 0};
  const Vec c = side_center(n, side);
  for (int i = 0; i < n; ++i) {
    const double xg = x0[i] / sr;
    xi[i] = static_cast<int>(std::llround(xg));
    if (std::abs(xg - xi[i]) > snap_tol)
      throw InvalidInput("tube_from_points: position off the sqrt(R) grid");
    const double vg = (v[i] - c[i]) * sr;
    vi[i] = static_cast<int>(std::llround(vg));
    if (std::abs(vg - vi[i]) > snap_tol)
      throw InvalidInput("tube_from_points: velocity off the R^{-1/2} grid");
  }
  return make_tube(n, R, side, xi, vi);
}

std::optional<double> tube_distance(const Tube& tube, double t, const Vec& x) {
  if (t < tube.R / 2.0 || t > tube.R) return std::nullopt;
  Vec axis = tube.x0;
  for (int i = 0; i < tube.n; ++i) axis[i] += t * tube.v[i];
  return dist(x, axis);
}

double axis_segment_distance(const Tube& tube, const SpacetimePoint& p) {
  // Minimize (s - t)^2 + |x0 + s v - x|^2 over s in [R/2, R]; the objective is
  // quadratic with positive leading coefficient 1 + |v|^2.
  const Vec d = p.x - tube.x0;
  const double s_free = (p.t + dot(d, tube.v)) / (1.0 + norm2(tube.v));
  const double s = std::clamp(s_free, tube.R / 2.0, tube.R);
  double acc = (s - p.t) * (s - p.t);
  for (int i = 0; i < tube.n; ++i) {
    const double g = tube.x0[i] + s * tube.v[i] - p.x[i];
    acc += g * g;
  }
  return std::sqrt(acc);
}

// ------------------------------------------------------------------- regions

SpacetimeRegion SpacetimeRegion::cylinder(int n, double R) {
  SpacetimeRegion r;
  r.kind = Kind::cylinder;
  r.n = n;
  r.R = R;
  return r;
}

SpacetimeRegion SpacetimeRegion::ball(const SpacetimePoint& c, double rad, int n) {
  SpacetimeRegion r;
  r.kind = Kind::ball;
  r.n = n;
  r.center = c;
  r.radius = rad;
  return r;
}

SpacetimeRegion SpacetimeRegion::box(double t0, double t1, const Vec& xcenter, const Vec& xhalf) {
  SpacetimeRegion r;
  r.kind = Kind::box;
  r.n = xcenter.n;
  r.t0 = t0;
  r.t1 = t1;
  r.center = SpacetimePoint{0.5 * (t0 + t1), xcenter};
  r.half = xhalf;
  return r;
}

bool SpacetimeRegion::contains(const SpacetimePoint& p) const {
  switch (kind) {
    case Kind::cylinder:
      return p.t >= R / 2.0 && p.t <= R && norm(p.x) <= R;
    case Kind::ball:
      return spacetime_dist(p, center) <= radius;
    case Kind::box: {
      if (p.t < t0 || p.t > t1) return false;
      for (int i = 0; i < n; ++i)
        if (std::abs(p.x[i] - center.x[i]) > half[i]) return false;
      return true;
    }
  }
  return false;
}

double SpacetimeRegion::volume() const {
  switch (kind) {
    case Kind::cylinder:
      return (R / 2.0) * ball_volume(n, R);
    case Kind::ball:
      return ball_volume(n + 1, radius);
    case Kind::box: {
      double v = t1 - t0;
      for (int i = 0; i < n; ++i) v *= 2.0 * half[i];
      return v;
    }
  }
  return 0.0;
}

// ------------------------------------------------- rectangle/hyperplane sets

RectanglePlane rectangle_plane(const Vec& xi1, const Vec& xi2p) {
  const Vec e = xi2p - xi1;
  const double len = norm(e);
  if (len == 0.0) throw DegenerateGeometry("rectangle_plane: coincident frequencies");
  const int n = xi1.n;
  const double band = 2.0 / (5.0 * n);
  if (len < 2.0 - band || len > 2.0 + band)
    throw InvalidInput("rectangle_plane: |xi2p - xi1| outside the transversal band");
  return RectanglePlane{xi1, e, dot(xi1, e)};
}

RectangleResidual rectangle_residual(const Vec& xi1, const Vec& xi1p, const Vec& xi2p,
                                     double tolerance) {
  RectangleResidual out;
  // Grouped so the identity case xi1p == xi1 cancels exactly in floating point.
  out.xi2 = (xi1p - xi1) + xi2p;
  out.residual = (norm2(xi1) - norm2(xi1p)) + (norm2(out.xi2) - norm2(xi2p));
  const int n = xi1.n;
  const bool near_plane = std::abs(out.residual) <= tolerance;
  const bool xi2_in_omega =
      dist(out.xi2, side_center(n, 2)) <= patch_radius(n, PatchTier::omega) + 1e-12;
  out.member = near_plane && xi2_in_omega;
  return out;
}

double plane_distance(const Vec& xi1, const Vec& xi1p, const Vec& xi2p) {
  const Vec e = xi2p - xi1;
  const double elen = norm(e);
  if (elen == 0.0) throw DegenerateGeometry("plane_distance: coincident frequencies");
  return std::abs(dot(xi1p - xi1, e)) / elen;
}

}  // namespace parawave
