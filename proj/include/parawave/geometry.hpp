#pragma once
// Geometric primitives for the paraboloid laboratory.
//
// The frequency hypersurface is the graph tau = -|xi|^2/2 over xi in R^n.
// Two transversal families of caps are centered at +e1 (side 1) and -e1
// (side 2), in three nested tiers:
//   base     radius 1/(100 n)
//   enlarged radius 1/(50 n)
//   omega    radius 1/(20 n)
// Tubes are 1 x sqrt(R) x R spacetime slabs along x = x0 + t v over the time
// slab t in [R/2, R], with x0 on the position grid X = sqrt(R) Z^n and v on
// the side's velocity grid V = (+-e1) + R^{-1/2} Z^n.  The velocity lattice is
// anchored at the patch center (the Galilean normalization that centers the
// patch), so the nominal velocities +-e1 are grid-exact at every scale.

#include <array>
#include <complex>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "parawave/errors.hpp"
#include "parawave/vec.hpp"

namespace parawave {

// ------------------------------------------------------------ frequency side

struct FrequencyPoint {
  Vec xi;
  double tau = 0.0;
};

// Lift a spatial frequency to the surface: tau = -|xi|^2 / 2.
FrequencyPoint paraboloid_lift(const Vec& xi);

enum class PatchTier { base, enlarged, omega };

// Cap radius for a tier at dimension n: 1/(100n), 1/(50n), 1/(20n).
double patch_radius(int n, PatchTier tier);

// Which weight rule a patch's quadrature uses.
//   graph: cell measure (clipped to the cap) times sqrt(1+|xi|^2), the
//          Euclidean surface measure of the graph.
//   cell:  plain clipped cell measure; with this rule the quadrature L^2 norm
//          of data equals the physical L^2 mass of a time slice exactly,
//          which the frequency-rescaling experiments rely on.
enum class WeightRule { graph, cell };

// A cap on the paraboloid carrying its quadrature.
//
// Nodes sit on the lattice center + h Z^n intersected with the closed disk of
// the given radius; `index[k]` holds the integer lattice coordinates of node
// k.  Weights are clipped-cell measures (cells chopped to the disk) times the
// weight rule's density, so the total weight converges to the analytic cap
// measure under refinement.
struct SurfacePatch {
  int n = 0;
  Vec center;
  double radius = 0.0;
  double h = 0.0;  // node lattice spacing
  WeightRule rule = WeightRule::graph;
  std::vector<FrequencyPoint> nodes;
  std::vector<std::array<int, kMaxDim>> index;
  std::vector<double> weights;

  double total_weight() const;
};

// Standard patch constructor: side 1 centers at +e1, side 2 at -e1.
// `resolution` is a target node count; the realized count is the nearest
// lattice fill at or above it.  Throws InvalidConfig for resolution == 0.
SurfacePatch make_patch(int n, int side, PatchTier tier, int resolution);

// Patch whose lattice refines the velocity grid: h = R^{-1/2} / refine with
// integer `refine`.  This is the constructor the wave packet machinery
// requires (its spatial windows periodize exactly over L = refine * sqrt(R)).
SurfacePatch make_patch_refined(int n, int side, PatchTier tier, double R, int refine);

// Free-form cap (used by canonical packets and rescaling experiments).
SurfacePatch make_custom_patch(const Vec& center, double radius, double h,
                               WeightRule rule = WeightRule::graph);

// Reference value of the cap's analytic surface measure (for the given weight
// rule's density), by tensor Gauss-Legendre quadrature.
double analytic_cap_measure(int n, const Vec& center, double radius,
                            WeightRule rule = WeightRule::graph);

// Exact area of the intersection of the disk |p - c| <= r with the axis
// rectangle [x0,x1] x [y0,y1] (closed form; used for 2-d clipped cells).
double disk_rectangle_area(double cx, double cy, double r, double x0, double x1,
                           double y0, double y1);

// ---------------------------------------------------------------- velocities

// Patch center for a side: +e1 (side 1) or -e1 (side 2).
Vec side_center(int n, int side);

// Velocity grid of a side at scale R: (+-e1) + R^{-1/2} Z^n, restricted to the
// tier's cap around the side center.  Returns the integer offsets; the
// velocity vector is side_center + R^{-1/2} * idx.
std::vector<std::array<int, kMaxDim>> velocity_grid(int n, int side, double R,
                                                    PatchTier tier = PatchTier::enlarged);

Vec velocity_from_index(int n, int side, double R, const std::array<int, kMaxDim>& idx);

// --------------------------------------------------------------------- tubes

struct Tube {
  int n = 0;
  int side = 0;  // 1 or 2
  double R = 0.0;
  Vec x0;  // in X = sqrt(R) Z^n
  Vec v;   // in side_center + R^{-1/2} Z^n, inside the enlarged cap
  std::array<int, kMaxDim> x_idx{0, 0, 0};
  std::array<int, kMaxDim> v_idx{0, 0, 0};
};

// Grid-exact constructor.
Tube make_tube(int n, double R, int side, const std::array<int, kMaxDim>& x_idx,
               const std::array<int, kMaxDim>& v_idx);

// Reconstruct a tube from real coordinates; snaps to the grids and throws
// InvalidInput if either coordinate is farther than `snap_tol` (in grid units)
// from a grid point, or if the velocity leaves the enlarged cap.
Tube tube_from_points(int n, double R, int side, const Vec& x0, const Vec& v,
                      double snap_tol = 1e-9);

// Spatial distance from a spacetime point to the tube's moving center at that
// time, or nullopt when t falls outside the slab [R/2, R].  Membership in the
// tube is distance <= sqrt(R); in the fattened tube R^delta T it is
// distance <= R^{1/2+delta}.
std::optional<double> tube_distance(const Tube& tube, double t, const Vec& x);

// Spacetime distance from a point to the tube's axis segment
// {(t, x0 + t v) : t in [R/2, R]} (closed-form quadratic minimization).
// This is the shared metric for all tube/ball incidence queries.
double axis_segment_distance(const Tube& tube, const SpacetimePoint& p);

// ----------------------------------------------------------- spacetime sets

// Regions: the cylinder Q_R = {R/2 <= t <= R, |x| <= R}, spacetime balls, and
// axis-aligned boxes (slabs).
struct SpacetimeRegion {
  enum class Kind { cylinder, ball, box };
  Kind kind = Kind::cylinder;
  // cylinder: scale R.
  double R = 0.0;
  // ball: center + radius.
  SpacetimePoint center;
  double radius = 0.0;
  // box: [t0,t1] x prod [center.x[i]-half[i], center.x[i]+half[i]].
  double t0 = 0.0, t1 = 0.0;
  Vec half;
  int n = 0;

  static SpacetimeRegion cylinder(int n, double R);
  static SpacetimeRegion ball(const SpacetimePoint& c, double r, int n);
  static SpacetimeRegion box(double t0, double t1, const Vec& xcenter, const Vec& xhalf);

  bool contains(const SpacetimePoint& p) const;
  double volume() const;
};

// Volume of the n-dimensional Euclidean ball of radius r.
double ball_volume(int n, double r);

// ------------------------------------------------- rectangle/hyperplane sets

// The hyperplane through `base` with normal e = xi2p - xi1; candidate partner
// frequencies for the four-point rectangle constraint live on it.
struct RectanglePlane {
  Vec base;    // xi1
  Vec e;       // xi2p - xi1 (not normalized)
  double offset = 0.0;  // <xi1, e>
};

// Throws DegenerateGeometry when xi1 == xi2p; InvalidInput when |e| leaves the
// band [2 - 2/(5n), 2 + 2/(5n)] implied by the cap radii.
RectanglePlane rectangle_plane(const Vec& xi1, const Vec& xi2p);

struct RectangleResidual {
  Vec xi2;         // xi1p + xi2p - xi1 (momentum constraint solved exactly)
  double residual = 0.0;  // |xi1|^2 + |xi2|^2 - |xi1p|^2 - |xi2p|^2
  bool member = false;
};

// Tolerance for the exact-rectangle mode: counts only float-exact rectangles.
inline constexpr double kExactMembershipTol = 1e-10;

// Four-point rectangle test.  Membership requires |residual| <= tolerance and
// xi2 inside the omega cap of side 2.  The residual equals 2 <xi1p - xi1, e>,
// so dist(xi1p, plane) = |residual| / (2 |e|); callers that think in
// distance-to-plane terms convert via residual_tolerance().
RectangleResidual rectangle_residual(const Vec& xi1, const Vec& xi1p, const Vec& xi2p,
                                     double tolerance = kExactMembershipTol);

// Residual tolerance equivalent to dist(xi1p, plane) <= distance_tol when the
// plane normal has length e_len.
inline double residual_tolerance(double e_len, double distance_tol) {
  return 2.0 * e_len * distance_tol;
}

// Distance from xi1p to the plane of rectangle_plane(xi1, xi2p).
double plane_distance(const Vec& xi1, const Vec& xi1p, const Vec& xi2p);

}  // namespace parawave
