#pragma once

// Tube/ball incidence machinery: lattice ball covers of the spacetime
// cylinder, fattened-tube incidence with dyadic pigeonholing, the exclusion
// relation between tubes and coarse balls, rectangle-constrained multiplicity
// counts, and the bush-count geometry, together with the chained inequality
// report that ties them together.
//
// Counting conventions.  A tube is incident to a fine ball when the ball's
// center lies within sqrt(R) * (1 + R^delta) of the tube's axis segment —
// equivalently, the tube fattened to radius R^{1/2+delta} meets the ball.
// Dyadic classes use the floor power of two: a ball with per-side incidence
// counts (c1, c2) belongs to the class (mu1, mu2) with mu_j <= c_j < 2 mu_j;
// balls missing either side belong to no class.  Every accelerated count has
// a brute-force twin used as an oracle in the tests.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "parawave/errors.hpp"
#include "parawave/geometry.hpp"
#include "parawave/vec.hpp"

namespace parawave {

// ------------------------------------------------------------------- covers

// Lattice-centered cover of the cylinder Q_R by balls of one radius.  Cells of
// spacing 2 * radius / sqrt(n+1) tile a padded bounding box of Q_R; centers of
// cells that meet the cylinder are kept, so every point of Q_R lies within
// `radius` of some center and the overlap at any point is at most 2^{n+1}.
struct BallCover {
  int n = 0;
  double R = 0.0;
  double delta = 0.0;
  double radius = 0.0;
  double spacing = 0.0;
  bool coarse = false;
  std::vector<SpacetimePoint> centers;

  std::size_t size() const { return centers.size(); }
  // Number of cover balls containing the point (closed balls).
  int overlap(const SpacetimePoint& p) const;
  bool covers(const SpacetimePoint& p) const { return overlap(p) >= 1; }
};

// Coarse cover at radius R^{1-delta} and fine cover at radius R^{1/2}.
std::pair<BallCover, BallCover> build_covers(int n, double R, double delta);

// Whether the fine ball (by center) is contained in the coarse ball dilated by
// `factor` (center distance + fine radius <= factor * coarse radius).
bool ball_in_dilated(const BallCover& fine, std::size_t q, const BallCover& coarse,
                     std::size_t B, double factor);

// --------------------------------------------------------------- incidences

// Dyadic triple (lambda1, mu1, mu2); mu-only keys use the first two entries.
using DyadicPair = std::pair<long, long>;
using DyadicTriple = std::array<long, 3>;

struct IncidenceIndex {
  int n = 0;
  double R = 0.0;
  double delta = 0.0;
  double threshold = 0.0;  // sqrt(R) * (1 + R^delta)
  BallCover fine;
  std::vector<Tube> tubes;

  std::vector<std::vector<std::size_t>> tube_balls;              // sorted ball ids
  std::vector<std::vector<std::size_t>> ball_side1, ball_side2;  // sorted tube ids
  std::map<DyadicPair, std::vector<std::size_t>> ball_classes;   // (mu1,mu2) -> balls
  // Per class, lambda(T, mu1, mu2) for every tube index (side-2 entries stay 0).
  std::map<DyadicPair, std::vector<long>> lambda;
  std::map<DyadicTriple, std::vector<std::size_t>> tube_classes;  // side-1 tubes

  std::size_t side_count(int side) const;
  bool incident(std::size_t tube, std::size_t ball) const;  // binary search
  // Class key of a ball, if it belongs to one.
  std::optional<DyadicPair> ball_class(std::size_t ball) const;
};

// Build the incidence index over the fine cover.  `accelerated` selects the
// spatial-hash path; the brute path tests every tube/ball pair and exists as
// the oracle for the hash.  Both produce identical indices.
IncidenceIndex incidences(std::vector<Tube> tubes, const BallCover& fine, double delta,
                          bool accelerated = true);

// -------------------------------------------------------------- exclusions

// Per (tube, triple): the coarse ball maximizing the count of class balls that
// the tube meets and that touch the coarse ball, plus that count.  Ties go to
// the ball whose center is lexicographically smallest in (t, x).
struct ChosenBall {
  std::size_t ball = 0;
  long count = 0;
};

struct ExclusionRelation {
  double dilation = 10.0;  // B' is excluded when B' lies in dilation * chosen
  // Per triple, entry for each tube (empty unless the tube is in the class).
  std::map<DyadicTriple, std::vector<std::optional<ChosenBall>>> chosen;
  std::vector<std::vector<std::size_t>> excluded;  // per tube, sorted coarse ids
  bool pigeonhole_ok = true;  // every chosen count >= lambda(T)/#coarse

  bool excludes(std::size_t tube, std::size_t coarse_ball) const;
};

ExclusionRelation assign_exclusions(const IncidenceIndex& index, const BallCover& coarse,
                                    double dilation = 10.0);

// --------------------------------------------------------- nu multiplicity

// Count of tubes in the triple's class that meet the fine ball q0, are not
// excluded against the coarse ball B, and whose velocity completes a
// four-point rectangle with (xi1, xi2p) to within distance K * R^{-1/2} of the
// partner hyperplane.  Throws InvalidInput when q0 is not in the (mu1, mu2)
// class or not contained in 2B.
long nu_count(const IncidenceIndex& index, const ExclusionRelation& excl,
              const BallCover& coarse, std::size_t B, std::size_t q0,
              const DyadicTriple& triple, const Vec& xi1, const Vec& xi2p,
              double K = 4.0);

// The sup of nu_count over the configuration's frequency samples: every
// side-1 tube velocity plus the side-1 patch center for xi1, and the side-2
// counterparts for xi2p.  Deterministic: candidates are scanned with the
// patch center first and the velocities in lexicographic order.
struct NuProfile {
  long count = 0;
  Vec xi1, xi2p;
};

NuProfile nu_profile(const IncidenceIndex& index, const ExclusionRelation& excl,
                     const BallCover& coarse, std::size_t B, std::size_t q0,
                     const DyadicTriple& triple, double K = 4.0);

// ---------------------------------------------------------------- bush count

// Pairs (q, T1) with T1 from `candidates`, both T1 and T2 meeting the fattened
// ball R^delta q, and q at least r_min from q0 (center distance).  Also
// reports the transversality data of the counted balls against the hyperplane
// through q0's center normal to (-<xi1, e>, e), e = xi2p - xi1: the angle T2
// makes with that plane, and the largest distances of counted ball centers
// from the plane and from T2's axis.
struct BushReport {
  long pairs = 0;
  std::size_t balls = 0;          // distinct q counted
  double angle = 0.0;             // T2 vs plane, radians
  double max_plane_dist = 0.0;    // over counted ball centers
  double max_axis_dist = 0.0;     // idem, distance to T2's axis segment
};

BushReport bush_count(const IncidenceIndex& index, const Tube& T2, std::size_t q0,
                      const std::vector<std::size_t>& candidates, const Vec& xi1,
                      const Vec& xi2p, double r_min, bool accelerated = true);

// ------------------------------------------------------------- chain report

// Evaluation of the chained inequalities on a built configuration: the Fubini
// double-count identity, the per-class cardinality bounds, and the ratio
// (left side / right side) of the multiplicity-weighted incidence sum, the nu
// multiplicity bound, and its per-pair form, maximized over coarse balls and
// dyadic triples.  `C` scales the R^{C delta} fattening on every right side.
//
// Below roughly R = 5e5 the dilated chosen ball covers the whole region, so
// the exclusion filter empties every counted set and the filtered ratios are
// exactly zero; the *_unexcluded fields rerun the same counts without the
// exclusion filter and are the meaningful stability diagnostics at small R.
struct ChainReport {
  bool fubini_exact = true;
  bool class_bounds_exact = true;
  bool pigeonhole_ok = true;
  double combinatorial_ratio = 0.0;
  double nu_mult_ratio = 0.0;
  double t_b_ratio = 0.0;
  double combinatorial_unexcluded_ratio = 0.0;
  double nu_mult_unexcluded_ratio = 0.0;
  long max_nu = 0;
  long max_nu_unexcluded = 0;
  long triples = 0;     // nonempty dyadic triples
  long classed_balls = 0;
};

ChainReport check_kakeya_chain(const IncidenceIndex& index, const ExclusionRelation& excl,
                               const BallCover& coarse, double K = 4.0, double C = 2.0);

// ------------------------------------------------------------- configurations

// Random tube family on one side: positions drawn uniformly from the lattice
// slab |x0| <= 2R, velocities uniform over the side's velocity grid.
// Experiment scaffolding for the randomized chain checks.
std::vector<Tube> random_tube_family(int n, double R, int side, std::size_t count,
                                     std::uint64_t seed, std::uint64_t stream = 0);

}  // namespace parawave
