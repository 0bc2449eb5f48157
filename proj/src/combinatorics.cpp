#include "parawave/combinatorics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <unordered_map>

#include "parawave/rng.hpp"

namespace parawave {

namespace {

// Largest power of two <= c (c >= 1).
long dyadic_floor(long c) {
  return static_cast<long>(std::bit_floor(static_cast<unsigned long long>(c)));
}

// Closed-ball touch test between a fine ball and a coarse ball.
bool balls_touch(const BallCover& fine, std::size_t q, const BallCover& coarse,
                 std::size_t B) {
  return spacetime_dist(fine.centers[q], coarse.centers[B]) <= fine.radius + coarse.radius;
}

bool lex_less(const SpacetimePoint& a, const SpacetimePoint& b, int n) {
  if (a.t != b.t) return a.t < b.t;
  for (int i = 0; i < n; ++i)
    if (a.x[i] != b.x[i]) return a.x[i] < b.x[i];
  return false;
}

bool vec_lex_less(const Vec& a, const Vec& b) {
  for (int i = 0; i < a.n; ++i)
    if (a[i] != b[i]) return a[i] < b[i];
  return false;
}

// One lattice cover at the given radius.  Cells of spacing 2r/sqrt(n+1) tile
// [R/2, R] x [-R, R]^n: time cells are anchored at t = R/2, spatial cells are
// centered on s * Z (one cell centered at the origin) so the lattice is
// symmetric under x -> -x.  A cell is kept when its box meets the cylinder,
// i.e. the box point nearest the time axis has |x| <= R; since every point of
// the cylinder lies in some cell and is within s*sqrt(n+1)/2 = r of that
// cell's center, the kept centers cover Q_R.
BallCover lattice_cover(int n, double R, double delta, double radius, bool coarse) {
  BallCover cover;
  cover.n = n;
  cover.R = R;
  cover.delta = delta;
  cover.radius = radius;
  cover.coarse = coarse;
  const int d = n + 1;
  const double s = 2.0 * radius / std::sqrt(static_cast<double>(d));
  cover.spacing = s;
  const int kt = static_cast<int>(std::ceil(R / 2.0 / s - 1e-12));
  const int m = static_cast<int>(std::ceil(R / s - 0.5 - 1e-12));
  std::array<int, kMaxDim> j{0, 0, 0};
  const int lo1 = n > 1 ? -m : 0, hi1 = n > 1 ? m : 0;
  const int lo2 = n > 2 ? -m : 0, hi2 = n > 2 ? m : 0;
  for (int k = 0; k < kt; ++k)
    for (j[0] = -m; j[0] <= m; ++j[0])
      for (j[1] = lo1; j[1] <= hi1; ++j[1])
        for (j[2] = lo2; j[2] <= hi2; ++j[2]) {
          double near2 = 0.0;
          for (int i = 0; i < n; ++i) {
            const double lo = s * (j[i] - 0.5), hi = s * (j[i] + 0.5);
            const double nearest = lo > 0.0 ? lo : (hi < 0.0 ? hi : 0.0);
            near2 += nearest * nearest;
          }
          if (near2 > R * R) continue;
          SpacetimePoint c;
          c.t = R / 2.0 + s * (k + 0.5);
          c.x = Vec(n);
          for (int i = 0; i < n; ++i) c.x[i] = s * j[i];
          cover.centers.push_back(c);
        }
  return cover;
}

// Spatial-hash key: time cell plus up to three spatial cells.
struct CellKey {
  std::array<long, 4> c{0, 0, 0, 0};
  bool operator==(const CellKey&) const = default;
};

struct CellKeyHash {
  std::size_t operator()(const CellKey& k) const {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL;
    for (long v : k.c) h = splitmix64(h ^ static_cast<std::uint64_t>(v));
    return static_cast<std::size_t>(h);
  }
};

long cell_of(double x, double size) { return static_cast<long>(std::floor(x / size)); }

}  // namespace

// ------------------------------------------------------------------- covers

int BallCover::overlap(const SpacetimePoint& p) const {
  int c = 0;
  for (const auto& b : centers)
    if (spacetime_dist(p, b) <= radius) ++c;
  return c;
}

std::pair<BallCover, BallCover> build_covers(int n, double R, double delta) {
  if (n < 1 || n > kMaxDim) throw InvalidInput("build_covers: dimension must be 1..3");
  if (!(R >= 4.0)) throw InvalidConfig("build_covers: R must be >= 4");
  if (!(delta > 0.0 && delta < 0.5)) throw InvalidConfig("build_covers: delta must be in (0, 1/2)");
  BallCover coarse = lattice_cover(n, R, delta, std::pow(R, 1.0 - delta), true);
  BallCover fine = lattice_cover(n, R, delta, std::sqrt(R), false);
  return {std::move(coarse), std::move(fine)};
}

bool ball_in_dilated(const BallCover& fine, std::size_t q, const BallCover& coarse,
                     std::size_t B, double factor) {
  return spacetime_dist(fine.centers[q], coarse.centers[B]) + fine.radius <=
         factor * coarse.radius;
}

// --------------------------------------------------------------- incidences

std::size_t IncidenceIndex::side_count(int side) const {
  std::size_t c = 0;
  for (const auto& t : tubes)
    if (t.side == side) ++c;
  return c;
}

bool IncidenceIndex::incident(std::size_t tube, std::size_t ball) const {
  const auto& v = tube_balls[tube];
  return std::binary_search(v.begin(), v.end(), ball);
}

std::optional<DyadicPair> IncidenceIndex::ball_class(std::size_t ball) const {
  const std::size_t c1 = ball_side1[ball].size(), c2 = ball_side2[ball].size();
  if (c1 == 0 || c2 == 0) return std::nullopt;
  return DyadicPair{dyadic_floor(static_cast<long>(c1)), dyadic_floor(static_cast<long>(c2))};
}

IncidenceIndex incidences(std::vector<Tube> tubes, const BallCover& fine, double delta,
                          bool accelerated) {
  for (const auto& t : tubes)
    if (t.n != fine.n || t.R != fine.R)
      throw InvalidInput("incidences: tube scale does not match the cover");
  IncidenceIndex idx;
  idx.n = fine.n;
  idx.R = fine.R;
  idx.delta = delta;
  idx.threshold = std::sqrt(fine.R) * (1.0 + std::pow(fine.R, delta));
  idx.fine = fine;
  idx.tubes = std::move(tubes);

  const std::size_t nt = idx.tubes.size(), nb = fine.centers.size();
  idx.tube_balls.assign(nt, {});
  idx.ball_side1.assign(nb, {});
  idx.ball_side2.assign(nb, {});

  if (!accelerated) {
    for (std::size_t ti = 0; ti < nt; ++ti)
      for (std::size_t b = 0; b < nb; ++b)
        if (axis_segment_distance(idx.tubes[ti], fine.centers[b]) <= idx.threshold)
          idx.tube_balls[ti].push_back(b);
  } else {
    const double cs = std::sqrt(fine.R);
    std::unordered_map<CellKey, std::vector<std::size_t>, CellKeyHash> cells;
    cells.reserve(nb * 2);
    for (std::size_t b = 0; b < nb; ++b) {
      CellKey key;
      key.c[0] = cell_of(fine.centers[b].t, cs);
      for (int i = 0; i < idx.n; ++i) key.c[i + 1] = cell_of(fine.centers[b].x[i], cs);
      cells[key].push_back(b);
    }
    const double R = fine.R, thr = idx.threshold;
    for (std::size_t ti = 0; ti < nt; ++ti) {
      const Tube& tube = idx.tubes[ti];
      // A center incident to the axis segment has t within thr of [R/2, R]
      // and spatial offset at most thr + |v| * (thr + cs) from the axis
      // position at the clamped mid-time of its cell; pad by two cells.
      const double vlen = norm(tube.v);
      const long k0 = cell_of(R / 2.0 - thr, cs), k1 = cell_of(R + thr, cs);
      const long W = static_cast<long>(std::ceil((thr + vlen * (thr + cs)) / cs)) + 2;
      std::vector<std::size_t> cand;
      for (long k = k0; k <= k1; ++k) {
        const double tc = std::clamp(cs * (k + 0.5), R / 2.0, R);
        CellKey key;
        key.c[0] = k;
        std::array<long, kMaxDim> c0{0, 0, 0};
        for (int i = 0; i < idx.n; ++i) c0[i] = cell_of(tube.x0[i] + tc * tube.v[i], cs);
        const long l1 = idx.n > 1 ? -W : 0, h1 = idx.n > 1 ? W : 0;
        const long l2 = idx.n > 2 ? -W : 0, h2 = idx.n > 2 ? W : 0;
        for (long o0 = -W; o0 <= W; ++o0)
          for (long o1 = l1; o1 <= h1; ++o1)
            for (long o2 = l2; o2 <= h2; ++o2) {
              key.c[1] = c0[0] + o0;
              key.c[2] = idx.n > 1 ? c0[1] + o1 : 0;
              key.c[3] = idx.n > 2 ? c0[2] + o2 : 0;
              const auto it = cells.find(key);
              if (it != cells.end())
                cand.insert(cand.end(), it->second.begin(), it->second.end());
            }
      }
      std::sort(cand.begin(), cand.end());
      cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
      for (std::size_t b : cand)
        if (axis_segment_distance(tube, fine.centers[b]) <= thr)
          idx.tube_balls[ti].push_back(b);
    }
  }

  for (std::size_t ti = 0; ti < nt; ++ti)
    for (std::size_t b : idx.tube_balls[ti])
      (idx.tubes[ti].side == 1 ? idx.ball_side1 : idx.ball_side2)[b].push_back(ti);

  for (std::size_t b = 0; b < nb; ++b)
    if (auto key = idx.ball_class(b)) idx.ball_classes[*key].push_back(b);

  for (const auto& [key, balls] : idx.ball_classes) {
    std::vector<long> lam(nt, 0);
    for (std::size_t b : balls)
      for (std::size_t ti : idx.ball_side1[b]) ++lam[ti];
    for (std::size_t ti = 0; ti < nt; ++ti)
      if (lam[ti] >= 1)
        idx.tube_classes[DyadicTriple{dyadic_floor(lam[ti]), key.first, key.second}]
            .push_back(ti);
    idx.lambda[key] = std::move(lam);
  }
  return idx;
}

// -------------------------------------------------------------- exclusions

bool ExclusionRelation::excludes(std::size_t tube, std::size_t coarse_ball) const {
  const auto& v = excluded[tube];
  return std::binary_search(v.begin(), v.end(), coarse_ball);
}

ExclusionRelation assign_exclusions(const IncidenceIndex& index, const BallCover& coarse,
                                    double dilation) {
  ExclusionRelation excl;
  excl.dilation = dilation;
  excl.excluded.assign(index.tubes.size(), {});
  const std::size_t nc = coarse.size();

  std::vector<std::size_t> lex(nc);
  for (std::size_t i = 0; i < nc; ++i) lex[i] = i;
  std::sort(lex.begin(), lex.end(), [&](std::size_t a, std::size_t b) {
    return lex_less(coarse.centers[a], coarse.centers[b], coarse.n);
  });

  for (const auto& [triple, members] : index.tube_classes) {
    const DyadicPair mukey{triple[1], triple[2]};
    const auto& lam = index.lambda.at(mukey);
    std::vector<std::optional<ChosenBall>> chosen(index.tubes.size());
    for (std::size_t ti : members) {
      std::vector<long> cnt(nc, 0);
      for (std::size_t q : index.tube_balls[ti]) {
        if (index.ball_class(q) != std::optional<DyadicPair>(mukey)) continue;
        for (std::size_t B = 0; B < nc; ++B)
          if (balls_touch(index.fine, q, coarse, B)) ++cnt[B];
      }
      ChosenBall best{lex.empty() ? 0 : lex.front(), 0};
      for (std::size_t B : lex)
        if (cnt[B] > best.count) best = ChosenBall{B, cnt[B]};
      if (best.count * static_cast<long>(nc) < lam[ti]) excl.pigeonhole_ok = false;
      chosen[ti] = best;
      for (std::size_t B2 = 0; B2 < nc; ++B2)
        if (spacetime_dist(coarse.centers[B2], coarse.centers[best.ball]) <=
            (dilation - 1.0) * coarse.radius)
          excl.excluded[ti].push_back(B2);
    }
    excl.chosen[triple] = std::move(chosen);
  }

  for (auto& v : excl.excluded) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  return excl;
}

// --------------------------------------------------------- nu multiplicity

long nu_count(const IncidenceIndex& index, const ExclusionRelation& excl,
              const BallCover& coarse, std::size_t B, std::size_t q0,
              const DyadicTriple& triple, const Vec& xi1, const Vec& xi2p, double K) {
  if (B >= coarse.size() || q0 >= index.fine.size())
    throw InvalidInput("nu_count: ball id out of range");
  if (index.ball_class(q0) != std::optional<DyadicPair>(DyadicPair{triple[1], triple[2]}))
    throw InvalidInput("nu_count: fine ball is not in the dyadic class");
  if (!ball_in_dilated(index.fine, q0, coarse, B, 2.0))
    throw InvalidInput("nu_count: fine ball is not contained in twice the coarse ball");
  const Vec e = xi2p - xi1;
  const double tol = residual_tolerance(norm(e), K / std::sqrt(index.R));
  rectangle_plane(xi1, xi2p);  // validates the frequency pair
  const auto it = index.tube_classes.find(triple);
  if (it == index.tube_classes.end()) return 0;
  long count = 0;
  for (std::size_t ti : it->second) {
    if (!index.incident(ti, q0)) continue;
    if (excl.excludes(ti, B)) continue;
    if (rectangle_residual(xi1, index.tubes[ti].v, xi2p, tol).member) ++count;
  }
  return count;
}

namespace {

// Frequency sample set for one side: the patch center first, then the
// distinct velocities of that side's tubes in lexicographic order.
std::vector<Vec> side_frequencies(const IncidenceIndex& index, int side) {
  std::vector<Vec> vel;
  for (const auto& t : index.tubes)
    if (t.side == side) vel.push_back(t.v);
  std::sort(vel.begin(), vel.end(), vec_lex_less);
  vel.erase(std::unique(vel.begin(), vel.end()), vel.end());
  std::vector<Vec> out{side_center(index.n, side)};
  for (const auto& v : vel)
    if (!(v == out.front())) out.push_back(v);
  return out;
}

}  // namespace

NuProfile nu_profile(const IncidenceIndex& index, const ExclusionRelation& excl,
                     const BallCover& coarse, std::size_t B, std::size_t q0,
                     const DyadicTriple& triple, double K) {
  const std::vector<Vec> f1 = side_frequencies(index, 1);
  const std::vector<Vec> f2 = side_frequencies(index, 2);
  NuProfile best;
  best.count = -1;
  for (const Vec& xi1 : f1)
    for (const Vec& xi2p : f2) {
      const long c = nu_count(index, excl, coarse, B, q0, triple, xi1, xi2p, K);
      if (c > best.count) best = NuProfile{c, xi1, xi2p};
    }
  return best;
}

// ---------------------------------------------------------------- bush count

BushReport bush_count(const IncidenceIndex& index, const Tube& T2, std::size_t q0,
                      const std::vector<std::size_t>& candidates, const Vec& xi1,
                      const Vec& xi2p, double r_min, bool accelerated) {
  BushReport rep;
  const Vec e = xi2p - xi1;
  // Plane through q0's center with spacetime normal (-<xi1, e>, e).
  const double nu_t = -dot(xi1, e);
  const double nu_len = std::sqrt(nu_t * nu_t + norm2(e));
  const double dir_len = std::sqrt(1.0 + norm2(T2.v));
  rep.angle = std::asin(
      std::clamp(std::abs(nu_t + dot(T2.v, e)) / (nu_len * dir_len), 0.0, 1.0));

  const SpacetimePoint& c0 = index.fine.centers[q0];
  const std::size_t nb = index.fine.size();
  std::vector<long> per_ball(nb, 0);

  const auto record = [&](std::size_t q, long hits) {
    if (hits <= 0) return;
    if (per_ball[q] == 0) {
      ++rep.balls;
      const SpacetimePoint& c = index.fine.centers[q];
      const double pd = std::abs((c.t - c0.t) * nu_t + dot(c.x - c0.x, e)) / nu_len;
      rep.max_plane_dist = std::max(rep.max_plane_dist, pd);
      rep.max_axis_dist = std::max(rep.max_axis_dist, axis_segment_distance(T2, c));
    }
    per_ball[q] += hits;
    rep.pairs += hits;
  };

  if (accelerated) {
    // Walk candidate adjacency lists; memoize the T2 incidence per ball.
    std::vector<signed char> t2inc(nb, -1);
    for (std::size_t ti : candidates)
      for (std::size_t q : index.tube_balls[ti]) {
        if (spacetime_dist(index.fine.centers[q], c0) < r_min) continue;
        if (t2inc[q] < 0)
          t2inc[q] = axis_segment_distance(T2, index.fine.centers[q]) <= index.threshold;
        if (t2inc[q]) record(q, 1);
      }
  } else {
    for (std::size_t q = 0; q < nb; ++q) {
      if (spacetime_dist(index.fine.centers[q], c0) < r_min) continue;
      if (axis_segment_distance(T2, index.fine.centers[q]) > index.threshold) continue;
      long hits = 0;
      for (std::size_t ti : candidates)
        if (axis_segment_distance(index.tubes[ti], index.fine.centers[q]) <=
            index.threshold)
          ++hits;
      record(q, hits);
    }
  }
  return rep;
}

// ------------------------------------------------------------- chain report

ChainReport check_kakeya_chain(const IncidenceIndex& index, const ExclusionRelation& excl,
                               const BallCover& coarse, double K, double C) {
  ChainReport rep;
  rep.pigeonhole_ok = excl.pigeonhole_ok;
  const double fat = std::pow(index.R, C * index.delta);
  const long nT1 = static_cast<long>(index.side_count(1));
  const long nT2 = static_cast<long>(index.side_count(2));

  for (const auto& [key, balls] : index.ball_classes) {
    rep.classed_balls += static_cast<long>(balls.size());
    for (std::size_t q : balls) {
      const long c1 = static_cast<long>(index.ball_side1[q].size());
      const long c2 = static_cast<long>(index.ball_side2[q].size());
      if (!(key.first <= c1 && c1 < 2 * key.first)) rep.class_bounds_exact = false;
      if (!(key.second <= c2 && c2 < 2 * key.second)) rep.class_bounds_exact = false;
    }
  }

  const std::vector<Vec> f1 = side_frequencies(index, 1);
  const std::vector<Vec> f2 = side_frequencies(index, 2);

  for (const auto& [triple, members] : index.tube_classes) {
    ++rep.triples;
    const DyadicPair mukey{triple[1], triple[2]};
    const auto& balls = index.ball_classes.at(mukey);
    const auto& lam = index.lambda.at(mukey);

    // Dyadic membership of the lambda slice and the Fubini double count:
    // summing the per-ball intersection with the slice over the class's balls
    // re-counts each (T, q) incidence once, so it must equal the lambda sum.
    long fub_rhs = 0;
    for (std::size_t ti : members) {
      if (!(triple[0] <= lam[ti] && lam[ti] < 2 * triple[0])) rep.class_bounds_exact = false;
      fub_rhs += lam[ti];
    }
    long fub_lhs = 0;
    std::vector<std::size_t> inter;
    for (std::size_t q : balls) {
      inter.clear();
      std::set_intersection(index.ball_side1[q].begin(), index.ball_side1[q].end(),
                            members.begin(), members.end(), std::back_inserter(inter));
      fub_lhs += static_cast<long>(inter.size());
    }
    if (fub_lhs != fub_rhs) rep.fubini_exact = false;

    if (nT1 == 0 || nT2 == 0) continue;
    const double sr = std::sqrt(index.R);
    for (std::size_t B = 0; B < coarse.size(); ++B) {
      long lhs_comb = 0, lhs_comb_unex = 0;
      for (std::size_t q : balls) {
        if (!ball_in_dilated(index.fine, q, coarse, B, 2.0)) continue;
        // Tubes of the slice meeting q, with and without the exclusion filter.
        inter.clear();
        std::set_intersection(index.ball_side1[q].begin(), index.ball_side1[q].end(),
                              members.begin(), members.end(), std::back_inserter(inter));
        std::vector<std::size_t> live;
        for (std::size_t ti : inter)
          if (!excl.excludes(ti, B)) live.push_back(ti);
        // nu: the best rectangle-constrained count over the frequency pairs.
        long nu = 0, nu_unex = 0;
        for (const Vec& a : f1)
          for (const Vec& b : f2) {
            const Vec e = b - a;
            const double tol = residual_tolerance(norm(e), K / sr);
            long c = 0, cu = 0;
            for (std::size_t ti : inter) {
              if (!rectangle_residual(a, index.tubes[ti].v, b, tol).member) continue;
              ++cu;
              if (!excl.excludes(ti, B)) ++c;
            }
            nu = std::max(nu, c);
            nu_unex = std::max(nu_unex, cu);
          }
        rep.max_nu = std::max(rep.max_nu, nu);
        rep.max_nu_unexcluded = std::max(rep.max_nu_unexcluded, nu_unex);
        lhs_comb += nu * static_cast<long>(live.size()) *
                    static_cast<long>(index.ball_side2[q].size());
        lhs_comb_unex += nu_unex * static_cast<long>(inter.size()) *
                         static_cast<long>(index.ball_side2[q].size());

        const double bound = fat * static_cast<double>(nT2) /
                             (static_cast<double>(triple[0]) * static_cast<double>(mukey.second));
        const double r = static_cast<double>(nu) / bound;
        rep.nu_mult_ratio = std::max(rep.nu_mult_ratio, r);
        rep.t_b_ratio = std::max(rep.t_b_ratio, r);
        rep.nu_mult_unexcluded_ratio =
            std::max(rep.nu_mult_unexcluded_ratio, static_cast<double>(nu_unex) / bound);
      }
      const double rhs = fat * static_cast<double>(nT1) * static_cast<double>(nT2);
      rep.combinatorial_ratio =
          std::max(rep.combinatorial_ratio, static_cast<double>(lhs_comb) / rhs);
      rep.combinatorial_unexcluded_ratio = std::max(
          rep.combinatorial_unexcluded_ratio, static_cast<double>(lhs_comb_unex) / rhs);
    }
  }
  return rep;
}

// ------------------------------------------------------------- configurations

std::vector<Tube> random_tube_family(int n, double R, int side, std::size_t count,
                                     std::uint64_t seed, std::uint64_t stream) {
  if (n < 1 || n > kMaxDim) throw InvalidInput("random_tube_family: dimension must be 1..3");
  if (!(R >= 4.0)) throw InvalidConfig("random_tube_family: R must be >= 4");
  auto rng = make_rng(seed, splitmix64(stream) ^ static_cast<std::uint64_t>(side));
  const auto vgrid = velocity_grid(n, side, R, PatchTier::enlarged);
  const int xmax = static_cast<int>(std::floor(2.0 * std::sqrt(R)));
  std::uniform_int_distribution<int> xdist(-xmax, xmax);
  std::uniform_int_distribution<std::size_t> vdist(0, vgrid.size() - 1);
  std::vector<Tube> tubes;
  tubes.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::array<int, kMaxDim> xi{0, 0, 0};
    for (int k = 0; k < n; ++k) xi[k] = xdist(rng);
    tubes.push_back(make_tube(n, R, side, xi, vgrid[vdist(rng)]));
  }
  return tubes;
}

}  // namespace parawave
