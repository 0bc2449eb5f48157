#include "parawave/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>

#include "parawave/errors.hpp"
#include "parawave/rng.hpp"
#include "parawave/wavepacket.hpp"

namespace parawave {

namespace {

constexpr double kTau = 2.0 * std::numbers::pi;

// Covariant measurement box of the rescaling family at N = 1; the box at
// scale N is (t, x) in [-kRescaleT/N^2, kRescaleT/N^2] x [-kRescaleX/N,
// kRescaleX/N]^n.  The predicted exponent is region-shape invariant, so the
// constants only need to hold the bulk of the product at N = 1 (caps of
// radius 1/200 radiate envelopes of width ~200).
constexpr double kRescaleT = 200.0;
constexpr double kRescaleX = 250.0;

// Jittered-lattice stratified sample of an axis box: count rounds down to an
// (n+1)-th power of cells, one uniform point per cell, every weight equal to
// volume / cells (so weights sum to the box volume exactly).
SamplingGrid jittered_box(int n, double t0, double t1, const Vec& xlo, const Vec& xhi,
                          std::size_t count, std::uint64_t seed) {
  long k = static_cast<long>(std::floor(std::pow(static_cast<double>(count),
                                                 1.0 / static_cast<double>(n + 1)) +
                                        1e-9));
  k = std::max(k, 1L);
  double vol = t1 - t0;
  for (int i = 0; i < n; ++i) vol *= xhi[i] - xlo[i];
  std::size_t cells = 1;
  for (int i = 0; i < n + 1; ++i) cells *= static_cast<std::size_t>(k);
  const double w = vol / static_cast<double>(cells);

  auto rng = make_rng(seed, 0xB0C5u);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<SamplePoint> pts;
  pts.reserve(cells);
  std::array<long, kMaxDim + 1> idx{0, 0, 0, 0};
  for (std::size_t c = 0; c < cells; ++c) {
    SamplePoint p;
    p.t = t0 + (t1 - t0) * (static_cast<double>(idx[0]) + u(rng)) / static_cast<double>(k);
    p.x = zero(n);
    for (int i = 0; i < n; ++i)
      p.x[i] = xlo[i] +
               (xhi[i] - xlo[i]) * (static_cast<double>(idx[i + 1]) + u(rng)) /
                   static_cast<double>(k);
    p.weight = w;
    pts.push_back(p);
    for (int i = n; i >= 0; --i) {
      if (++idx[static_cast<std::size_t>(i)] < k) break;
      idx[static_cast<std::size_t>(i)] = 0;
    }
  }
  return SamplingGrid::scattered(n, std::move(pts), vol);
}

// sum_s w_s |v_s|^q over samples inside the region (weight-zero and
// out-of-region samples are skipped, making over-covering grids harmless).
double lq_power_sum(const Field& field, double q, const SpacetimeRegion& region) {
  double s = 0.0;
  for (std::size_t i = 0; i < field.points.size(); ++i) {
    const SamplePoint& p = field.points[i];
    if (p.weight <= 0.0) continue;
    if (!region.contains({p.t, p.x})) continue;
    s += p.weight * std::pow(std::abs(field.values[i]), q);
  }
  return s;
}

std::uint64_t derived_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream));
}

bool power_of_two_scale(double R) {
  if (!(R >= 16.0)) return false;
  int e = 0;
  return std::frexp(R, &e) == 0.5;
}

// Natural measurement region for lattice cap data of refinement M: the
// extension is exactly periodic in x with period L = M sqrt(R), so once
// L < 2R the cylinder Q_R contains multiple periodic copies and the ball
// L^q norm grows with the copy count rather than the field.  One exact
// spatial period (clipped to the ball's extent) is the discrete stand-in
// for the global-in-x estimate.
SpacetimeRegion natural_cap_region(int n, double R, int refine) {
  const double half_period = 0.5 * static_cast<double>(refine) * std::sqrt(R);
  Vec half = zero(n);
  for (int i = 0; i < n; ++i) half[i] = std::min(R, half_period);
  return SpacetimeRegion::box(0.5 * R, R, zero(n), half);
}

}  // namespace

// --------------------------------------------------------------- exponents

double critical_exponent(int n) {
  if (n < 1 || n > kMaxDim) throw InvalidInput("critical_exponent: n must be in 1..3");
  return static_cast<double>(n + 3) / static_cast<double>(n + 1);
}

double plate_exponent(int n, double q) {
  if (n < 1 || n > kMaxDim) throw InvalidInput("plate_exponent: n must be in 1..3");
  if (!(q > 0.0)) throw InvalidInput("plate_exponent: q must be positive");
  return static_cast<double>(n + 3) / (2.0 * q) - static_cast<double>(n + 1) / 2.0;
}

double rescale_exponent(int n, double q) {
  if (n < 1 || n > kMaxDim) throw InvalidInput("rescale_exponent: n must be in 1..3");
  if (!(q > 0.0)) throw InvalidInput("rescale_exponent: q must be positive");
  return static_cast<double>(n) - static_cast<double>(n + 2) / q;
}

// -------------------------------------------------------------------- plans

LqPlan region_plan(const SpacetimeRegion& region, std::size_t samples, std::uint64_t seed) {
  LqPlan plan;
  if (samples == 0) return plan;
  switch (region.kind) {
    case SpacetimeRegion::Kind::cylinder:
      plan.random = stratified_cylinder(region.n, region.R, samples, seed);
      return plan;
    case SpacetimeRegion::Kind::ball: {
      Vec xlo = region.center.x, xhi = region.center.x;
      for (int i = 0; i < region.n; ++i) {
        xlo[i] -= region.radius;
        xhi[i] += region.radius;
      }
      plan.random = jittered_box(region.n, region.center.t - region.radius,
                                 region.center.t + region.radius, xlo, xhi, samples, seed);
      return plan;
    }
    case SpacetimeRegion::Kind::box: {
      Vec xlo = region.center.x, xhi = region.center.x;
      for (int i = 0; i < region.n; ++i) {
        xlo[i] -= region.half[i];
        xhi[i] += region.half[i];
      }
      plan.random = jittered_box(region.n, region.t0, region.t1, xlo, xhi, samples, seed);
      return plan;
    }
  }
  throw InvalidInput("region_plan: unknown region kind");
}

LqPlan plate_plan(int n, double R, std::size_t samples, std::uint64_t seed) {
  if (n < 1 || n > kMaxDim) throw InvalidConfig("plate_plan: n must be in 1..3");
  if (!(R >= 16.0)) throw InvalidConfig("plate_plan: R must be at least 16");
  LqPlan plan;
  const double s = 0.5 * std::sqrt(R);
  const int ct = static_cast<int>(std::ceil(0.5 * R / s - 1e-9));
  std::vector<double> times(static_cast<std::size_t>(ct));
  for (int j = 0; j < ct; ++j)
    times[static_cast<std::size_t>(j)] = 0.5 * R + s * (static_cast<double>(j) + 0.5);

  std::array<int, kMaxDim> counts{1, 1, 1};
  counts[0] = static_cast<int>(std::ceil(2.0 * R / s - 1e-9));
  for (int i = 1; i < n; ++i) counts[static_cast<std::size_t>(i)] = 16;  // 8 sqrt(R) / s
  Vec origin = zero(n);
  for (int i = 0; i < n; ++i)
    origin[i] = -0.5 * s * static_cast<double>(counts[static_cast<std::size_t>(i)] - 1);

  plan.grid = SamplingGrid::time_slices(n, std::move(times), origin, s, counts,
                                        std::pow(s, n + 1));
  if (n == 1) return plan;  // the grid already covers the whole cylinder

  plan.slab_halfwidth = 8.0 * s;  // = 4 sqrt(R), the exact grid extent
  SamplingGrid cyl = stratified_cylinder(n, R, samples, seed);
  std::vector<SamplePoint> outside;
  outside.reserve(cyl.points.size());
  for (const SamplePoint& p : cyl.points) {
    double perp = 0.0;
    for (int i = 1; i < n; ++i) perp = std::max(perp, std::abs(p.x[i]));
    if (perp > plan.slab_halfwidth) outside.push_back(p);
  }
  plan.random = SamplingGrid::scattered(n, std::move(outside), cyl.declared_volume);
  return plan;
}

// -------------------------------------------------------------- measurement

BilinearMeasurement bilinear_constant(const CapFunction& f1, const CapFunction& f2, double q,
                                      const SpacetimeRegion& region, const LqPlan& plan,
                                      double normalizer, int workers) {
  if (f1.patch.n != f2.patch.n || f1.patch.n != region.n)
    throw InvalidInput("bilinear_constant: dimension mismatch between data and region");
  if (!(q > 0.0) || !std::isfinite(q))
    throw InvalidConfig("bilinear_constant: q must be positive");
  if (!(normalizer >= 0.0))
    throw InvalidInput("bilinear_constant: normalizer must be nonnegative");
  if (plan.grid.size() + plan.random.size() == 0)
    throw InvalidConfig("bilinear_constant: empty sampling plan");
  const double P1 = probability(f1), P2 = probability(f2);
  if (!(P1 > 0.0) || !(P2 > 0.0)) throw InvalidInput("bilinear_constant: zero cap data");

  BilinearMeasurement out;
  out.normalizer = normalizer > 0.0 ? normalizer : std::sqrt(P1 * P2);
  double grid_q = 0.0, random_q = 0.0;
  for (int part = 0; part < 2; ++part) {
    const SamplingGrid& g = part == 0 ? plan.grid : plan.random;
    if (g.size() == 0) continue;
    const Field u1 = extend(f1, g, workers);
    const Field u2 = extend(f2, g, workers);
    const Field prod = product_field(u1, u2);
    (part == 0 ? grid_q : random_q) = lq_power_sum(prod, q, region);
  }
  const double total = grid_q + random_q;
  out.lhs = total > 0.0 ? std::pow(total, 1.0 / q) : 0.0;
  out.ratio = out.lhs / out.normalizer;
  out.grid_share = total > 0.0 ? grid_q / total : 0.0;
  return out;
}

// ------------------------------------------------------------- plate family

double PlateExample::family_normalizer() const {
  return std::sqrt(static_cast<double>(tubes1.size()) * static_cast<double>(tubes2.size()));
}

PlateExample plate_example(int n, double R) {
  if (n < 1 || n > kMaxDim) throw InvalidConfig("plate_example: n must be in 1..3");
  if (!(R >= 16.0)) throw InvalidConfig("plate_example: R must be at least 16");

  PlateExample ex;
  ex.n = n;
  ex.R = R;
  const double sqrtR = std::sqrt(R);
  const int M = static_cast<int>(std::ceil(4.0 * sqrtR)) + 4;
  ex.refine = M;

  // Tube offsets k sqrt(R) e1 chosen so the family sweeps exactly the tubes
  // meeting the disk {R/2 <= t <= R, |x1| <= R, x_perp = 0}: side 1 moves
  // with +e1 (offsets in [-2R, R/2]), side 2 with -e1 (offsets mirrored).
  const auto offsets = [&](int side) {
    const long lo = side == 1 ? static_cast<long>(std::ceil(-2.0 * sqrtR))
                              : static_cast<long>(std::ceil(-0.5 * sqrtR));
    const long hi = side == 1 ? static_cast<long>(std::floor(0.5 * sqrtR))
                              : static_cast<long>(std::floor(2.0 * sqrtR));
    std::vector<long> ks;
    for (long k = lo; k <= hi; ++k) ks.push_back(k);
    return ks;
  };

  for (int side = 1; side <= 2; ++side) {
    const std::vector<long> ks = offsets(side);
    std::vector<Tube>& tubes = side == 1 ? ex.tubes1 : ex.tubes2;
    for (long k : ks)
      tubes.push_back(make_tube(n, R, side, {static_cast<int>(k), 0, 0}, {0, 0, 0}));

    // Unit-coefficient packet sum, assembled in closed form: the family
    // shares one window lattice, so summing the canonical packets multiplies
    // the k = 0 packet's node values by the position-phase sum
    // D(m1) = sum_k e^{-2 pi i m1 k / M}.
    WavePacket base = canonical_packet(n, R, M, side, {0, 0, 0}, {0, 0, 0});
    CapFunction f = std::move(base.spectrum);
    int lo0 = 0, hi0 = 0;
    for (const auto& m : f.patch.index) {
      lo0 = std::min(lo0, m[0]);
      hi0 = std::max(hi0, m[0]);
    }
    std::vector<Complex> dirichlet(static_cast<std::size_t>(hi0 - lo0 + 1));
    for (int m0 = lo0; m0 <= hi0; ++m0) {
      Complex acc(0.0, 0.0);
      for (long k : ks) {
        long r = (static_cast<long>(m0) * k) % M;  // match the per-packet phase exactly
        if (r < 0) r += M;
        acc += std::polar(1.0, -kTau * static_cast<double>(r) / static_cast<double>(M));
      }
      dirichlet[static_cast<std::size_t>(m0 - lo0)] = acc;
    }
    for (std::size_t i = 0; i < f.values.size(); ++i)
      f.values[i] *= dirichlet[static_cast<std::size_t>(f.patch.index[i][0] - lo0)];
    (side == 1 ? ex.f1 : ex.f2) = std::move(f);
  }
  return ex;
}

// ------------------------------------------------------------------ fitting

ScalingFit scaling_fit(const std::vector<double>& R_list, const std::vector<double>& ratios) {
  if (R_list.size() != ratios.size())
    throw InvalidInput("scaling_fit: R list and ratio list sizes differ");
  if (R_list.size() < 3) throw InvalidInput("scaling_fit: at least 3 points required");
  for (std::size_t i = 0; i < R_list.size(); ++i) {
    if (!(R_list[i] > 0.0)) throw InvalidInput("scaling_fit: scales must be positive");
    if (i > 0 && !(R_list[i] > R_list[i - 1]))
      throw InvalidInput("scaling_fit: scales must be strictly increasing");
    if (!(ratios[i] > 0.0)) throw InvalidInput("scaling_fit: ratios must be positive");
  }
  const std::size_t m = R_list.size();
  std::vector<double> xs(m), ys(m);
  double xbar = 0.0, ybar = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    xs[i] = std::log(R_list[i]);
    ys[i] = std::log(ratios[i]);
    xbar += xs[i];
    ybar += ys[i];
  }
  xbar /= static_cast<double>(m);
  ybar /= static_cast<double>(m);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (xs[i] - xbar) * (xs[i] - xbar);
    sxy += (xs[i] - xbar) * (ys[i] - ybar);
  }
  ScalingFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = ybar - fit.slope * xbar;
  for (std::size_t i = 0; i < m; ++i)
    fit.residual = std::max(fit.residual, std::abs(ys[i] - fit.intercept - fit.slope * xs[i]));
  return fit;
}

// -------------------------------------------------------------- experiments

void validate(const ExperimentConfig& config) {
  if (config.n < 1 || config.n > kMaxDim) throw InvalidConfig("config.n must be in 1..3");
  if (config.R_list.empty()) throw InvalidConfig("config.R_list must be nonempty");
  for (std::size_t i = 0; i < config.R_list.size(); ++i) {
    if (!power_of_two_scale(config.R_list[i]))
      throw InvalidConfig("config.R_list entries must be powers of two at least 16");
    if (i > 0 && !(config.R_list[i] > config.R_list[i - 1]))
      throw InvalidConfig("config.R_list must be strictly increasing");
  }
  if (!(config.q > 0.0) || !std::isfinite(config.q))
    throw InvalidConfig("config.q must be positive");
  if (!(config.delta > 0.0 && config.delta < 0.5))
    throw InvalidConfig("config.delta must lie in (0, 1/2)");
  if (config.family != "plate" && config.family != "random" && config.family != "packet")
    throw InvalidConfig("config.family must be one of plate|random|packet");
  if (config.samples == 0) throw InvalidConfig("config.samples must be positive");
  if (config.refine < 1) throw InvalidConfig("config.refine must be at least 1");
  if (config.workers < 1) throw InvalidConfig("config.workers must be at least 1");
}

EstimateReport scaling_experiment(const ExperimentConfig& config) {
  validate(config);
  EstimateReport report;
  report.n = config.n;
  report.q = config.q;
  report.family = config.family;
  report.seed = config.seed;

  for (std::size_t i = 0; i < config.R_list.size(); ++i) {
    const double R = config.R_list[i];
    const std::uint64_t cell = derived_seed(config.seed, i + 1);
    const SpacetimeRegion region = SpacetimeRegion::cylinder(config.n, R);
    BilinearMeasurement mes;
    if (config.family == "plate") {
      const PlateExample ex = plate_example(config.n, R);
      const LqPlan plan = plate_plan(config.n, R, config.samples, cell);
      mes = bilinear_constant(ex.f1, ex.f2, config.q, region, plan, ex.family_normalizer(),
                              config.workers);
    } else if (config.family == "random") {
      const SurfacePatch p1 =
          make_patch_refined(config.n, 1, PatchTier::enlarged, R, config.refine);
      const SurfacePatch p2 =
          make_patch_refined(config.n, 2, PatchTier::enlarged, R, config.refine);
      const CapFunction f1 = random_cap_function(p1, config.seed, 2 * i + 1);
      const CapFunction f2 = random_cap_function(p2, config.seed, 2 * i + 2);
      const SpacetimeRegion period = natural_cap_region(config.n, R, config.refine);
      const LqPlan plan = region_plan(period, config.samples, cell);
      mes = bilinear_constant(f1, f2, config.q, period, plan, 0.0, config.workers);
    } else {  // packet
      // Two canonical packets whose tubes cross at t ~ 3R/4, inside Q_R.
      const int shift = static_cast<int>(std::llround(1.5 * std::sqrt(R)));
      const WavePacket pk1 = canonical_packet(config.n, R, config.refine, 1);
      const WavePacket pk2 =
          canonical_packet(config.n, R, config.refine, 2, {0, 0, 0}, {shift, 0, 0});
      const LqPlan plan = region_plan(region, config.samples, cell);
      mes = bilinear_constant(pk1.spectrum, pk2.spectrum, config.q, region, plan, 0.0,
                              config.workers);
    }
    report.points.push_back({R, mes.lhs, mes.normalizer, mes.ratio});
  }

  if (report.points.size() >= 3) {
    std::vector<double> rs, ratios;
    for (const ScalingPoint& p : report.points) {
      rs.push_back(p.R);
      ratios.push_back(p.ratio);
    }
    const ScalingFit fit = scaling_fit(rs, ratios);
    report.fitted = true;
    report.slope = fit.slope;
    report.residual = fit.residual;
  }
  return report;
}

// --------------------------------------------------------- rescaling family

std::pair<CapFunction, CapFunction> rescaled_pair(int n, double N, std::uint64_t seed) {
  if (n < 1 || n > kMaxDim) throw InvalidConfig("rescaled_pair: n must be in 1..3");
  if (!(N > 0.0)) throw InvalidConfig("rescaled_pair: N must be positive");
  std::pair<CapFunction, CapFunction> out;
  const double amp = std::pow(N, 0.5 * static_cast<double>(n));
  for (int side = 1; side <= 2; ++side) {
    // Cell weights (plain h^n) rather than graph-measure weights: the graph
    // factor sqrt(1 + |xi|^2) is not homogeneous under xi -> N xi and would
    // put a spurious ~N drift into the measured ratio.
    Vec center = basis(n, 0) * (side == 1 ? 1.0 : -1.0) * (0.995 * N);
    SurfacePatch patch = make_custom_patch(center, N / 200.0, N / 1000.0, WeightRule::cell);
    auto rng = make_rng(seed, static_cast<std::uint64_t>(side));
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<Complex> values(patch.nodes.size());
    for (Complex& v : values) {
      const double re = g(rng), im = g(rng);
      v = Complex(re * amp, im * amp);
    }
    (side == 1 ? out.first : out.second) = make_cap_function(std::move(patch), std::move(values));
  }
  return out;
}

RescalePoint rescaled_bilinear(int n, double N, double c, double q, const CapFunction& f1,
                               const CapFunction& f2, std::size_t samples, std::uint64_t seed,
                               int workers) {
  if (n < 1 || n > kMaxDim) throw InvalidConfig("rescaled_bilinear: n must be in 1..3");
  if (!(N > 0.0)) throw InvalidConfig("rescaled_bilinear: N must be positive");
  if (!(c > 0.0)) throw InvalidConfig("rescaled_bilinear: c must be positive");
  for (const CapFunction* f : {&f1, &f2}) {
    if (f->patch.n != n) throw InvalidInput("rescaled_bilinear: dimension mismatch");
    for (const FrequencyPoint& node : f->patch.nodes)
      if (norm(node.xi) > N * (1.0 + 1e-9))
        throw InvalidInput("rescaled_bilinear: support exceeds the frequency scale N");
  }
  double sep = std::numeric_limits<double>::infinity();
  for (const FrequencyPoint& a : f1.patch.nodes)
    for (const FrequencyPoint& b : f2.patch.nodes) sep = std::min(sep, dist(a.xi, b.xi));
  if (sep < c * N * (1.0 - 1e-9))
    throw InvalidInput("rescaled_bilinear: supports are not cN-separated");

  Vec xhalf = zero(n);
  for (int i = 0; i < n; ++i) xhalf[i] = kRescaleX / N;
  const SpacetimeRegion region =
      SpacetimeRegion::box(-kRescaleT / (N * N), kRescaleT / (N * N), zero(n), xhalf);
  const LqPlan plan = region_plan(region, samples, seed);
  const BilinearMeasurement mes = bilinear_constant(f1, f2, q, region, plan, 0.0, workers);
  return {N, mes.lhs, mes.ratio};
}

// ------------------------------------------------------- adversarial search

SearchResult adversarial_search(int n, double R, double q, int iterations, std::uint64_t seed,
                                std::size_t samples, int refine, int workers) {
  if (iterations < 0) throw InvalidConfig("adversarial_search: iterations must be nonnegative");
  if (samples == 0) throw InvalidConfig("adversarial_search: samples must be positive");
  if (refine < 1) throw InvalidConfig("adversarial_search: refine must be at least 1");
  const SurfacePatch p1 = make_patch_refined(n, 1, PatchTier::enlarged, R, refine);
  const SurfacePatch p2 = make_patch_refined(n, 2, PatchTier::enlarged, R, refine);
  const SpacetimeRegion region = natural_cap_region(n, R, refine);
  const LqPlan plan = region_plan(region, samples, derived_seed(seed, 0x5EA7C4u));

  SearchResult out;
  out.f1 = random_cap_function(p1, seed, 10);
  out.f2 = random_cap_function(p2, seed, 11);
  const auto measure = [&](const CapFunction& a, const CapFunction& b) {
    return bilinear_constant(a, b, q, region, plan, 0.0, workers).ratio;
  };
  out.start_ratio = measure(out.f1, out.f2);
  out.search_ratio = out.start_ratio;
  out.evaluations = 1;

  auto rng = make_rng(seed, 999);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int it = 0; it < iterations; ++it) {
    CapFunction c1 = out.f1, c2 = out.f2;
    const bool restart = (it % 8) == 7;
    for (CapFunction* f : {&c1, &c2}) {
      const double scale =
          restart ? 1.0 : 0.25 * std::sqrt(probability(*f) / f->patch.total_weight());
      for (Complex& v : f->values) {
        const Complex noise(g(rng), g(rng));
        v = restart ? noise : v + scale * noise;
      }
    }
    const double r = measure(c1, c2);
    ++out.evaluations;
    if (r > out.search_ratio) {
      out.search_ratio = r;
      out.f1 = std::move(c1);
      out.f2 = std::move(c2);
    }
  }

  const LqPlan check = region_plan(region, samples, derived_seed(seed, 0xF00Du));
  out.validated_ratio = bilinear_constant(out.f1, out.f2, q, region, check, 0.0, workers).ratio;
  return out;
}

}  // namespace parawave
