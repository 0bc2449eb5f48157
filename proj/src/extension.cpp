#include "parawave/extension.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "parawave/fft.hpp"
#include "parawave/parallel.hpp"
#include "parawave/rng.hpp"

namespace parawave {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::complex<double> unit_phase(double turns) {  // e^{2 pi i turns}
  return {std::cos(kTwoPi * turns), std::sin(kTwoPi * turns)};
}
}  // namespace

CapFunction make_cap_function(SurfacePatch patch, std::vector<Complex> values) {
  if (patch.nodes.size() != values.size())
    throw InvalidInput("make_cap_function: one value per node required");
  return CapFunction{std::move(patch), std::move(values)};
}

CapFunction constant_cap_function(SurfacePatch patch, Complex value) {
  std::vector<Complex> values(patch.nodes.size(), value);
  return CapFunction{std::move(patch), std::move(values)};
}

CapFunction random_cap_function(SurfacePatch patch, std::uint64_t seed, std::uint64_t stream) {
  auto rng = make_rng(seed, stream);
  std::normal_distribution<double> gauss(0.0, 1.0 / std::sqrt(2.0));
  std::vector<Complex> values(patch.nodes.size());
  for (auto& v : values) {
    const double re = gauss(rng);
    const double im = gauss(rng);
    v = Complex(re, im);
  }
  return CapFunction{std::move(patch), std::move(values)};
}

double probability(const CapFunction& f) {
  double s = 0.0;
  for (std::size_t k = 0; k < f.values.size(); ++k)
    s += f.patch.weights[k] * std::norm(f.values[k]);
  return s;
}

CapFunction propagate(const CapFunction& f, double t) {
  CapFunction out = f;
  for (std::size_t k = 0; k < out.values.size(); ++k)
    out.values[k] *= unit_phase(t * out.patch.nodes[k].tau);
  return out;
}

CapFunction shift_frequencies(const CapFunction& f, const Vec& v0) {
  CapFunction out = f;
  out.patch.center += v0;
  for (auto& node : out.patch.nodes) node = paraboloid_lift(node.xi + v0);
  return out;
}

// ---------------------------------------------------------------- sampling

double SamplingGrid::total_weight() const {
  double s = 0.0;
  for (const auto& p : points) s += p.weight;
  return s;
}

SamplingGrid SamplingGrid::time_slices(int n, std::vector<double> times, const Vec& origin,
                                       double spacing, const std::array<int, kMaxDim>& counts,
                                       double sample_weight) {
  if (n < 1 || n > kMaxDim) throw InvalidInput("time_slices: dimension must be 1..3");
  if (times.empty()) throw InvalidInput("time_slices: need at least one time");
  if (!(spacing > 0.0)) throw InvalidInput("time_slices: spacing must be positive");
  SamplingGrid g;
  g.n = n;
  g.tensor = true;
  g.times = std::move(times);
  g.origin = origin;
  g.spacing = spacing;
  g.counts = counts;
  std::size_t sites = 1;
  for (int i = 0; i < n; ++i) {
    if (counts[static_cast<std::size_t>(i)] < 1)
      throw InvalidInput("time_slices: counts must be >= 1");
    sites *= static_cast<std::size_t>(counts[static_cast<std::size_t>(i)]);
  }
  g.points.reserve(g.times.size() * sites);
  std::array<int, kMaxDim> j{0, 0, 0};
  for (double t : g.times) {
    for (j[0] = 0; j[0] < counts[0]; ++j[0])
      for (j[1] = 0; j[1] < (n > 1 ? counts[1] : 1); ++j[1])
        for (j[2] = 0; j[2] < (n > 2 ? counts[2] : 1); ++j[2]) {
          Vec x = origin;
          for (int i = 0; i < n; ++i) x[i] += spacing * j[static_cast<std::size_t>(i)];
          g.points.push_back(SamplePoint{t, x, sample_weight});
        }
  }
  return g;
}

SamplingGrid SamplingGrid::scattered(int n, std::vector<SamplePoint> points,
                                     double declared_volume) {
  SamplingGrid g;
  g.n = n;
  g.tensor = false;
  g.points = std::move(points);
  g.declared_volume = declared_volume;
  return g;
}

SamplingGrid stratified_cylinder(int n, double R, std::size_t count, std::uint64_t seed) {
  if (n < 1 || n > kMaxDim) throw InvalidInput("stratified_cylinder: dimension must be 1..3");
  const int dims = n + 1;
  auto G = static_cast<std::size_t>(std::floor(std::pow(static_cast<double>(count), 1.0 / dims)));
  if (G < 1) throw InvalidConfig("stratified_cylinder: count too small");
  std::size_t total = 1;
  for (int i = 0; i < dims; ++i) total *= G;
  const double volume = (R / 2.0) * ball_volume(n, R);
  const double w = volume / static_cast<double>(total);

  auto rng = make_rng(seed, 0x0cf1);
  std::uniform_real_distribution<double> jitter(0.0, 1.0);
  std::vector<SamplePoint> pts;
  pts.reserve(total);
  std::vector<std::size_t> idx(static_cast<std::size_t>(dims), 0);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    for (int i = 0; i < dims; ++i) {
      idx[static_cast<std::size_t>(i)] = rem % G;
      rem /= G;
    }
    std::array<double, 4> u{};
    for (int i = 0; i < dims; ++i)
      u[static_cast<std::size_t>(i)] =
          (static_cast<double>(idx[static_cast<std::size_t>(i)]) + jitter(rng)) /
          static_cast<double>(G);
    SamplePoint p;
    p.t = R / 2.0 + R / 2.0 * u[0];
    p.x = Vec(n);
    switch (n) {
      case 1:
        p.x[0] = R * (2.0 * u[1] - 1.0);
        break;
      case 2: {
        const double r = R * std::sqrt(u[1]);
        const double th = kTwoPi * u[2];
        p.x[0] = r * std::cos(th);
        p.x[1] = r * std::sin(th);
        break;
      }
      case 3: {
        const double r = R * std::cbrt(u[1]);
        const double c = 2.0 * u[2] - 1.0;
        const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
        const double th = kTwoPi * u[3];
        p.x[0] = r * s * std::cos(th);
        p.x[1] = r * s * std::sin(th);
        p.x[2] = r * c;
        break;
      }
    }
    p.weight = w;
    pts.push_back(p);
  }
  auto g = SamplingGrid::scattered(n, std::move(pts), volume);
  return g;
}

SamplingGrid concat(const SamplingGrid& a, const SamplingGrid& b) {
  if (a.n != b.n) throw InvalidInput("concat: dimension mismatch");
  SamplingGrid g;
  g.n = a.n;
  g.tensor = false;
  g.points = a.points;
  g.points.insert(g.points.end(), b.points.begin(), b.points.end());
  if (a.declared_volume >= 0.0 && b.declared_volume >= 0.0)
    g.declared_volume = a.declared_volume + b.declared_volume;
  return g;
}

// ------------------------------------------------------------------ fields

namespace {

struct LatticeView {
  // Node k sits at xi = center + h * index[k]; amplitude already includes the
  // quadrature weight.
  const SurfacePatch* patch = nullptr;
  std::vector<Complex> amps;
  std::array<int, kMaxDim> lo{0, 0, 0}, hi{0, 0, 0};
};

LatticeView lattice_view(const CapFunction& f) {
  LatticeView v;
  v.patch = &f.patch;
  v.amps.resize(f.values.size());
  for (std::size_t k = 0; k < f.values.size(); ++k) v.amps[k] = f.patch.weights[k] * f.values[k];
  for (int i = 0; i < f.patch.n; ++i) {
    int lo = 0, hi = 0;
    for (const auto& m : f.patch.index) {
      lo = std::min(lo, m[static_cast<std::size_t>(i)]);
      hi = std::max(hi, m[static_cast<std::size_t>(i)]);
    }
    v.lo[static_cast<std::size_t>(i)] = lo;
    v.hi[static_cast<std::size_t>(i)] = hi;
  }
  return v;
}

// Fill table[m - lo] = e^{2 pi i (a m + b m^2)} for m in [lo, hi] with two
// phase recurrences (three sincos total, then one complex multiply per step).
void quadratic_phase_table(double a, double b, int lo, int hi, std::vector<Complex>& table) {
  table.resize(static_cast<std::size_t>(hi - lo) + 1);
  Complex z = unit_phase(a * lo + b * static_cast<double>(lo) * lo);
  Complex d = unit_phase(a + b * (2.0 * lo + 1.0));
  const Complex rho = unit_phase(2.0 * b);
  table[0] = z;
  for (int m = lo + 1; m <= hi; ++m) {
    z *= d;
    d *= rho;
    table[static_cast<std::size_t>(m - lo)] = z;
  }
}

// Scattered-point evaluation via separated quadratic-phase tables.
void extend_scattered(const LatticeView& v, const std::vector<SamplePoint>& pts,
                      std::vector<Complex>& out, int workers) {
  const auto& patch = *v.patch;
  const int n = patch.n;
  const double h = patch.h;
  const Vec c = patch.center;
  const double c2 = norm2(c);
  parallel_for_blocks(
      pts.size(),
      [&](std::size_t begin, std::size_t end) {
        std::array<std::vector<Complex>, kMaxDim> tabs;
        for (std::size_t s = begin; s < end; ++s) {
          const auto& p = pts[s];
          // Phase split: x.xi + t tau = [x.c - t|c|^2/2] + h m.(x - t c)
          //                              - (t h^2/2) |m|^2.
          const double b = -0.5 * p.t * h * h;
          for (int i = 0; i < n; ++i) {
            const double y = p.x[i] - p.t * c[i];
            quadratic_phase_table(h * y, b, v.lo[static_cast<std::size_t>(i)],
                                  v.hi[static_cast<std::size_t>(i)],
                                  tabs[static_cast<std::size_t>(i)]);
          }
          Complex acc(0.0, 0.0);
          for (std::size_t k = 0; k < v.amps.size(); ++k) {
            const auto& m = patch.index[k];
            Complex ph = tabs[0][static_cast<std::size_t>(m[0] - v.lo[0])];
            if (n > 1) ph *= tabs[1][static_cast<std::size_t>(m[1] - v.lo[1])];
            if (n > 2) ph *= tabs[2][static_cast<std::size_t>(m[2] - v.lo[2])];
            acc += v.amps[k] * ph;
          }
          out[s] = acc * unit_phase(dot(p.x, c) - 0.5 * p.t * c2);
        }
      },
      workers);
}

// Tensor-grid evaluation: per-axis phasor tables V_i[m][j] = e^{2 pi i xi_i x_j}
// shared across times, with the time phase folded into the amplitudes.
void extend_tensor(const LatticeView& v, const SamplingGrid& grid, std::vector<Complex>& out) {
  const auto& patch = *v.patch;
  const int n = patch.n;
  const double h = patch.h;
  const Vec c = patch.center;

  std::array<std::vector<Complex>, kMaxDim> V;  // [(m - lo) * N + j]
  std::array<int, kMaxDim> span{1, 1, 1};
  for (int i = 0; i < n; ++i) {
    const auto ii = static_cast<std::size_t>(i);
    span[ii] = v.hi[ii] - v.lo[ii] + 1;
    const int N = grid.counts[ii];
    V[ii].resize(static_cast<std::size_t>(span[ii]) * static_cast<std::size_t>(N));
    for (int m = v.lo[ii]; m <= v.hi[ii]; ++m) {
      const double freq = c[i] + h * m;  // xi component
      Complex z = unit_phase(freq * grid.origin[i]);
      const Complex step = unit_phase(freq * grid.spacing);
      for (int j = 0; j < N; ++j) {
        V[ii][static_cast<std::size_t>(m - v.lo[ii]) * static_cast<std::size_t>(N) +
              static_cast<std::size_t>(j)] = z;
        z *= step;
      }
    }
  }

  const std::size_t N0 = static_cast<std::size_t>(grid.counts[0]);
  const std::size_t N1 = n > 1 ? static_cast<std::size_t>(grid.counts[1]) : 1;
  std::vector<Complex> amps_t(v.amps.size());
  std::size_t cursor = 0;
  for (double t : grid.times) {
    for (std::size_t k = 0; k < v.amps.size(); ++k)
      amps_t[k] = v.amps[k] * unit_phase(t * patch.nodes[k].tau);
    if (n == 1) {
      for (std::size_t j = 0; j < N0; ++j) out[cursor + j] = Complex(0.0, 0.0);
      for (std::size_t k = 0; k < amps_t.size(); ++k) {
        const auto row = static_cast<std::size_t>(patch.index[k][0] - v.lo[0]) * N0;
        for (std::size_t j = 0; j < N0; ++j) out[cursor + j] += amps_t[k] * V[0][row + j];
      }
      cursor += N0;
    } else {  // n == 2
      // Stage 1: B[(m0 - lo0) * N1 + j1] = sum_{m1} A * V1.
      const std::size_t span0 = static_cast<std::size_t>(span[0]);
      std::vector<Complex> B(span0 * N1, Complex(0.0, 0.0));
      for (std::size_t k = 0; k < amps_t.size(); ++k) {
        const auto m0 = static_cast<std::size_t>(patch.index[k][0] - v.lo[0]);
        const auto row1 = static_cast<std::size_t>(patch.index[k][1] - v.lo[1]) * N1;
        Complex* brow = B.data() + m0 * N1;
        const Complex a = amps_t[k];
        const Complex* vrow = V[1].data() + row1;
        for (std::size_t j = 0; j < N1; ++j) brow[j] += a * vrow[j];
      }
      // Stage 2: u[j0 * N1 + j1] = sum_{m0} V0[m0][j0] * B[m0][j1].
      for (std::size_t j0 = 0; j0 < N0; ++j0) {
        Complex* urow = out.data() + cursor + j0 * N1;
        for (std::size_t j1 = 0; j1 < N1; ++j1) urow[j1] = Complex(0.0, 0.0);
        for (std::size_t m0 = 0; m0 < span0; ++m0) {
          const Complex v0 = V[0][m0 * N0 + j0];
          const Complex* brow = B.data() + m0 * N1;
          for (std::size_t j1 = 0; j1 < N1; ++j1) urow[j1] += v0 * brow[j1];
        }
      }
      cursor += N0 * N1;
    }
  }
}

}  // namespace

Field extend(const CapFunction& f, const SamplingGrid& grid, int workers) {
  if (f.patch.n != grid.n) throw InvalidInput("extend: dimension mismatch");
  if (grid.points.empty()) throw InvalidInput("extend: empty grid");
  Field field;
  field.points = grid.points;
  field.values.assign(grid.points.size(), Complex(0.0, 0.0));
  field.provenance = "extend";
  const LatticeView v = lattice_view(f);
  if (grid.tensor && (grid.n == 1 || grid.n == 2)) {
    extend_tensor(v, grid, field.values);
  } else {
    extend_scattered(v, grid.points, field.values, workers);
  }
  return field;
}

Field extend_brute(const CapFunction& f, const SamplingGrid& grid) {
  if (f.patch.n != grid.n) throw InvalidInput("extend: dimension mismatch");
  if (grid.points.empty()) throw InvalidInput("extend: empty grid");
  Field field;
  field.points = grid.points;
  field.values.resize(grid.points.size());
  field.provenance = "extend_brute";
  for (std::size_t s = 0; s < grid.points.size(); ++s)
    field.values[s] = extend_at(f, grid.points[s].t, grid.points[s].x);
  return field;
}

Complex extend_at(const CapFunction& f, double t, const Vec& x) {
  Complex acc(0.0, 0.0);
  for (std::size_t k = 0; k < f.values.size(); ++k) {
    const auto& node = f.patch.nodes[k];
    acc += f.patch.weights[k] * f.values[k] * unit_phase(dot(x, node.xi) + t * node.tau);
  }
  return acc;
}

Field product_field(const Field& a, const Field& b) {
  if (a.values.size() != b.values.size())
    throw InvalidInput("product_field: sample sets differ in size");
  Field out = a;
  for (std::size_t s = 0; s < out.values.size(); ++s) out.values[s] *= b.values[s];
  out.provenance = "product";
  return out;
}

double lq_norm(const Field& field, double q) {
  if (q == std::numeric_limits<double>::infinity()) {
    double m = 0.0;
    for (const auto& val : field.values) m = std::max(m, std::abs(val));
    return m;
  }
  if (!(q > 0.0)) throw InvalidConfig("lq_norm: q must be positive");
  double acc = 0.0;
  if (q == 2.0) {  // common case, avoid pow
    for (std::size_t s = 0; s < field.values.size(); ++s)
      acc += field.points[s].weight * std::norm(field.values[s]);
  } else {
    for (std::size_t s = 0; s < field.values.size(); ++s)
      acc += field.points[s].weight * std::pow(std::abs(field.values[s]), q);
  }
  return std::pow(acc, 1.0 / q);
}

double slice_mass(const CapFunction& f, double t, int samples_per_dim) {
  const int n = f.patch.n;
  if (samples_per_dim < 1) throw InvalidConfig("slice_mass: need at least one sample");
  // The N^n grid over one period resolves a frequency difference h*(m - m')
  // exactly iff |m - m'| < N in every coordinate; beyond that the discrete
  // mean aliases and the slice mass is not the L^2 mass.
  for (int i = 0; i < n; ++i) {
    int lo = 0, hi = 0;
    for (const auto& m : f.patch.index) {
      lo = std::min(lo, m[static_cast<std::size_t>(i)]);
      hi = std::max(hi, m[static_cast<std::size_t>(i)]);
    }
    if (hi - lo >= samples_per_dim)
      throw InvalidConfig("slice_mass: sample grid too coarse for the patch spectrum (aliasing)");
  }
  const double L = 1.0 / f.patch.h;
  std::array<int, kMaxDim> counts{1, 1, 1};
  for (int i = 0; i < n; ++i) counts[static_cast<std::size_t>(i)] = samples_per_dim;
  const double cell = std::pow(L / samples_per_dim, n);
  const auto grid = SamplingGrid::time_slices(n, {t}, zero(n), L / samples_per_dim, counts, cell);
  const Field u = extend(f, grid);
  double acc = 0.0;
  for (std::size_t s = 0; s < u.values.size(); ++s) acc += cell * std::norm(u.values[s]);
  return acc;
}

double product_spectrum_support(const CapFunction& f1, const CapFunction& f2, double R,
                                double radius_factor, int t_samples, int x_samples,
                                double box_factor) {
  const int n = f1.patch.n;
  if (f2.patch.n != n) throw InvalidInput("product_spectrum_support: dimension mismatch");
  if (!is_pow2(static_cast<std::size_t>(t_samples)) ||
      !is_pow2(static_cast<std::size_t>(x_samples)))
    throw InvalidConfig("product_spectrum_support: sample counts must be powers of two");

  const Vec v1 = f1.patch.center, v2 = f2.patch.center;
  const double tau_c = -0.5 * norm2(v1) - 0.5 * norm2(v2);
  const Vec xi_c = v1 + v2;

  // Cap extents and the aliasing guard: the demodulated product has spatial
  // frequencies up to e1 + e2 and temporal up to sum (|v_j| e_j + e_j^2/2).
  double e1 = 0.0, e2 = 0.0;
  for (const auto& node : f1.patch.nodes) e1 = std::max(e1, dist(node.xi, v1));
  for (const auto& node : f2.patch.nodes) e2 = std::max(e2, dist(node.xi, v2));
  const double box = box_factor * std::sqrt(R);
  const double dx = box / x_samples;
  const double dt = box / t_samples;
  // The product's spectrum reaches e1 + e2 spatially (twice the cap extent
  // for equal caps) and the matching paraboloid range temporally; the grid's
  // Nyquist frequency must cover both.
  const double fx_max = e1 + e2;
  const double ft_max = norm(v1) * e1 + 0.5 * e1 * e1 + norm(v2) * e2 + 0.5 * e2 * e2;
  if (0.5 / dx < fx_max || 0.5 / dt < ft_max)
    throw InvalidConfig("product_spectrum_support: grid cannot resolve twice the cap extent");

  // Sample u1 u2 on the box and demodulate by the center frequency.
  std::vector<double> times(static_cast<std::size_t>(t_samples));
  for (int k = 0; k < t_samples; ++k) times[static_cast<std::size_t>(k)] = dt * k;
  std::array<int, kMaxDim> counts{1, 1, 1};
  for (int i = 0; i < n; ++i) counts[static_cast<std::size_t>(i)] = x_samples;
  const auto grid = SamplingGrid::time_slices(n, times, zero(n), dx, counts, 1.0);
  const Field u1 = extend(f1, grid);
  const Field u2 = extend(f2, grid);

  std::vector<std::size_t> dims{static_cast<std::size_t>(t_samples)};
  for (int i = 0; i < n; ++i) dims.push_back(static_cast<std::size_t>(x_samples));
  std::vector<Complex> g(u1.values.size());
  for (std::size_t s = 0; s < g.size(); ++s) {
    const auto& p = grid.points[s];
    g[s] = u1.values[s] * u2.values[s] * unit_phase(-(tau_c * p.t + dot(xi_c, p.x)));
  }
  fft_nd(g, dims, -1);

  auto bin_freq = [](std::size_t k, std::size_t N, double extent) {
    const auto signed_k =
        static_cast<double>(k < N / 2 ? static_cast<std::ptrdiff_t>(k)
                                      : static_cast<std::ptrdiff_t>(k) -
                                            static_cast<std::ptrdiff_t>(N));
    return signed_k / extent;
  };

  const double radius = radius_factor / std::sqrt(R);
  double total = 0.0, inside = 0.0;
  std::vector<std::size_t> idx(dims.size(), 0);
  for (std::size_t flat = 0; flat < g.size(); ++flat) {
    std::size_t rem = flat;
    for (std::size_t d = dims.size(); d-- > 0;) {
      idx[d] = rem % dims[d];
      rem /= dims[d];
    }
    double d2 = 0.0;
    const double ft = bin_freq(idx[0], dims[0], box);
    d2 += ft * ft;
    for (std::size_t d = 1; d < dims.size(); ++d) {
      const double fx = bin_freq(idx[d], dims[d], box);
      d2 += fx * fx;
    }
    const double mass = std::norm(g[flat]);
    total += mass;
    if (d2 <= radius * radius) inside += mass;
  }
  if (total == 0.0) throw InvalidInput("product_spectrum_support: zero product field");
  return inside / total;
}

}  // namespace parawave
