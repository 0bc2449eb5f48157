#include "parawave/wavepacket.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>

#include "parawave/fft.hpp"
#include "parawave/parallel.hpp"
#include "parawave/rng.hpp"

namespace parawave {

namespace {

constexpr double kTwoPi = 6.28318530717958647692528676656;

Complex unit_phase(double turns) { return std::polar(1.0, kTwoPi * turns); }

std::size_t ipow(std::size_t base, int exp) {
  std::size_t out = 1;
  for (int i = 0; i < exp; ++i) out *= base;
  return out;
}

// Per-axis wrapped offset of x from the tube's moving center at time t.
double wrapped_center_distance(const Tube& tube, double t, const Vec& x, double period) {
  double acc = 0.0;
  for (int i = 0; i < tube.n; ++i) {
    double u = x[i] - (tube.x0[i] + t * tube.v[i]);
    u -= period * std::nearbyint(u / period);
    acc += u * u;
  }
  return std::sqrt(acc);
}

}  // namespace

// --------------------------------------------------- sampled initial modulus

SampledField sample_initial_modulus(const CapFunction& f, double R, int min_G) {
  const SurfacePatch& p = f.patch;
  if (p.nodes.empty()) throw InvalidInput("sample_initial_modulus: cap has no nodes");
  if (p.nodes.size() != f.values.size())
    throw InvalidInput("sample_initial_modulus: value count mismatch");
  if (!(R >= 1.0)) throw InvalidConfig("sample_initial_modulus: R must be >= 1");
  if (!(p.h > 0.0)) throw InvalidInput("sample_initial_modulus: lattice spacing must be positive");
  const int n = p.n;
  const double L = 1.0 / p.h;

  std::size_t span = 1;
  for (int i = 0; i < n; ++i) {
    int lo = 0, hi = 0;
    for (const auto& idx : p.index) {
      lo = std::min(lo, idx[i]);
      hi = std::max(hi, idx[i]);
    }
    span = std::max(span, static_cast<std::size_t>(hi - lo + 1));
  }
  const auto target = static_cast<std::size_t>(std::ceil(4.0 * L / std::sqrt(R)));
  const std::size_t G =
      next_pow2(std::max({target, span, static_cast<std::size_t>(std::max(min_G, 8))}));

  std::vector<Complex> buf(ipow(G, n), Complex(0.0, 0.0));
  const auto wrap = [&](int m) {
    long w = static_cast<long>(m) % static_cast<long>(G);
    return static_cast<std::size_t>(w < 0 ? w + static_cast<long>(G) : w);
  };
  for (std::size_t k = 0; k < p.nodes.size(); ++k) {
    std::size_t flat = 0;
    for (int i = 0; i < n; ++i) flat = flat * G + wrap(p.index[k][i]);
    buf[flat] += p.weights[k] * f.values[k];
  }
  fft_nd(buf, std::vector<std::size_t>(static_cast<std::size_t>(n), G), +1);

  SampledField out;
  out.n = n;
  out.L = L;
  out.G = static_cast<int>(G);
  out.values.resize(buf.size());
  for (std::size_t i = 0; i < buf.size(); ++i) out.values[i] = std::abs(buf[i]);
  return out;
}

// ----------------------------------------------------------- maximal function

MaximalFunction::MaximalFunction(SampledField field, double R)
    : field_(std::move(field)), R_(R) {
  if (field_.values.empty() || field_.G <= 0)
    throw InvalidInput("maximal function: empty sample set");
  const int n = field_.n;
  if (n < 1 || n > kMaxDim) throw InvalidInput("maximal function: dimension must be 1..3");
  if (!(R_ >= 1.0)) throw InvalidConfig("maximal function: R must be >= 1");
  if (!(field_.L > 0.0)) throw InvalidInput("maximal function: period must be positive");
  const auto G = static_cast<std::size_t>(field_.G);
  if (field_.values.size() != ipow(G, n))
    throw InvalidInput("maximal function: sample count does not match the grid");
  if (field_.spacing() > 0.25 * std::sqrt(R_) * (1.0 + 1e-9))
    throw InvalidInput("maximal function: grid spacing must be <= sqrt(R)/4");

  const double diameter = field_.L * std::sqrt(static_cast<double>(n));
  radii_.push_back(0.25 * std::sqrt(R_));
  while (radii_.back() < diameter) radii_.push_back(2.0 * radii_.back());

  const std::size_t rows = field_.values.size() / G;
  prefix_.assign(rows * (G + 1), 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    double* pre = prefix_.data() + r * (G + 1);
    const double* val = field_.values.data() + r * G;
    for (std::size_t i = 0; i < G; ++i) pre[i + 1] = pre[i] + val[i];
  }
}

double MaximalFunction::ball_average(const Vec& x, double r) const {
  const int n = field_.n;
  const auto G = static_cast<std::size_t>(field_.G);
  const double L = field_.L;
  const double s = field_.spacing();

  double sum = 0.0;
  double cnt = 0.0;
  const auto row_interval = [&](std::size_t row, double center, double half) {
    const auto a = static_cast<long>(std::ceil((center - half) / s - 1e-12));
    const auto b = static_cast<long>(std::floor((center + half) / s + 1e-12));
    if (b < a) return;
    const long len = b - a + 1;
    const double* pre = prefix_.data() + row * (G + 1);
    if (len >= static_cast<long>(G)) {
      sum += pre[G];
      cnt += static_cast<double>(G);
      return;
    }
    long am = a % static_cast<long>(G);
    if (am < 0) am += static_cast<long>(G);
    if (am + len <= static_cast<long>(G)) {
      sum += pre[am + len] - pre[am];
    } else {
      sum += (pre[G] - pre[am]) + pre[am + len - static_cast<long>(G)];
    }
    cnt += static_cast<double>(len);
  };
  const auto wdist = [&](double u) { return std::abs(u - L * std::nearbyint(u / L)); };

  if (n == 1) {
    row_interval(0, x[0], r);
  } else if (n == 2) {
    for (std::size_t i0 = 0; i0 < G; ++i0) {
      const double d0 = wdist(static_cast<double>(i0) * s - x[0]);
      if (d0 > r) continue;
      row_interval(i0, x[1], std::sqrt(std::max(0.0, r * r - d0 * d0)));
    }
  } else {
    for (std::size_t i0 = 0; i0 < G; ++i0) {
      const double d0 = wdist(static_cast<double>(i0) * s - x[0]);
      if (d0 > r) continue;
      for (std::size_t i1 = 0; i1 < G; ++i1) {
        const double d1 = wdist(static_cast<double>(i1) * s - x[1]);
        const double rem = r * r - d0 * d0 - d1 * d1;
        if (rem < 0.0) continue;
        row_interval(i0 * G + i1, x[2], std::sqrt(rem));
      }
    }
  }
  return cnt > 0.0 ? sum / cnt : 0.0;
}

double MaximalFunction::operator()(const Vec& x) const {
  if (x.n != field_.n) throw InvalidInput("maximal function: dimension mismatch");
  double best = 0.0;
  for (const double r : radii_) best = std::max(best, ball_average(x, r));
  return best;
}

// -------------------------------------------------------------- velocity split

std::vector<CapPiece> cap_split(const CapFunction& f, double R) {
  const SurfacePatch& p = f.patch;
  if (p.nodes.empty()) throw InvalidInput("cap_split: cap has no nodes");
  if (p.nodes.size() != f.values.size()) throw InvalidInput("cap_split: value count mismatch");
  if (!(R >= 1.0)) throw InvalidConfig("cap_split: R must be >= 1");
  const int n = p.n;
  const int side = p.center[0] > 0.0 ? 1 : 2;

  auto offsets = velocity_grid(n, side, R, PatchTier::enlarged);
  std::sort(offsets.begin(), offsets.end());
  std::vector<CapPiece> pieces(offsets.size());
  for (std::size_t v = 0; v < offsets.size(); ++v) {
    pieces[v].v_idx = offsets[v];
    pieces[v].v = velocity_from_index(n, side, R, offsets[v]);
    pieces[v].data.patch = p;
    pieces[v].data.values.assign(p.nodes.size(), Complex(0.0, 0.0));
  }

  const double limit = std::sqrt(static_cast<double>(n)) / std::sqrt(R) + 1e-12;
  for (std::size_t k = 0; k < p.nodes.size(); ++k) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t v = 0; v < pieces.size(); ++v) {
      const double d = dist(p.nodes[k].xi, pieces[v].v);
      if (d < best_d) {
        best_d = d;
        best = v;
      }
    }
    if (best_d > limit)
      throw InvalidInput("cap_split: node farther than sqrt(n) R^{-1/2} from every grid velocity");
    pieces[best].data.values[k] = f.values[k];
  }
  return pieces;
}

// --------------------------------------------------------------- decomposition

WavePacketDecomposition decompose(const CapFunction& f, double R, double delta,
                                  const Bump& bump, int workers) {
  const SurfacePatch& p = f.patch;
  const int n = p.n;
  if (p.nodes.size() != f.values.size()) throw InvalidInput("decompose: value count mismatch");
  if (!(R >= 4.0)) throw InvalidConfig("decompose: R must be >= 4");
  if (!(delta > 0.0 && delta < 0.5)) throw InvalidConfig("decompose: delta must lie in (0, 1/2)");
  const int side = p.center[0] > 0.0 ? 1 : 2;
  if (dist(p.center, side_center(n, side)) > 1e-12)
    throw InvalidInput("decompose: cap must be centered at the side center");
  const double sr = std::sqrt(R);
  const double m_real = 1.0 / (sr * p.h);
  const long m_round = std::lround(m_real);
  if (m_round < 1 || std::abs(m_real - static_cast<double>(m_round)) > 1e-6 * std::max(1.0, m_real))
    throw InvalidConfig(
        "decompose: cap lattice must refine the velocity grid (1/(sqrt(R) h) must be a positive "
        "integer)");
  const int M = static_cast<int>(m_round);

  WavePacketDecomposition d;
  d.n = n;
  d.side = side;
  d.R = R;
  d.delta = delta;
  d.refine = M;
  d.rho = bump.rho();
  d.input_mass = probability(f);

  const auto atoms = window_atoms(bump, n, M);
  std::vector<Complex> residue_phase(static_cast<std::size_t>(M));
  for (int r = 0; r < M; ++r)
    residue_phase[static_cast<std::size_t>(r)] = unit_phase(-static_cast<double>(r) / M);

  const auto pieces = cap_split(f, R);
  std::vector<char> live(pieces.size(), 0);
  for (std::size_t v = 0; v < pieces.size(); ++v)
    for (const Complex& z : pieces[v].data.values)
      if (z != Complex(0.0, 0.0)) {
        live[v] = 1;
        break;
      }

  // Coefficients c_T = R^{n/4} MF_v(x(T)) over the complete residue system.
  struct RawTube {
    std::size_t piece = 0;
    std::array<int, kMaxDim> j{0, 0, 0};
    double c = 0.0;
  };
  std::vector<RawTube> raw;
  const int lo = -(M / 2);
  const std::size_t residues = ipow(static_cast<std::size_t>(M), n);
  const double amp = std::pow(R, 0.25 * n);
  for (std::size_t v = 0; v < pieces.size(); ++v) {
    if (!live[v]) continue;
    const MaximalFunction mf(sample_initial_modulus(pieces[v].data, R), R);
    for (std::size_t u = 0; u < residues; ++u) {
      std::array<int, kMaxDim> j{0, 0, 0};
      std::size_t rem = u;
      for (int i = n - 1; i >= 0; --i) {
        j[i] = lo + static_cast<int>(rem % static_cast<std::size_t>(M));
        rem /= static_cast<std::size_t>(M);
      }
      Vec x0(n);
      for (int i = 0; i < n; ++i) x0[i] = sr * j[i];
      raw.push_back({v, j, amp * mf(x0)});
    }
  }
  if (raw.empty()) return d;

  for (const RawTube& rt : raw) d.max_coefficient = std::max(d.max_coefficient, rt.c);
  d.coefficient_floor = std::pow(R, -100.0 * n) * d.max_coefficient;
  std::vector<std::size_t> keep;
  keep.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i].c > d.coefficient_floor)
      keep.push_back(i);
    else
      ++d.dropped;
  }
  for (const std::size_t i : keep) d.coefficient_l2 += raw[i].c * raw[i].c;

  const double hn = std::pow(p.h, n);
  const double Ln = std::pow(1.0 / p.h, n);
  d.packets.resize(keep.size());
  d.gamma_class.assign(keep.size(), 0);
  parallel_for_blocks(
      keep.size(),
      [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
          const RawTube& rt = raw[keep[i]];
          const CapPiece& pc = pieces[rt.piece];
          Tube tube = make_tube(n, R, side, rt.j, pc.v_idx);

          // Windowed spectrum: data atoms convolved with the window atoms,
          // with the exact rational residue phases e^{-2 pi i (m.j mod M)/M}.
          std::map<std::array<int, kMaxDim>, Complex> acc;
          for (std::size_t k = 0; k < pc.data.values.size(); ++k) {
            const Complex a = p.weights[k] * pc.data.values[k];
            if (a == Complex(0.0, 0.0)) continue;
            const auto& ki = p.index[k];
            for (const auto& at : atoms) {
              std::array<int, kMaxDim> site{0, 0, 0};
              long mj = 0;
              for (int dd = 0; dd < n; ++dd) {
                site[dd] = ki[dd] + at.m[dd];
                mj += static_cast<long>(at.m[dd]) * rt.j[dd];
              }
              long rmod = mj % M;
              if (rmod < 0) rmod += M;
              acc[site] += a * at.b * residue_phase[static_cast<std::size_t>(rmod)];
            }
          }

          SurfacePatch sp;
          sp.n = n;
          sp.center = tube.v;
          sp.h = p.h;
          sp.rule = WeightRule::cell;
          std::vector<Complex> vals;
          sp.nodes.reserve(acc.size());
          sp.index.reserve(acc.size());
          sp.weights.reserve(acc.size());
          vals.reserve(acc.size());
          double rad = 0.0;
          for (const auto& [site, cv] : acc) {
            if (cv == Complex(0.0, 0.0)) continue;
            Vec xi(n);
            std::array<int, kMaxDim> rel{0, 0, 0};
            for (int dd = 0; dd < n; ++dd) {
              xi[dd] = p.center[dd] + p.h * site[dd];
              rel[dd] = site[dd] - M * pc.v_idx[dd];
            }
            sp.nodes.push_back(paraboloid_lift(xi));
            sp.index.push_back(rel);
            sp.weights.push_back(hn);
            vals.push_back(Ln * cv / rt.c);
            rad = std::max(rad, dist(xi, tube.v));
          }
          sp.radius = rad + p.h;

          d.packets[i] =
              WavePacket{tube, Complex(rt.c, 0.0), make_cap_function(std::move(sp), std::move(vals))};
          d.gamma_class[i] = static_cast<int>(
              std::max(0.0, std::floor(std::log2(d.max_coefficient / rt.c))));
        }
      },
      workers);
  return d;
}

WavePacketDecomposition select_gamma_class(const WavePacketDecomposition& d, int level) {
  WavePacketDecomposition out = d;
  out.packets.clear();
  out.gamma_class.clear();
  out.coefficient_l2 = 0.0;
  for (std::size_t i = 0; i < d.packets.size(); ++i) {
    if (d.gamma_class[i] != level) continue;
    out.packets.push_back(d.packets[i]);
    out.gamma_class.push_back(level);
    out.coefficient_l2 += std::norm(d.packets[i].coefficient);
  }
  return out;
}

WavePacket canonical_packet(int n, double R, int refine, int side,
                            const std::array<int, kMaxDim>& v_idx,
                            const std::array<int, kMaxDim>& x_idx, const Bump& bump) {
  if (n < 1 || n > kMaxDim) throw InvalidInput("canonical_packet: dimension must be 1..3");
  if (!(R >= 4.0)) throw InvalidConfig("canonical_packet: R must be >= 4");
  if (refine < 1) throw InvalidConfig("canonical_packet: refine must be >= 1");
  Tube tube = make_tube(n, R, side, x_idx, v_idx);

  const int M = refine;
  const double h = 1.0 / (std::sqrt(R) * M);  // matches make_patch_refined
  const auto atoms = window_atoms(bump, n, M);
  const double e2 = std::pow(static_cast<double>(M), n) * window_atom_l2(bump, n, M);
  const double A = std::pow(R, -0.25 * n) / std::sqrt(e2);
  const double hn = std::pow(h, n);
  const double Ln = std::pow(1.0 / h, n);

  SurfacePatch sp;
  sp.n = n;
  sp.center = tube.v;
  sp.h = h;
  sp.rule = WeightRule::cell;
  std::vector<Complex> vals;
  double rad = 0.0;
  for (const auto& at : atoms) {
    long mj = 0;
    for (int dd = 0; dd < n; ++dd) mj += static_cast<long>(at.m[dd]) * x_idx[dd];
    long rmod = mj % M;
    if (rmod < 0) rmod += M;
    Vec xi = tube.v;
    for (int dd = 0; dd < n; ++dd) xi[dd] += h * at.m[dd];
    sp.nodes.push_back(paraboloid_lift(xi));
    sp.index.push_back(at.m);
    sp.weights.push_back(hn);
    vals.push_back(Ln * A * at.b * unit_phase(-static_cast<double>(rmod) / M));
    rad = std::max(rad, dist(xi, tube.v));
  }
  sp.radius = rad + h;
  return WavePacket{tube, Complex(1.0, 0.0), make_cap_function(std::move(sp), std::move(vals))};
}

// ----------------------------------------------------------------- verifiers

ReconstructionError reconstruct_error(const WavePacketDecomposition& d, const CapFunction& f,
                                      const SamplingGrid& grid, double truncation_radius,
                                      int workers) {
  if (f.patch.n != d.n || grid.n != d.n) throw InvalidInput("reconstruct_error: dimension mismatch");
  for (const SamplePoint& pt : grid.points)
    if (pt.t < d.R / 2.0 || pt.t > d.R)
      throw InvalidInput("reconstruct_error: sample outside the time slab [R/2, R]");

  const Field ref = extend(f, grid, workers);
  const double period = d.refine * std::sqrt(d.R);
  std::vector<Complex> full(grid.size(), Complex(0.0, 0.0));
  std::vector<Complex> trunc(grid.size(), Complex(0.0, 0.0));
  for (const WavePacket& pk : d.packets) {
    const Field pf = extend(pk.spectrum, grid, workers);
    for (std::size_t s = 0; s < grid.size(); ++s) {
      const Complex contrib = pk.coefficient * pf.values[s];
      full[s] += contrib;
      if (wrapped_center_distance(pk.tube, grid.points[s].t, grid.points[s].x, period) <=
          truncation_radius)
        trunc[s] += contrib;
    }
  }

  ReconstructionError out;
  out.input_norm = std::sqrt(d.input_mass);
  for (std::size_t s = 0; s < grid.size(); ++s) {
    out.field_max = std::max(out.field_max, std::abs(ref.values[s]));
    out.full = std::max(out.full, std::abs(full[s] - ref.values[s]));
    out.truncated = std::max(out.truncated, std::abs(trunc[s] - ref.values[s]));
  }
  if (out.input_norm > 0.0) {
    out.full /= out.input_norm;
    out.truncated /= out.input_norm;
  }
  return out;
}

DecayReport verify_packet_bounds(const WavePacketDecomposition& d,
                                 const std::vector<double>& orders,
                                 std::size_t sample_budget, std::uint64_t seed) {
  DecayReport rep;
  rep.orders = orders;
  rep.envelope_constants.assign(orders.size(), 0.0);
  if (d.packets.empty()) return rep;

  const int n = d.n;
  const double R = d.R;
  const double sr = std::sqrt(R);
  const double period = d.refine * sr;
  const double qn = std::pow(R, 0.25 * n);

  for (const WavePacket& pk : d.packets)
    for (const FrequencyPoint& node : pk.spectrum.patch.nodes)
      rep.spectrum_support_constant =
          std::max(rep.spectrum_support_constant, dist(node.xi, pk.tube.v) * sr);

  auto rng = make_rng(seed, 0x9acce7);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto random_dir = [&]() {
    Vec u(n);
    double nrm = 0.0;
    do {
      for (int i = 0; i < n; ++i) u[i] = gauss(rng);
      nrm = norm(u);
    } while (nrm < 1e-12);
    return (1.0 / nrm) * u;
  };

  // Sampled packet subset (~250 pointwise evaluations per packet).
  std::vector<std::size_t> order_idx(d.packets.size());
  std::iota(order_idx.begin(), order_idx.end(), std::size_t{0});
  std::shuffle(order_idx.begin(), order_idx.end(), rng);
  const std::size_t npk =
      std::clamp<std::size_t>(sample_budget / 250, 1, d.packets.size());
  order_idx.resize(npk);
  rep.packets_sampled = npk;

  const double times[3] = {R / 2.0, 0.75 * R, R};
  std::vector<Vec> dirs;
  for (int i = 0; i < n; ++i) {
    Vec e = basis(n, i);
    dirs.push_back(e);
    dirs.push_back(-1.0 * e);
  }
  if (n > 1) {
    dirs.push_back(random_dir());
    dirs.push_back(random_dir());
  }

  const double dmin = sr;
  const double dmax = std::min(16.0 * sr, 0.25 * period);
  std::vector<double> ladder;
  if (dmax > 1.01 * dmin)
    for (int i = 0; i < 9; ++i)
      ladder.push_back(dmin * std::pow(dmax / dmin, i / 8.0));
  std::vector<double> envelope(ladder.size(), 0.0);

  double drop_min = std::numeric_limits<double>::infinity();
  const double off_dist = std::pow(R, 0.5 + d.delta);

  for (const std::size_t pi : order_idx) {
    const WavePacket& pk = d.packets[pi];
    const auto probe = [&](double t, const Vec& x) { return std::abs(extend_at(pk.spectrum, t, x)); };
    const auto record = [&](double distance, double modulus) {
      for (std::size_t oi = 0; oi < orders.size(); ++oi)
        rep.envelope_constants[oi] =
            std::max(rep.envelope_constants[oi],
                     qn * modulus * std::pow(1.0 + distance / sr, orders[oi]));
    };

    double on_axis = 0.0;
    for (const double t : times) {
      Vec ax = pk.tube.x0;
      for (int i = 0; i < pk.tube.n; ++i) ax[i] += t * pk.tube.v[i];
      const double m0 = probe(t, ax);
      on_axis = std::max(on_axis, m0);
      record(0.0, m0);
      for (int jit = 0; jit < 4; ++jit) {
        const Vec off = (unif(rng) * sr / 8.0) * random_dir();
        const double m = probe(t, ax + off);
        record(norm(off), m);
      }
      for (std::size_t li = 0; li < ladder.size(); ++li)
        for (const Vec& u : dirs) {
          const double m = probe(t, ax + ladder[li] * u);
          envelope[li] = std::max(envelope[li], m);
          record(ladder[li], m);
        }
      if (8.0 * sr <= 0.45 * period) {
        double at8 = 0.0;
        for (const Vec& u : dirs) at8 = std::max(at8, probe(t, ax + (8.0 * sr) * u));
        if (at8 > 1e-300) {
          drop_min = std::min(drop_min, on_axis / at8);
          rep.drop_measured = true;
        }
        record(8.0 * sr, at8);
      }
      if (off_dist <= 0.45 * period)
        for (const Vec& u : dirs) {
          const double m = probe(t, ax + off_dist * u);
          rep.off_tube_max = std::max(rep.off_tube_max, qn * m);
          record(off_dist, m);
        }
      for (int rr = 0; rr < 8; ++rr) {
        const double dd = unif(rng) * dmax;
        const double tt = R / 2.0 + unif(rng) * R / 2.0;
        Vec ax2 = pk.tube.x0;
        for (int i = 0; i < pk.tube.n; ++i) ax2[i] += tt * pk.tube.v[i];
        const double m = probe(tt, ax2 + dd * random_dir());
        record(dd, m);
      }
    }
    rep.on_axis_constant = std::max(rep.on_axis_constant, qn * on_axis);
  }
  if (rep.drop_measured) rep.drop_at_8 = drop_min;

  if (ladder.size() >= 3) {
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < ladder.size(); ++i) {
      const double xlog = std::log(1.0 + ladder[i] / sr);
      const double ylog = std::log(std::max(envelope[i], 1e-300));
      sx += xlog;
      sy += ylog;
      sxx += xlog * xlog;
      sxy += xlog * ylog;
    }
    const double m = static_cast<double>(ladder.size());
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    rep.decay_fit_order = -slope;
  }

  // Probability of random sub-families vs family size.
  const double h = d.packets.front().spectrum.patch.h;
  const double hn = std::pow(h, n);
  const int M = d.refine;
  rep.probability_ratio_min = std::numeric_limits<double>::infinity();
  for (int fam = 0; fam < 20; ++fam) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < d.packets.size(); ++i)
      if (unif(rng) < 0.5) members.push_back(i);
    if (members.empty()) members.push_back(fam % d.packets.size());
    std::map<std::array<int, kMaxDim>, Complex> acc;
    for (const std::size_t i : members) {
      const WavePacket& pk = d.packets[i];
      for (std::size_t k = 0; k < pk.spectrum.values.size(); ++k) {
        std::array<int, kMaxDim> site{0, 0, 0};
        for (int dd = 0; dd < n; ++dd)
          site[dd] = pk.spectrum.patch.index[k][dd] + M * pk.tube.v_idx[dd];
        acc[site] += pk.spectrum.values[k];
      }
    }
    double mass = 0.0;
    for (const auto& [site, val] : acc) mass += hn * std::norm(val);
    const double ratio = mass / static_cast<double>(members.size());
    rep.probability_ratio_max = std::max(rep.probability_ratio_max, ratio);
    rep.probability_ratio_min = std::min(rep.probability_ratio_min, ratio);
  }
  return rep;
}

}  // namespace parawave
