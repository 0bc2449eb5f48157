#pragma once
// Wave packet decomposition of cap data: split by velocity, window the t = 0
// slice over the position grid X = sqrt(R) Z^n with an exactly periodized
// bump window, and read the packet coefficients off a Hardy-Littlewood
// maximal function of the initial data.
//
// The construction is an identity, not an approximation.  The cap lattice
// refines the velocity grid (spacing h = R^{-1/2}/M with integer M), the
// window is the L-periodization (L = 1/h = M sqrt(R)) of eta(./sqrt(R)), and
// packet positions run over a complete residue system x0 = sqrt(R) j with
// j in [-floor(M/2), M - floor(M/2))^n.  Summing the window phases
// e^{-2 pi i m.j / M} over that system kills every window atom except m = 0,
// whose coefficient is exactly M^{-n}, so sum_T c_T phi_T == extend(f) to
// floating-point accuracy.
//
// Periodization has one visible consequence: a packet's modulus repeats with
// period L in every spatial coordinate.  Position-separation statements
// (pairwise overlap, tube truncation, observable decay range) therefore hold
// in the per-axis wrap metric min(|dx|, L - |dx|); decay can only be watched
// out to L/2 before the next period image rises.

#include <array>
#include <complex>
#include <cstdint>
#include <vector>

#include "parawave/bump.hpp"
#include "parawave/extension.hpp"
#include "parawave/geometry.hpp"

namespace parawave {

// ------------------------------------------------- sampled initial modulus

// |F| on the uniform period grid x_j = (L/G) j, j in [0,G)^n, where
// F(x) = sum_k w_k f_k e^{2 pi i x.xi_k} is the t = 0 slice of extend(f).
// Lattice cap data makes |F| exactly L-periodic, so one cell determines it.
struct SampledField {
  int n = 0;
  double L = 0.0;              // spatial period
  int G = 0;                   // samples per dimension (a power of two)
  std::vector<double> values;  // row-major |F|, first coordinate slowest

  double spacing() const { return G > 0 ? L / G : 0.0; }
  std::size_t size() const { return values.size(); }
};

// Sample |F| by one zero-padded inverse FFT.  G is the smallest power of two
// at or above max(4 L / sqrt(R), node index span, min_G, 8), which keeps the
// grid spacing <= sqrt(R)/4 and the lattice embedding alias-free.
SampledField sample_initial_modulus(const CapFunction& f, double R, int min_G = 0);

// Hardy-Littlewood maximal operator over the dyadic radius ladder
// sqrt(R)/4 * 2^j (extended one step past the period-cell diameter), with
// averages taken as discrete means over the wrapped ball D(x, r).
// Acceleration: per-row prefix sums over the fastest axis, so one average
// costs O(G^{n-1}) row lookups.
class MaximalFunction {
 public:
  // Throws InvalidInput on an empty field or when the grid spacing exceeds
  // sqrt(R)/4 (the operator's sampling precondition).
  MaximalFunction(SampledField field, double R);

  // max over the dyadic radii of ball_average(x, r).
  double operator()(const Vec& x) const;

  // Discrete mean of |F| over the wrapped ball D(x, r).
  double ball_average(const Vec& x, double r) const;

  const std::vector<double>& radii() const { return radii_; }
  const SampledField& field() const { return field_; }

 private:
  SampledField field_;
  double R_ = 0.0;
  std::vector<double> radii_;
  std::vector<double> prefix_;  // (G+1) prefix sums per row, rows over leading dims
};

// ----------------------------------------------------------- velocity split

// One velocity cell of the split: the grid velocity and f restricted to the
// nodes nearest to it (zero elsewhere, same patch geometry).
struct CapPiece {
  std::array<int, kMaxDim> v_idx{0, 0, 0};
  Vec v;
  CapFunction data;
};

// Sharp nearest-velocity assignment over the side's enlarged-tier grid,
// ties broken toward the lexicographically smaller grid index.  The pieces
// sum to f node-for-node and carry disjoint node sets, so their quadrature
// L^2 masses add exactly.  Throws InvalidInput when a node lies farther than
// sqrt(n) R^{-1/2} from every grid velocity (data outside the split's domain).
std::vector<CapPiece> cap_split(const CapFunction& f, double R);

// ------------------------------------------------------------ decomposition

struct WavePacket {
  Tube tube;
  Complex coefficient;   // c_T = R^{n/4} MF_v(x(T)); real and >= 0 by construction
  CapFunction spectrum;  // unit packet phi_T: windowed data / c_T on the cap lattice
};

struct WavePacketDecomposition {
  int n = 0;
  int side = 1;
  double R = 0.0;
  double delta = 0.0;
  int refine = 0;                  // M = 1/(sqrt(R) h): window refinement
  double rho = 0.0;                // bump support radius of the windows
  double input_mass = 0.0;         // P(f) = ||f||^2
  double max_coefficient = 0.0;    // max |c_T| over all candidate tubes
  double coefficient_floor = 0.0;  // R^{-100 n} max |c_T|
  double coefficient_l2 = 0.0;     // sum |c_T|^2 over kept packets
  std::size_t dropped = 0;         // tubes whose coefficient fell at or below the floor
  std::vector<WavePacket> packets;
  // Dyadic level of |c_T|: level k means |c_T| in (2^{-k-1}, 2^{-k}] * max.
  std::vector<int> gamma_class;

  double l2_ratio() const { return input_mass > 0.0 ? coefficient_l2 / input_mass : 0.0; }
};

// Build the decomposition of f at scale R.  Requirements: f centered at the
// side center +-e1, R >= 4, 0 < delta < 1/2, and the cap lattice must refine
// the velocity grid (1/(sqrt(R) h) a positive integer) -- InvalidConfig /
// InvalidInput otherwise.  Work parallelizes over packets.
WavePacketDecomposition decompose(const CapFunction& f, double R, double delta,
                                  const Bump& bump = Bump(), int workers = 1);

// The coefficient-level pigeonholing filter: keep exactly one dyadic class,
// producing the uniform-coefficient family the incidence machinery assumes.
WavePacketDecomposition select_gamma_class(const WavePacketDecomposition& d, int level);

// A single normalized packet: the pure periodized window modulated to the
// tube's velocity and position, with amplitude R^{-n/4}/sqrt(E2(M)) chosen so
// P(spectrum) == 1 exactly (E2 = M^n * sum of squared window atoms).
WavePacket canonical_packet(int n, double R, int refine, int side = 1,
                            const std::array<int, kMaxDim>& v_idx = {0, 0, 0},
                            const std::array<int, kMaxDim>& x_idx = {0, 0, 0},
                            const Bump& bump = Bump());

// ------------------------------------------------------------- verification

struct ReconstructionError {
  double full = 0.0;       // max_j |sum_T c_T phi_T - extend(f)| / ||f||_2
  double truncated = 0.0;  // same, keeping per sample only tubes within the radius
  double field_max = 0.0;  // max_j |extend(f)| (for field-relative readings)
  double input_norm = 0.0; // ||f||_2 = sqrt(P(f))
};

// Compare the packet resummation against extend(f) on the grid.  The
// truncated sum keeps, per sample, only packets whose moving center at the
// sample time is within truncation_radius in the wrap metric of period L
// (the packet's true locus; see the file comment).  Samples must lie in the
// time slab [R/2, R] -- InvalidInput otherwise.
ReconstructionError reconstruct_error(const WavePacketDecomposition& d, const CapFunction& f,
                                      const SamplingGrid& grid, double truncation_radius,
                                      int workers = 1);

struct DecayReport {
  std::vector<double> orders;               // requested envelope orders N
  std::vector<double> envelope_constants;   // C_N = max |phi| R^{n/4} (1 + dist/sqrt(R))^N
  double on_axis_constant = 0.0;            // max R^{n/4} |phi| on the tube axis
  double off_tube_max = 0.0;                // max R^{n/4} |phi| at distance R^{1/2+delta}
  double drop_at_8 = 0.0;                   // min over tubes of on-axis max / |phi|(8 sqrt R)
  bool drop_measured = false;               // false when 8 sqrt(R) exceeds the wrap range
  double decay_fit_order = 0.0;             // -slope of log envelope vs log(1 + d/sqrt(R))
  double spectrum_support_constant = 0.0;   // max sqrt(R) |xi_node - v(T)| over all packets
  double probability_ratio_max = 0.0;       // max over random families of P(sum phi)/#family
  double probability_ratio_min = 0.0;
  std::size_t packets_sampled = 0;
};

// Measure the pointwise envelope, spectrum localization, and family
// probability bounds on a sampled subset of packets.  sample_budget is an
// approximate total of pointwise field evaluations; deterministic per seed.
DecayReport verify_packet_bounds(const WavePacketDecomposition& d,
                                 const std::vector<double>& orders,
                                 std::size_t sample_budget, std::uint64_t seed = 1);

}  // namespace parawave
