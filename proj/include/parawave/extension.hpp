#pragma once
// The extension operator: fields u(t,x) = sum_k w_k f_k e^{2 pi i (x.xi_k + t tau_k)}
// radiated by cap data, their exact frequency-side probability, discrete L^q
// norms over weighted sample sets, and product-spectrum localization.

#include <complex>
#include <string>
#include <vector>

#include "parawave/geometry.hpp"

namespace parawave {

using Complex = std::complex<double>;

// Cap data: one complex amplitude per patch node.
struct CapFunction {
  SurfacePatch patch;
  std::vector<Complex> values;
};

CapFunction make_cap_function(SurfacePatch patch, std::vector<Complex> values);
CapFunction constant_cap_function(SurfacePatch patch, Complex value = {1.0, 0.0});

// Independent complex Gaussian node values (unit variance per node).
CapFunction random_cap_function(SurfacePatch patch, std::uint64_t seed, std::uint64_t stream = 0);

// P(f) = sum_k w_k |f_k|^2: the frequency-side L^2(d sigma) mass, equal to the
// conserved probability of the radiated field.
double probability(const CapFunction& f);

// Time translation: multiplies each node value by e^{2 pi i t tau_k}.
CapFunction propagate(const CapFunction& f, double t);

// Frequency shift by v0 (nodes move, weights keep their constructed values):
// |u| of the shifted data is a Galilean translate of the original |u|.
CapFunction shift_frequencies(const CapFunction& f, const Vec& v0);

// ---------------------------------------------------------------- sampling

struct SamplePoint {
  double t = 0.0;
  Vec x;
  double weight = 0.0;
};

// A weighted spacetime sample set.  Tensor-structured grids remember their
// factorization so evaluation can run separated phase recurrences; scattered
// sets are plain lists.  Points are always materialized in `points`.
struct SamplingGrid {
  int n = 0;
  bool tensor = false;
  std::vector<double> times;              // tensor: the distinct time slices
  Vec origin;                             // tensor: first spatial lattice site
  double spacing = 0.0;                   // tensor: lattice step
  std::array<int, kMaxDim> counts{1, 1, 1};  // tensor: sites per dimension
  std::vector<SamplePoint> points;
  double declared_volume = -1.0;  // target region volume, if known

  std::size_t size() const { return points.size(); }
  double total_weight() const;

  // times x uniform spatial lattice; every sample carries `sample_weight`.
  static SamplingGrid time_slices(int n, std::vector<double> times, const Vec& origin,
                                  double spacing, const std::array<int, kMaxDim>& counts,
                                  double sample_weight);
  static SamplingGrid scattered(int n, std::vector<SamplePoint> points,
                                double declared_volume = -1.0);
};

// Jittered-lattice stratified sample of the cylinder {R/2 <= t <= R, |x| <= R}
// via an exact volume-preserving map from the unit cube; every sample weight
// is volume/count, so weights sum to the region volume exactly.  `count` is
// rounded down to the nearest (n+1)-th power.
SamplingGrid stratified_cylinder(int n, double R, std::size_t count, std::uint64_t seed);

// Concatenation (weights untouched): sample-set refinement for monotonicity
// and convergence tests.
SamplingGrid concat(const SamplingGrid& a, const SamplingGrid& b);

// ------------------------------------------------------------------ fields

struct Field {
  std::vector<SamplePoint> points;
  std::vector<Complex> values;
  std::string provenance;
};

// Fast evaluation: separated quadratic-phase recurrences over the patch
// lattice (scattered points), or tensor factorization over structured grids.
Field extend(const CapFunction& f, const SamplingGrid& grid, int workers = 1);

// Brute-force reference evaluation (one sincos per node per sample).
Field extend_brute(const CapFunction& f, const SamplingGrid& grid);

// Single-point brute evaluation.
Complex extend_at(const CapFunction& f, double t, const Vec& x);

// Pointwise product of two fields over the same sample set.
Field product_field(const Field& a, const Field& b);

// (sum_s w_s |v_s|^q)^{1/q}; q = infinity returns max |v_s|.
// Throws InvalidConfig for q <= 0.
double lq_norm(const Field& field, double q);

// L^n-normalized mean of |u(t, .)|^2 over one spatial period of the patch
// lattice: L = 1/patch.h, sampled at N^n equispaced sites.  Exactly constant
// in t once N exceeds the patch's index span per dimension (the grid then
// resolves every frequency difference); throws InvalidConfig below that.
double slice_mass(const CapFunction& f, double t, int samples_per_dim);

// Fraction of the squared-modulus spectrum of u1*u2 lying within
// radius_factor * R^{-1/2} of the frequency-sum center, computed on a
// periodized box of side box_factor * sqrt(R) (time and space), with
// t_samples x x_samples^n DFT points.  Throws InvalidConfig when the grid
// cannot resolve twice the cap extent (aliasing guard).
double product_spectrum_support(const CapFunction& f1, const CapFunction& f2, double R,
                                double radius_factor, int t_samples = 32, int x_samples = 64,
                                double box_factor = 4.0);

}  // namespace parawave
