#pragma once

#include <cstdint>
#include <vector>

#include "vline/calculus.hpp"
#include "vline/field_io.hpp"
#include "vline/forward.hpp"

namespace vline {

// P with the generators of the frame.
Parallelogram make_parallelogram(const Frame& frame, Vector center, Vector half_extents);

// sigma_n * sum over corners center + sum a_i c_i g_i, a_i = +-1, of
// sgn(prod a_i) F. Equals the integral of f over P when F is its cone integral.
double premeasure(const ConeIntegralField& F, const Parallelogram& P);

struct MonotonicityResult {
  double min_nu0 = 0.0;
  Parallelogram worst;
  std::size_t tested = 0;
};

// Parallelograms lie inside the lattice hull, with half-extents log-uniform
// in [spacing, min extent / 4] and centers uniform among those that fit.
MonotonicityResult monotonicity_check(const ConeIntegralField& F, std::size_t sample_count,
                                      std::uint64_t seed);

struct AbscontRow {
  double eps = 0.0;
  std::size_t parallelograms = 0;     // per collection
  std::size_t collections = 0;
  double max_sum_abs_nu0 = 0.0;      // over the collections
  double area_at_max = 0.0;
};

struct AbscontResult {
  std::vector<AbscontRow> rows;
  // Least-squares line max_sum_abs_nu0 = intercept + slope * eps.
  double slope = 0.0;
  double intercept = 0.0;
  double scale = 0.0;  // max |F|, the reference for the intercept
  bool passes(double intercept_tolerance) const;
};

// Collections of pairwise disjoint parallelograms of total measure below eps.
AbscontResult abscont_check(const ConeIntegralField& F, const std::vector<double>& epsilons,
                            std::size_t collections_per_eps, std::uint64_t seed);

// scale * int g along the axis line through the vertex whose region is the
// smallest one covering the image box. This is the integral of f.
double total_mass(const Sinogram& g);

struct RangeTolerances {
  double negative_g = 1e-9;          // g >= -negative_g is required
  double nu0 = 2e-4;                 // relative to max |F|
  double abscont_intercept = 0.05;   // relative to max |F|
  double reprojection_l2 = 0.02;
  double t = 0.0;                    // stencil scale, <= 0 selects 4 spacings
  std::size_t monotonicity_samples = 4000;
  std::vector<double> epsilons = {1e-3, 2e-3, 5e-3, 1e-2, 2e-2, 5e-2};
  std::size_t collections_per_eps = 64;
  std::uint64_t seed = 1;
};

struct RangeReport {
  bool is_in_range = false;
  double max_nu0_violation = 0.0;
  double mass = 0.0;
  double reprojection_l2_rel = 0.0;
  std::size_t samples_tested = 0;
  std::uint64_t seed = 0;
  MonotonicityResult monotonicity;
  AbscontResult abscont;
};

RangeReport range_membership(const Sinogram& g, const RangeTolerances& tol = {});

Metadata to_json(const RangeReport& report);

}  // namespace vline
