#pragma once

#include <array>
#include <cmath>
#include <filesystem>

#include "vline/field.hpp"
#include "vline/forward.hpp"
#include "vline/geometry.hpp"

namespace vline {

enum class ConeIntegralSource { accumulated, oracle };

// F(x) = integral of f over the region attached to x, on the image lattice.
struct ConeIntegralField {
  ScalarField field;
  Frame frame;
  ConeIntegralSource source = ConeIntegralSource::accumulated;
};

enum class DiffMode { shrinking_average, mixed_partial };

struct DiffScheme {
  double t = 0.0;
  bool richardson = false;
  DiffMode mode = DiffMode::mixed_partial;
};

// (-1)^n: each generator difference of F contributes one sign flip.
inline double orientation_sign(std::size_t dim) { return dim % 2 == 0 ? 1.0 : -1.0; }

// Composite midpoint rule for scale * int_0^length fn(origin + s axis) ds.
template <class Fn>
double line_integral(Fn&& fn, const Vector& origin, const Vector& axis, double length,
                     double step, double scale = 1.0) {
  if (!(length > 0.0)) return 0.0;
  const int n = std::max(1, static_cast<int>(std::ceil(length / step - 1e-9)));
  const double h = length / n;
  Vector p(origin.size());
  double sum = 0.0;
  for (int k = 0; k < n; ++k) {
    const double s = (k + 0.5) * h;
    for (std::size_t d = 0; d < p.size(); ++d) p[d] = origin[d] + s * axis[d];
    sum += fn(p);
  }
  return scale * sum * h;
}

// A step <= 0 selects the sinogram's quadrature step.
ConeIntegralField accumulate_cone_integral(const Sinogram& g, const ConeFrame2& frame,
                                           double step = 0.0);
ConeIntegralField accumulate_weighted(const Sinogram& g, const WeightedFrame2& frame,
                                      double step = 0.0);
ConeIntegralField accumulate_nd(const Sinogram& g, const ConeFrameN& frame, double step = 0.0);
// Dispatches on the sinogram's own frame.
ConeIntegralField accumulate(const Sinogram& g, double step = 0.0);

// Midpoint sum of f over the region attached to apex, clipped to the field's
// hull, on cells refined `refine` times per axis.
double cone_integral_oracle(const ScalarField& f, const Frame& frame, const Vector& apex,
                            int refine = 2);

// sigma_n / (prod t_i |det|) * sum over the 2^n stencil corners
// x + sum a_i t_i g_i, a_i = +-1/2, of sgn(prod a_i) F. F is zero outside the
// lattice hull. Corners are read with cubic interpolation.
double alternating_average(const ConeIntegralField& F, const Vector& x, const Vector& t);

// Recovers f on F's lattice. Stencils that would leave the lattice hull are
// moved inward until all corners are inside.
ScalarField invert_shrinking(const ConeIntegralField& F, const DiffScheme& scheme);
ScalarField invert_mixed_partial(const ConeIntegralField& F, const DiffScheme& scheme);
ScalarField invert(const ConeIntegralField& F, const DiffScheme& scheme);

// f = -(cos b / 2) [dg/dy + tan^2 b int_y^ymax d2g/dx2 dt] for the upward
// frame. A non-finite y_max selects the top of the image hull; h is the
// difference step, <= 0 for two spacings.
ScalarField invert_alt_known(const Sinogram& g, double y_max = NAN, double h = 0.0);

// Rows are (d/du, d/dv) in terms of (d/dx, d/dy).
std::array<std::array<double, 2>, 2> directional_stencil(double beta);

// (F(x) - F(x + eps a)) / eps, or the centered variant, an estimate of
// sin(beta) g(x).
double alpha_derivative_check(const ConeIntegralField& F, const Vector& x, double eps,
                              bool central = false);

template <class Fn>
double alpha_derivative(Fn&& F, const ConeFrame2& frame, const Vector& x, double eps,
                        bool central = false) {
  const double lead = central ? -0.5 * eps : 0.0;
  const double trail = central ? 0.5 * eps : eps;
  Vector a = x, b = x;
  for (std::size_t d = 0; d < 2; ++d) {
    a[d] += lead * frame.alpha[d];
    b[d] += trail * frame.alpha[d];
  }
  return (F(a) - F(b)) / eps;
}

void store_cone_integral(const ConeIntegralField& F, const std::filesystem::path& path);
ConeIntegralField load_cone_integral(const std::filesystem::path& path);

}  // namespace vline
