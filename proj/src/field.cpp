#include "vline/field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "vline/error.hpp"

namespace vline {

namespace {

// Points this far (in cells) beyond the hull still count as inside, so that
// lattice coordinates computed with rounding error are not zeroed.
constexpr double kHullSlack = 1e-9;

struct AxisWeight {
  std::size_t index;
  double frac;
};

// Returns false if the coordinate is outside the hull.
inline bool locate(double x, double origin, double spacing, std::size_t count, AxisWeight& out) {
  double f = (x - origin) / spacing;
  const double last = static_cast<double>(count - 1);
  if (!(f >= -kHullSlack && f <= last + kHullSlack)) return false;
  f = std::clamp(f, 0.0, last);
  std::size_t i = static_cast<std::size_t>(f);
  if (i > count - 2) i = count - 2;
  out.index = i;
  out.frac = f - static_cast<double>(i);
  return true;
}

// Four-point Lagrange weights on the window of nodes nearest to x; the
// window slides inward at the hull edges so every axis keeps cubic order.
inline bool locate_cubic(double x, double origin, double spacing, std::size_t count,
                         std::size_t& first, double w[4]) {
  AxisWeight a;
  if (!locate(x, origin, spacing, count, a)) return false;
  if (count < 4) {
    first = a.index;
    w[0] = 1.0 - a.frac;
    w[1] = a.frac;
    w[2] = w[3] = 0.0;
    return true;
  }
  const std::size_t start = std::min(a.index > 0 ? a.index - 1 : 0, count - 4);
  const double s = static_cast<double>(a.index - start) + a.frac;
  first = start;
  for (int k = 0; k < 4; ++k) {
    double v = 1.0;
    for (int m = 0; m < 4; ++m)
      if (m != k) v *= (s - m) / static_cast<double>(k - m);
    w[k] = v;
  }
  return true;
}

}  // namespace

std::size_t Grid::size() const {
  std::size_t n = 1;
  for (auto c : counts) n *= c;
  return n;
}

double Grid::min_spacing() const { return *std::min_element(spacing.begin(), spacing.end()); }

BoundingBox Grid::bbox() const {
  BoundingBox b;
  b.lo = origin;
  b.hi.resize(dim());
  for (std::size_t d = 0; d < dim(); ++d) b.hi[d] = coordinate(d, counts[d] - 1);
  return b;
}

std::size_t Grid::stride(std::size_t axis) const {
  std::size_t s = 1;
  for (std::size_t d = axis + 1; d < dim(); ++d) s *= counts[d];
  return s;
}

Vector Grid::point(std::size_t linear) const {
  Vector p(dim());
  for (std::size_t d = dim(); d-- > 0;) {
    p[d] = coordinate(d, linear % counts[d]);
    linear /= counts[d];
  }
  return p;
}

Grid make_grid(Vector origin, Vector spacing, std::vector<std::size_t> counts) {
  const std::size_t n = counts.size();
  if (n < 2 || n > 3 || origin.size() != n || spacing.size() != n)
    throw Error(ErrorKind::DimensionMismatch, "grids are 2-D or 3-D with matching vectors");
  for (std::size_t d = 0; d < n; ++d) {
    if (!(spacing[d] > 0.0) || !std::isfinite(spacing[d]) || !std::isfinite(origin[d]))
      throw Error(ErrorKind::InvalidArgument, "grid spacing must be positive and finite");
    if (counts[d] < 2) throw Error(ErrorKind::InvalidArgument, "grid needs >= 2 points per axis");
  }
  return Grid{std::move(origin), std::move(spacing), std::move(counts)};
}

Grid unit_grid(std::vector<std::size_t> counts) {
  const std::size_t n = counts.size();
  Vector spacing(n);
  for (std::size_t d = 0; d < n; ++d)
    spacing[d] = counts[d] > 1 ? 1.0 / static_cast<double>(counts[d] - 1) : 1.0;
  return make_grid(Vector(n, 0.0), std::move(spacing), std::move(counts));
}

bool same_grid(const Grid& a, const Grid& b, double tol) {
  if (a.counts != b.counts) return false;
  for (std::size_t d = 0; d < a.dim(); ++d)
    if (std::abs(a.origin[d] - b.origin[d]) > tol || std::abs(a.spacing[d] - b.spacing[d]) > tol)
      return false;
  return true;
}

ScalarField::ScalarField(Grid grid, std::string name)
    : grid_(std::move(grid)), samples_(grid_.size(), 0.0), name_(std::move(name)) {}

ScalarField::ScalarField(Grid grid, std::vector<double> samples, std::string name)
    : grid_(std::move(grid)), samples_(std::move(samples)), name_(std::move(name)) {
  if (samples_.size() != grid_.size()) {
    std::ostringstream os;
    os << "field has " << samples_.size() << " samples, grid needs " << grid_.size();
    throw Error(ErrorKind::FormatError, os.str());
  }
  for (double v : samples_)
    if (!std::isfinite(v)) throw Error(ErrorKind::InvalidArgument, "field samples must be finite");
}

double ScalarField::sample2(double x, double y) const {
  AxisWeight ax, ay;
  if (!locate(x, grid_.origin[0], grid_.spacing[0], grid_.counts[0], ax)) return 0.0;
  if (!locate(y, grid_.origin[1], grid_.spacing[1], grid_.counts[1], ay)) return 0.0;
  const std::size_t ny = grid_.counts[1];
  const double* p = samples_.data() + ax.index * ny + ay.index;
  const double lo = p[0] + ay.frac * (p[1] - p[0]);
  const double hi = p[ny] + ay.frac * (p[ny + 1] - p[ny]);
  return lo + ax.frac * (hi - lo);
}

double ScalarField::sample3(double x, double y, double z) const {
  AxisWeight ax, ay, az;
  if (!locate(x, grid_.origin[0], grid_.spacing[0], grid_.counts[0], ax)) return 0.0;
  if (!locate(y, grid_.origin[1], grid_.spacing[1], grid_.counts[1], ay)) return 0.0;
  if (!locate(z, grid_.origin[2], grid_.spacing[2], grid_.counts[2], az)) return 0.0;
  const std::size_t nz = grid_.counts[2];
  const std::size_t sx = grid_.counts[1] * nz;
  const double* p = samples_.data() + ax.index * sx + ay.index * nz + az.index;
  auto lerp_z = [&](const double* q) { return q[0] + az.frac * (q[1] - q[0]); };
  const double c00 = lerp_z(p);
  const double c01 = lerp_z(p + nz);
  const double c10 = lerp_z(p + sx);
  const double c11 = lerp_z(p + sx + nz);
  const double c0 = c00 + ay.frac * (c01 - c00);
  const double c1 = c10 + ay.frac * (c11 - c10);
  return c0 + ax.frac * (c1 - c0);
}

double ScalarField::sample_cubic(std::span<const double> p) const {
  const std::size_t n = dim();
  if (p.size() != n) throw Error(ErrorKind::DimensionMismatch, "sample point dimension");
  std::size_t first[3];
  double w[3][4];
  for (std::size_t d = 0; d < n; ++d)
    if (!locate_cubic(p[d], grid_.origin[d], grid_.spacing[d], grid_.counts[d], first[d], w[d]))
      return 0.0;
  const std::size_t taps[3] = {grid_.counts[0] < 4 ? 2u : 4u, grid_.counts[1] < 4 ? 2u : 4u,
                               n == 3 && grid_.counts[2] < 4 ? 2u : 4u};
  double sum = 0.0;
  if (n == 2) {
    const std::size_t ny = grid_.counts[1];
    for (std::size_t i = 0; i < taps[0]; ++i) {
      const double* row = samples_.data() + (first[0] + i) * ny + first[1];
      double acc = 0.0;
      for (std::size_t j = 0; j < taps[1]; ++j) acc += w[1][j] * row[j];
      sum += w[0][i] * acc;
    }
    return sum;
  }
  const std::size_t nz = grid_.counts[2];
  const std::size_t sx = grid_.counts[1] * nz;
  for (std::size_t i = 0; i < taps[0]; ++i) {
    double acc_i = 0.0;
    for (std::size_t j = 0; j < taps[1]; ++j) {
      const double* row = samples_.data() + (first[0] + i) * sx + (first[1] + j) * nz + first[2];
      double acc = 0.0;
      for (std::size_t k = 0; k < taps[2]; ++k) acc += w[2][k] * row[k];
      acc_i += w[1][j] * acc;
    }
    sum += w[0][i] * acc_i;
  }
  return sum;
}

double ScalarField::sample(std::span<const double> p) const {
  if (p.size() != dim()) throw Error(ErrorKind::DimensionMismatch, "sample point dimension");
  return dim() == 2 ? sample2(p[0], p[1]) : sample3(p[0], p[1], p[2]);
}

double ScalarField::min() const { return *std::min_element(samples_.begin(), samples_.end()); }
double ScalarField::max() const { return *std::max_element(samples_.begin(), samples_.end()); }

double field_integral(const ScalarField& field) {
  const Grid& g = field.grid();
  double cell = 1.0;
  for (double h : g.spacing) cell *= h;
  double sum = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    // Trapezoid weight halves once per axis on which the point is extremal.
    double w = 1.0;
    std::size_t rem = i;
    for (std::size_t d = g.dim(); d-- > 0;) {
      const std::size_t idx = rem % g.counts[d];
      rem /= g.counts[d];
      if (idx == 0 || idx == g.counts[d] - 1) w *= 0.5;
    }
    sum += w * field[i];
  }
  return sum * cell;
}

const char* to_string(PhantomKind kind) {
  switch (kind) {
    case PhantomKind::poly_example1: return "poly_example1";
    case PhantomKind::exp_example2: return "exp_example2";
    case PhantomKind::constant: return "constant";
    case PhantomKind::gaussian: return "gaussian";
    case PhantomKind::disk: return "disk";
    case PhantomKind::product: return "product";
    case PhantomKind::bubble: return "bubble";
  }
  return "unknown";
}

PhantomKind parse_phantom_kind(std::string_view name) {
  for (auto k : {PhantomKind::poly_example1, PhantomKind::exp_example2, PhantomKind::constant,
                 PhantomKind::gaussian, PhantomKind::disk, PhantomKind::product,
                 PhantomKind::bubble})
    if (name == to_string(k)) return k;
  throw Error(ErrorKind::InvalidArgument, "unknown phantom kind '" + std::string(name) + "'");
}

double phantom_value(const PhantomSpec& spec, std::span<const double> p) {
  const double a = spec.amplitude;
  switch (spec.kind) {
    case PhantomKind::poly_example1: return a * (3.0 * p[0] * p[0] + 3.0 * p[1] * p[1]);
    case PhantomKind::exp_example2: return a * p[1] * std::exp(p[0]);
    case PhantomKind::constant: return a;
    case PhantomKind::gaussian: {
      double r2 = 0.0;
      for (std::size_t d = 0; d < p.size(); ++d) r2 += (p[d] - spec.center[d]) * (p[d] - spec.center[d]);
      return a * std::exp(-r2 / (2.0 * spec.width * spec.width));
    }
    case PhantomKind::disk: {
      double r2 = 0.0;
      for (std::size_t d = 0; d < p.size(); ++d) r2 += (p[d] - spec.center[d]) * (p[d] - spec.center[d]);
      return r2 <= spec.radius * spec.radius ? a : 0.0;
    }
    case PhantomKind::product: {
      double v = a;
      for (double x : p) v *= x;
      return v;
    }
    case PhantomKind::bubble: {
      double v = a;
      for (double x : p) v *= std::max(0.0, 4.0 * x * (1.0 - x));
      return v;
    }
  }
  return 0.0;
}

ScalarField make_phantom(const PhantomSpec& spec_in, const Grid& grid) {
  PhantomSpec spec = spec_in;
  const std::size_t n = grid.dim();
  if ((spec.kind == PhantomKind::poly_example1 || spec.kind == PhantomKind::exp_example2) && n != 2)
    throw Error(ErrorKind::DimensionMismatch,
                std::string(to_string(spec.kind)) + " is defined on 2-D grids only");
  if (spec.kind == PhantomKind::gaussian && !(spec.width > 0.0))
    throw Error(ErrorKind::InvalidArgument, "gaussian width must be positive");
  if (spec.kind == PhantomKind::disk && !(spec.radius > 0.0))
    throw Error(ErrorKind::InvalidArgument, "disk radius must be positive");
  if (spec.center.empty()) spec.center = grid.bbox().center();
  if (spec.center.size() != n)
    throw Error(ErrorKind::DimensionMismatch, "phantom center dimension differs from grid");
  return ScalarField::from_function(
      grid, [&](const Vector& p) { return phantom_value(spec, p); }, to_string(spec.kind));
}

FieldMetrics compare_fields(const ScalarField& a, const ScalarField& b, const BoundingBox& region) {
  if (!same_grid(a.grid(), b.grid()))
    throw Error(ErrorKind::GridMismatch, "fields are sampled on different lattices");
  if (region.dim() != a.dim())
    throw Error(ErrorKind::DimensionMismatch, "comparison region dimension");
  FieldMetrics m;
  double diff2 = 0.0;
  double ref2 = 0.0;
  double abs_sum = 0.0;
  const double tol = 1e-12;
  for (std::size_t i = 0; i < a.grid().size(); ++i) {
    if (!region.contains(a.grid().point(i), tol)) continue;
    const double d = a[i] - b[i];
    m.linf = std::max(m.linf, std::abs(d));
    diff2 += d * d;
    ref2 += b[i] * b[i];
    abs_sum += std::abs(d);
    ++m.count;
  }
  if (m.count > 0) m.mean_err = abs_sum / static_cast<double>(m.count);
  if (ref2 > 0.0) {
    m.l2_rel = std::sqrt(diff2 / ref2);
  } else {
    m.l2_rel = diff2 > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  }
  return m;
}

FieldMetrics compare_fields(const ScalarField& a, const ScalarField& b) {
  return compare_fields(a, b, a.grid().bbox());
}

BoundingBox interior_region(const Grid& grid, double margin) {
  BoundingBox b = grid.bbox();
  for (std::size_t d = 0; d < b.dim(); ++d) {
    const double e = (b.hi[d] - b.lo[d]) * margin;
    b.lo[d] += e;
    b.hi[d] -= e;
  }
  return b;
}

}  // namespace vline
