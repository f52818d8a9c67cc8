#include "vline/calculus.hpp"

#include <algorithm>
#include <cmath>

#include "parallel.hpp"
#include "vline/error.hpp"
#include "vline/frame_json.hpp"

namespace vline {

namespace {

double eval(const ScalarField& f, const double* p) {
  switch (f.dim()) {
    case 2:
      return f.sample2(p[0], p[1]);
    case 3:
      return f.sample3(p[0], p[1], p[2]);
    default:
      return f.sample(std::span<const double>(p, f.dim()));
  }
}

double accumulation_step(const Sinogram& g, double step) {
  if (step <= 0.0) step = g.quadrature_step > 0.0 ? g.quadrature_step : default_quadrature_step(g.image_grid);
  if (!std::isfinite(step) || step > g.image_grid.min_spacing() * (1.0 + 1e-12))
    throw Error(ErrorKind::InvalidArgument, "accumulation step must not exceed the grid spacing");
  return step;
}

ConeIntegralField accumulate_with(const Sinogram& g, const ConeBasis& basis, double step) {
  if (g.field.dim() != basis.dim() || g.image_grid.dim() != basis.dim())
    throw Error(ErrorKind::DimensionMismatch, "sinogram dimension differs from frame");
  step = accumulation_step(g, step);
  const Grid& grid = g.image_grid;
  const BoundingBox box = grid.bbox();
  std::vector<double> out(grid.size());
  detail::parallel_for(grid.size(), [&](std::size_t i) {
    const Vector x = grid.point(i);
    const double T = basis.exit_parameter(x, box);
    out[i] = line_integral([&](const Vector& p) { return eval(g.field, p.data()); }, x,
                           basis.axis(), T, step, basis.axis_scale());
  });
  return {ScalarField(grid, std::move(out), "cone-integral"), g.frame,
          ConeIntegralSource::accumulated};
}

void require_frame(const Sinogram& g, const Frame& frame) {
  if (!same_frame(g.frame, frame, 1e-9))
    throw Error(ErrorKind::FrameMismatch, "sinogram was produced with a different frame");
}

// Corner offsets sum a_i t_i g_i and their signs sgn(prod a_i).
struct Stencil {
  std::vector<Vector> offsets;
  std::vector<double> signs;
  Vector reach;  // per-axis max |offset|
  double norm = 0.0;
};

Stencil make_stencil(const ConeBasis& basis, const Vector& t) {
  const std::size_t n = basis.dim();
  if (t.size() != n) throw Error(ErrorKind::DimensionMismatch, "one stencil step per generator");
  Stencil s;
  s.reach.assign(n, 0.0);
  double prod = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(t[i] > 0.0)) throw Error(ErrorKind::InvalidArgument, "stencil steps must be positive");
    prod *= t[i];
    for (std::size_t d = 0; d < n; ++d) s.reach[d] += 0.5 * t[i] * std::abs(basis.generators()[i][d]);
  }
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    Vector off(n, 0.0);
    double sign = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double a = (mask >> i) & 1U ? 0.5 : -0.5;
      if (a < 0.0) sign = -sign;
      for (std::size_t d = 0; d < n; ++d) off[d] += a * t[i] * basis.generators()[i][d];
    }
    s.offsets.push_back(std::move(off));
    s.signs.push_back(sign);
  }
  s.norm = orientation_sign(n) / (prod * basis.det_abs());
  return s;
}

double apply(const Stencil& s, const ScalarField& F, const double* center) {
  const std::size_t n = F.dim();
  double p[8];
  double sum = 0.0;
  for (std::size_t c = 0; c < s.offsets.size(); ++c) {
    for (std::size_t d = 0; d < n; ++d) p[d] = center[d] + s.offsets[c][d];
    sum += s.signs[c] * F.sample_cubic(std::span<const double>(p, n));
  }
  return s.norm * sum;
}

// Moves x inward so that the box x +- reach lies inside the hull.
void clamp_center(const BoundingBox& box, const Vector& reach, double* x) {
  for (std::size_t d = 0; d < box.dim(); ++d) {
    const double lo = box.lo[d] + reach[d];
    const double hi = box.hi[d] - reach[d];
    if (lo > hi + 1e-12 * (box.hi[d] - box.lo[d]))
      throw Error(ErrorKind::InvalidArgument, "stencil is wider than the lattice");
    x[d] = std::clamp(x[d], lo, std::max(lo, hi));
  }
}

}  // namespace

ConeIntegralField accumulate_cone_integral(const Sinogram& g, const ConeFrame2& frame,
                                           double step) {
  require_frame(g, frame);
  return accumulate_with(g, ConeBasis(frame), step);
}

ConeIntegralField accumulate_weighted(const Sinogram& g, const WeightedFrame2& frame,
                                      double step) {
  require_frame(g, frame);
  return accumulate_with(g, ConeBasis(frame), step);
}

ConeIntegralField accumulate_nd(const Sinogram& g, const ConeFrameN& frame, double step) {
  if (g.field.dim() != frame.generators.size())
    throw Error(ErrorKind::DimensionMismatch, "sinogram dimension differs from frame");
  require_frame(g, frame);
  return accumulate_with(g, ConeBasis(frame), step);
}

ConeIntegralField accumulate(const Sinogram& g, double step) {
  return accumulate_with(g, ConeBasis(g.frame), step);
}

double cone_integral_oracle(const ScalarField& f, const Frame& frame, const Vector& apex,
                            int refine) {
  if (refine < 1) throw Error(ErrorKind::InvalidArgument, "refine must be at least 1");
  const ConeBasis basis(frame);
  const std::size_t n = f.dim();
  if (basis.dim() != n || apex.size() != n)
    throw Error(ErrorKind::DimensionMismatch, "oracle dimensions disagree");
  const Grid& grid = f.grid();
  std::vector<std::size_t> cells(n);
  Vector h(n);
  std::size_t total = 1;
  double volume = 1.0;
  for (std::size_t d = 0; d < n; ++d) {
    cells[d] = (grid.counts[d] - 1) * static_cast<std::size_t>(refine);
    h[d] = grid.spacing[d] / refine;
    total *= cells[d];
    volume *= h[d];
  }
  double sum = 0.0;
  Vector p(n), rel(n);
  for (std::size_t lin = 0; lin < total; ++lin) {
    std::size_t rest = lin;
    for (std::size_t d = n; d-- > 0;) {
      const std::size_t idx = rest % cells[d];
      rest /= cells[d];
      p[d] = grid.origin[d] + (static_cast<double>(idx) + 0.5) * h[d];
      rel[d] = p[d] - apex[d];
    }
    bool inside = true;
    for (std::size_t i = 0; i < n && inside; ++i) inside = basis.coordinate(i, rel) >= 0.0;
    if (inside) sum += eval(f, p.data());
  }
  return sum * volume;
}

double alternating_average(const ConeIntegralField& F, const Vector& x, const Vector& t) {
  const ConeBasis basis(F.frame);
  if (x.size() != F.field.dim()) throw Error(ErrorKind::DimensionMismatch, "point dimension");
  return apply(make_stencil(basis, t), F.field, x.data());
}

ScalarField invert(const ConeIntegralField& F, const DiffScheme& scheme) {
  const Grid& grid = F.field.grid();
  const ConeBasis basis(F.frame);
  if (basis.dim() != grid.dim()) throw Error(ErrorKind::DimensionMismatch, "frame dimension");
  if (!(scheme.t >= grid.min_spacing() * (1.0 - 1e-9)) || !std::isfinite(scheme.t))
    throw Error(ErrorKind::StencilTooSmall, "stencil scale t must be at least the grid spacing");
  const std::size_t n = grid.dim();
  const Stencil coarse = make_stencil(basis, Vector(n, scheme.t));
  const Stencil fine = make_stencil(basis, Vector(n, 0.5 * scheme.t));
  const BoundingBox box = grid.bbox();
  std::vector<double> out(grid.size());
  detail::parallel_for(grid.size(), [&](std::size_t i) {
    Vector x = grid.point(i);
    clamp_center(box, coarse.reach, x.data());
    const double v = apply(coarse, F.field, x.data());
    out[i] = scheme.richardson ? (4.0 * apply(fine, F.field, x.data()) - v) / 3.0 : v;
  });
  return ScalarField(grid, std::move(out), "reconstruction");
}

ScalarField invert_shrinking(const ConeIntegralField& F, const DiffScheme& scheme) {
  return invert(F, scheme);
}

ScalarField invert_mixed_partial(const ConeIntegralField& F, const DiffScheme& scheme) {
  return invert(F, scheme);
}

ScalarField invert_alt_known(const Sinogram& g, double y_max, double h) {
  const auto* frame = std::get_if<ConeFrame2>(&g.frame);
  if (!frame || std::abs(frame->alpha[0]) > 1e-10 || std::abs(frame->alpha[1] - 1.0) > 1e-10)
    throw Error(ErrorKind::NotUpwardFrame, "this inversion needs the frame symmetric about +y");
  const Grid& sg = g.field.grid();
  const Grid& image = g.image_grid;
  if (!std::isfinite(y_max)) y_max = image.bbox().hi[1];
  if (h <= 0.0) h = 2.0 * image.min_spacing();
  const BoundingBox hull = sg.bbox();
  if (!std::isfinite(h) || 2.0 * h > hull.hi[0] - hull.lo[0] || 2.0 * h > hull.hi[1] - hull.lo[1])
    throw Error(ErrorKind::InvalidArgument, "difference step does not fit the lattice");
  const double beta = frame->beta;
  const double x_lo = hull.lo[0] + h, x_hi = hull.hi[0] - h;
  const double y_lo = hull.lo[1] + h;

  // d2g/dx2 on the sinogram lattice, edge columns moved inward.
  std::vector<double> gxx(sg.size());
  detail::parallel_for(sg.size(), [&](std::size_t i) {
    const Vector p = sg.point(i);
    const double x = std::clamp(p[0], x_lo, x_hi);
    gxx[i] = (g.field.sample2(x + h, p[1]) - 2.0 * g.field.sample2(x, p[1]) +
              g.field.sample2(x - h, p[1])) / (h * h);
  });
  const ScalarField gxx_field(sg, std::move(gxx));
  const double step = g.quadrature_step > 0.0 ? g.quadrature_step : default_quadrature_step(image);
  const double tan2 = std::tan(beta) * std::tan(beta);
  const double lead = -0.5 * std::cos(beta);
  const Vector up{0.0, 1.0};

  std::vector<double> out(image.size());
  detail::parallel_for(image.size(), [&](std::size_t i) {
    const Vector p = image.point(i);
    const double yc = std::max(p[1], y_lo);
    const double gy = (g.field.sample2(p[0], yc + h) - g.field.sample2(p[0], yc - h)) / (2.0 * h);
    const double tail = line_integral([&](const Vector& q) { return gxx_field.sample2(q[0], q[1]); },
                                      p, up, y_max - p[1], step);
    out[i] = lead * (gy + tan2 * tail);
  });
  return ScalarField(image, std::move(out), "reconstruction");
}

std::array<std::array<double, 2>, 2> directional_stencil(double beta) {
  if (!(beta > 0.0 && beta < M_PI / 2))
    throw Error(ErrorKind::InvalidArgument, "beta must lie strictly between 0 and pi/2");
  const double s = std::sin(beta);
  const double c = std::cos(beta);
  return {{{s, c}, {-s, c}}};
}

double alpha_derivative_check(const ConeIntegralField& F, const Vector& x, double eps, bool central) {
  if (!(eps > 0.0)) throw Error(ErrorKind::InvalidArgument, "eps must be positive");
  if (x.size() != F.field.dim()) throw Error(ErrorKind::DimensionMismatch, "point dimension");
  const ConeBasis basis(F.frame);
  const double lead = central ? -0.5 * eps : 0.0;
  const double trail = central ? 0.5 * eps : eps;
  Vector a = x, b = x;
  for (std::size_t d = 0; d < x.size(); ++d) {
    a[d] += lead * basis.axis()[d];
    b[d] += trail * basis.axis()[d];
  }
  return (eval(F.field, a.data()) - eval(F.field, b.data())) / eps;
}

void store_cone_integral(const ConeIntegralField& F, const std::filesystem::path& path) {
  Metadata extra;
  extra["role"] = "cone-integral";
  extra["frame"] = frame_to_json(F.frame);
  extra["source"] = F.source == ConeIntegralSource::oracle ? "oracle" : "accumulated";
  store_field(F.field, path, extra);
}

ConeIntegralField load_cone_integral(const std::filesystem::path& path) {
  Metadata meta;
  ScalarField field = load_field(path, &meta);
  if (meta.value("role", std::string()) != "cone-integral" || !meta.contains("frame"))
    throw Error(ErrorKind::FormatError, "file is not a cone integral");
  Frame frame = frame_from_json(meta.at("frame"));
  const auto source = meta.value("source", std::string("accumulated")) == "oracle"
                          ? ConeIntegralSource::oracle
                          : ConeIntegralSource::accumulated;
  return {std::move(field), std::move(frame), source};
}

}  // namespace vline
