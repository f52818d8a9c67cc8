#include "vline/forward.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "parallel.hpp"
#include "vline/error.hpp"
#include "vline/frame_json.hpp"

namespace vline {

namespace {

constexpr double kTinyComponent = 1e-14;

double checked_step(const Grid& grid, double step) {
  if (step <= 0.0) return default_quadrature_step(grid);
  if (!std::isfinite(step) || step > grid.min_spacing() * (1.0 + 1e-12))
    throw Error(ErrorKind::InvalidArgument, "quadrature step must not exceed the grid spacing");
  return step;
}

// Parameter interval of origin + s dir (s >= 0) inside the box.
bool clip_ray(const BoundingBox& box, std::span<const double> o, std::span<const double> dir,
              double& s0, double& s1) {
  s0 = 0.0;
  s1 = std::numeric_limits<double>::infinity();
  for (std::size_t d = 0; d < box.dim(); ++d) {
    const double slack = 1e-12 * std::max(1.0, box.hi[d] - box.lo[d]);
    if (std::abs(dir[d]) < kTinyComponent) {
      if (o[d] < box.lo[d] - slack || o[d] > box.hi[d] + slack) return false;
      continue;
    }
    double a = (box.lo[d] - o[d]) / dir[d];
    double b = (box.hi[d] - o[d]) / dir[d];
    if (a > b) std::swap(a, b);
    s0 = std::max(s0, a);
    s1 = std::min(s1, b);
  }
  return s1 > s0;
}

int panel_count(double length, double step) {
  return std::max(1, static_cast<int>(std::ceil(length / step - 1e-9)));
}

template <class VertexFn>
Sinogram project(const ScalarField& field, const Frame& frame, double step, VertexFn&& fn) {
  const ConeBasis basis(frame);
  const Grid sgrid = sinogram_grid(field.grid(), basis);
  std::vector<double> out(sgrid.size());
  detail::parallel_for(sgrid.size(), [&](std::size_t i) { out[i] = fn(sgrid.point(i)); });
  return Sinogram{ScalarField(sgrid, std::move(out), "sinogram"), frame, step, field.grid()};
}

// Integral of f over { p + s a + t b : s, t >= 0 } clipped to the box, by the
// composite midpoint rule in (s, t) with the Gram area element.
double face_integral(const ScalarField& f, const BoundingBox& box, const Vector& p,
                     const Vector& a, const Vector& b, double step) {
  // Constraints lo - p <= s a + t b <= hi - p, stored as c0 s + c1 t <= r.
  struct HalfPlane {
    double c0, c1, r;
  };
  std::vector<HalfPlane> planes;
  for (std::size_t d = 0; d < 3; ++d) {
    const double ad = std::abs(a[d]) < kTinyComponent ? 0.0 : a[d];
    const double bd = std::abs(b[d]) < kTinyComponent ? 0.0 : b[d];
    const double slack = 1e-12 * std::max(1.0, box.hi[d] - box.lo[d]);
    if (ad == 0.0 && bd == 0.0) {
      if (p[d] < box.lo[d] - slack || p[d] > box.hi[d] + slack) return 0.0;
      continue;
    }
    planes.push_back({ad, bd, box.hi[d] - p[d] + slack});
    planes.push_back({-ad, -bd, p[d] - box.lo[d] + slack});
  }
  planes.push_back({-1.0, 0.0, 0.0});
  planes.push_back({0.0, -1.0, 0.0});

  // Bound the feasible (s, t) by |s a + t b| <= R and the Gram eigenvalue.
  double reach = 0.0;
  for (std::size_t m = 0; m < box.corner_count(); ++m) {
    const Vector c = box.corner(m);
    double r2 = 0.0;
    for (std::size_t d = 0; d < 3; ++d) r2 += (c[d] - p[d]) * (c[d] - p[d]);
    reach = std::max(reach, std::sqrt(r2));
  }
  const double ab = dot(a, b);
  const double limit = reach / std::sqrt(1.0 - std::abs(ab)) + 1.0;

  std::vector<std::array<double, 2>> poly = {{0, 0}, {limit, 0}, {limit, limit}, {0, limit}};
  for (const auto& hp : planes) {
    std::vector<std::array<double, 2>> next;
    for (std::size_t i = 0; i < poly.size(); ++i) {
      const auto& P = poly[i];
      const auto& Q = poly[(i + 1) % poly.size()];
      const double fp = hp.c0 * P[0] + hp.c1 * P[1] - hp.r;
      const double fq = hp.c0 * Q[0] + hp.c1 * Q[1] - hp.r;
      if (fp <= 0.0) next.push_back(P);
      if ((fp < 0.0 && fq > 0.0) || (fp > 0.0 && fq < 0.0)) {
        const double w = fp / (fp - fq);
        next.push_back({P[0] + w * (Q[0] - P[0]), P[1] + w * (Q[1] - P[1])});
      }
    }
    poly = std::move(next);
    if (poly.size() < 3) return 0.0;
  }
  double s_lo = std::numeric_limits<double>::infinity();
  double s_hi = -s_lo;
  for (const auto& v : poly) {
    s_lo = std::min(s_lo, v[0]);
    s_hi = std::max(s_hi, v[0]);
  }
  if (!(s_hi > s_lo)) return 0.0;

  const int ns = panel_count(s_hi - s_lo, step);
  const double hs = (s_hi - s_lo) / ns;
  double total = 0.0;
  for (int i = 0; i < ns; ++i) {
    const double s = s_lo + (i + 0.5) * hs;
    double t_lo = 0.0;
    double t_hi = std::numeric_limits<double>::infinity();
    bool feasible = true;
    for (const auto& hp : planes) {
      const double rest = hp.r - hp.c0 * s;
      if (hp.c1 == 0.0) {
        if (rest < 0.0) feasible = false;
      } else if (hp.c1 > 0.0) {
        t_hi = std::min(t_hi, rest / hp.c1);
      } else {
        t_lo = std::max(t_lo, rest / hp.c1);
      }
    }
    if (!feasible || !(t_hi > t_lo)) continue;
    const int nt = panel_count(t_hi - t_lo, step);
    const double ht = (t_hi - t_lo) / nt;
    const double bx = p[0] + s * a[0], by = p[1] + s * a[1], bz = p[2] + s * a[2];
    double row = 0.0;
    for (int j = 0; j < nt; ++j) {
      const double t = t_lo + (j + 0.5) * ht;
      row += f.sample3(bx + t * b[0], by + t * b[1], bz + t * b[2]);
    }
    total += row * ht;
  }
  return total * hs * std::sqrt(1.0 - ab * ab);
}

}  // namespace

double default_quadrature_step(const Grid& grid) { return 0.5 * grid.min_spacing(); }

double integrate_ray(const ScalarField& field, std::span<const double> origin,
                     std::span<const double> direction, double step) {
  if (!(step > 0.0)) throw Error(ErrorKind::InvalidArgument, "ray step must be positive");
  if (origin.size() != field.dim() || direction.size() != field.dim())
    throw Error(ErrorKind::DimensionMismatch, "ray dimension differs from field");
  double s0, s1;
  if (!clip_ray(field.grid().bbox(), origin, direction, s0, s1)) return 0.0;
  const int n = panel_count(s1 - s0, step);
  const double h = (s1 - s0) / n;
  double sum = 0.0;
  if (field.dim() == 2) {
    for (int k = 0; k < n; ++k) {
      const double s = s0 + (k + 0.5) * h;
      sum += field.sample2(origin[0] + s * direction[0], origin[1] + s * direction[1]);
    }
  } else {
    for (int k = 0; k < n; ++k) {
      const double s = s0 + (k + 0.5) * h;
      sum += field.sample3(origin[0] + s * direction[0], origin[1] + s * direction[1],
                           origin[2] + s * direction[2]);
    }
  }
  return sum * h;
}

Grid sinogram_grid(const Grid& image, const ConeBasis& basis) {
  if (basis.dim() != image.dim())
    throw Error(ErrorKind::DimensionMismatch, "frame dimension differs from image");
  const std::size_t n = image.dim();
  const BoundingBox box = image.bbox();
  Vector lo = box.lo;
  Vector hi = box.hi;
  auto include = [&](const Vector& q) {
    for (std::size_t d = 0; d < n; ++d) {
      lo[d] = std::min(lo[d], q[d]);
      hi[d] = std::max(hi[d], q[d]);
    }
  };
  auto include_path = [&](const Vector& start) {
    const double t = basis.exit_parameter(start, box);
    Vector end = start;
    for (std::size_t d = 0; d < n; ++d) end[d] += t * basis.axis()[d];
    include(start);
    include(end);
  };
  for (std::size_t i = 0; i < image.size(); ++i) include_path(image.point(i));
  include_path(basis.cover_vertex(box));

  Grid out = image;
  for (std::size_t d = 0; d < n; ++d) {
    const double h = image.spacing[d];
    const auto before = static_cast<std::size_t>(std::max(0.0, std::ceil((box.lo[d] - lo[d]) / h - 1e-6)));
    const auto after = static_cast<std::size_t>(std::max(0.0, std::ceil((hi[d] - box.hi[d]) / h - 1e-6)));
    out.origin[d] -= static_cast<double>(before) * h;
    out.counts[d] += before + after;
  }
  return out;
}

Sinogram forward_broken_ray(const ScalarField& field, const ConeFrame2& frame, double step) {
  if (field.dim() != 2) throw Error(ErrorKind::DimensionMismatch, "broken rays need a 2-D field");
  step = checked_step(field.grid(), step);
  return project(field, frame, step, [&](const Vector& p) {
    return integrate_ray(field, p, frame.u, step) + integrate_ray(field, p, frame.v, step);
  });
}

Sinogram forward_perpendicular(const ScalarField& field, double step) {
  return forward_broken_ray(field, perpendicular_frame(), step);
}

Sinogram forward_weighted(const ScalarField& field, const WeightedFrame2& frame, double step) {
  if (field.dim() != 2) throw Error(ErrorKind::DimensionMismatch, "broken rays need a 2-D field");
  if (!(frame.c1 > 0.0) || !(frame.c2 > 0.0))
    throw Error(ErrorKind::InvalidWeight, "weights must be positive");
  step = checked_step(field.grid(), step);
  return project(field, frame, step, [&](const Vector& p) {
    return frame.c1 * integrate_ray(field, p, frame.base.v, step) +
           frame.c2 * integrate_ray(field, p, frame.base.u, step);
  });
}

Sinogram forward_polyhedral(const ScalarField& field, const ConeFrameN& frame, double step) {
  if (field.dim() != 3 || frame.generators.size() != 3)
    throw Error(ErrorKind::DimensionMismatch, "polyhedral transform needs a 3-D field and frame");
  step = checked_step(field.grid(), step);
  const BoundingBox box = field.grid().bbox();
  const auto& u = frame.generators;
  return project(field, frame, step, [&](const Vector& p) {
    return face_integral(field, box, p, u[1], u[2], step) +
           face_integral(field, box, p, u[0], u[2], step) +
           face_integral(field, box, p, u[0], u[1], step);
  });
}

Sinogram forward(const ScalarField& field, const Frame& frame, double step) {
  if (const auto* f = std::get_if<ConeFrame2>(&frame)) return forward_broken_ray(field, *f, step);
  if (const auto* w = std::get_if<WeightedFrame2>(&frame)) return forward_weighted(field, *w, step);
  return forward_polyhedral(field, std::get<ConeFrameN>(frame), step);
}

void store_sinogram(const Sinogram& g, const std::filesystem::path& path) {
  Metadata extra;
  extra["role"] = "sinogram";
  extra["frame"] = frame_to_json(g.frame);
  extra["quadrature_step"] = g.quadrature_step;
  extra["image_grid"] = grid_to_json(g.image_grid);
  store_field(g.field, path, extra);
}

Sinogram load_sinogram(const std::filesystem::path& path) {
  Metadata meta;
  ScalarField field = load_field(path, &meta);
  if (meta.value("role", std::string()) != "sinogram" || !meta.contains("frame"))
    throw Error(ErrorKind::FormatError, "file is not a sinogram");
  Frame frame = frame_from_json(meta.at("frame"));
  const double step = meta.value("quadrature_step", default_quadrature_step(field.grid()));
  Grid image = meta.contains("image_grid") ? grid_from_json(meta.at("image_grid")) : field.grid();
  return Sinogram{std::move(field), std::move(frame), step, std::move(image)};
}

}  // namespace vline
