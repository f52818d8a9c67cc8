#include "vline/geometry.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "vline/error.hpp"

namespace vline {

namespace {

// Kernels below work on at most this many axes without heap allocation.
constexpr int kMaxSmallDim = 8;
using SmallMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxSmallDim,
                                  kMaxSmallDim>;
using SmallVector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxSmallDim, 1>;

Vector unit_or_throw(const Vector& a, const char* name) {
  const double n = norm(a);
  if (!std::isfinite(n) || std::abs(n - 1.0) > 1e-6) {
    std::ostringstream os;
    os << name << " must be a unit vector (norm " << n << ")";
    throw Error(ErrorKind::InvalidArgument, os.str());
  }
  Vector out = a;
  for (double& x : out) x /= n;
  return out;
}

Eigen::MatrixXd column_matrix(const std::vector<Vector>& columns) {
  const auto n = static_cast<Eigen::Index>(columns.size());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) m(i, j) = columns[j][i];
  return m;
}

}  // namespace

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double angle_between(std::span<const double> a, std::span<const double> b) {
  const double c = dot(a, b) / (norm(a) * norm(b));
  return std::acos(std::clamp(c, -1.0, 1.0));
}

Vector BoundingBox::corner(std::size_t mask) const {
  Vector c(dim());
  for (std::size_t d = 0; d < dim(); ++d) c[d] = (mask >> d) & 1U ? hi[d] : lo[d];
  return c;
}

Vector BoundingBox::center() const {
  Vector c(dim());
  for (std::size_t d = 0; d < dim(); ++d) c[d] = 0.5 * (lo[d] + hi[d]);
  return c;
}

bool BoundingBox::contains(std::span<const double> p, double tol) const {
  for (std::size_t d = 0; d < dim(); ++d)
    if (p[d] < lo[d] - tol || p[d] > hi[d] + tol) return false;
  return true;
}

BoundingBox make_bounding_box(Vector lo, Vector hi) {
  if (lo.size() != hi.size() || lo.empty())
    throw Error(ErrorKind::DimensionMismatch, "bounding box corners differ in dimension");
  for (std::size_t d = 0; d < lo.size(); ++d)
    if (!(lo[d] < hi[d]))
      throw Error(ErrorKind::InvalidArgument, "bounding box needs min < max on every axis");
  return BoundingBox{std::move(lo), std::move(hi)};
}

double Parallelogram::measure() const {
  double m = std::abs(column_matrix(generators).determinant());
  for (double c : half_extents) m *= 2.0 * c;
  return m;
}

ConeFrame2 make_cone_frame(const Vector& u_in, const Vector& v_in) {
  if (u_in.size() != 2 || v_in.size() != 2)
    throw Error(ErrorKind::DimensionMismatch, "a two-ray frame needs 2-D generators");
  ConeFrame2 f;
  f.u = unit_or_throw(u_in, "u");
  f.v = unit_or_throw(v_in, "v");
  const double det = f.u[0] * f.v[1] - f.u[1] * f.v[0];
  f.det_abs = std::abs(det);
  if (f.det_abs < kMinDeterminant) {
    std::ostringstream os;
    os << "|det(u,v)| = " << f.det_abs << " below " << kMinDeterminant;
    throw Error(ErrorKind::DegenerateFrame, os.str());
  }
  f.alpha = {f.u[0] + f.v[0], f.u[1] + f.v[1]};
  const double n = norm(f.alpha);
  f.alpha[0] /= n;
  f.alpha[1] /= n;
  f.beta = angle_between(f.alpha, f.u);
  return f;
}

ConeFrame2 make_symmetric_frame(double beta, Orientation orientation) {
  if (!(beta > 0.0 && beta < std::numbers::pi / 2))
    throw Error(ErrorKind::InvalidArgument, "half opening angle must lie in (0, pi/2)");
  const double s = std::sin(beta);
  const double c = std::cos(beta);
  switch (orientation) {
    case Orientation::up: return make_cone_frame({s, c}, {-s, c});
    case Orientation::down: return make_cone_frame({-s, -c}, {s, -c});
    case Orientation::left: return make_cone_frame({-c, s}, {-c, -s});
    case Orientation::right: return make_cone_frame({c, -s}, {c, s});
  }
  throw Error(ErrorKind::InvalidArgument, "unknown orientation");
}

ConeFrame2 perpendicular_frame() { return make_cone_frame({-1.0, 0.0}, {0.0, -1.0}); }

std::array<double, 2> cone_coordinates(const ConeFrame2& frame, const Vector& apex,
                                       const Vector& p) {
  const double det = frame.u[0] * frame.v[1] - frame.u[1] * frame.v[0];
  const double dx = p[0] - apex[0];
  const double dy = p[1] - apex[1];
  return {(dx * frame.v[1] - dy * frame.v[0]) / det, (frame.u[0] * dy - frame.u[1] * dx) / det};
}

bool cone_contains(const ConeFrame2& frame, const Vector& apex, const Vector& p, double tol) {
  const auto c = cone_coordinates(frame, apex, p);
  return c[0] >= -tol && c[1] >= -tol;
}

WeightedFrame2 solve_weighted_direction(const Vector& u, const Vector& v, double c1,
                                        double c2) {
  if (!(c1 > 0.0) || !(c2 > 0.0) || !std::isfinite(c1) || !std::isfinite(c2)) {
    std::ostringstream os;
    os << "weights must be positive (c1 = " << c1 << ", c2 = " << c2 << ")";
    throw Error(ErrorKind::InvalidWeight, os.str());
  }
  WeightedFrame2 w;
  w.base = make_cone_frame(u, v);
  w.c1 = c1;
  w.c2 = c2;
  const Vector& uu = w.base.u;
  const Vector& vv = w.base.v;
  const double theta = angle_between(uu, vv);
  // sin(b1) / sin(theta - b1) = c1 / c2  <=>  tan(b1) = c1 sin(theta) / (c2 + c1 cos(theta))
  const double b1 = std::atan2(c1 * std::sin(theta), c2 + c1 * std::cos(theta));
  const double uv = dot(uu, vv);
  Vector toward_u = {uu[0] - uv * vv[0], uu[1] - uv * vv[1]};
  const double n = norm(toward_u);
  toward_u[0] /= n;
  toward_u[1] /= n;
  w.alpha_w = {std::cos(b1) * vv[0] + std::sin(b1) * toward_u[0],
               std::cos(b1) * vv[1] + std::sin(b1) * toward_u[1]};
  w.beta1 = b1;
  w.beta2 = angle_between(w.alpha_w, uu);
  return w;
}

ConeFrameN make_cone_frame_nd(const std::vector<Vector>& generators) {
  const std::size_t n = generators.size();
  if (n < 2) throw Error(ErrorKind::InvalidArgument, "a polyhedral cone needs n >= 2 generators");
  if (n > static_cast<std::size_t>(kMaxSmallDim))
    throw Error(ErrorKind::InvalidArgument, "too many generators");
  ConeFrameN f;
  for (std::size_t i = 0; i < n; ++i) {
    if (generators[i].size() != n)
      throw Error(ErrorKind::DimensionMismatch, "need n generators in n dimensions");
    f.generators.push_back(unit_or_throw(generators[i], "generator"));
  }

  double ref = -1.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double d2 = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        const double d = f.generators[i][k] - f.generators[j][k];
        d2 += d * d;
      }
      const double d = std::sqrt(d2);
      if (ref < 0.0) {
        ref = d;
      } else if (std::abs(d - ref) > kSymmetryTolerance) {
        std::ostringstream os;
        os << "pairwise generator distances differ (" << ref << " vs " << d << ")";
        throw Error(ErrorKind::AsymmetricCone, os.str());
      }
    }

  const Eigen::MatrixXd g = column_matrix(f.generators);
  const double det = g.determinant();
  if (!(std::abs(det) >= kMinDeterminant)) {
    std::ostringstream os;
    os << "|det(generators)| = " << std::abs(det) << " below " << kMinDeterminant;
    throw Error(ErrorKind::DegenerateFrame, os.str());
  }
  const Eigen::MatrixXd dual = g.inverse();

  f.w.assign(n, 0.0);
  for (const auto& u : f.generators)
    for (std::size_t k = 0; k < n; ++k) f.w[k] += u[k];
  const double wn = norm(f.w);
  for (double& x : f.w) x /= wn;

  for (std::size_t i = 0; i < n; ++i) {
    Vector y(n);
    for (std::size_t k = 0; k < n; ++k) y[k] = dual(static_cast<Eigen::Index>(i), k);
    const double yn = norm(y);
    for (double& x : y) x /= yn;
    if (dot(f.w, y) < 0.0)
      for (double& x : y) x = -x;
    f.face_normals.push_back(std::move(y));
  }
  f.axis_cos = dot(f.w, f.face_normals[0]);
  for (std::size_t i = 1; i < n; ++i)
    if (std::abs(dot(f.w, f.face_normals[i]) - f.axis_cos) > kSymmetryTolerance)
      throw Error(ErrorKind::AsymmetricCone, "axis makes unequal angles with the faces");
  return f;
}

std::size_t frame_dimension(const Frame& frame) {
  return std::visit(
      [](const auto& f) -> std::size_t {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, ConeFrameN>) {
          return f.generators.size();
        } else {
          return 2;
        }
      },
      frame);
}

const char* frame_kind(const Frame& frame) {
  switch (frame.index()) {
    case 0: return "broken-ray";
    case 1: return "weighted";
    default: return "polyhedral";
  }
}

namespace {

bool close(const Vector& a, const Vector& b, double tol) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::abs(a[i] - b[i]) > tol) return false;
  return true;
}

}  // namespace

bool same_frame(const Frame& a, const Frame& b, double tol) {
  if (a.index() != b.index()) return false;
  if (const auto* fa = std::get_if<ConeFrame2>(&a)) {
    const auto& fb = std::get<ConeFrame2>(b);
    return close(fa->u, fb.u, tol) && close(fa->v, fb.v, tol);
  }
  if (const auto* fa = std::get_if<WeightedFrame2>(&a)) {
    const auto& fb = std::get<WeightedFrame2>(b);
    return close(fa->base.u, fb.base.u, tol) && close(fa->base.v, fb.base.v, tol) &&
           std::abs(fa->c1 - fb.c1) <= tol && std::abs(fa->c2 - fb.c2) <= tol;
  }
  const auto& fa = std::get<ConeFrameN>(a);
  const auto& fb = std::get<ConeFrameN>(b);
  if (fa.generators.size() != fb.generators.size()) return false;
  for (std::size_t i = 0; i < fa.generators.size(); ++i)
    if (!close(fa.generators[i], fb.generators[i], tol)) return false;
  return true;
}

ConeBasis::ConeBasis(const Frame& frame) {
  std::visit(
      [this](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, ConeFrame2>) {
          generators_ = {f.u, f.v};
          axis_ = f.alpha;
          axis_scale_ = std::sin(f.beta);
        } else if constexpr (std::is_same_v<T, WeightedFrame2>) {
          generators_ = {f.base.u, f.base.v};
          axis_ = f.alpha_w;
          axis_scale_ = std::sin(f.beta1) / f.c1;
        } else {
          generators_ = f.generators;
          axis_ = f.w;
          axis_scale_ = f.axis_cos;
        }
      },
      frame);
  build_dual();
}

ConeBasis::ConeBasis(std::vector<Vector> generators, Vector axis, double axis_scale)
    : generators_(std::move(generators)), axis_(std::move(axis)), axis_scale_(axis_scale) {
  build_dual();
}

void ConeBasis::build_dual() {
  const std::size_t n = generators_.size();
  if (n == 0 || n > static_cast<std::size_t>(kMaxSmallDim) || axis_.size() != n)
    throw Error(ErrorKind::DimensionMismatch, "cone basis needs n generators and an n-D axis");
  for (const auto& g : generators_)
    if (g.size() != n) throw Error(ErrorKind::DimensionMismatch, "generator dimension mismatch");
  const Eigen::MatrixXd g = column_matrix(generators_);
  det_abs_ = std::abs(g.determinant());
  if (!(det_abs_ >= kMinDeterminant))
    throw Error(ErrorKind::DegenerateFrame, "generators are linearly dependent");
  const Eigen::MatrixXd inv = g.inverse();
  dual_.resize(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k)
      dual_[i * n + k] = inv(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
  axis_coord_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    axis_coord_[i] = coordinate(i, axis_);
    if (!(axis_coord_[i] > 1e-12))
      throw Error(ErrorKind::InvalidArgument, "axis must point strictly inside the cone");
  }
}

double ConeBasis::coordinate(std::size_t i, std::span<const double> d) const {
  const std::size_t n = dim();
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) s += dual_[i * n + k] * d[k];
  return s;
}

Vector ConeBasis::coordinates(std::span<const double> d) const {
  Vector c(dim());
  for (std::size_t i = 0; i < dim(); ++i) c[i] = coordinate(i, d);
  return c;
}

bool ConeBasis::contains(std::span<const double> apex, std::span<const double> p,
                         double tol) const {
  const std::size_t n = dim();
  double d[kMaxSmallDim];
  for (std::size_t k = 0; k < n; ++k) d[k] = p[k] - apex[k];
  for (std::size_t i = 0; i < n; ++i)
    if (coordinate(i, std::span<const double>(d, n)) < -tol) return false;
  return true;
}

// The region at apex + t axis contains b iff t <= r_i(b) for all i, where
// r_i(b) = k_i(b - apex) / k_i(axis). The exit parameter is therefore the
// maximum over the box of the concave function min_i r_i. That maximum sits at
// a vertex of the arrangement formed by the box faces and the tie sets
// {r_i = r_j}, so it is found by enumerating those vertices. Box corners alone
// do not suffice: a narrow cone can still touch the middle of a face.
double ConeBasis::exit_parameter(std::span<const double> apex, const BoundingBox& box) const {
  const int n = static_cast<int>(dim());
  if (box.dim() != dim()) throw Error(ErrorKind::DimensionMismatch, "box dimension");

  double offset[kMaxSmallDim];  // k_i(apex) / k_i(axis)
  for (int i = 0; i < n; ++i) offset[i] = coordinate(i, apex) / axis_coord_[i];

  auto h = [&](const double* b) {
    double m = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += dual_[i * n + k] * b[k];
      m = std::min(m, s / axis_coord_[i] - offset[i]);
    }
    return m;
  };

  double best = 0.0;
  double b[kMaxSmallDim];
  for (std::size_t mask = 0; mask < box.corner_count(); ++mask) {
    for (int k = 0; k < n; ++k) b[k] = (mask >> k) & 1U ? box.hi[k] : box.lo[k];
    best = std::max(best, h(b));
  }

  const double scale = std::max(1.0, std::abs(box.hi[0] - box.lo[0]));
  SmallMatrix a(n, n);
  SmallVector rhs(n);
  for (unsigned tie = 1; tie < (1U << n); ++tie) {
    const int tie_count = std::popcount(tie);
    if (tie_count < 2) continue;
    const int pin_count = n + 1 - tie_count;
    int first = std::countr_zero(tie);
    for (unsigned pins = 0; pins < (1U << n); ++pins) {
      if (std::popcount(pins) != pin_count) continue;
      for (unsigned side = 0; side < (1U << pin_count); ++side) {
        int row = 0;
        for (int i = first + 1; i < n; ++i) {
          if (!((tie >> i) & 1U)) continue;
          for (int k = 0; k < n; ++k)
            a(row, k) = dual_[first * n + k] / axis_coord_[first] - dual_[i * n + k] / axis_coord_[i];
          rhs(row) = offset[first] - offset[i];
          ++row;
        }
        int pin_index = 0;
        for (int k = 0; k < n; ++k) {
          if (!((pins >> k) & 1U)) continue;
          a.row(row).setZero();
          a(row, k) = 1.0;
          rhs(row) = (side >> pin_index) & 1U ? box.hi[k] : box.lo[k];
          ++pin_index;
          ++row;
        }
        const auto lu = a.fullPivLu();
        if (!lu.isInvertible()) continue;
        const SmallVector sol = lu.solve(rhs);
        bool inside = true;
        for (int k = 0; k < n; ++k) {
          const double tol = 1e-12 * scale;
          if (sol(k) < box.lo[k] - tol || sol(k) > box.hi[k] + tol) inside = false;
          b[k] = std::clamp(sol(k), box.lo[k], box.hi[k]);
        }
        if (inside) best = std::max(best, h(b));
      }
    }
  }
  return best;
}

Vector ConeBasis::cover_vertex(const BoundingBox& box) const {
  const std::size_t n = dim();
  Vector p(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t mask = 0; mask < box.corner_count(); ++mask)
      m = std::min(m, coordinate(i, box.corner(mask)));
    for (std::size_t k = 0; k < n; ++k) p[k] += m * generators_[i][k];
  }
  return p;
}

double cone_exit_parameter(const Frame& frame, const Vector& apex, const BoundingBox& box) {
  return ConeBasis(frame).exit_parameter(apex, box);
}

}  // namespace vline
