#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace vline {

using Vector = std::vector<double>;

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);
// Unsigned angle in [0, pi].
double angle_between(std::span<const double> a, std::span<const double> b);

// |det| below this is treated as collinear generators.
inline constexpr double kMinDeterminant = 1e-8;
// Pairwise generator distances and face angles must agree to this.
inline constexpr double kSymmetryTolerance = 1e-10;

struct BoundingBox {
  Vector lo;
  Vector hi;

  std::size_t dim() const { return lo.size(); }
  std::size_t corner_count() const { return std::size_t{1} << dim(); }
  // Bit d of mask selects hi along axis d.
  Vector corner(std::size_t mask) const;
  Vector center() const;
  bool contains(std::span<const double> p, double tol = 0.0) const;
};

BoundingBox make_bounding_box(Vector lo, Vector hi);

// Two-ray geometry. u and v are the ray directions leaving every vertex; the
// region attached to a vertex x is x + {a u + b v : a, b >= 0}.
struct ConeFrame2 {
  Vector u;
  Vector v;
  Vector alpha;  // (u + v) / |u + v|
  double beta = 0.0;  // angle(alpha, u)
  double det_abs = 0.0;
};

// Broken rays with weight c1 on the v-ray and c2 on the u-ray. alpha_w splits
// the opening so that sin(beta1) / sin(beta2) = c1 / c2.
struct WeightedFrame2 {
  ConeFrame2 base;
  double c1 = 1.0;
  double c2 = 1.0;
  Vector alpha_w;
  double beta1 = 0.0;  // angle(alpha_w, v)
  double beta2 = 0.0;  // angle(alpha_w, u)
};

// Polyhedral cone spanned by n unit generators with equal pairwise distances.
struct ConeFrameN {
  std::vector<Vector> generators;
  Vector w;
  // face_normals[i] is orthogonal to every generator except generators[i],
  // oriented so that <w, face_normals[i]> > 0.
  std::vector<Vector> face_normals;
  double axis_cos = 0.0;
};

using Frame = std::variant<ConeFrame2, WeightedFrame2, ConeFrameN>;

// P(x, c) = { x + sum t_i g_i : -c_i <= t_i < c_i }.
struct Parallelogram {
  Vector center;
  Vector half_extents;
  std::vector<Vector> generators;

  // Lebesgue measure: prod(2 c_i) |det(generators)|.
  double measure() const;
};

enum class Orientation { up, down, left, right };

ConeFrame2 make_cone_frame(const Vector& u, const Vector& v);
// Frame symmetric about the given axis with half opening angle beta. For
// Orientation::up this is u = (sin b, cos b), v = (-sin b, cos b).
ConeFrame2 make_symmetric_frame(double beta, Orientation orientation);
// Right-angle broken rays running toward -x and -y.
ConeFrame2 perpendicular_frame();

std::array<double, 2> cone_coordinates(const ConeFrame2& frame, const Vector& apex,
                                       const Vector& p);
bool cone_contains(const ConeFrame2& frame, const Vector& apex, const Vector& p,
                   double tol);

WeightedFrame2 solve_weighted_direction(const Vector& u, const Vector& v, double c1,
                                        double c2);

ConeFrameN make_cone_frame_nd(const std::vector<Vector>& generators);

std::size_t frame_dimension(const Frame& frame);
const char* frame_kind(const Frame& frame);
bool same_frame(const Frame& a, const Frame& b, double tol = 1e-12);

// Generators, accumulation axis and dual basis of any frame, in the form the
// numerical kernels consume. The dual basis gives the cone coordinates
// k_i(d) with d = sum k_i g_i.
class ConeBasis {
 public:
  explicit ConeBasis(const Frame& frame);
  ConeBasis(std::vector<Vector> generators, Vector axis, double axis_scale);

  std::size_t dim() const { return generators_.size(); }
  const std::vector<Vector>& generators() const { return generators_; }
  const Vector& axis() const { return axis_; }
  // Factor in front of the accumulation integral: sin(beta), sin(beta1)/c1
  // or <w, y_1>.
  double axis_scale() const { return axis_scale_; }
  double det_abs() const { return det_abs_; }

  double coordinate(std::size_t i, std::span<const double> d) const;
  Vector coordinates(std::span<const double> d) const;
  bool contains(std::span<const double> apex, std::span<const double> p, double tol) const;

  // Largest t >= 0 for which the region attached to apex + t * axis still
  // meets the box (0 when it never does).
  double exit_parameter(std::span<const double> apex, const BoundingBox& box) const;

  // The vertex whose region is the smallest one containing the whole box.
  // Moving from it along the axis sweeps every vertex that sees the box.
  Vector cover_vertex(const BoundingBox& box) const;

 private:
  void build_dual();

  std::vector<Vector> generators_;
  Vector axis_;
  double axis_scale_ = 1.0;
  double det_abs_ = 0.0;
  std::vector<double> dual_;        // row-major n x n, row i = k_i
  std::vector<double> axis_coord_;  // k_i(axis), all positive
};

double cone_exit_parameter(const Frame& frame, const Vector& apex, const BoundingBox& box);

}  // namespace vline
