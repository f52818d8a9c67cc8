#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vline/geometry.hpp"

namespace vline {

// Regular lattice on an axis-aligned box. Samples are stored row-major with
// the last axis varying fastest.
struct Grid {
  Vector origin;
  Vector spacing;
  std::vector<std::size_t> counts;

  std::size_t dim() const { return counts.size(); }
  std::size_t size() const;
  double min_spacing() const;
  BoundingBox bbox() const;
  std::size_t stride(std::size_t axis) const;
  Vector point(std::size_t linear) const;
  double coordinate(std::size_t axis, std::size_t index) const {
    return origin[axis] + static_cast<double>(index) * spacing[axis];
  }

  bool operator==(const Grid&) const = default;
};

Grid make_grid(Vector origin, Vector spacing, std::vector<std::size_t> counts);
// counts[d] points spanning [0, 1] on every axis.
Grid unit_grid(std::vector<std::size_t> counts);
bool same_grid(const Grid& a, const Grid& b, double tol = 1e-12);

class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(Grid grid, std::string name = {});
  ScalarField(Grid grid, std::vector<double> samples, std::string name = {});

  template <class Fn>
  static ScalarField from_function(const Grid& grid, Fn&& fn, std::string name = {}) {
    std::vector<double> s(grid.size());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = fn(grid.point(i));
    return ScalarField(grid, std::move(s), std::move(name));
  }

  const Grid& grid() const { return grid_; }
  std::size_t dim() const { return grid_.dim(); }
  std::span<const double> samples() const { return samples_; }
  double operator[](std::size_t i) const { return samples_[i]; }
  const std::string& name() const { return name_; }
  void set_name(std::string name) { name_ = std::move(name); }

  // Multilinear interpolation; exactly 0 outside the lattice hull.
  double sample(std::span<const double> p) const;
  double sample2(double x, double y) const;
  double sample3(double x, double y, double z) const;
  // Tensor four-point Lagrange interpolation, also 0 outside the hull.
  // Exact on lattice points and for cubics.
  double sample_cubic(std::span<const double> p) const;

  double min() const;
  double max() const;

 private:
  Grid grid_;
  std::vector<double> samples_;
  std::string name_;
};

// Integral of the multilinear interpolant over the lattice hull.
double field_integral(const ScalarField& field);

enum class PhantomKind { poly_example1, exp_example2, constant, gaussian, disk, product, bubble };

const char* to_string(PhantomKind kind);
PhantomKind parse_phantom_kind(std::string_view name);

// poly_example1: 3x^2 + 3y^2          exp_example2: y e^x
// constant:      1                    gaussian:     exp(-|p - c|^2 / (2 width^2))
// disk:          1 inside radius      product:      prod p_i
// bubble:        prod 4 p_i (1 - p_i)
// All values are multiplied by amplitude. An empty center means the middle
// of the grid.
struct PhantomSpec {
  PhantomKind kind = PhantomKind::constant;
  double amplitude = 1.0;
  Vector center;
  double width = 0.1;
  double radius = 0.25;
};

double phantom_value(const PhantomSpec& spec, std::span<const double> p);
ScalarField make_phantom(const PhantomSpec& spec, const Grid& grid);

struct FieldMetrics {
  double linf = 0.0;
  double l2_rel = 0.0;  // |a - b|_2 / |b|_2
  double mean_err = 0.0;  // mean |a - b|
  std::size_t count = 0;
};

FieldMetrics compare_fields(const ScalarField& a, const ScalarField& b, const BoundingBox& region);
FieldMetrics compare_fields(const ScalarField& a, const ScalarField& b);

// The box shrunk by margin * extent from each side.
BoundingBox interior_region(const Grid& grid, double margin);

}  // namespace vline
