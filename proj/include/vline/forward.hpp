#pragma once

#include <filesystem>

#include "vline/field.hpp"
#include "vline/field_io.hpp"
#include "vline/geometry.hpp"

namespace vline {

// Transform values g = Tf indexed by broken-ray vertex. The vertex lattice is
// the image lattice, extended by whole cells wherever accumulation along the
// frame axis needs vertices outside it (oblique frames only).
struct Sinogram {
  ScalarField field;
  Frame frame;
  double quadrature_step = 0.0;
  Grid image_grid;
};

// Half the smallest spacing.
double default_quadrature_step(const Grid& grid);

// Composite midpoint rule along origin + s dir over the part of s >= 0 that
// lies inside the field's lattice hull.
double integrate_ray(const ScalarField& field, std::span<const double> origin,
                     std::span<const double> direction, double step);

// Image lattice padded to hold every vertex visited by accumulation from an
// image lattice point, and the line from the covering vertex.
Grid sinogram_grid(const Grid& image, const ConeBasis& basis);

// A step <= 0 selects default_quadrature_step.
Sinogram forward_perpendicular(const ScalarField& field, double step = 0.0);
Sinogram forward_broken_ray(const ScalarField& field, const ConeFrame2& frame, double step = 0.0);
Sinogram forward_weighted(const ScalarField& field, const WeightedFrame2& frame,
                          double step = 0.0);
Sinogram forward_polyhedral(const ScalarField& field, const ConeFrameN& frame, double step = 0.0);
Sinogram forward(const ScalarField& field, const Frame& frame, double step = 0.0);

// Stored in the field format with role "sinogram", the frame, the step and
// the image lattice in the metadata.
void store_sinogram(const Sinogram& g, const std::filesystem::path& path);
Sinogram load_sinogram(const std::filesystem::path& path);

}  // namespace vline
