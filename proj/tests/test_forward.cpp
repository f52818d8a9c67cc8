#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "oracles.hpp"
#include "vline/error.hpp"
#include "vline/forward.hpp"

using namespace vline;

namespace {

template <class Fn>
ErrorKind kind_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no vline::Error thrown";
  return ErrorKind::InvalidArgument;
}

ScalarField sampled(const Grid& g, double (*fn)(double, double)) {
  return ScalarField::from_function(g, [fn](const Vector& p) { return fn(p[0], p[1]); });
}

double g_at(const Sinogram& g, double x, double y) { return g.field.sample(Vector{x, y}); }

double ray_oracle(double ox, double oy, double dx, double dy) {
  const double len = oracle::unit_square_exit(ox, oy, dx, dy);
  return oracle::simpson([&](double s) { return oracle::gauss(ox + s * dx, oy + s * dy); }, 0.0, len,
                         2000);
}

}  // namespace

TEST(IntegrateRay, ConstantSegments) {
  const ScalarField one(unit_grid({33, 33}), std::vector<double>(33 * 33, 1.0));
  const double step = 1.0 / 64;
  EXPECT_NEAR(integrate_ray(one, Vector{0.2, 0.5}, Vector{-1, 0}, step), 0.2, step * step);
  EXPECT_NEAR(integrate_ray(one, Vector{0.5, 0.5}, Vector{0, -1}, step), 0.5, step * step);
  EXPECT_EQ(integrate_ray(one, Vector{1.5, 0.5}, Vector{1, 0}, step), 0.0);
  // Origin outside, ray crossing the square.
  EXPECT_NEAR(integrate_ray(one, Vector{1.5, 0.5}, Vector{-1, 0}, step), 1.0, step * step);
  EXPECT_EQ(kind_of([&] { integrate_ray(one, Vector{0.5, 0.5}, Vector{-1, 0}, 0.0); }),
            ErrorKind::InvalidArgument);
}

TEST(IntegrateRay, GaussianAgreesWithFinerStep) {
  const Grid g = unit_grid({256, 256});
  const auto f = sampled(g, [](double x, double y) { return oracle::gauss(x, y); });
  const double step = default_quadrature_step(g);
  oracle::Rng rng(17);
  for (int k = 0; k < 20; ++k) {
    const Vector o{rng(0.3, 1.0), rng(0.3, 1.0)};
    const double a = rng(std::numbers::pi, 1.5 * std::numbers::pi);
    const Vector d{std::cos(a), std::sin(a)};
    EXPECT_NEAR(integrate_ray(f, o, d, step), integrate_ray(f, o, d, step / 10), 1e-6);
  }
}

TEST(ForwardPerpendicular, ExampleOne) {
  const Grid grid = unit_grid({129, 129});
  const auto g = forward_perpendicular(sampled(grid, oracle::ex1_f));
  EXPECT_TRUE(same_grid(g.field.grid(), grid));
  EXPECT_NEAR(g_at(g, 0.5, 0.5), 1.0, 1e-4);
  double worst = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Vector p = grid.point(i);
    worst = std::max(worst, std::abs(g.field[i] - oracle::ex1_g(p[0], p[1])));
  }
  EXPECT_LT(worst, 5e-3);
}

TEST(ForwardPerpendicular, ExampleTwo) {
  const Grid grid = unit_grid({129, 129});
  const auto g = forward_perpendicular(sampled(grid, oracle::ex2_f));
  EXPECT_NEAR(g_at(g, 1, 1), 1.5 * std::numbers::e - 1, 5e-4);
  EXPECT_NEAR(g_at(g, 1, 1), oracle::ex2_g(1, 1), 5e-4);
}

TEST(ForwardPerpendicular, ZeroAndDimension) {
  const auto g = forward_perpendicular(ScalarField(unit_grid({17, 17})));
  for (double v : g.field.samples()) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(kind_of([] { forward_perpendicular(ScalarField(unit_grid({5, 5, 5}))); }),
            ErrorKind::DimensionMismatch);
}

TEST(ForwardBrokenRay, PerpendicularFrameIsTheSameTransform) {
  const Grid grid = unit_grid({65, 65});
  const auto f = sampled(grid, oracle::ex2_f);
  const auto a = forward_perpendicular(f);
  const auto b = forward_broken_ray(f, make_cone_frame({-1, 0}, {0, -1}));
  ASSERT_TRUE(same_grid(a.field.grid(), b.field.grid()));
  for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_NEAR(a.field[i], b.field[i], 1e-12);
}

TEST(ForwardBrokenRay, UpwardGaussianMatchesAnalyticRays) {
  const Grid grid = unit_grid({256, 256});
  const auto f = sampled(grid, [](double x, double y) { return oracle::gauss(x, y); });
  const ConeFrame2 frame = make_symmetric_frame(std::numbers::pi / 3, Orientation::up);
  const auto g = forward_broken_ray(f, frame);
  double worst = 0.0, peak = 0.0;
  for (std::size_t ix = 0; ix < 256; ix += 15)
    for (std::size_t iy = 0; iy < 256; iy += 15) {
      const double x = grid.coordinate(0, ix), y = grid.coordinate(1, iy);
      const double exact = ray_oracle(x, y, frame.u[0], frame.u[1]) + ray_oracle(x, y, frame.v[0], frame.v[1]);
      worst = std::max(worst, std::abs(g_at(g, x, y) - exact));
      peak = std::max(peak, exact);
    }
  EXPECT_LT(worst, 1e-3 * peak);
}

TEST(ForwardBrokenRay, OutsideRaysGiveZeroOnPaddedVertices) {
  const Grid grid = unit_grid({33, 33});
  const auto f = ScalarField(grid, std::vector<double>(grid.size(), 1.0));
  const auto g = forward_broken_ray(f, make_symmetric_frame(std::numbers::pi / 3, Orientation::up));
  EXPECT_GT(g.field.grid().counts[1], grid.counts[1]);
  EXPECT_LT(g.field.grid().origin[1], 0.0);
  // A vertex above the square sees nothing.
  EXPECT_EQ(g_at(g, 0.5, 1.0 + 1e-9), 0.0);
}

TEST(ForwardWeighted, EqualWeightsReduce) {
  const Grid grid = unit_grid({65, 65});
  const auto f = sampled(grid, [](double x, double y) { return oracle::gauss(x, y); });
  const Vector u{std::sin(0.6), std::cos(0.6)}, v{-std::sin(0.6), std::cos(0.6)};
  const auto a = forward_broken_ray(f, make_cone_frame(u, v));
  const auto b = forward_weighted(f, solve_weighted_direction(u, v, 1.0, 1.0));
  ASSERT_TRUE(same_grid(a.field.grid(), b.field.grid()));
  for (std::size_t i = 0; i < a.field.grid().size(); ++i) EXPECT_NEAR(a.field[i], b.field[i], 1e-12);
}

TEST(ForwardWeighted, ConstantField) {
  const Grid grid = unit_grid({65, 65});
  const auto one = ScalarField(grid, std::vector<double>(grid.size(), 1.0));
  const auto g = forward_weighted(one, solve_weighted_direction({-1, 0}, {0, -1}, 2.0, 0.5));
  const double step = g.quadrature_step;
  EXPECT_NEAR(g_at(g, 0.5, 0.5), 1.25, step * step);
}

TEST(ForwardWeighted, GaussianMatchesAnalyticRays) {
  const Grid grid = unit_grid({256, 256});
  const auto f = sampled(grid, [](double x, double y) { return oracle::gauss(x, y); });
  const WeightedFrame2 w = solve_weighted_direction({-1, 0}, {0, -1}, 2.0, 1.0);
  const auto g = forward_weighted(f, w);
  double worst = 0.0, peak = 0.0;
  for (std::size_t ix = 0; ix < 256; ix += 15)
    for (std::size_t iy = 0; iy < 256; iy += 15) {
      const double x = grid.coordinate(0, ix), y = grid.coordinate(1, iy);
      const double exact = 2.0 * ray_oracle(x, y, 0, -1) + ray_oracle(x, y, -1, 0);
      worst = std::max(worst, std::abs(g_at(g, x, y) - exact));
      peak = std::max(peak, exact);
    }
  EXPECT_LT(worst, 1e-3 * peak);
}

TEST(ForwardPolyhedral, ConstantCube) {
  const Grid grid = unit_grid({17, 17, 17});
  const auto one = ScalarField(grid, std::vector<double>(grid.size(), 1.0));
  const auto g = forward_polyhedral(one, make_cone_frame_nd({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}));
  EXPECT_NEAR(g.field.sample(Vector{0, 0, 0}), 3.0, 2 * g.quadrature_step);
  // From the centre each face is a quarter of a unit square.
  EXPECT_NEAR(g.field.sample(Vector{0.5, 0.5, 0.5}), 0.75, 2 * g.quadrature_step);
}

TEST(ForwardPolyhedral, VanishingOnCoordinatePlanes) {
  const Grid grid = unit_grid({17, 17, 17});
  PhantomSpec s;
  s.kind = PhantomKind::product;
  const auto g = forward_polyhedral(make_phantom(s, grid), make_cone_frame_nd({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}));
  EXPECT_NEAR(g.field.sample(Vector{0, 0, 0}), 0.0, 1e-14);
  const auto z = forward_polyhedral(ScalarField(grid), make_cone_frame_nd({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}));
  for (double v : z.field.samples()) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(kind_of([] {
              forward_polyhedral(ScalarField(unit_grid({5, 5})),
                                 make_cone_frame_nd({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}));
            }),
            ErrorKind::DimensionMismatch);
}

TEST(ForwardProperties, Linearity) {
  const Grid grid = unit_grid({48, 48});
  const auto f1 = sampled(grid, oracle::ex1_f);
  const auto f2 = sampled(grid, [](double x, double y) { return oracle::gauss(x, y, 0.3, 0.2); });
  std::vector<double> mix(grid.size());
  for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = 2.5 * f1[i] - 0.75 * f2[i];
  const ScalarField f(grid, mix);
  for (const Frame& frame : {Frame(perpendicular_frame()), Frame(make_symmetric_frame(0.7, Orientation::up)),
                             Frame(solve_weighted_direction({0.6, 0.8}, {-1, 0}, 3.0, 1.0))}) {
    const auto g = forward(f, frame), g1 = forward(f1, frame), g2 = forward(f2, frame);
    for (std::size_t i = 0; i < g.field.grid().size(); ++i)
      EXPECT_NEAR(g.field[i], 2.5 * g1.field[i] - 0.75 * g2.field[i], 1e-10);
  }
}

TEST(ForwardProperties, TranslationByLatticeSteps) {
  const Grid grid = unit_grid({65, 65});
  const double h = grid.spacing[0];
  const int k = 6;
  auto bump = [](double cx, double cy) {
    return [=](const Vector& p) { return std::exp(-((p[0] - cx) * (p[0] - cx) + (p[1] - cy) * (p[1] - cy)) / 0.005); };
  };
  const auto f = ScalarField::from_function(grid, bump(0.45, 0.5));
  const auto fs = ScalarField::from_function(grid, bump(0.45 + k * h, 0.5 + k * h));
  const auto g = forward_perpendicular(f), gs = forward_perpendicular(fs);
  for (std::size_t ix = k; ix < 65; ++ix)
    for (std::size_t iy = k; iy < 65; ++iy)
      EXPECT_NEAR(gs.field[ix * 65 + iy], g.field[(ix - k) * 65 + (iy - k)], 1e-10);
}

TEST(ForwardProperties, NonnegativeInNonnegativeOut) {
  const Grid grid = unit_grid({48, 48});
  PhantomSpec s;
  s.kind = PhantomKind::disk;
  const auto f = make_phantom(s, grid);
  for (const Frame& frame : {Frame(perpendicular_frame()), Frame(make_symmetric_frame(1.2, Orientation::left)),
                             Frame(make_cone_frame({0.28, 0.96}, {-0.96, -0.28})),
                             Frame(solve_weighted_direction({0, 1}, {1, 0}, 0.5, 4.0))})
    EXPECT_GE(forward(f, frame).field.min(), 0.0);
}

TEST(ForwardProperties, StepHalvingIsSecondOrder) {
  // Axis-aligned rays see a piecewise-linear integrand and the midpoint rule
  // is exact there, so an oblique frame is needed to see the step error.
  const Grid grid = unit_grid({65, 65});
  PhantomSpec s;
  s.kind = PhantomKind::gaussian;
  s.width = 0.15;
  const auto f = make_phantom(s, grid);
  const Frame frame = make_symmetric_frame(std::numbers::pi / 3, Orientation::up);
  const double h = grid.spacing[0];
  const auto ref = forward(f, frame, h / 64);
  auto err = [&](double step) {
    const auto g = forward(f, frame, step);
    double d2 = 0.0, r2 = 0.0;
    for (std::size_t i = 0; i < ref.field.grid().size(); ++i) {
      d2 += (g.field[i] - ref.field[i]) * (g.field[i] - ref.field[i]);
      r2 += ref.field[i] * ref.field[i];
    }
    return std::sqrt(d2 / r2);
  };
  const double e1 = err(h), e2 = err(h / 2), e4 = err(h / 4);
  EXPECT_GE(e1 / e2, 3.0);
  EXPECT_LE(e1 / e2, 5.0);
  EXPECT_GE(e2 / e4, 3.0);
  EXPECT_LE(e2 / e4, 5.0);
}

TEST(ForwardProperties, StepLargerThanSpacingRejected) {
  const Grid grid = unit_grid({9, 9});
  EXPECT_EQ(kind_of([&] { forward_perpendicular(ScalarField(grid), 0.2); }), ErrorKind::InvalidArgument);
  EXPECT_DOUBLE_EQ(forward_perpendicular(ScalarField(grid)).quadrature_step, 1.0 / 16);
}

TEST(SinogramIo, RoundTrip) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "vline_forward_io";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const Grid grid = unit_grid({20, 24});
  const auto f = sampled(grid, oracle::ex2_f);
  const auto g = forward(f, solve_weighted_direction({0.6, 0.8}, {-0.6, 0.8}, 2.0, 1.0));
  store_sinogram(g, dir / "g");
  const auto back = load_sinogram(dir / "g.json");
  EXPECT_TRUE(same_frame(back.frame, g.frame));
  EXPECT_EQ(back.quadrature_step, g.quadrature_step);
  EXPECT_EQ(back.image_grid, g.image_grid);
  ASSERT_EQ(back.field.grid(), g.field.grid());
  for (std::size_t i = 0; i < g.field.grid().size(); ++i) EXPECT_EQ(back.field[i], g.field[i]);
  store_field(f, dir / "plain");
  EXPECT_EQ(kind_of([&] { load_sinogram(dir / "plain"); }), ErrorKind::FormatError);
}
