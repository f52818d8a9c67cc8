#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "vline/error.hpp"
#include "vline/field.hpp"
#include "vline/field_io.hpp"

using namespace vline;
namespace fs = std::filesystem;

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

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("vline_field_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST(Grid, Layout) {
  const Grid g = make_grid({-1, 2}, {0.5, 0.25}, {5, 3});
  EXPECT_EQ(g.size(), 15u);
  EXPECT_EQ(g.stride(0), 3u);
  EXPECT_EQ(g.stride(1), 1u);
  const Vector p = g.point(7);  // ix = 2, iy = 1
  EXPECT_DOUBLE_EQ(p[0], 0.0);
  EXPECT_DOUBLE_EQ(p[1], 2.25);
  EXPECT_DOUBLE_EQ(g.min_spacing(), 0.25);
  EXPECT_DOUBLE_EQ(g.bbox().hi[0], 1.0);
  EXPECT_DOUBLE_EQ(g.bbox().hi[1], 2.5);
}

TEST(Grid, Validation) {
  EXPECT_EQ(kind_of([] { make_grid({0, 0}, {0, 1}, {3, 3}); }), ErrorKind::InvalidArgument);
  EXPECT_EQ(kind_of([] { make_grid({0, 0}, {1, 1}, {1, 3}); }), ErrorKind::InvalidArgument);
  EXPECT_EQ(kind_of([] { make_grid({0}, {1}, {3}); }), ErrorKind::DimensionMismatch);
  EXPECT_EQ(kind_of([] { make_grid({0, 0}, {1, 1, 1}, {3, 3}); }), ErrorKind::DimensionMismatch);
}

TEST(ScalarField, SampleCountAndFiniteness) {
  const Grid g = unit_grid({3, 3});
  EXPECT_EQ(kind_of([&] { ScalarField(g, std::vector<double>(8, 0.0)); }), ErrorKind::FormatError);
  std::vector<double> s(9, 0.0);
  s[4] = NAN;
  EXPECT_EQ(kind_of([&] { ScalarField(g, s); }), ErrorKind::InvalidArgument);
}

TEST(ScalarField, BilinearIsExactForBilinear) {
  const Grid g = unit_grid({9, 7});
  auto fn = [](double x, double y) { return 1.0 + 2 * x - 3 * y + 4 * x * y; };
  const auto f = ScalarField::from_function(g, [&](const Vector& p) { return fn(p[0], p[1]); });
  oracle::Rng rng(1);
  for (int k = 0; k < 200; ++k) {
    const double x = rng(), y = rng();
    EXPECT_NEAR(f.sample2(x, y), fn(x, y), 1e-13);
    EXPECT_NEAR(f.sample(Vector{x, y}), fn(x, y), 1e-13);
  }
  EXPECT_EQ(f.sample2(-0.01, 0.5), 0.0);
  EXPECT_EQ(f.sample2(0.5, 1.01), 0.0);
  EXPECT_NEAR(f.sample2(1.0, 1.0), fn(1, 1), 1e-14);
}

TEST(ScalarField, TrilinearIsExactForTrilinear) {
  const Grid g = unit_grid({5, 6, 7});
  auto fn = [](double x, double y, double z) { return x * y * z - 2 * x * z + y + 0.5; };
  const auto f =
      ScalarField::from_function(g, [&](const Vector& p) { return fn(p[0], p[1], p[2]); });
  oracle::Rng rng(2);
  for (int k = 0; k < 200; ++k) {
    const double x = rng(), y = rng(), z = rng();
    EXPECT_NEAR(f.sample3(x, y, z), fn(x, y, z), 1e-13);
  }
  EXPECT_EQ(f.sample3(0.5, 0.5, 1.5), 0.0);
}

TEST(ScalarField, CubicIsExactForBicubic) {
  const Grid g = unit_grid({11, 9});
  auto fn = [](double x, double y) { return x * x * x - 2 * x * y * y + y * y * y * x + 0.3; };
  const auto f = ScalarField::from_function(g, [&](const Vector& p) { return fn(p[0], p[1]); });
  oracle::Rng rng(3);
  for (int k = 0; k < 300; ++k) {
    const double x = rng(), y = rng();
    EXPECT_NEAR(f.sample_cubic(Vector{x, y}), fn(x, y), 1e-12);
  }
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(f.sample_cubic(g.point(i)), f[i], 1e-13);
  EXPECT_EQ(f.sample_cubic(Vector{1.2, 0.5}), 0.0);
}

TEST(ScalarField, CubicBeatsLinearOnSmoothData) {
  const Grid g = unit_grid({33, 33});
  const auto f = ScalarField::from_function(g, [](const Vector& p) { return oracle::gauss(p[0], p[1]); });
  oracle::Rng rng(4);
  double lin = 0.0, cub = 0.0;
  for (int k = 0; k < 500; ++k) {
    const Vector p{rng(0.2, 0.8), rng(0.2, 0.8)};
    const double exact = oracle::gauss(p[0], p[1]);
    lin = std::max(lin, std::abs(f.sample(p) - exact));
    cub = std::max(cub, std::abs(f.sample_cubic(p) - exact));
  }
  EXPECT_LT(cub, 0.2 * lin);
}

TEST(ScalarField, Integral) {
  const Grid g = unit_grid({65, 65});
  const auto f = ScalarField::from_function(g, [](const Vector& p) { return oracle::ex1_f(p[0], p[1]); });
  // Trapezoid error for x^2 is h^2/6 per unit square, times 3 and two terms.
  const double h = 1.0 / 64;
  EXPECT_NEAR(field_integral(f), 2.0 + h * h, 1e-12);
}

TEST(Phantoms, Values) {
  const Grid g = unit_grid({5, 5});
  PhantomSpec s;
  s.kind = PhantomKind::poly_example1;
  EXPECT_DOUBLE_EQ(phantom_value(s, Vector{0.5, 0.5}), 1.5);
  s.kind = PhantomKind::exp_example2;
  EXPECT_DOUBLE_EQ(phantom_value(s, Vector{0.0, 1.0}), 1.0);
  s.kind = PhantomKind::product;
  s.amplitude = 2.0;
  EXPECT_DOUBLE_EQ(phantom_value(s, Vector{0.5, 0.25, 2.0}), 0.5);
  s = {};
  s.kind = PhantomKind::gaussian;
  const auto gf = make_phantom(s, g);
  EXPECT_DOUBLE_EQ(gf.sample2(0.5, 0.5), 1.0);
  EXPECT_EQ(gf.name(), "gaussian");
  s.kind = PhantomKind::disk;
  s.radius = 0.3;
  const auto d = make_phantom(s, g);
  EXPECT_EQ(d.sample2(0.5, 0.75), 1.0);
  EXPECT_EQ(d.sample2(0.0, 0.0), 0.0);
  s.kind = PhantomKind::bubble;
  const auto b = make_phantom(s, unit_grid({5, 5, 5}));
  EXPECT_DOUBLE_EQ(b.sample3(0.5, 0.5, 0.5), 1.0);
  EXPECT_DOUBLE_EQ(b.sample3(0.0, 0.5, 0.5), 0.0);
}

TEST(Phantoms, Errors) {
  PhantomSpec s;
  s.kind = PhantomKind::poly_example1;
  EXPECT_EQ(kind_of([&] { make_phantom(s, unit_grid({3, 3, 3})); }), ErrorKind::DimensionMismatch);
  s.kind = PhantomKind::gaussian;
  s.width = 0;
  EXPECT_EQ(kind_of([&] { make_phantom(s, unit_grid({3, 3})); }), ErrorKind::InvalidArgument);
  s.width = 0.1;
  s.center = {0.5, 0.5, 0.5};
  EXPECT_EQ(kind_of([&] { make_phantom(s, unit_grid({3, 3})); }), ErrorKind::DimensionMismatch);
  EXPECT_EQ(kind_of([] { parse_phantom_kind("zebra"); }), ErrorKind::InvalidArgument);
  for (auto k : {PhantomKind::poly_example1, PhantomKind::exp_example2, PhantomKind::constant,
                 PhantomKind::gaussian, PhantomKind::disk, PhantomKind::product, PhantomKind::bubble})
    EXPECT_EQ(parse_phantom_kind(to_string(k)), k);
}

TEST(Compare, Metrics) {
  const Grid g = unit_grid({3, 3});
  const ScalarField a(g, std::vector<double>(9, 2.0));
  std::vector<double> bs(9, 2.0);
  bs[4] = 3.0;  // the centre
  const ScalarField b(g, bs);
  auto m = compare_fields(a, b);
  EXPECT_EQ(m.count, 9u);
  EXPECT_DOUBLE_EQ(m.linf, 1.0);
  EXPECT_DOUBLE_EQ(m.mean_err, 1.0 / 9);
  EXPECT_DOUBLE_EQ(m.l2_rel, 1.0 / std::sqrt(8 * 4.0 + 9.0));
  // The interior region with margin 0.3 holds only the centre.
  m = compare_fields(a, b, interior_region(g, 0.3));
  EXPECT_EQ(m.count, 1u);
  EXPECT_DOUBLE_EQ(m.l2_rel, 1.0 / 3.0);
  m = compare_fields(a, a);
  EXPECT_EQ(m.linf, 0.0);
  EXPECT_EQ(m.l2_rel, 0.0);
  EXPECT_EQ(kind_of([&] { compare_fields(a, ScalarField(unit_grid({3, 4}))); }), ErrorKind::GridMismatch);
}

TEST(FieldIo, RoundTripIsBitExact) {
  const fs::path dir = scratch_dir("rt");
  const Grid g = make_grid({-0.3, 1.0 / 3}, {1.0 / 7, 0.1}, {8, 5});
  oracle::Rng rng(9);
  std::vector<double> s(g.size());
  for (double& v : s) v = rng(-1e3, 1e3) / 3.0;
  s[0] = -0.0;
  s[1] = 5e-324;
  const ScalarField f(g, s, "noise");
  store_field(f, dir / "noise", Metadata{{"role", "test"}});
  Metadata meta;
  const auto back = load_field(dir / "noise.json", &meta);
  EXPECT_EQ(meta["role"], "test");
  EXPECT_EQ(back.name(), "noise");
  ASSERT_EQ(back.grid(), g);
  for (std::size_t i = 0; i < s.size(); ++i)
    EXPECT_EQ(std::bit_cast<std::uint64_t>(back[i]), std::bit_cast<std::uint64_t>(s[i]));
  EXPECT_EQ(fs::file_size(dir / "noise.f64"), 8 * g.size());
  // Storing twice gives identical bytes.
  const std::string first = slurp(dir / "noise.json") + slurp(dir / "noise.f64");
  store_field(back, dir / "noise.f64", Metadata{{"role", "test"}});
  EXPECT_EQ(slurp(dir / "noise.json") + slurp(dir / "noise.f64"), first);
  for (const auto& e : fs::directory_iterator(dir))
    EXPECT_TRUE(e.path().extension() == ".json" || e.path().extension() == ".f64") << e.path();
}

TEST(FieldIo, Errors) {
  const fs::path dir = scratch_dir("err");
  EXPECT_EQ(kind_of([&] { load_field(dir / "missing"); }), ErrorKind::IoError);
  const ScalarField f(unit_grid({4, 4}), std::vector<double>(16, 1.0));
  store_field(f, dir / "a");
  // Truncated raw data.
  {
    std::ofstream out(dir / "a.f64", std::ios::binary | std::ios::trunc);
    out << std::string(8 * 15, '\0');
  }
  EXPECT_EQ(kind_of([&] { load_field(dir / "a"); }), ErrorKind::FormatError);
  store_field(f, dir / "a");
  {
    std::ofstream out(dir / "a.json", std::ios::trunc);
    out << "{ broken";
  }
  EXPECT_EQ(kind_of([&] { load_field(dir / "a"); }), ErrorKind::FormatError);
  {
    std::ofstream out(dir / "a.json", std::ios::trunc);
    out << R"({"version": 99})";
  }
  EXPECT_EQ(kind_of([&] { load_field(dir / "a"); }), ErrorKind::FormatError);
}

TEST(FieldIo, Csv) {
  const fs::path dir = scratch_dir("csv");
  const Grid g = make_grid({0, -1}, {0.25, 0.5}, {5, 5});
  const auto f = ScalarField::from_function(g, [](const Vector& p) { return std::exp(p[0]) * p[1]; });
  store_field_csv(f, dir / "f.csv");
  const auto back = load_field_csv(dir / "f.csv");
  EXPECT_TRUE(same_grid(back.grid(), g, 1e-15));
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(back[i], f[i]);
  std::ifstream in(dir / "f.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "x,y,value");
  {
    std::ofstream out(dir / "bad.csv");
    out << "x,y,value\n0,0,1\n0,1,2\n1,0,3\n";
  }
  EXPECT_EQ(kind_of([&] { load_field_csv(dir / "bad.csv"); }), ErrorKind::FormatError);
}

TEST(FieldIo, Pgm) {
  const fs::path dir = scratch_dir("pgm");
  const Grid g = unit_grid({4, 3});
  const auto f = ScalarField::from_function(g, [](const Vector& p) { return p[1]; });
  export_pgm(f, dir / "f.pgm");
  const std::string bytes = slurp(dir / "f.pgm");
  const std::string head = "P5\n4 3\n255\n";
  ASSERT_EQ(bytes.size(), head.size() + 12);
  EXPECT_EQ(bytes.substr(0, head.size()), head);
  // Top row is max y.
  for (int ix = 0; ix < 4; ++ix) {
    EXPECT_EQ(static_cast<unsigned char>(bytes[head.size() + ix]), 255);
    EXPECT_EQ(static_cast<unsigned char>(bytes[head.size() + 8 + ix]), 0);
  }
  EXPECT_EQ(kind_of([&] { export_pgm(ScalarField(unit_grid({2, 2, 2})), dir / "x.pgm"); }),
            ErrorKind::DimensionMismatch);
}
