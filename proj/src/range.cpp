#include "vline/range.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "vline/error.hpp"

namespace vline {

namespace {

// Fixed bit recipe so sequences do not depend on the standard library.
class Uniform {
 public:
  explicit Uniform(std::uint64_t seed) : engine_(seed) {}
  double operator()() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double operator()(double lo, double hi) { return lo + (hi - lo) * (*this)(); }

 private:
  std::mt19937_64 engine_;
};

double eval(const ScalarField& f, const Vector& p) {
  return f.dim() == 2 ? f.sample2(p[0], p[1]) : f.sample(p);
}

double max_abs(const ScalarField& f) { return std::max(std::abs(f.min()), std::abs(f.max())); }

// Per-axis half-width of the axis-aligned box around P.
Vector reach_of(const std::vector<Vector>& gens, const Vector& c) {
  Vector r(gens.size(), 0.0);
  for (std::size_t i = 0; i < gens.size(); ++i)
    for (std::size_t d = 0; d < r.size(); ++d) r[d] += c[i] * std::abs(gens[i][d]);
  return r;
}

// Uniform center among those keeping P inside the box; false if none does.
bool place(const BoundingBox& box, const Vector& reach, Uniform& rng, Vector& center) {
  center.resize(box.dim());
  for (std::size_t d = 0; d < box.dim(); ++d) {
    const double lo = box.lo[d] + reach[d];
    const double hi = box.hi[d] - reach[d];
    if (hi < lo) return false;
    center[d] = rng(lo, hi);
  }
  return true;
}

double min_extent(const BoundingBox& box) {
  double e = box.hi[0] - box.lo[0];
  for (std::size_t d = 1; d < box.dim(); ++d) e = std::min(e, box.hi[d] - box.lo[d]);
  return e;
}

}  // namespace

Parallelogram make_parallelogram(const Frame& frame, Vector center, Vector half_extents) {
  const ConeBasis basis(frame);
  if (center.size() != basis.dim() || half_extents.size() != basis.dim())
    throw Error(ErrorKind::DimensionMismatch, "parallelogram dimension differs from frame");
  for (double c : half_extents)
    if (!(c >= 0.0)) throw Error(ErrorKind::InvalidArgument, "half-extents must be nonnegative");
  return {std::move(center), std::move(half_extents), basis.generators()};
}

double premeasure(const ConeIntegralField& F, const Parallelogram& P) {
  const ConeBasis basis(F.frame);
  const std::size_t n = basis.dim();
  if (P.generators.size() != n || P.center.size() != n || P.half_extents.size() != n)
    throw Error(ErrorKind::DimensionMismatch, "parallelogram dimension differs from F");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t d = 0; d < n; ++d)
      if (std::abs(P.generators[i][d] - basis.generators()[i][d]) > 1e-9)
        throw Error(ErrorKind::FrameMismatch, "parallelogram generators differ from F's frame");
  double sum = 0.0;
  Vector p(n);
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    double sign = 1.0;
    p = P.center;
    for (std::size_t i = 0; i < n; ++i) {
      const double a = (mask >> i) & 1U ? 1.0 : -1.0;
      sign *= a;
      for (std::size_t d = 0; d < n; ++d) p[d] += a * P.half_extents[i] * P.generators[i][d];
    }
    sum += sign * eval(F.field, p);
  }
  return orientation_sign(n) * sum;
}

MonotonicityResult monotonicity_check(const ConeIntegralField& F, std::size_t sample_count,
                                      std::uint64_t seed) {
  if (sample_count == 0) throw Error(ErrorKind::InvalidArgument, "sample_count must be positive");
  const ConeBasis basis(F.frame);
  const Grid& grid = F.field.grid();
  const BoundingBox box = grid.bbox();
  const std::size_t n = grid.dim();
  const double c_lo = grid.min_spacing();
  const double c_hi = std::max(c_lo, 0.25 * min_extent(box));
  Uniform rng(seed);
  MonotonicityResult result;
  result.min_nu0 = std::numeric_limits<double>::infinity();
  const std::size_t max_attempts = 64 * sample_count;
  for (std::size_t attempt = 0; result.tested < sample_count && attempt < max_attempts; ++attempt) {
    Vector c(n);
    for (double& ci : c) ci = c_lo * std::pow(c_hi / c_lo, rng());
    Vector center;
    if (!place(box, reach_of(basis.generators(), c), rng, center)) continue;
    Parallelogram P{std::move(center), std::move(c), basis.generators()};
    const double nu = premeasure(F, P);
    ++result.tested;
    if (nu < result.min_nu0) {
      result.min_nu0 = nu;
      result.worst = std::move(P);
    }
  }
  if (result.tested == 0) throw Error(ErrorKind::InvalidArgument, "no parallelogram fits the lattice");
  return result;
}

bool AbscontResult::passes(double intercept_tolerance) const {
  return std::isfinite(slope) && std::isfinite(intercept) &&
         intercept <= intercept_tolerance * std::max(scale, 1e-300);
}

AbscontResult abscont_check(const ConeIntegralField& F, const std::vector<double>& epsilons,
                            std::size_t collections_per_eps, std::uint64_t seed) {
  if (epsilons.empty() || collections_per_eps == 0)
    throw Error(ErrorKind::InvalidArgument, "abscont needs epsilons and collections");
  const ConeBasis basis(F.frame);
  const Grid& grid = F.field.grid();
  const BoundingBox box = grid.bbox();
  const std::size_t n = grid.dim();
  const double c_min = grid.min_spacing();
  const double unit_measure = std::pow(2.0, static_cast<double>(n)) * basis.det_abs();
  constexpr std::size_t kMaxPerCollection = 8;
  Uniform rng(seed);

  AbscontResult result;
  result.scale = max_abs(F.field);
  for (double eps : epsilons) {
    if (!(eps > 0.0)) throw Error(ErrorKind::InvalidArgument, "epsilons must be positive");
    // Equal measures a per parallelogram with every half-extent >= c_min.
    const double floor_measure = unit_measure * std::pow(c_min, static_cast<double>(n));
    const auto k = static_cast<std::size_t>(
        std::clamp(std::floor(0.99 * eps / floor_measure), 0.0, double(kMaxPerCollection)));
    if (k == 0) continue;
    const double a = 0.99 * eps / static_cast<double>(k);
    const double side = std::pow(a / unit_measure, 1.0 / static_cast<double>(n));
    const double spread = std::log(side / c_min);

    AbscontRow row{eps, k, 0, 0.0, 0.0};
    for (std::size_t col = 0; col < collections_per_eps; ++col) {
      std::vector<Vector> centers_k, halves;  // generator coordinates of accepted P
      double sum = 0.0, area = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        for (int attempt = 0; attempt < 100; ++attempt) {
          // Random aspect with fixed product, each factor >= c_min.
          Vector c(n, side);
          for (std::size_t i = 0; i + 1 < n; ++i) {
            const double r = rng(-spread, spread);
            c[i] *= std::exp(r);
            c[n - 1] *= std::exp(-r);
          }
          if (*std::min_element(c.begin(), c.end()) < c_min * (1.0 - 1e-12)) continue;
          Vector center;
          if (!place(box, reach_of(basis.generators(), c), rng, center)) continue;
          const Vector kc = basis.coordinates(center);
          bool overlap = false;
          for (std::size_t q = 0; q < centers_k.size() && !overlap; ++q) {
            bool sep = false;
            for (std::size_t i = 0; i < n && !sep; ++i)
              sep = std::abs(kc[i] - centers_k[q][i]) >= c[i] + halves[q][i];
            overlap = !sep;
          }
          if (overlap) continue;
          Parallelogram P{center, c, basis.generators()};
          sum += std::abs(premeasure(F, P));
          area += P.measure();
          centers_k.push_back(kc);
          halves.push_back(std::move(c));
          break;
        }
      }
      ++row.collections;
      if (sum > row.max_sum_abs_nu0 || col == 0) {
        row.max_sum_abs_nu0 = sum;
        row.area_at_max = area;
      }
    }
    result.rows.push_back(row);
  }
  if (result.rows.empty())
    throw Error(ErrorKind::InvalidArgument, "every eps is below the smallest lattice parallelogram");

  const double m = static_cast<double>(result.rows.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& r : result.rows) {
    sx += r.eps;
    sy += r.max_sum_abs_nu0;
    sxx += r.eps * r.eps;
    sxy += r.eps * r.max_sum_abs_nu0;
  }
  const double den = m * sxx - sx * sx;
  if (result.rows.size() == 1 || std::abs(den) < 1e-300) {
    result.slope = result.rows[0].max_sum_abs_nu0 / result.rows[0].eps;
    result.intercept = 0.0;
  } else {
    result.slope = (m * sxy - sx * sy) / den;
    result.intercept = (sy - result.slope * sx) / m;
  }
  return result;
}

double total_mass(const Sinogram& g) {
  const ConeBasis basis(g.frame);
  if (basis.dim() != g.field.dim()) throw Error(ErrorKind::DimensionMismatch, "frame dimension");
  const BoundingBox box = g.image_grid.bbox();
  const Vector start = basis.cover_vertex(box);
  const double T = basis.exit_parameter(start, box);
  const double step = g.quadrature_step > 0.0 ? g.quadrature_step : default_quadrature_step(g.image_grid);
  return line_integral([&](const Vector& p) { return eval(g.field, p); }, start, basis.axis(), T,
                       step, basis.axis_scale());
}

RangeReport range_membership(const Sinogram& g, const RangeTolerances& tol) {
  if (g.field.min() < -tol.negative_g)
    throw Error(ErrorKind::NegativeSinogram, "sinogram takes negative values");
  RangeReport report;
  report.seed = tol.seed;
  report.mass = total_mass(g);

  const ConeIntegralField F = accumulate(g);
  const double scale = std::max(max_abs(F.field), 1e-300);
  report.monotonicity = monotonicity_check(F, tol.monotonicity_samples, tol.seed);
  report.max_nu0_violation = std::min(0.0, report.monotonicity.min_nu0);
  report.abscont = abscont_check(F, tol.epsilons, tol.collections_per_eps, tol.seed + 1);
  report.samples_tested = report.monotonicity.tested;
  for (const auto& r : report.abscont.rows) report.samples_tested += r.collections * r.parallelograms;

  const DiffScheme scheme{tol.t > 0.0 ? tol.t : 4.0 * g.image_grid.min_spacing(), false,
                          DiffMode::mixed_partial};
  const ScalarField f_hat = invert_mixed_partial(F, scheme);
  std::vector<double> clamped(f_hat.samples().begin(), f_hat.samples().end());
  for (double& v : clamped) v = std::max(v, 0.0);
  const Sinogram again = forward(ScalarField(f_hat.grid(), std::move(clamped)), g.frame, g.quadrature_step);
  report.reprojection_l2_rel = compare_fields(again.field, g.field).l2_rel;

  report.is_in_range = report.monotonicity.min_nu0 >= -tol.nu0 * scale &&
                       report.abscont.passes(tol.abscont_intercept) &&
                       report.reprojection_l2_rel <= tol.reprojection_l2;
  return report;
}

Metadata to_json(const RangeReport& report) {
  Metadata j;
  j["is_in_range"] = report.is_in_range;
  j["max_nu0_violation"] = report.max_nu0_violation;
  j["mass"] = report.mass;
  j["reprojection_l2_rel"] = report.reprojection_l2_rel;
  j["samples_tested"] = report.samples_tested;
  j["seed"] = report.seed;
  j["abscont_slope"] = report.abscont.slope;
  j["abscont_intercept"] = report.abscont.intercept;
  if (!report.monotonicity.worst.center.empty()) {
    j["worst_parallelogram"] = {{"center", report.monotonicity.worst.center},
                                {"half_extents", report.monotonicity.worst.half_extents}};
  }
  return j;
}

}  // namespace vline
