#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "vline/calculus.hpp"
#include "vline/error.hpp"
#include "vline/field_io.hpp"
#include "vline/forward.hpp"
#include "vline/frame_json.hpp"
#include "vline/range.hpp"

namespace {

using namespace vline;
using nlohmann::json;

constexpr int kOk = 0;
constexpr int kValidation = 1;
constexpr int kIo = 2;
constexpr int kTolerance = 3;

struct Usage : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::size_t> parse_grid(const std::string& text) {
  std::vector<std::size_t> counts;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, 'x')) {
    std::size_t used = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(part, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != part.size()) throw Usage("--grid: expected NxN or NxNxN, got '" + text + "'");
    counts.push_back(v);
  }
  if (counts.size() != 2 && counts.size() != 3)
    throw Usage("--grid: expected NxN or NxNxN, got '" + text + "'");
  return counts;
}

// "0.01" is absolute, "2dx" is a multiple of the smallest spacing.
double parse_length(const std::string& text, const Grid& grid, const char* flag) {
  std::string body = text;
  double unit = 1.0;
  if (body.size() > 2 && body.compare(body.size() - 2, 2, "dx") == 0) {
    body.resize(body.size() - 2);
    unit = grid.min_spacing();
  }
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(body, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != body.size() || !std::isfinite(v))
    throw Usage(std::string(flag) + ": expected a number or a multiple like 2dx, got '" + text + "'");
  return v * unit;
}

DiffMode parse_mode(const std::string& s) {
  if (s == "shrinking") return DiffMode::shrinking_average;
  if (s == "mixed") return DiffMode::mixed_partial;
  throw Usage("--mode: expected shrinking, mixed or alt, got '" + s + "'");
}

void print_json(const json& j) { std::cout << j.dump(2) << "\n"; }

json metrics_json(const FieldMetrics& m) {
  return {{"linf", m.linf}, {"l2_rel", m.l2_rel}, {"mean_err", m.mean_err}, {"count", m.count}};
}

// Values from --config fill every option the command line left unset.
void apply_config(CLI::App& sub, const std::string& path) {
  if (path.empty()) return;
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot read config " + path);
  json cfg;
  try {
    cfg = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::FormatError, std::string("config is not JSON: ") + e.what());
  }
  if (!cfg.is_object()) throw Error(ErrorKind::FormatError, "config must be a JSON object");
  for (const auto& [key, value] : cfg.items()) {
    CLI::Option* opt = sub.get_option_no_throw("--" + key);
    if (!opt) throw Usage("--config: unknown key '" + key + "'");
    if (opt->count() > 0) continue;
    std::string text;
    if (value.is_string()) {
      text = value.get<std::string>();
    } else if (value.is_boolean()) {
      text = value.get<bool>() ? "true" : "false";
    } else if (value.is_number() || value.is_object() || value.is_array()) {
      text = value.dump();
    } else {
      throw Usage("--config: unsupported value for '" + key + "'");
    }
    opt->add_result(text);
    opt->run_callback();
  }
}

void require_distinct(const std::string& in, const std::string& out) {
  if (field_base_path(in) == field_base_path(out))
    throw Usage("--output: must differ from the input path");
}

struct Common {
  std::string config;
};

struct PhantomArgs {
  std::string kind = "gaussian";
  std::string grid = "256x256";
  double amplitude = 1.0;
  std::vector<double> center;
  double width = 0.1;
  double radius = 0.25;
};

void add_phantom_options(CLI::App& sub, PhantomArgs& a, bool named_phantom) {
  sub.add_option(named_phantom ? "--phantom" : "--kind", a.kind,
                 "poly_example1, exp_example2, constant, gaussian, disk, product or bubble");
  sub.add_option("--grid", a.grid, "lattice size over the unit box, e.g. 256x256");
  sub.add_option("--amplitude", a.amplitude);
  sub.add_option("--center", a.center)->expected(2, 3);
  sub.add_option("--width", a.width, "gaussian standard deviation");
  sub.add_option("--radius", a.radius, "disk radius");
}

ScalarField build_phantom(const PhantomArgs& a) {
  const Grid grid = unit_grid(parse_grid(a.grid));
  PhantomSpec spec;
  spec.kind = parse_phantom_kind(a.kind);
  spec.amplitude = a.amplitude;
  spec.center = a.center;
  spec.width = a.width;
  spec.radius = a.radius;
  ScalarField f = make_phantom(spec, grid);
  f.set_name(a.kind);
  return f;
}

int run(int argc, char** argv) {
  CLI::App app{"Broken-ray transform toolkit"};
  app.require_subcommand(1);
  Common common;

  PhantomArgs ph;
  std::string out;
  auto* phantom = app.add_subcommand("phantom", "write an analytic phantom");
  add_phantom_options(*phantom, ph, false);
  phantom->add_option("-o,--output", out)->required();

  std::string in, frame_text = "perp", step_text;
  auto* fwd = app.add_subcommand("forward", "broken-ray transform of a field");
  fwd->add_option("-i,--input", in)->required();
  fwd->add_option("--frame", frame_text, "perp, inline JSON or @file");
  fwd->add_option("--step", step_text, "quadrature step, e.g. 0.5dx");
  fwd->add_option("-o,--output", out)->required();

  auto* acc = app.add_subcommand("accumulate", "cone integral from a sinogram");
  acc->add_option("-i,--input", in)->required();
  acc->add_option("--step", step_text);
  acc->add_option("-o,--output", out)->required();

  std::string mode = "mixed", t_text = "2dx";
  bool richardson = false;
  double y_max = NAN;
  auto* inv = app.add_subcommand("invert", "recover f from a cone integral (or a sinogram for alt)");
  inv->add_option("-i,--input", in)->required();
  inv->add_option("--mode", mode, "shrinking, mixed or alt");
  inv->add_option("--t", t_text, "stencil scale, e.g. 2dx");
  inv->add_flag("--richardson", richardson);
  inv->add_option("--ymax", y_max, "upper accumulation limit for alt");
  inv->add_option("-o,--output", out)->required();

  PhantomArgs rt_ph;
  rt_ph.kind = "poly_example1";
  double tolerance = 0.02, margin = 0.05;
  std::string outdir;
  auto* rt = app.add_subcommand("roundtrip", "forward, accumulate, invert and compare");
  add_phantom_options(*rt, rt_ph, true);
  rt->add_option("--frame", frame_text);
  rt->add_option("--step", step_text);
  rt->add_option("--mode", mode);
  rt->add_option("--t", t_text);
  rt->add_flag("--richardson", richardson);
  rt->add_option("--tolerance", tolerance, "largest accepted interior l2_rel");
  rt->add_option("--margin", margin, "interior margin as a fraction of the box");
  rt->add_option("--output-dir", outdir, "also store every intermediate field");

  PhantomArgs rc_ph;
  RangeTolerances rtol;
  std::string rc_t;
  auto* rc = app.add_subcommand("range-check", "range diagnostics for a sinogram");
  rc->add_option("-i,--input", in, "sinogram; without it one is computed from --phantom");
  add_phantom_options(*rc, rc_ph, true);
  rc->add_option("--frame", frame_text);
  rc->add_option("--seed", rtol.seed);
  rc->add_option("--samples", rtol.monotonicity_samples, "parallelograms for the monotonicity scan");
  rc->add_option("--collections", rtol.collections_per_eps);
  rc->add_option("--epsilons", rtol.epsilons);
  rc->add_option("--nu0-tolerance", rtol.nu0);
  rc->add_option("--intercept-tolerance", rtol.abscont_intercept);
  rc->add_option("--reprojection-tolerance", rtol.reprojection_l2);
  rc->add_option("--t", rc_t);
  rc->add_option("-o,--output", out, "also write the report here");

  std::string a_path, b_path;
  auto* cmp = app.add_subcommand("compare", "metrics between two fields on one lattice");
  cmp->add_option("a", a_path)->required();
  cmp->add_option("b", b_path)->required();
  double cmp_margin = 0.0;
  cmp->add_option("--margin", cmp_margin, "compare only the interior, as a fraction of the box");

  auto* pgm = app.add_subcommand("export-pgm", "8-bit grayscale preview of a 2-D field");
  pgm->add_option("-i,--input", in)->required();
  pgm->add_option("-o,--output", out)->required();

  for (auto* sub : {phantom, fwd, acc, inv, rt, rc, cmp, pgm})
    sub->add_option("--config", common.config, "JSON file with option values; flags win");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kValidation;
  }
  CLI::App* sub = app.get_subcommands().front();
  apply_config(*sub, common.config);

  if (sub == phantom) {
    const ScalarField f = build_phantom(ph);
    store_field(f, out, {{"role", "phantom"}, {"phantom", ph.kind}});
    return kOk;
  }
  if (sub == fwd) {
    require_distinct(in, out);
    const Frame frame = parse_frame_spec(frame_text);
    const ScalarField f = load_field(in);
    const double step = step_text.empty() ? 0.0 : parse_length(step_text, f.grid(), "--step");
    store_sinogram(forward(f, frame, step), out);
    return kOk;
  }
  if (sub == acc) {
    require_distinct(in, out);
    const Sinogram g = load_sinogram(in);
    const double step = step_text.empty() ? 0.0 : parse_length(step_text, g.image_grid, "--step");
    store_cone_integral(accumulate(g, step), out);
    return kOk;
  }
  if (sub == inv) {
    require_distinct(in, out);
    if (mode == "alt") {
      const Sinogram g = load_sinogram(in);
      const double h = parse_length(t_text, g.image_grid, "--t");
      store_field(invert_alt_known(g, y_max, h), out, {{"role", "reconstruction"}});
      return kOk;
    }
    const ConeIntegralField F = load_cone_integral(in);
    const DiffScheme scheme{parse_length(t_text, F.field.grid(), "--t"), richardson, parse_mode(mode)};
    store_field(invert(F, scheme), out, {{"role", "reconstruction"}});
    return kOk;
  }
  if (sub == rt) {
    const ScalarField f = build_phantom(rt_ph);
    const Frame frame = parse_frame_spec(frame_text);
    const double step = step_text.empty() ? 0.0 : parse_length(step_text, f.grid(), "--step");
    const double t = parse_length(t_text, f.grid(), "--t");
    const Sinogram g = forward(f, frame, step);
    ScalarField f_hat;
    std::optional<ConeIntegralField> F;
    if (mode == "alt") {
      f_hat = invert_alt_known(g, NAN, t);
    } else {
      F = accumulate(g);
      f_hat = invert(*F, {t, richardson, parse_mode(mode)});
    }
    const FieldMetrics m = compare_fields(f_hat, f, interior_region(f.grid(), margin));
    if (!outdir.empty()) {
      std::filesystem::create_directories(outdir);
      const std::filesystem::path dir(outdir);
      store_field(f, dir / "phantom", {{"role", "phantom"}});
      store_sinogram(g, dir / "sinogram");
      if (F) store_cone_integral(*F, dir / "cone_integral");
      store_field(f_hat, dir / "reconstruction", {{"role", "reconstruction"}});
    }
    json report = metrics_json(m);
    report["phantom"] = rt_ph.kind;
    report["frame"] = frame_to_json(frame);
    report["t"] = t;
    report["tolerance"] = tolerance;
    report["passed"] = m.l2_rel <= tolerance;
    print_json(report);
    return m.l2_rel <= tolerance ? kOk : kTolerance;
  }
  if (sub == rc) {
    Sinogram g = in.empty() ? forward(build_phantom(rc_ph), parse_frame_spec(frame_text))
                            : load_sinogram(in);
    if (!rc_t.empty()) rtol.t = parse_length(rc_t, g.image_grid, "--t");
    const RangeReport report = range_membership(g, rtol);
    const json j = to_json(report);
    if (!out.empty()) write_file_atomic(out, j.dump(2) + "\n");
    print_json(j);
    return report.is_in_range ? kOk : kTolerance;
  }
  if (sub == cmp) {
    const ScalarField a = load_field(a_path);
    const ScalarField b = load_field(b_path);
    print_json(metrics_json(cmp_margin > 0.0 ? compare_fields(a, b, interior_region(a.grid(), cmp_margin))
                                         : compare_fields(a, b)));
    return kOk;
  }
  if (sub == pgm) {
    export_pgm(load_field(in), out);
    return kOk;
  }
  return kValidation;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const Usage& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kValidation;
  } catch (const vline::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    const auto k = e.kind();
    return k == vline::ErrorKind::IoError || k == vline::ErrorKind::FormatError ? kIo : kValidation;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: IoError: " << e.what() << "\n";
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  }
}
