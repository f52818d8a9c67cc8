#include "vline/field_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "vline/error.hpp"

namespace vline {

namespace fs = std::filesystem;

namespace {

constexpr int kFormatVersion = 1;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorKind::IoError, "read failed for " + path.string());
  return ss.str();
}

void append_le(std::string& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
  char buf[8];
  std::memcpy(buf, &bits, 8);
  out.append(buf, 8);
}

double read_le(const char* p) {
  std::uint64_t bits;
  std::memcpy(&bits, p, 8);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
  return std::bit_cast<double>(bits);
}

fs::path with_suffix(const fs::path& base, const char* suffix) {
  return fs::path(base.string() + suffix);
}

}  // namespace

fs::path field_base_path(const fs::path& path) {
  const auto ext = path.extension();
  if (ext == ".json" || ext == ".f64") return fs::path(path).replace_extension();
  return path;
}

void write_file_atomic(const fs::path& path, const std::string& bytes) {
  const fs::path tmp = fs::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorKind::IoError, "write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorKind::IoError, "cannot rename into " + path.string());
  }
}

Metadata grid_to_json(const Grid& grid) {
  Metadata j;
  j["dims"] = grid.counts;
  j["origin"] = grid.origin;
  j["spacing"] = grid.spacing;
  return j;
}

Grid grid_from_json(const Metadata& j) {
  try {
    return make_grid(j.at("origin").get<Vector>(), j.at("spacing").get<Vector>(),
                     j.at("dims").get<std::vector<std::size_t>>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::FormatError, std::string("bad grid metadata: ") + e.what());
  } catch (const Error& e) {
    throw Error(ErrorKind::FormatError, e.what());
  }
}

void store_field(const ScalarField& field, const fs::path& path, const Metadata& extra) {
  const fs::path base = field_base_path(path);
  Metadata meta = extra.is_object() ? extra : Metadata::object();
  meta["version"] = kFormatVersion;
  meta.update(grid_to_json(field.grid()));
  meta["order"] = "row-major-last-fastest";
  meta["dtype"] = "f64-le";
  if (!meta.contains("name")) meta["name"] = field.name();

  std::string raw;
  raw.reserve(field.samples().size() * 8);
  for (double v : field.samples()) append_le(raw, v);

  write_file_atomic(with_suffix(base, ".f64"), raw);
  write_file_atomic(with_suffix(base, ".json"), meta.dump(2) + "\n");
}

ScalarField load_field(const fs::path& path, Metadata* metadata) {
  const fs::path base = field_base_path(path);
  Metadata meta;
  try {
    meta = Metadata::parse(read_file(with_suffix(base, ".json")));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::FormatError, std::string("metadata is not JSON: ") + e.what());
  }
  if (!meta.is_object() || meta.value("version", 0) != kFormatVersion)
    throw Error(ErrorKind::FormatError, "unsupported field format version");
  if (meta.value("order", std::string()) != "row-major-last-fastest" ||
      meta.value("dtype", std::string()) != "f64-le")
    throw Error(ErrorKind::FormatError, "unsupported sample layout");
  Grid grid = grid_from_json(meta);

  const std::string raw = read_file(with_suffix(base, ".f64"));
  if (raw.size() != grid.size() * 8) {
    std::ostringstream os;
    os << "raw file holds " << raw.size() << " bytes, expected " << grid.size() * 8;
    throw Error(ErrorKind::FormatError, os.str());
  }
  std::vector<double> samples(grid.size());
  for (std::size_t i = 0; i < samples.size(); ++i) samples[i] = read_le(raw.data() + 8 * i);
  for (double v : samples)
    if (!std::isfinite(v)) throw Error(ErrorKind::FormatError, "non-finite sample");
  const std::string name = meta.value("name", std::string());
  if (metadata) *metadata = meta;
  return ScalarField(std::move(grid), std::move(samples), name);
}

void store_field_csv(const ScalarField& field, const fs::path& path) {
  const Grid& g = field.grid();
  std::ostringstream os;
  os << std::setprecision(17);
  os << (g.dim() == 2 ? "x,y,value\n" : "x,y,z,value\n");
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (double c : g.point(i)) os << c << ',';
    os << field[i] << '\n';
  }
  write_file_atomic(path, os.str());
}

ScalarField load_field_csv(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::FormatError, "empty CSV");
  std::size_t dim;
  if (line == "x,y,value") {
    dim = 2;
  } else if (line == "x,y,z,value") {
    dim = 3;
  } else {
    throw Error(ErrorKind::FormatError, "CSV header must be x,y[,z],value");
  }
  std::vector<Vector> points;
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    Vector row;
    while (std::getline(ls, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw Error(ErrorKind::FormatError, "bad CSV number '" + cell + "'");
      }
    }
    if (row.size() != dim + 1) throw Error(ErrorKind::FormatError, "wrong CSV column count");
    values.push_back(row.back());
    row.pop_back();
    points.push_back(std::move(row));
  }

  // Recover the lattice from the distinct coordinates on each axis.
  Vector origin(dim), spacing(dim);
  std::vector<std::size_t> counts(dim);
  for (std::size_t d = 0; d < dim; ++d) {
    Vector coords;
    for (const auto& p : points) coords.push_back(p[d]);
    std::sort(coords.begin(), coords.end());
    coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
    if (coords.size() < 2) throw Error(ErrorKind::FormatError, "CSV lattice too small");
    origin[d] = coords.front();
    counts[d] = coords.size();
    spacing[d] = (coords.back() - coords.front()) / static_cast<double>(coords.size() - 1);
  }
  Grid grid;
  try {
    grid = make_grid(origin, spacing, counts);
  } catch (const Error& e) {
    throw Error(ErrorKind::FormatError, e.what());
  }
  if (points.size() != grid.size())
    throw Error(ErrorKind::FormatError, "CSV rows do not form a complete lattice");
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Vector expect = grid.point(i);
    for (std::size_t d = 0; d < dim; ++d)
      if (std::abs(points[i][d] - expect[d]) > 1e-9 * grid.spacing[d])
        throw Error(ErrorKind::FormatError, "CSV rows are not in lattice order");
  }
  return ScalarField(std::move(grid), std::move(values), path.stem().string());
}

void export_pgm(const ScalarField& field, const fs::path& path) {
  if (field.dim() != 2) throw Error(ErrorKind::DimensionMismatch, "PGM export needs a 2-D field");
  const Grid& g = field.grid();
  const std::size_t nx = g.counts[0];
  const std::size_t ny = g.counts[1];
  const double lo = field.min();
  const double hi = field.max();
  std::ostringstream os;
  os << "P5\n" << nx << ' ' << ny << "\n255\n";
  std::string pixels(nx * ny, '\0');
  for (std::size_t row = 0; row < ny; ++row) {
    const std::size_t iy = ny - 1 - row;
    for (std::size_t ix = 0; ix < nx; ++ix) {
      const double v = field[ix * ny + iy];
      const double s = hi > lo ? (v - lo) / (hi - lo) : 0.0;
      pixels[row * nx + ix] = static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * s)));
    }
  }
  write_file_atomic(path, os.str() + pixels);
}

}  // namespace vline
