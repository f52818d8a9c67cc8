#pragma once

#include <filesystem>

#include "json.hpp"
#include "vline/field.hpp"

namespace vline {

using Metadata = nlohmann::json;

// A field is stored as a pair <base>.json (metadata) and <base>.f64 (raw
// little-endian doubles, row-major, last axis fastest). Paths passed here may
// name either file or the bare base.
std::filesystem::path field_base_path(const std::filesystem::path& path);

// Keys of `extra` are merged into the metadata; the layout keys always win.
// Both files are written to temporaries and renamed into place.
void store_field(const ScalarField& field, const std::filesystem::path& path,
                 const Metadata& extra = Metadata::object());
ScalarField load_field(const std::filesystem::path& path, Metadata* metadata = nullptr);

Metadata grid_to_json(const Grid& grid);
Grid grid_from_json(const Metadata& json);

// Header "x,y[,z],value", one lattice point per row in storage order,
// 17 significant digits.
void store_field_csv(const ScalarField& field, const std::filesystem::path& path);
ScalarField load_field_csv(const std::filesystem::path& path);

// 8-bit binary PGM of a 2-D field, linear min-max scaling, top row = max y.
void export_pgm(const ScalarField& field, const std::filesystem::path& path);

// Writes `bytes` to a sibling temporary and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);

}  // namespace vline
