#pragma once

#include <filesystem>
#include <optional>
#include <string_view>

#include "cfreg/eval.hpp"
#include "cfreg/point_set.hpp"

namespace cfreg {

enum class FileFormat { XYZ, CSV, PLYAscii };

/// From the extension (.xyz, .csv, .ply); UnsupportedFormat otherwise.
FileFormat infer_format(const std::filesystem::path& path);
FileFormat parse_format(std::string_view name);

PointSet read_points(const std::filesystem::path& path,
                     std::optional<FileFormat> format = std::nullopt);

/// 17 significant digits, one point per newline-terminated row.
void write_points(const PointSet& ps, const std::filesystem::path& path,
                  std::optional<FileFormat> format = std::nullopt);

/// Pairing files hold one "deformed_index target_index" pair per line.
Correspondence read_pairs(const std::filesystem::path& path);
void write_pairs(const Correspondence& corr, const std::filesystem::path& path);

}  // namespace cfreg
