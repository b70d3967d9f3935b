#include "cfreg/io.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cfreg/error.hpp"

namespace cfreg {
namespace {

using Index = Eigen::Index;

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool parse_double(std::string_view token, double& out) {
  token = trim(token);
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  if (token.empty()) return false;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
  return ec == std::errc() && ptr == token.data() + token.size();
}

std::vector<std::string_view> split_whitespace(std::string_view line) {
  std::vector<std::string_view> out;
  size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  size_t start = 0;
  for (size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      out.push_back(trim(line.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

[[noreturn]] void parse_error(const std::filesystem::path& path, size_t line, const std::string& what) {
  throw Error(ErrorKind::ParseError, path.string() + ":" + std::to_string(line) + ": " + what);
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open '" + path.string() + "' for reading");
  return in;
}

/// Accumulates rows and enforces a single dimension.
class RowCollector {
 public:
  explicit RowCollector(const std::filesystem::path& path) : path_(path) {}

  void add(const std::vector<double>& row, size_t line) {
    if (dim_ == 0) {
      dim_ = row.size();
    } else if (row.size() != dim_) {
      throw Error(ErrorKind::MixedDimensions,
                  path_.string() + ":" + std::to_string(line) + ": expected " + std::to_string(dim_) +
                      " coordinates, found " + std::to_string(row.size()));
    }
    values_.insert(values_.end(), row.begin(), row.end());
  }

  PointSet finish() const {
    if (dim_ == 0) throw Error(ErrorKind::ParseError, path_.string() + ": no points found");
    const auto rows = static_cast<Index>(values_.size() / dim_);
    Eigen::MatrixXd pts(rows, static_cast<Index>(dim_));
    for (Index i = 0; i < rows; ++i) {
      for (Index k = 0; k < pts.cols(); ++k) pts(i, k) = values_[static_cast<size_t>(i) * dim_ + static_cast<size_t>(k)];
    }
    return PointSet(std::move(pts));
  }

 private:
  const std::filesystem::path& path_;
  size_t dim_ = 0;
  std::vector<double> values_;
};

PointSet read_xyz(const std::filesystem::path& path) {
  auto in = open_input(path);
  RowCollector rows(path);
  std::string line;
  std::vector<double> row;
  for (size_t number = 1; std::getline(in, line); ++number) {
    std::string_view view(line);
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    const auto tokens = split_whitespace(view);
    if (tokens.empty()) continue;
    row.clear();
    for (const auto token : tokens) {
      double v = 0.0;
      if (!parse_double(token, v)) parse_error(path, number, "not a number: '" + std::string(token) + "'");
      row.push_back(v);
    }
    rows.add(row, number);
  }
  return rows.finish();
}

PointSet read_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  RowCollector rows(path);
  std::string line;
  std::vector<double> row;
  bool first = true;
  for (size_t number = 1; std::getline(in, line); ++number) {
    if (trim(line).empty()) continue;
    const auto fields = split_commas(line);
    row.clear();
    bool numeric = true;
    for (const auto field : fields) {
      double v = 0.0;
      if (!parse_double(field, v)) {
        numeric = false;
        break;
      }
      row.push_back(v);
    }
    if (!numeric) {
      if (first) {
        first = false;  // header row
        continue;
      }
      parse_error(path, number, "non-numeric field");
    }
    first = false;
    rows.add(row, number);
  }
  return rows.finish();
}

struct PlyProperty {
  std::string name;
  bool is_list = false;
};

struct PlyElement {
  std::string name;
  Index count = 0;
  std::vector<PlyProperty> properties;
};

PointSet read_ply(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::string line;
  size_t number = 0;
  auto next_line = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };

  if (!next_line() || trim(line) != "ply") parse_error(path, 1, "missing 'ply' magic");
  std::vector<PlyElement> elements;
  bool have_format = false;
  for (;;) {
    if (!next_line()) parse_error(path, number, "header ended without end_header");
    const auto tokens = split_whitespace(line);
    if (tokens.empty()) continue;
    const std::string_view key = tokens[0];
    if (key == "end_header") break;
    if (key == "comment" || key == "obj_info") continue;
    if (key == "format") {
      if (tokens.size() < 2) parse_error(path, number, "malformed format line");
      if (tokens[1] != "ascii") {
        throw Error(ErrorKind::UnsupportedFormat, path.string() + ": only ASCII PLY is supported, found '" +
                                                      std::string(tokens[1]) + "'");
      }
      have_format = true;
    } else if (key == "element") {
      if (tokens.size() != 3) parse_error(path, number, "malformed element line");
      PlyElement element;
      element.name = std::string(tokens[1]);
      long long count = 0;
      const auto [ptr, ec] = std::from_chars(tokens[2].data(), tokens[2].data() + tokens[2].size(), count);
      if (ec != std::errc() || ptr != tokens[2].data() + tokens[2].size() || count < 0) {
        parse_error(path, number, "bad element count");
      }
      element.count = static_cast<Index>(count);
      elements.push_back(std::move(element));
    } else if (key == "property") {
      if (elements.empty()) parse_error(path, number, "property before any element");
      if (tokens.size() == 5 && tokens[1] == "list") {
        elements.back().properties.push_back({std::string(tokens[4]), true});
      } else if (tokens.size() == 3) {
        elements.back().properties.push_back({std::string(tokens[2]), false});
      } else {
        parse_error(path, number, "malformed property line");
      }
    } else {
      parse_error(path, number, "unknown header keyword '" + std::string(key) + "'");
    }
  }
  if (!have_format) parse_error(path, number, "header has no format line");

  const auto vertex = std::find_if(elements.begin(), elements.end(),
                                   [](const PlyElement& e) { return e.name == "vertex"; });
  if (vertex == elements.end()) parse_error(path, number, "no vertex element");

  std::array<int, 3> axis{-1, -1, -1};
  for (size_t p = 0; p < vertex->properties.size(); ++p) {
    const auto& prop = vertex->properties[p];
    if (prop.is_list) continue;
    if (prop.name == "x") axis[0] = static_cast<int>(p);
    if (prop.name == "y") axis[1] = static_cast<int>(p);
    if (prop.name == "z") axis[2] = static_cast<int>(p);
  }
  if (axis[0] < 0 || axis[1] < 0) parse_error(path, number, "vertex element lacks x/y properties");
  const Index dim = axis[2] < 0 ? 2 : 3;
  if (vertex->count < 1) parse_error(path, number, "vertex element is empty");

  Eigen::MatrixXd pts(vertex->count, dim);
  for (const auto& element : elements) {
    for (Index row = 0; row < element.count; ++row) {
      do {
        if (!next_line()) parse_error(path, number, "unexpected end of file in element '" + element.name + "'");
      } while (trim(line).empty());
      if (&element != &*vertex) continue;
      const auto tokens = split_whitespace(line);
      std::vector<double> values;
      size_t t = 0;
      for (const auto& prop : element.properties) {
        if (t >= tokens.size()) parse_error(path, number, "too few values on vertex line");
        double v = 0.0;
        if (!parse_double(tokens[t], v)) parse_error(path, number, "not a number: '" + std::string(tokens[t]) + "'");
        ++t;
        if (prop.is_list) {
          t += static_cast<size_t>(v);
          values.push_back(0.0);
        } else {
          values.push_back(v);
        }
      }
      if (t != tokens.size()) parse_error(path, number, "unexpected extra values on vertex line");
      for (Index k = 0; k < dim; ++k) pts(row, k) = values[static_cast<size_t>(axis[static_cast<size_t>(k)])];
    }
  }
  return PointSet(std::move(pts));
}

void format_number(std::string& out, double v) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 17);
  out.append(buf.data(), ptr);
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot open '" + path.string() + "' for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.flush();
  if (!out) throw Error(ErrorKind::IoError, "failed writing '" + path.string() + "'");
}

}  // namespace

FileFormat infer_format(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  if (ext == ".xyz") return FileFormat::XYZ;
  if (ext == ".csv") return FileFormat::CSV;
  if (ext == ".ply") return FileFormat::PLYAscii;
  throw Error(ErrorKind::UnsupportedFormat, "cannot infer format from '" + path.string() + "'");
}

FileFormat parse_format(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  if (lower == "xyz") return FileFormat::XYZ;
  if (lower == "csv") return FileFormat::CSV;
  if (lower == "ply") return FileFormat::PLYAscii;
  throw Error(ErrorKind::UnsupportedFormat, "unknown format '" + std::string(name) + "'");
}

PointSet read_points(const std::filesystem::path& path, std::optional<FileFormat> format) {
  switch (format ? *format : infer_format(path)) {
    case FileFormat::XYZ: return read_xyz(path);
    case FileFormat::CSV: return read_csv(path);
    case FileFormat::PLYAscii: return read_ply(path);
  }
  throw Error(ErrorKind::UnsupportedFormat, "unknown format");
}

void write_points(const PointSet& ps, const std::filesystem::path& path, std::optional<FileFormat> format) {
  const FileFormat fmt = format ? *format : infer_format(path);
  const Index dim = ps.dim();
  std::string out;
  out.reserve(static_cast<size_t>(ps.size() * dim) * 26 + 128);
  char separator = ' ';
  switch (fmt) {
    case FileFormat::XYZ:
      break;
    case FileFormat::CSV:
      separator = ',';
      for (Index k = 0; k < dim; ++k) {
        if (k > 0) out += ',';
        out += dim <= 3 ? std::string(1, "xyz"[k]) : "c" + std::to_string(k);
      }
      out += '\n';
      break;
    case FileFormat::PLYAscii:
      if (dim != 3) {
        throw Error(ErrorKind::UnsupportedDimension, "PLY output needs 3D points, got n = " + std::to_string(dim));
      }
      out += "ply\nformat ascii 1.0\nelement vertex " + std::to_string(ps.size()) +
             "\nproperty float x\nproperty float y\nproperty float z\nend_header\n";
      break;
  }
  for (Index i = 0; i < ps.size(); ++i) {
    for (Index k = 0; k < dim; ++k) {
      if (k > 0) out += separator;
      format_number(out, ps.points()(i, k));
    }
    out += '\n';
  }
  write_file(path, out);
}

Correspondence read_pairs(const std::filesystem::path& path) {
  auto in = open_input(path);
  Correspondence corr;
  corr.mode = CorrespondenceMode::GroundTruth;
  std::string line;
  for (size_t number = 1; std::getline(in, line); ++number) {
    std::string_view view(line);
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    const auto tokens = split_whitespace(view);
    if (tokens.empty()) continue;
    if (tokens.size() != 2) parse_error(path, number, "expected two indices");
    std::array<long long, 2> idx{};
    for (size_t t = 0; t < 2; ++t) {
      const auto [ptr, ec] = std::from_chars(tokens[t].data(), tokens[t].data() + tokens[t].size(), idx[t]);
      if (ec != std::errc() || ptr != tokens[t].data() + tokens[t].size() || idx[t] < 0) {
        parse_error(path, number, "bad index '" + std::string(tokens[t]) + "'");
      }
    }
    corr.pairs.emplace_back(static_cast<Index>(idx[0]), static_cast<Index>(idx[1]));
  }
  return corr;
}

void write_pairs(const Correspondence& corr, const std::filesystem::path& path) {
  std::ostringstream out;
  for (const auto& [a, b] : corr.pairs) out << a << ' ' << b << '\n';
  write_file(path, out.str());
}

}  // namespace cfreg
