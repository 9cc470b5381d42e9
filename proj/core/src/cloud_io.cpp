#include "gctr/cloud_io.h"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gctr/error.h"

namespace gctr {
namespace {

std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t k = 0;
  while (k < line.size()) {
    while (k < line.size() && std::isspace(static_cast<unsigned char>(line[k]))) ++k;
    const std::size_t start = k;
    while (k < line.size() && !std::isspace(static_cast<unsigned char>(line[k]))) ++k;
    if (k > start) out.push_back(line.substr(start, k - start));
  }
  return out;
}

std::optional<double> parse_double(std::string_view token) {
  double value = 0.0;
  const auto* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

// Line iterator that tracks 1-based line numbers and strips '\r'.
class Lines {
 public:
  Lines(std::string_view text, std::size_t offset = 0, std::size_t first_line = 1)
      : text_(text), pos_(offset), line_(first_line - 1) {}

  bool next(std::string_view& out) {
    if (pos_ >= text_.size()) return false;
    const std::size_t eol = text_.find('\n', pos_);
    const std::size_t end = eol == std::string_view::npos ? text_.size() : eol;
    out = text_.substr(pos_, end - pos_);
    if (!out.empty() && out.back() == '\r') out.remove_suffix(1);
    pos_ = eol == std::string_view::npos ? text_.size() : eol + 1;
    ++line_;
    return true;
  }

  std::size_t line() const noexcept { return line_; }
  std::size_t offset() const noexcept { return pos_; }

 private:
  std::string_view text_;
  std::size_t pos_;
  std::size_t line_;
};

PointCloud parse_xyz(std::string_view text) {
  std::vector<Point3> points;
  Lines lines(text);
  std::string_view line;
  while (lines.next(line)) {
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    const auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    if (tokens.size() < 3) {
      throw ParseError(ParseError::Unit::kLine, lines.line(), "expected 'x y z'");
    }
    Point3 p;
    for (int d = 0; d < 3; ++d) {
      const auto v = parse_double(tokens[static_cast<std::size_t>(d)]);
      if (!v || !std::isfinite(*v)) {
        throw ParseError(ParseError::Unit::kLine, lines.line(),
                         "bad coordinate '" + std::string(tokens[static_cast<std::size_t>(d)]) + "'");
      }
      p[d] = *v;
    }
    points.push_back(p);
  }
  if (points.empty()) throw ParseError(ParseError::Unit::kLine, lines.line(), "no points");
  return PointCloud(std::move(points));
}

enum class ScalarType { kInt8, kUInt8, kInt16, kUInt16, kInt32, kUInt32, kFloat32, kFloat64 };

std::optional<ScalarType> scalar_type(std::string_view name) {
  if (name == "char" || name == "int8") return ScalarType::kInt8;
  if (name == "uchar" || name == "uint8") return ScalarType::kUInt8;
  if (name == "short" || name == "int16") return ScalarType::kInt16;
  if (name == "ushort" || name == "uint16") return ScalarType::kUInt16;
  if (name == "int" || name == "int32") return ScalarType::kInt32;
  if (name == "uint" || name == "uint32") return ScalarType::kUInt32;
  if (name == "float" || name == "float32") return ScalarType::kFloat32;
  if (name == "double" || name == "float64") return ScalarType::kFloat64;
  return std::nullopt;
}

std::size_t scalar_size(ScalarType t) {
  switch (t) {
    case ScalarType::kInt8:
    case ScalarType::kUInt8: return 1;
    case ScalarType::kInt16:
    case ScalarType::kUInt16: return 2;
    case ScalarType::kInt32:
    case ScalarType::kUInt32:
    case ScalarType::kFloat32: return 4;
    case ScalarType::kFloat64: return 8;
  }
  return 0;
}

template <typename T>
T load_le(const char* p) {
  T value;
  std::memcpy(&value, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
    auto* bytes = reinterpret_cast<unsigned char*>(&value);
    std::reverse(bytes, bytes + sizeof(T));
  }
  return value;
}

double load_scalar(ScalarType t, const char* p) {
  switch (t) {
    case ScalarType::kInt8: return load_le<std::int8_t>(p);
    case ScalarType::kUInt8: return load_le<std::uint8_t>(p);
    case ScalarType::kInt16: return load_le<std::int16_t>(p);
    case ScalarType::kUInt16: return load_le<std::uint16_t>(p);
    case ScalarType::kInt32: return load_le<std::int32_t>(p);
    case ScalarType::kUInt32: return load_le<std::uint32_t>(p);
    case ScalarType::kFloat32: return load_le<float>(p);
    case ScalarType::kFloat64: return load_le<double>(p);
  }
  return 0.0;
}

struct PlyProperty {
  std::string name;
  ScalarType type;
  std::optional<ScalarType> list_count_type;
};

struct PlyElement {
  std::string name;
  std::size_t count;
  std::vector<PlyProperty> properties;
};

struct PlyHeader {
  bool binary = false;
  std::vector<PlyElement> elements;
  std::size_t body_offset = 0;
  std::size_t body_line = 0;
};

PlyHeader parse_ply_header(std::string_view text) {
  PlyHeader header;
  Lines lines(text);
  std::string_view line;
  if (!lines.next(line) || line != "ply") {
    throw ParseError(ParseError::Unit::kLine, 1, "missing 'ply' magic");
  }
  bool have_format = false;
  for (;;) {
    if (!lines.next(line)) {
      throw ParseError(ParseError::Unit::kLine, lines.line(), "missing end_header");
    }
    const auto tokens = split_ws(line);
    if (tokens.empty() || tokens[0] == "comment" || tokens[0] == "obj_info") continue;
    if (tokens[0] == "end_header") break;
    if (tokens[0] == "format") {
      if (tokens.size() != 3) {
        throw ParseError(ParseError::Unit::kLine, lines.line(), "bad format line");
      }
      if (tokens[1] == "ascii") {
        header.binary = false;
      } else if (tokens[1] == "binary_little_endian") {
        header.binary = true;
      } else {
        throw Error(ErrorCode::kUnsupportedFormat,
                    "PLY format '" + std::string(tokens[1]) + "' is not supported");
      }
      have_format = true;
    } else if (tokens[0] == "element") {
      std::size_t count = 0;
      if (tokens.size() != 3 ||
          std::from_chars(tokens[2].data(), tokens[2].data() + tokens[2].size(), count).ec !=
              std::errc()) {
        throw ParseError(ParseError::Unit::kLine, lines.line(), "bad element line");
      }
      header.elements.push_back({std::string(tokens[1]), count, {}});
    } else if (tokens[0] == "property") {
      if (header.elements.empty()) {
        throw ParseError(ParseError::Unit::kLine, lines.line(), "property before element");
      }
      PlyProperty prop;
      if (tokens.size() == 5 && tokens[1] == "list") {
        const auto count_type = scalar_type(tokens[2]);
        const auto item_type = scalar_type(tokens[3]);
        if (!count_type || !item_type) {
          throw ParseError(ParseError::Unit::kLine, lines.line(), "bad list property type");
        }
        prop = {std::string(tokens[4]), *item_type, count_type};
      } else if (tokens.size() == 3) {
        const auto type = scalar_type(tokens[1]);
        if (!type) {
          throw ParseError(ParseError::Unit::kLine, lines.line(),
                           "unknown property type '" + std::string(tokens[1]) + "'");
        }
        prop = {std::string(tokens[2]), *type, std::nullopt};
      } else {
        throw ParseError(ParseError::Unit::kLine, lines.line(), "bad property line");
      }
      header.elements.back().properties.push_back(std::move(prop));
    } else {
      throw ParseError(ParseError::Unit::kLine, lines.line(),
                       "unexpected header keyword '" + std::string(tokens[0]) + "'");
    }
  }
  if (!have_format) {
    throw ParseError(ParseError::Unit::kLine, lines.line(), "missing format line");
  }
  header.body_offset = lines.offset();
  header.body_line = lines.line() + 1;
  return header;
}

struct VertexLayout {
  std::size_t element = 0;
  std::array<std::size_t, 3> xyz{};
};

VertexLayout vertex_layout(const PlyHeader& header) {
  for (std::size_t e = 0; e < header.elements.size(); ++e) {
    if (header.elements[e].name != "vertex") continue;
    VertexLayout layout{e, {}};
    const auto& props = header.elements[e].properties;
    const char* names[3] = {"x", "y", "z"};
    for (int d = 0; d < 3; ++d) {
      const auto it = std::find_if(props.begin(), props.end(), [&](const PlyProperty& p) {
        return p.name == names[d] && !p.list_count_type;
      });
      if (it == props.end()) {
        throw ParseError(ParseError::Unit::kLine, 1,
                         std::string("vertex element lacks scalar property ") + names[d]);
      }
      layout.xyz[static_cast<std::size_t>(d)] = static_cast<std::size_t>(it - props.begin());
    }
    if (header.elements[e].count == 0) {
      throw ParseError(ParseError::Unit::kLine, 1, "vertex element is empty");
    }
    return layout;
  }
  throw ParseError(ParseError::Unit::kLine, 1, "no vertex element");
}

std::vector<Point3> read_ply_binary(std::string_view data, const PlyHeader& header,
                                    const VertexLayout& layout) {
  std::size_t pos = header.body_offset;
  auto need = [&](std::size_t bytes) {
    if (data.size() - pos < bytes) {
      throw ParseError(ParseError::Unit::kByte, pos,
                       "file truncated: need " + std::to_string(bytes) + " more bytes");
    }
  };
  std::vector<Point3> points;
  for (std::size_t e = 0; e < header.elements.size(); ++e) {
    const PlyElement& element = header.elements[e];
    const bool is_vertex = e == layout.element;
    if (is_vertex) points.reserve(std::min(element.count, (data.size() - pos) / 4));
    std::vector<double> values(element.properties.size(), 0.0);
    for (std::size_t n = 0; n < element.count; ++n) {
      for (std::size_t k = 0; k < element.properties.size(); ++k) {
        const PlyProperty& prop = element.properties[k];
        if (prop.list_count_type) {
          const std::size_t cs = scalar_size(*prop.list_count_type);
          need(cs);
          const double items = load_scalar(*prop.list_count_type, data.data() + pos);
          if (items < 0) throw ParseError(ParseError::Unit::kByte, pos, "negative list size");
          pos += cs;
          const std::size_t bytes = static_cast<std::size_t>(items) * scalar_size(prop.type);
          need(bytes);
          pos += bytes;
        } else {
          const std::size_t size = scalar_size(prop.type);
          need(size);
          values[k] = load_scalar(prop.type, data.data() + pos);
          pos += size;
        }
      }
      if (is_vertex) {
        const Point3 p(values[layout.xyz[0]], values[layout.xyz[1]], values[layout.xyz[2]]);
        if (!p.allFinite()) {
          throw ParseError(ParseError::Unit::kByte, pos, "non-finite vertex coordinate");
        }
        points.push_back(p);
      }
    }
  }
  return points;
}

std::vector<Point3> read_ply_ascii(std::string_view text, const PlyHeader& header,
                                   const VertexLayout& layout) {
  Lines lines(text, header.body_offset, header.body_line);
  std::vector<Point3> points;
  std::string_view line;
  for (std::size_t e = 0; e < header.elements.size(); ++e) {
    const PlyElement& element = header.elements[e];
    const bool is_vertex = e == layout.element;
    for (std::size_t n = 0; n < element.count; ++n) {
      do {
        if (!lines.next(line)) {
          throw ParseError(ParseError::Unit::kLine, lines.line() + 1,
                           "unexpected end of file in element '" + element.name + "'");
        }
      } while (split_ws(line).empty());
      const auto tokens = split_ws(line);
      std::vector<double> values(element.properties.size(), 0.0);
      std::size_t t = 0;
      auto take = [&]() -> double {
        if (t >= tokens.size()) {
          throw ParseError(ParseError::Unit::kLine, lines.line(), "too few values");
        }
        const auto v = parse_double(tokens[t]);
        if (!v) {
          throw ParseError(ParseError::Unit::kLine, lines.line(),
                           "bad number '" + std::string(tokens[t]) + "'");
        }
        ++t;
        return *v;
      };
      for (std::size_t k = 0; k < element.properties.size(); ++k) {
        if (element.properties[k].list_count_type) {
          const double items = take();
          if (items < 0) throw ParseError(ParseError::Unit::kLine, lines.line(), "negative list size");
          for (std::size_t m = 0; m < static_cast<std::size_t>(items); ++m) take();
        } else {
          values[k] = take();
        }
      }
      if (is_vertex) {
        const Point3 p(values[layout.xyz[0]], values[layout.xyz[1]], values[layout.xyz[2]]);
        if (!p.allFinite()) {
          throw ParseError(ParseError::Unit::kLine, lines.line(), "non-finite vertex coordinate");
        }
        points.push_back(p);
      }
    }
  }
  return points;
}

PointCloud parse_ply(std::string_view data) {
  const PlyHeader header = parse_ply_header(data);
  const VertexLayout layout = vertex_layout(header);
  std::vector<Point3> points = header.binary ? read_ply_binary(data, header, layout)
                                             : read_ply_ascii(data, header, layout);
  return PointCloud(std::move(points));
}

void write_ply(const PointCloud& cloud, std::ostream& out, bool binary) {
  out << "ply\n"
      << (binary ? "format binary_little_endian 1.0\n" : "format ascii 1.0\n")
      << "element vertex " << cloud.size() << "\n"
      << "property float x\nproperty float y\nproperty float z\n"
      << "end_header\n";
  if (binary) {
    std::vector<char> buffer(cloud.size() * 12);
    char* p = buffer.data();
    for (const auto& v : cloud) {
      for (int d = 0; d < 3; ++d) {
        float f = static_cast<float>(v[d]);
        if constexpr (std::endian::native == std::endian::big) {
          auto* bytes = reinterpret_cast<unsigned char*>(&f);
          std::reverse(bytes, bytes + sizeof(float));
        }
        std::memcpy(p, &f, sizeof(float));
        p += sizeof(float);
      }
    }
    out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
  } else {
    char line[96];
    for (const auto& v : cloud) {
      const int n = std::snprintf(line, sizeof(line), "%.9g %.9g %.9g\n",
                                  static_cast<double>(static_cast<float>(v.x())),
                                  static_cast<double>(static_cast<float>(v.y())),
                                  static_cast<double>(static_cast<float>(v.z())));
      out.write(line, n);
    }
  }
}

void write_xyz(const PointCloud& cloud, std::ostream& out) {
  char line[96];
  for (const auto& v : cloud) {
    const int n = std::snprintf(line, sizeof(line), "%.17g %.17g %.17g\n", v.x(), v.y(), v.z());
    out.write(line, n);
  }
}

}  // namespace

CloudFormat parse_cloud_format(std::string_view name) {
  if (name == "auto") return CloudFormat::kAuto;
  if (name == "ply-ascii") return CloudFormat::kPlyAscii;
  if (name == "ply-binary-le") return CloudFormat::kPlyBinaryLE;
  if (name == "xyz") return CloudFormat::kXyz;
  throw Error(ErrorCode::kUnsupportedFormat, "unknown cloud format '" + std::string(name) + "'");
}

std::string_view to_string(CloudFormat format) {
  switch (format) {
    case CloudFormat::kAuto: return "auto";
    case CloudFormat::kPlyAscii: return "ply-ascii";
    case CloudFormat::kPlyBinaryLE: return "ply-binary-le";
    case CloudFormat::kXyz: return "xyz";
  }
  return "auto";
}

PointCloud load_cloud(const std::filesystem::path& path, CloudFormat format) {
  if (path.empty()) throw Error(ErrorCode::kIoError, "empty path");
  if (format == CloudFormat::kAuto) {
    const std::string ext = lower_extension(path);
    if (ext == ".ply") {
      format = CloudFormat::kPlyBinaryLE;
    } else if (ext == ".xyz" || ext == ".txt" || ext == ".pts") {
      format = CloudFormat::kXyz;
    } else {
      throw Error(ErrorCode::kUnsupportedFormat,
                  "cannot infer format of '" + path.string() + "'");
    }
  }
  const std::string data = read_file(path);
  // Either PLY request honors the encoding declared in the header.
  return format == CloudFormat::kXyz ? parse_xyz(data) : parse_ply(data);
}

void write_cloud(const PointCloud& cloud, const std::filesystem::path& path,
                 CloudFormat format) {
  if (path.empty()) throw Error(ErrorCode::kIoError, "empty path");
  if (format == CloudFormat::kAuto) {
    const std::string ext = lower_extension(path);
    if (ext == ".ply") {
      format = CloudFormat::kPlyBinaryLE;
    } else if (ext == ".xyz" || ext == ".txt" || ext == ".pts") {
      format = CloudFormat::kXyz;
    } else {
      throw Error(ErrorCode::kUnsupportedFormat,
                  "cannot infer format of '" + path.string() + "'");
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write '" + path.string() + "'");
  if (format == CloudFormat::kXyz) {
    write_xyz(cloud, out);
  } else {
    write_ply(cloud, out, format == CloudFormat::kPlyBinaryLE);
  }
  out.flush();
  if (!out) throw Error(ErrorCode::kIoError, "write to '" + path.string() + "' failed");
}

}  // namespace gctr
