#pragma once

#include <filesystem>
#include <string_view>

#include "gctr/geometry.h"

namespace gctr {

enum class CloudFormat {
  kAuto,         // by extension on load (.ply reads the header's format)
  kPlyAscii,
  kPlyBinaryLE,  // vertex x/y/z written as float32
  kXyz,          // "x y z" per line, '#' starts a comment
};

// Accepts "auto", "ply-ascii", "ply-binary-le", "xyz".
// Throws Error(kUnsupportedFormat).
CloudFormat parse_cloud_format(std::string_view name);
std::string_view to_string(CloudFormat format);

// Reads vertex positions; other properties and elements are ignored. Throws
// ParseError (line or byte offset), Error(kUnsupportedFormat) or
// Error(kIoError).
PointCloud load_cloud(const std::filesystem::path& path,
                      CloudFormat format = CloudFormat::kAuto);

// kAuto picks the format from the extension (.ply -> binary). Throws
// Error(kIoError).
void write_cloud(const PointCloud& cloud, const std::filesystem::path& path,
                 CloudFormat format = CloudFormat::kAuto);

}  // namespace gctr
