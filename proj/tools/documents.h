#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>

#include "json.hpp"

#include "gctr/benchgen.h"
#include "gctr/geometry.h"
#include "gctr/icp.h"
#include "gctr/metrics.h"
#include "gctr/register.h"

namespace gctr::cli {

// Everything in this file throws Error(kParseError) on malformed input and
// Error(kIoError) on unreadable files.

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

struct TransformDocument {
  SimilarityTransform transform = SimilarityTransform::identity();
  std::string method;
  double runtime_seconds = 0.0;
  bool converged = false;
};

// {"matrix": [16, row major], "s", "r": [9, row major], "t": [3], "method",
//  "runtime_seconds", "converged"}. `extra` fields are merged in last.
nlohmann::json to_json(const TransformDocument& doc,
                       const nlohmann::json& extra = nlohmann::json::object());
// Reads s/r/t when present, otherwise decomposes "matrix". A rotation that is
// orthonormal only to about 1e-6 (hand-edited files) is projected onto SO(3).
TransformDocument transform_from_json(const nlohmann::json& j);

nlohmann::json to_json(const RegistrationReport& report);

struct ToolConfig {
  GctrConfig gctr;
  IcpConfig icp;
};

// {"gctr": {...GctrConfig fields}, "icp": {...IcpConfig fields}}; both
// sections optional, unknown keys rejected.
ToolConfig tool_config_from_json(const nlohmann::json& j);

// Perturbation recipe for the benchmark subcommand. Per-pair seeds drive the
// random parts of the planted transform.
struct BenchmarkRecipe {
  CrossSourceSpec spec;        // transform and seed are filled per pair
  std::size_t points = 2000;   // builtin shape sample count
  bool random_rotation = true;
  Matrix3 rotation = Matrix3::Identity();  // used when random_rotation is off
  double scale = 1.0;
  std::optional<std::pair<double, double>> scale_range;  // overrides scale
  double translation_sigma = 0.5;  // per axis, in units of the base diameter
};

// Keys: the CrossSourceSpec fields (density_keep_a, ..., shared_subsampling)
// plus points, random_rotation, rotation[9], scale, scale_range[2],
// translation_sigma. Unknown keys rejected.
BenchmarkRecipe recipe_from_json(const nlohmann::json& j);

// Planted spec for pair `seed`.
CrossSourceSpec planted_spec(const BenchmarkRecipe& recipe, double base_diameter,
                             std::uint64_t seed);

// "%.17g", with "inf", "-inf" and "nan" spelled out.
std::string format_number(double value);

}  // namespace gctr::cli
