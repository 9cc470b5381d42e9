#include "documents.h"

#include <Eigen/SVD>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "gctr/error.h"

namespace gctr::cli {
namespace {

using nlohmann::json;

[[noreturn]] void parse_fail(const std::string& what) {
  throw Error(ErrorCode::kParseError, what);
}

void reject_unknown(const json& j, const std::set<std::string>& known,
                    const std::string& where) {
  if (!j.is_object()) parse_fail(where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) parse_fail("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read_field(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    parse_fail(std::string("field '") + key + "' has the wrong type");
  }
}

std::vector<double> read_numbers(const json& j, const char* key, std::size_t count) {
  if (!j.contains(key)) parse_fail(std::string("missing field '") + key + "'");
  const json& arr = j.at(key);
  if (!arr.is_array() || arr.size() != count) {
    parse_fail(std::string("field '") + key + "' must be an array of " +
               std::to_string(count) + " numbers");
  }
  std::vector<double> values;
  for (const auto& v : arr) {
    if (!v.is_number()) parse_fail(std::string("field '") + key + "' must hold numbers");
    values.push_back(v.get<double>());
  }
  return values;
}

Matrix3 nearest_rotation(const Matrix3& m) {
  const Eigen::JacobiSVD<Matrix3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Matrix3 d = Matrix3::Identity();
  d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0 ? -1.0 : 1.0;
  return svd.matrixU() * d * svd.matrixV().transpose();
}

Matrix3 rotation_from(const std::vector<double>& r) {
  Matrix3 m;
  for (int k = 0; k < 9; ++k) m(k / 3, k % 3) = r[static_cast<std::size_t>(k)];
  if (!m.allFinite()) parse_fail("rotation is not finite");
  const Matrix3 projected = nearest_rotation(m);
  if ((projected - m).norm() > 1e-6) parse_fail("r is not a rotation matrix");
  // Exact input passes through untouched.
  return (projected - m).norm() <= SimilarityTransform::kRotationTolerance ? m : projected;
}

json number_or_string(double v) {
  if (std::isfinite(v)) return v;
  return format_number(v);
}

}  // namespace

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParseError, path.string() + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write '" + path.string() + "'");
  out << text;
  if (!out.flush()) throw Error(ErrorCode::kIoError, "write to '" + path.string() + "' failed");
}

json to_json(const TransformDocument& doc, const json& extra) {
  const SimilarityTransform& t = doc.transform;
  const Matrix4 m = HomogeneousMatrix4(t).matrix();
  json matrix = json::array();
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) matrix.push_back(m(r, c));
  }
  json rotation = json::array();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) rotation.push_back(t.rotation()(r, c));
  }
  json out = {
      {"matrix", matrix},
      {"s", t.scale()},
      {"r", rotation},
      {"t", {t.translation().x(), t.translation().y(), t.translation().z()}},
      {"method", doc.method},
      {"runtime_seconds", doc.runtime_seconds},
      {"converged", doc.converged},
  };
  for (const auto& [key, value] : extra.items()) out[key] = value;
  return out;
}

TransformDocument transform_from_json(const json& j) {
  if (!j.is_object()) parse_fail("transform document must be an object");
  TransformDocument doc;
  try {
    if (j.contains("s") && j.contains("r") && j.contains("t")) {
      double s = 0.0;
      read_field(j, "s", s);
      const auto t = read_numbers(j, "t", 3);
      doc.transform = SimilarityTransform(s, rotation_from(read_numbers(j, "r", 9)),
                                          Point3(t[0], t[1], t[2]));
    } else {
      const auto m = read_numbers(j, "matrix", 16);
      Matrix3 sr;
      for (int k = 0; k < 9; ++k) sr(k / 3, k % 3) = m[static_cast<std::size_t>((k / 3) * 4 + k % 3)];
      if (std::abs(m[12]) + std::abs(m[13]) + std::abs(m[14]) > 1e-12 ||
          std::abs(m[15] - 1.0) > 1e-12) {
        parse_fail("matrix bottom row must be (0, 0, 0, 1)");
      }
      const double det = sr.determinant();
      if (!(det > 0.0)) parse_fail("matrix does not hold a positive-scale rotation");
      const double s = std::cbrt(det);
      const Matrix3 rot = sr / s;
      std::vector<double> row_major;
      for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) row_major.push_back(rot(a, b));
      }
      doc.transform = SimilarityTransform(s, rotation_from(row_major),
                                          Point3(m[3], m[7], m[11]));
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kParseError) throw;
    parse_fail(std::string("invalid transform: ") + e.what());
  }
  read_field(j, "method", doc.method);
  read_field(j, "runtime_seconds", doc.runtime_seconds);
  read_field(j, "converged", doc.converged);
  return doc;
}

json to_json(const RegistrationReport& report) {
  return {
      {"method", report.method},
      {"tm", report.tm},
      {"log_tm", number_or_string(report.log_tm)},
      {"log_base", "e"},
      {"r_err_deg", report.r_err_deg},
      {"t_err", report.t_err},
      {"s_err", report.s_err},
      {"runtime_seconds", report.runtime_seconds},
      {"converged", report.converged},
  };
}

ToolConfig tool_config_from_json(const json& j) {
  reject_unknown(j, {"gctr", "icp"}, "config");
  ToolConfig cfg;
  if (j.contains("gctr")) {
    const json& g = j.at("gctr");
    reject_unknown(g,
                   {"outlier_k", "outlier_std_ratio", "salient_frame", "cell_size",
                    "cell_divisions", "min_segment_fraction", "regrid_moving", "restarts",
                    "refine_levels", "polish_passes", "triplet_count", "pool_factor", "knn", "sigma",
                    "sigma_t", "power_tol", "power_max_iters", "unary_weight",
                    "initial_unary_weight", "balance_terms", "outer_tol", "outer_max_iters",
                    "top_r", "ransac_iters", "ransac_inlier_tol", "overlap_ratios", "seed"},
                   "config.gctr");
    GctrConfig& c = cfg.gctr;
    read_field(g, "outlier_k", c.outlier_k);
    read_field(g, "outlier_std_ratio", c.outlier_std_ratio);
    if (g.contains("salient_frame")) {
      std::string frame;
      read_field(g, "salient_frame", frame);
      if (frame == "principal") {
        c.salient_frame = SalientFrame::kPrincipal;
      } else if (frame == "axis_aligned") {
        c.salient_frame = SalientFrame::kAxisAligned;
      } else {
        parse_fail("salient_frame must be \"principal\" or \"axis_aligned\"");
      }
    }
    read_field(g, "cell_size", c.cell_size);
    read_field(g, "cell_divisions", c.cell_divisions);
    read_field(g, "min_segment_fraction", c.min_segment_fraction);
    read_field(g, "regrid_moving", c.regrid_moving);
    read_field(g, "restarts", c.restarts);
    read_field(g, "refine_levels", c.refine_levels);
    read_field(g, "polish_passes", c.polish_passes);
    read_field(g, "triplet_count", c.triplet_count);
    read_field(g, "pool_factor", c.pool_factor);
    read_field(g, "knn", c.knn);
    read_field(g, "sigma", c.sigma);
    read_field(g, "sigma_t", c.sigma_t);
    read_field(g, "power_tol", c.power_tol);
    read_field(g, "power_max_iters", c.power_max_iters);
    read_field(g, "unary_weight", c.unary_weight);
    read_field(g, "initial_unary_weight", c.initial_unary_weight);
    read_field(g, "balance_terms", c.balance_terms);
    read_field(g, "outer_tol", c.outer_tol);
    read_field(g, "outer_max_iters", c.outer_max_iters);
    read_field(g, "top_r", c.top_r);
    read_field(g, "ransac_iters", c.ransac_iters);
    read_field(g, "ransac_inlier_tol", c.ransac_inlier_tol);
    read_field(g, "overlap_ratios", c.overlap_ratios);
    read_field(g, "seed", c.seed);
  }
  if (j.contains("icp")) {
    const json& i = j.at("icp");
    reject_unknown(i,
                   {"max_iters", "convergence_tol", "max_correspondence_dist", "seed",
                    "downsample_threshold", "downsample_target"},
                   "config.icp");
    IcpConfig& c = cfg.icp;
    read_field(i, "max_iters", c.max_iters);
    read_field(i, "convergence_tol", c.convergence_tol);
    read_field(i, "max_correspondence_dist", c.max_correspondence_dist);
    read_field(i, "seed", c.seed);
    read_field(i, "downsample_threshold", c.downsample_threshold);
    read_field(i, "downsample_target", c.downsample_target);
  }
  try {
    cfg.gctr.validate();
    cfg.icp.validate();
  } catch (const Error& e) {
    parse_fail(std::string("invalid config: ") + e.what());
  }
  return cfg;
}

BenchmarkRecipe recipe_from_json(const json& j) {
  reject_unknown(j,
                 {"density_keep_a", "density_keep_b", "noise_sigma_a", "noise_sigma_b",
                  "outlier_frac", "crop_frac", "shared_subsampling", "points",
                  "random_rotation", "rotation", "scale", "scale_range",
                  "translation_sigma"},
                 "spec");
  BenchmarkRecipe recipe;
  CrossSourceSpec& s = recipe.spec;
  read_field(j, "density_keep_a", s.density_keep_a);
  read_field(j, "density_keep_b", s.density_keep_b);
  read_field(j, "noise_sigma_a", s.noise_sigma_a);
  read_field(j, "noise_sigma_b", s.noise_sigma_b);
  read_field(j, "outlier_frac", s.outlier_frac);
  read_field(j, "crop_frac", s.crop_frac);
  read_field(j, "shared_subsampling", s.shared_subsampling);
  read_field(j, "points", recipe.points);
  read_field(j, "random_rotation", recipe.random_rotation);
  if (j.contains("rotation")) {
    recipe.rotation = rotation_from(read_numbers(j, "rotation", 9));
    if (!j.contains("random_rotation")) recipe.random_rotation = false;
  }
  read_field(j, "scale", recipe.scale);
  if (j.contains("scale_range")) {
    const auto range = read_numbers(j, "scale_range", 2);
    if (!(range[0] > 0.0 && range[0] <= range[1])) {
      parse_fail("scale_range must satisfy 0 < lo <= hi");
    }
    recipe.scale_range = std::make_pair(range[0], range[1]);
  }
  read_field(j, "translation_sigma", recipe.translation_sigma);
  if (!(recipe.translation_sigma >= 0.0)) parse_fail("translation_sigma must be >= 0");
  if (recipe.points < 100) parse_fail("points must be >= 100");
  try {
    CrossSourceSpec probe = s;
    probe.transform = SimilarityTransform(
        recipe.scale_range ? recipe.scale_range->first : recipe.scale, Matrix3::Identity(),
        Point3::Zero());
    probe.validate();
    if (recipe.scale_range) {
      probe.transform = SimilarityTransform(recipe.scale_range->second, Matrix3::Identity(),
                                            Point3::Zero());
      probe.validate();
    }
  } catch (const Error& e) {
    parse_fail(std::string("invalid spec: ") + e.what());
  }
  return recipe;
}

CrossSourceSpec planted_spec(const BenchmarkRecipe& recipe, double base_diameter,
                             std::uint64_t seed) {
  // Independent streams for rotation, scale and translation.
  std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ull + 0x5851F42D4C957F2Dull);
  const Matrix3 rotation =
      recipe.random_rotation ? random_rotation(rng()) : recipe.rotation;
  double scale = recipe.scale;
  const std::uint64_t scale_seed = rng();
  if (recipe.scale_range) {
    std::mt19937_64 scale_rng(scale_seed);
    scale = std::uniform_real_distribution<double>(recipe.scale_range->first,
                                                   recipe.scale_range->second)(scale_rng);
  }
  std::mt19937_64 t_rng(rng());
  std::normal_distribution<double> normal(0.0, recipe.translation_sigma * base_diameter);
  Point3 t = Point3::Zero();
  if (recipe.translation_sigma > 0.0) {
    const double x = normal(t_rng);
    const double y = normal(t_rng);
    const double z = normal(t_rng);
    t = Point3(x, y, z);
  }
  CrossSourceSpec spec = recipe.spec;
  spec.transform = SimilarityTransform(scale, rotation, t);
  spec.seed = seed;
  return spec;
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

}  // namespace gctr::cli
