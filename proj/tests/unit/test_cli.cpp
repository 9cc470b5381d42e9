#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cli.h"
#include "documents.h"
#include "gctr/benchgen.h"
#include "gctr/cloud_io.h"
#include "oracles.h"

namespace gctr::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "gctr");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("gctr_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name)) << text;
    return path(name);
  }

  // Light registration settings so the CLI tests stay fast.
  std::string quick_config() const {
    return write("config.json", R"({"gctr": {"overlap_ratios": [0.5], "restarts": 1,
        "refine_levels": 1, "triplet_count": 2000, "outer_max_iters": 10}})");
  }

  fs::path dir_;
};

std::string read_file(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

TEST_F(CliTest, RegisterSelfIsIdentity) {
  const std::string cloud = path("torus.ply");
  write_cloud(builtin_shape("torus", 1500, 1), cloud);
  for (const std::string method : {"gctr", "icp"}) {
    const auto r = run({"register", "--source", cloud, "--target", cloud, "--method", method,
                        "--config", quick_config(), "--out", path("t.json")});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    const json doc = json::parse(read_file(path("t.json")));
    EXPECT_EQ(doc.at("method"), method);
    ASSERT_EQ(doc.at("matrix").size(), 16u);
    ASSERT_EQ(doc.at("r").size(), 9u);
    ASSERT_EQ(doc.at("t").size(), 3u);
    const auto t = transform_from_json(doc).transform;
    EXPECT_NEAR(t.scale(), 1.0, 1e-6) << method;
    EXPECT_LE((t.rotation() - Matrix3::Identity()).norm(), 1e-6) << method;
    EXPECT_LE(t.translation().norm(), 1e-6) << method;
    for (int k = 0; k < 16; ++k) {
      EXPECT_NEAR(doc["matrix"][k].get<double>(), k % 5 == 0 ? 1.0 : 0.0, 1e-6);
    }
  }
}

TEST_F(CliTest, RegisterWritesAlignedCloudAndStdout) {
  const auto c = builtin_shape("bumpy_sphere", 800, 2);
  write_cloud(c, path("a.xyz"));
  const auto r = run({"register", "--source", path("a.xyz"), "--target", path("a.xyz"),
                      "--method", "icp", "--out-cloud", path("aligned.ply"), "--no-timing"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const json doc = json::parse(r.out);
  EXPECT_EQ(doc.at("runtime_seconds"), 0.0);
  EXPECT_EQ(load_cloud(path("aligned.ply")).size(), c.size());
}

TEST_F(CliTest, RegisterIsDeterministic) {
  const std::string cloud = path("shell.ply");
  write_cloud(builtin_shape("l_shell", 1200, 3), cloud);
  const auto moved = apply_transform(
      SimilarityTransform(1.4, gctr::testing::axis_angle(Point3(1, 1, 0), 0.8), Point3(1, 2, 3)),
      load_cloud(cloud));
  write_cloud(moved, path("moved.ply"));
  std::vector<std::string> args{"register", "--source", path("moved.ply"), "--target", cloud,
                                "--config", quick_config(), "--seed", "5", "--no-timing"};
  const auto a = run(args);
  const auto b = run(args);
  ASSERT_EQ(a.code, kExitOk) << a.err;
  EXPECT_EQ(a.out, b.out);
}

TEST_F(CliTest, EvaluateIdenticalIsZero) {
  const json doc = to_json(TransformDocument{
      SimilarityTransform(2.0, gctr::testing::axis_angle(Point3(0, 0, 1), 0.3), Point3(1, 2, 3)),
      "gctr", 1.5, true});
  const std::string p = write("t.json", doc.dump());
  const auto r = run({"evaluate", "--est", p, "--gt", p});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const json report = json::parse(r.out);
  EXPECT_EQ(report.at("tm"), 0.0);
  EXPECT_EQ(report.at("log_tm"), "-inf");
  EXPECT_EQ(report.at("log_base"), "e");
  EXPECT_EQ(report.at("r_err_deg"), 0.0);
  EXPECT_EQ(report.at("t_err"), 0.0);
  EXPECT_EQ(report.at("s_err"), 0.0);
}

TEST_F(CliTest, EvaluateAcceptsMatrixOnlyDocuments) {
  const std::string est = write("est.json", R"({"matrix": [0,-2,0,1, 2,0,0,0, 0,0,2,0, 0,0,0,1]})");
  const std::string gt = write("gt.json", R"({"s": 2, "r": [0,-1,0, 1,0,0, 0,0,1], "t": [0,0,0]})");
  const auto r = run({"evaluate", "--est", est, "--gt", gt});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const json report = json::parse(r.out);
  EXPECT_DOUBLE_EQ(report.at("tm").get<double>(), 1.0);
  EXPECT_DOUBLE_EQ(report.at("t_err").get<double>(), 1.0);
  EXPECT_NEAR(report.at("r_err_deg").get<double>(), 0.0, 1e-12);
}

TEST_F(CliTest, UsageErrorsExitTwo) {
  const std::string cloud = path("c.xyz");
  write_cloud(builtin_shape("sphere", 200, 4), cloud);
  EXPECT_EQ(run({}).code, kExitUsage);
  EXPECT_EQ(run({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(run({"register", "--source", cloud}).code, kExitUsage);
  EXPECT_EQ(run({"register", "--source", cloud, "--target", cloud, "--method", "cpd"}).code,
            kExitUsage);
  EXPECT_EQ(run({"register", "--source", path("missing.ply"), "--target", cloud}).code,
            kExitUsage);
  EXPECT_EQ(run({"register", "--source", GCTR_TEST_DATA_DIR "/malformed/bad_number.ply",
                 "--target", cloud})
                .code,
            kExitUsage);
  EXPECT_EQ(run({"register", "--source", cloud, "--target", cloud, "--config",
                 write("bad.json", "{\"gctr\": {\"knn\": ")})
                .code,
            kExitUsage);
  EXPECT_EQ(run({"register", "--source", cloud, "--target", cloud, "--config",
                 write("unknown.json", R"({"gctr": {"bogus": 1}})")})
                .code,
            kExitUsage);
  EXPECT_EQ(run({"register", "--source", cloud, "--target", cloud, "--config",
                 write("invalid.json", R"({"gctr": {"overlap_ratios": [0.3]}})")})
                .code,
            kExitUsage);
  EXPECT_EQ(run({"benchmark", "--shape", "teapot", "--out", path("b")}).code, kExitUsage);
  EXPECT_EQ(run({"evaluate", "--est", path("none.json"), "--gt", path("none.json")}).code,
            kExitUsage);
  EXPECT_EQ(run({"--help"}).code, kExitOk);
}

TEST_F(CliTest, RegistrationFailureExitsOne) {
  std::vector<Point3> line;
  for (int k = 0; k < 300; ++k) line.emplace_back(0.01 * k, 0.0, 0.0);
  write_cloud(PointCloud(line), path("line.xyz"));
  const auto r = run({"register", "--source", path("line.xyz"), "--target", path("line.xyz"),
                      "--config", quick_config()});
  EXPECT_EQ(r.code, kExitRegistrationFailed);
  EXPECT_FALSE(r.err.empty());
}

TEST_F(CliTest, BenchmarkRowCounts) {
  const std::string spec = write("spec.json", R"({"points": 800, "density_keep_b": 0.8,
      "noise_sigma_b": 0.003, "scale": 1.3})");
  const auto r = run({"benchmark", "--shape", "torus", "--spec", spec, "--config",
                      quick_config(), "--seeds", "10", "--out", path("report"), "--no-timing"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  std::ifstream in(path("report") + "/results.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "seed,method,tm,log_tm,r_err_deg,t_err,s_err,runtime_seconds,converged");
  std::map<std::string, int> per_method;
  std::map<std::string, int> medians;
  while (std::getline(in, line)) {
    const auto first = line.find(',');
    const auto second = line.find(',', first + 1);
    const std::string seed = line.substr(0, first);
    const std::string method = line.substr(first + 1, second - first - 1);
    (seed == "median" ? medians : per_method)[method]++;
  }
  EXPECT_EQ(per_method["gctr"], 10);
  EXPECT_EQ(per_method["icp"], 10);
  EXPECT_EQ(medians["gctr"], 1);
  EXPECT_EQ(medians["icp"], 1);
  EXPECT_TRUE(fs::exists(path("report") + "/summary.csv"));
  EXPECT_TRUE(fs::exists(path("report") + "/pairs/seed_9_icp.json"));
}

TEST(TransformDocument, RoundTrip) {
  gctr::testing::Rng rng(7);
  for (int k = 0; k < 20; ++k) {
    const TransformDocument doc{gctr::testing::random_similarity(rng), "icp", 0.25, false};
    const auto back = transform_from_json(json::parse(to_json(doc).dump()));
    EXPECT_EQ(back.transform.scale(), doc.transform.scale());
    EXPECT_EQ(back.transform.rotation(), doc.transform.rotation());
    EXPECT_EQ(back.transform.translation(), doc.transform.translation());
    EXPECT_EQ(back.method, "icp");
    EXPECT_EQ(back.runtime_seconds, 0.25);
    EXPECT_FALSE(back.converged);
    // The matrix alone decomposes to the same transform.
    json m = to_json(doc);
    m.erase("s");
    const auto from_matrix = transform_from_json(m).transform;
    EXPECT_NEAR(from_matrix.scale(), doc.transform.scale(), 1e-12);
    EXPECT_LE((from_matrix.rotation() - doc.transform.rotation()).norm(), 1e-12);
  }
}

TEST(TransformDocument, RejectsMalformed) {
  EXPECT_THROW(transform_from_json(json::parse(R"({"s": 1})")), Error);
  EXPECT_THROW(transform_from_json(json::parse(R"({"matrix": [1, 2, 3]})")), Error);
  EXPECT_THROW(transform_from_json(json::parse(R"({"s": -1, "r": [1,0,0,0,1,0,0,0,1], "t": [0,0,0]})")),
               Error);
  EXPECT_THROW(transform_from_json(json::parse(R"({"s": 1, "r": [1,0,0,0,1,0,0,0,-1], "t": [0,0,0]})")),
               Error);
}

TEST(ToolConfig, ParsesAndRejectsUnknownKeys) {
  const auto cfg = tool_config_from_json(json::parse(
      R"({"gctr": {"knn": 8, "salient_frame": "axis_aligned", "overlap_ratios": [0.25]},
          "icp": {"max_iters": 7}})"));
  EXPECT_EQ(cfg.gctr.knn, 8u);
  EXPECT_EQ(cfg.gctr.salient_frame, SalientFrame::kAxisAligned);
  EXPECT_EQ(cfg.gctr.overlap_ratios, std::vector<double>{0.25});
  EXPECT_EQ(cfg.icp.max_iters, 7);
  EXPECT_THROW(tool_config_from_json(json::parse(R"({"solver": {}})")), Error);
  EXPECT_THROW(tool_config_from_json(json::parse(R"({"icp": {"max_iter": 3}})")), Error);
  EXPECT_THROW(tool_config_from_json(json::parse(R"({"gctr": {"knn": "many"}})")), Error);
}

TEST(BenchmarkRecipe, PlantedSpecIsSeeded) {
  const auto recipe = recipe_from_json(json::parse(
      R"({"density_keep_b": 0.5, "outlier_frac": 0.05, "scale_range": [0.5, 2.0]})"));
  EXPECT_EQ(recipe.spec.density_keep_b, 0.5);
  const auto a = planted_spec(recipe, 2.0, 3);
  const auto b = planted_spec(recipe, 2.0, 3);
  const auto c = planted_spec(recipe, 2.0, 4);
  EXPECT_EQ(a.transform.rotation(), b.transform.rotation());
  EXPECT_EQ(a.transform.scale(), b.transform.scale());
  EXPECT_NE(a.transform.rotation(), c.transform.rotation());
  EXPECT_GE(a.transform.scale(), 0.5);
  EXPECT_LE(a.transform.scale(), 2.0);
  EXPECT_EQ(a.seed, 3u);
  EXPECT_THROW(recipe_from_json(json::parse(R"({"keep": 1})")), Error);
}

TEST(FormatNumber, SpellsSpecialValues) {
  EXPECT_EQ(format_number(0.5), "0.5");
  EXPECT_EQ(format_number(-INFINITY), "-inf");
  EXPECT_EQ(format_number(INFINITY), "inf");
  EXPECT_EQ(format_number(NAN), "nan");
  EXPECT_EQ(std::stod(format_number(0.1)), 0.1);
}

}  // namespace
}  // namespace gctr::cli
