#include "cli.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "documents.h"
#include "gctr/benchgen.h"
#include "gctr/cloud_io.h"
#include "gctr/error.h"
#include "gctr/icp.h"
#include "gctr/metrics.h"
#include "gctr/preprocess.h"
#include "gctr/register.h"

namespace gctr::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

struct RegisterArgs {
  std::string source;
  std::string target;
  std::string config;
  std::string method = "gctr";
  std::string out;
  std::string out_cloud;
  std::optional<std::uint64_t> seed;
  bool no_timing = false;
};

struct BenchmarkArgs {
  std::string shape;
  std::string spec;
  std::string config;
  std::string out;
  std::size_t seeds = 10;
  std::uint64_t seed = 0;
  bool no_timing = false;
};

struct EvaluateArgs {
  std::string est;
  std::string gt;
};

ToolConfig load_config(const std::string& path) {
  return path.empty() ? ToolConfig{} : tool_config_from_json(read_json_file(path));
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Outcome of one registration. `failure` is set when the method gave up; the
// transform is then its best partial estimate.
struct Outcome {
  TransformDocument doc;
  json details = json::object();
  std::optional<std::string> failure;
};

Outcome run_method(const std::string& method, const PointCloud& target,
                   const PointCloud& source, const ToolConfig& cfg, bool timing) {
  Outcome outcome;
  outcome.doc.method = method;
  const auto start = Clock::now();
  if (method == "gctr") {
    try {
      const GctrResult r = gctr_register(target, source, cfg.gctr);
      outcome.doc.transform = r.transform;
      outcome.doc.converged = r.converged;
      outcome.details = {{"iterations", r.iterations},
                         {"overlap_ratio", r.overlap_ratio},
                         {"inliers", r.correspondences.size()},
                         {"final_energy", r.energy_trace.back()}};
    } catch (const RegistrationError& e) {
      outcome.doc.transform = e.partial().transform;
      outcome.failure = e.what();
    }
  } else {
    try {
      const IcpResult r = icp_register(target, source, cfg.icp);
      outcome.doc.transform = r.transform;
      outcome.doc.converged = r.iterations < cfg.icp.max_iters;
      outcome.details = {{"iterations", r.iterations}, {"mean_residual", r.mean_residual}};
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kDegenerateConfiguration) throw;
      // ICP's starting point: the scale normalization alone.
      outcome.doc.transform = normalize_scale_pair(target, source).transform;
      outcome.failure = e.what();
    }
  }
  outcome.doc.runtime_seconds = timing ? seconds_since(start) : 0.0;
  return outcome;
}

int do_register(const RegisterArgs& args, std::ostream& out, std::ostream& err) {
  ToolConfig cfg = load_config(args.config);
  if (args.seed) {
    cfg.gctr.seed = *args.seed;
    cfg.icp.seed = *args.seed;
  }
  const PointCloud source = load_cloud(args.source);
  const PointCloud target = load_cloud(args.target);

  const Outcome outcome = run_method(args.method, target, source, cfg, !args.no_timing);
  if (outcome.failure) {
    err << "registration failed: " << *outcome.failure << "\n";
    return kExitRegistrationFailed;
  }
  const std::string text = to_json(outcome.doc, outcome.details).dump(2) + "\n";
  if (args.out.empty()) {
    out << text;
  } else {
    write_text_file(args.out, text);
  }
  if (!args.out_cloud.empty()) {
    write_cloud(apply_transform(outcome.doc.transform, source), args.out_cloud);
  }
  return kExitOk;
}

PointCloud base_cloud(const std::string& shape, std::size_t points, std::uint64_t seed) {
  if (fs::exists(shape)) return load_cloud(shape);
  return builtin_shape(shape, points, seed);
}

struct Row {
  std::string seed;
  RegistrationReport report;
};

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean(const std::vector<double>& v) {
  double sum = 0.0;
  for (double x : v) sum += x;
  return sum / static_cast<double>(v.size());
}

std::string csv_row(const std::string& seed, const std::string& method,
                    const std::vector<double>& values, const std::string& converged) {
  std::string line = seed + "," + method;
  for (double v : values) line += "," + format_number(v);
  return line + "," + converged + "\n";
}

std::vector<double> metric_values(const RegistrationReport& r) {
  return {r.tm, r.log_tm, r.r_err_deg, r.t_err, r.s_err, r.runtime_seconds};
}

// Column-wise statistic over the per-pair rows, plus the converged fraction.
std::pair<std::vector<double>, double> aggregate(
    const std::vector<RegistrationReport>& rows,
    double (*stat)(std::vector<double>)) {
  std::vector<double> result;
  for (std::size_t c = 0; c < 6; ++c) {
    std::vector<double> column;
    for (const auto& r : rows) column.push_back(metric_values(r)[c]);
    result.push_back(stat(std::move(column)));
  }
  double converged = 0.0;
  for (const auto& r : rows) converged += r.converged ? 1.0 : 0.0;
  return {result, converged / static_cast<double>(rows.size())};
}

int do_benchmark(const BenchmarkArgs& args, std::ostream& out, std::ostream& err) {
  const ToolConfig cfg = load_config(args.config);
  const BenchmarkRecipe recipe =
      args.spec.empty() ? BenchmarkRecipe{} : recipe_from_json(read_json_file(args.spec));
  const PointCloud base = base_cloud(args.shape, recipe.points, args.seed);
  const double diameter = containing_box(base).diameter;

  std::error_code ec;
  fs::create_directories(fs::path(args.out) / "pairs", ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create '" + args.out + "': " + ec.message());

  const std::vector<std::string> methods{"gctr", "icp"};
  std::vector<std::vector<RegistrationReport>> reports(methods.size());
  for (std::size_t k = 0; k < args.seeds; ++k) {
    const std::uint64_t seed = args.seed + k;
    const BenchmarkPair pair = generate_pair(base, planted_spec(recipe, diameter, seed));
    // B is registered onto A, so the expected answer undoes the planted motion.
    const SimilarityTransform expected = pair.ground_truth.inverse();
    for (std::size_t m = 0; m < methods.size(); ++m) {
      ToolConfig run_cfg = cfg;
      run_cfg.gctr.seed = cfg.gctr.seed + seed;
      const Outcome outcome =
          run_method(methods[m], pair.cloud_a, pair.cloud_b, run_cfg, !args.no_timing);
      RegistrationReport report = transform_error(outcome.doc.transform, expected);
      report.method = methods[m];
      report.runtime_seconds = outcome.doc.runtime_seconds;
      report.converged = !outcome.failure && outcome.doc.converged;
      reports[m].push_back(report);
      if (outcome.failure) {
        err << "seed " << seed << " " << methods[m] << ": " << *outcome.failure << "\n";
      }

      json doc = to_json(report);
      doc["seed"] = seed;
      doc["estimate"] = to_json(outcome.doc, outcome.details);
      doc["ground_truth"] = to_json(TransformDocument{expected, "ground_truth", 0.0, true});
      if (outcome.failure) doc["failure"] = *outcome.failure;
      write_text_file(fs::path(args.out) / "pairs" /
                          ("seed_" + std::to_string(seed) + "_" + methods[m] + ".json"),
                      doc.dump(2) + "\n");
    }
  }

  const std::string header =
      "seed,method,tm,log_tm,r_err_deg,t_err,s_err,runtime_seconds,converged\n";
  std::string results = header;
  std::string summary = "method,statistic,tm,log_tm,r_err_deg,t_err,s_err,runtime_seconds,converged\n";
  for (std::size_t m = 0; m < methods.size(); ++m) {
    for (std::size_t k = 0; k < reports[m].size(); ++k) {
      const auto& r = reports[m][k];
      results += csv_row(std::to_string(args.seed + k), methods[m], metric_values(r),
                         r.converged ? "1" : "0");
    }
    const auto [med, med_conv] = aggregate(reports[m], median);
    const auto [avg, avg_conv] =
        aggregate(reports[m], [](std::vector<double> v) { return mean(v); });
    results += csv_row("median", methods[m], med, format_number(med_conv));
    summary += csv_row(methods[m], "mean", avg, format_number(avg_conv));
    summary += csv_row(methods[m], "median", med, format_number(med_conv));
    out << methods[m] << ": median log_tm " << format_number(med[1]) << ", median r_err_deg "
        << format_number(med[2]) << ", converged " << format_number(med_conv) << "\n";
  }
  write_text_file(fs::path(args.out) / "results.csv", results);
  write_text_file(fs::path(args.out) / "summary.csv", summary);
  return kExitOk;
}

int do_evaluate(const EvaluateArgs& args, std::ostream& out) {
  const TransformDocument est = transform_from_json(read_json_file(args.est));
  const TransformDocument gt = transform_from_json(read_json_file(args.gt));
  RegistrationReport report = transform_error(est.transform, gt.transform);
  report.method = est.method;
  report.runtime_seconds = est.runtime_seconds;
  report.converged = est.converged;
  out << to_json(report).dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cross-source point cloud registration"};
  app.require_subcommand(1);

  RegisterArgs reg;
  auto* reg_cmd = app.add_subcommand("register", "Estimate the similarity transform "
                                                 "mapping --source onto --target");
  reg_cmd->add_option("--source", reg.source, "Moving cloud (.ply, .xyz)")->required();
  reg_cmd->add_option("--target", reg.target, "Fixed cloud (.ply, .xyz)")->required();
  reg_cmd->add_option("--config", reg.config, "JSON config with gctr/icp sections");
  reg_cmd->add_option("--method", reg.method, "gctr or icp")
      ->check(CLI::IsMember({"gctr", "icp"}));
  reg_cmd->add_option("--out", reg.out, "Transform document path (default: stdout)");
  reg_cmd->add_option("--out-cloud", reg.out_cloud, "Write the aligned source cloud");
  reg_cmd->add_option("--seed", reg.seed, "Overrides the config seed");
  reg_cmd->add_flag("--no-timing", reg.no_timing, "Report runtime_seconds as 0");

  BenchmarkArgs bench;
  auto* bench_cmd = app.add_subcommand("benchmark", "Generate perturbed pairs and "
                                                    "compare gctr against icp");
  bench_cmd->add_option("--shape", bench.shape, "Builtin shape name or cloud file")->required();
  bench_cmd->add_option("--spec", bench.spec, "JSON perturbation spec");
  bench_cmd->add_option("--config", bench.config, "JSON config with gctr/icp sections");
  bench_cmd->add_option("--seeds", bench.seeds, "Number of pairs")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--seed", bench.seed, "First pair seed");
  bench_cmd->add_option("--out", bench.out, "Report directory")->required();
  bench_cmd->add_flag("--no-timing", bench.no_timing,
                      "Report runtime_seconds as 0 (byte-stable output)");

  EvaluateArgs eval;
  auto* eval_cmd = app.add_subcommand("evaluate", "Compare two transform documents");
  eval_cmd->add_option("--est", eval.est, "Estimated transform document")->required();
  eval_cmd->add_option("--gt", eval.gt, "Ground-truth transform document")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (reg_cmd->parsed()) return do_register(reg, out, err);
    if (bench_cmd->parsed()) return do_benchmark(bench, out, err);
    return do_evaluate(eval, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    switch (e.code()) {
      case ErrorCode::kParseError:
      case ErrorCode::kUnsupportedFormat:
      case ErrorCode::kIoError:
      case ErrorCode::kInvalidArgument:
      case ErrorCode::kUnknownShape:
      case ErrorCode::kTooFewPoints:
        return kExitUsage;
      default:
        return kExitRegistrationFailed;
    }
  }
}

int cli_main(int argc, const char* const* argv) {
  return cli_main(argc, argv, std::cout, std::cerr);
}

}  // namespace gctr::cli
