// Batch command-line front end: prior building, registration, model
// building, sampling, and landmark evaluation. Logging goes to stderr; the
// last stdout line is always a single JSON status object.

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "gpmm/alignment.hpp"
#include "gpmm/error.hpp"
#include "gpmm/json_io.hpp"
#include "gpmm/kernel_config.hpp"
#include "gpmm/model_io.hpp"
#include "gpmm/modelbuild.hpp"
#include "gpmm/ply_io.hpp"
#include "gpmm/registration.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitNumerical = 2;

void print_status(const std::string& status, const std::vector<std::string>& outputs,
                  const json& metrics) {
  json line;
  line["status"] = status;
  line["outputs"] = outputs;
  line["metrics"] = metrics;
  std::cout << line.dump() << std::endl;
}

void print_error_status(const std::string& message) {
  json line;
  line["status"] = "error";
  line["message"] = message;
  std::cout << line.dump() << std::endl;
}

int default_jobs() {
  if (const char* env = std::getenv("GPMM_JOBS")) {
    const int jobs = std::atoi(env);
    if (jobs >= 1) return jobs;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

std::vector<fs::path> list_files(const fs::path& dir, const std::string& extension) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == extension)
      files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw gpmm::Error("cannot open JSON file: " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw gpmm::Error(path + ": " + e.what());
  }
}

gpmm::RegistrationConfig parse_registration_config(const std::string& path) {
  gpmm::RegistrationConfig cfg;
  if (path.empty()) return cfg;
  const json j = load_json_file(path);
  const fs::path base = fs::path(path).parent_path();

  if (j.contains("annealing_schedule"))
    cfg.annealing_schedule = j["annealing_schedule"].get<std::vector<double>>();
  cfg.sigma = j.value("sigma", cfg.sigma);
  cfg.huber_delta = j.value("huber_delta", cfg.huber_delta);
  cfg.outlier_distance_threshold =
      j.value("outlier_distance_threshold", cfg.outlier_distance_threshold);
  cfg.landmark_noise = j.value("landmark_noise", cfg.landmark_noise);
  if (j.contains("optimizer")) {
    const json& opt = j["optimizer"];
    cfg.optimizer.memory = opt.value("memory", cfg.optimizer.memory);
    cfg.optimizer.max_iterations = opt.value("max_iterations", cfg.optimizer.max_iterations);
    cfg.optimizer.gradient_tolerance =
        opt.value("gradient_tolerance", cfg.optimizer.gradient_tolerance);
  }
  if (j.contains("lines")) {
    for (const json& line : j["lines"]) {
      gpmm::LineConstraint constraint;
      auto resolve = [&base](const std::string& p) {
        const fs::path path_obj(p);
        return path_obj.is_absolute() ? path_obj.string() : (base / path_obj).string();
      };
      constraint.reference = gpmm::load_polyline(resolve(line.at("reference_path")));
      constraint.target = gpmm::load_polyline(resolve(line.at("target_path")));
      cfg.lines.push_back(std::move(constraint));
    }
  }
  cfg.validate();
  return cfg;
}

Eigen::VectorXd parse_coefficients(const std::string& csv, Eigen::Index rank,
                                   const char* what) {
  Eigen::VectorXd coeffs = Eigen::VectorXd::Zero(rank);
  if (csv.empty()) return coeffs;
  std::stringstream ss(csv);
  std::string token;
  Eigen::Index i = 0;
  while (std::getline(ss, token, ',')) {
    if (i >= rank)
      throw gpmm::Error(std::string(what) + ": more coefficients than model rank " +
                        std::to_string(rank));
    coeffs[i++] = std::stod(token);
  }
  return coeffs;
}

// ---------------------------------------------------------------------------
// build-prior

int cmd_build_prior(const std::string& reference_path, const std::string& kernel_path,
                    int nystrom, int rank, double variance, const std::string& out) {
  gpmm::ReferencePtr reference = gpmm::make_reference(gpmm::load_mesh(reference_path));
  const gpmm::FieldPrior prior = gpmm::load_kernel_config(kernel_path, reference);

  gpmm::NystromOptions options;
  options.points = nystrom;
  options.rank = rank;
  options.variance_fraction = variance;
  const gpmm::LowRankBuild build =
      gpmm::build_low_rank(*prior.kernel, prior.mean, reference, options);
  gpmm::save_prior(build.model, out);

  std::cerr << "prior: rank " << build.model.rank() << ", retained variance "
            << build.retained_variance << ", " << build.nystrom_points
            << " sample points\n";
  print_status("ok", {out},
               {{"rank", build.model.rank()},
                {"retained_variance", build.retained_variance},
                {"nystrom_points", build.nystrom_points}});
  return kExitOk;
}

// ---------------------------------------------------------------------------
// register

struct TargetJob {
  fs::path mesh_path;
  fs::path landmarks_path;
};

json run_one_registration(const gpmm::LowRankGP& prior, const gpmm::LandmarkSet& ref_landmarks,
                          const gpmm::RegistrationConfig& cfg, const TargetJob& job,
                          const fs::path& out_dir) {
  const gpmm::TriangleMesh target = gpmm::load_mesh(job.mesh_path.string());
  const gpmm::LandmarkSet target_landmarks =
      gpmm::load_landmarks(job.landmarks_path.string());

  gpmm::RegistrationResult result =
      gpmm::register_surface(prior, target, ref_landmarks, target_landmarks, cfg);

  // Color transfer from the target onto the registered surface.
  if (target.has_colors()) {
    const gpmm::AabbTree target_tree(target);
    result.registered.colors.resize(3, result.registered.vertex_count());
    for (Eigen::Index v = 0; v < result.registered.vertex_count(); ++v) {
      const gpmm::SurfacePoint cp =
          target_tree.closest_point(result.registered.vertices.col(v));
      result.registered.colors.col(v) = gpmm::interpolate_field(target.colors, target, cp);
    }
  }

  const std::string stem = job.mesh_path.stem().string();
  const fs::path mesh_out = out_dir / (stem + "_registered.ply");
  const fs::path report_out = out_dir / (stem + "_report.json");
  gpmm::save_mesh(result.registered, mesh_out.string());

  json report;
  report["target"] = job.mesh_path.filename().string();
  report["coefficients"] = std::vector<double>(
      result.coefficients.data(), result.coefficients.data() + result.coefficients.size());
  report["stage_objectives"] = result.stage_objectives;
  report["stage_iterations"] = result.stage_iterations;
  report["vertex_count"] = result.registered.vertex_count();
  int active_count = 0;
  json mask = json::array();
  for (bool a : result.active) {
    mask.push_back(a ? 1 : 0);
    if (a) ++active_count;
  }
  report["active_count"] = active_count;
  report["active_mask"] = std::move(mask);
  report["residuals"] = {{"mean", result.residuals.mean()},
                         {"max", result.residuals.maxCoeff()}};
  std::ofstream out(report_out);
  out << report.dump(2) << "\n";
  if (!out) throw gpmm::Error("cannot write report: " + report_out.string());

  json status;
  status["target"] = job.mesh_path.filename().string();
  status["status"] = "ok";
  status["outputs"] = {mesh_out.string(), report_out.string()};
  status["mean_residual"] = result.residuals.mean();
  return status;
}

int cmd_register(const std::string& prior_path, const std::string& target_path,
                 const std::string& landmarks_ref, const std::string& landmarks_target,
                 const std::string& config_path, const std::string& out, int jobs) {
  const gpmm::LowRankGP prior = gpmm::load_prior(prior_path);
  const gpmm::LandmarkSet ref_landmarks = gpmm::load_landmarks(landmarks_ref);
  const gpmm::RegistrationConfig cfg = parse_registration_config(config_path);

  fs::create_directories(out);
  std::vector<TargetJob> targets;
  if (fs::is_directory(target_path)) {
    if (!fs::is_directory(landmarks_target))
      throw gpmm::Error("directory targets need a directory of target landmarks");
    for (const fs::path& mesh_path : list_files(target_path, ".ply")) {
      TargetJob job;
      job.mesh_path = mesh_path;
      job.landmarks_path = fs::path(landmarks_target) / (mesh_path.stem().string() + ".json");
      if (!fs::exists(job.landmarks_path))
        throw gpmm::Error("no landmark file for target " + mesh_path.string() + " (expected " +
                          job.landmarks_path.string() + ")");
      targets.push_back(job);
    }
    if (targets.empty()) throw gpmm::Error("no .ply targets in " + target_path);
  } else {
    targets.push_back({fs::path(target_path), fs::path(landmarks_target)});
  }

  std::vector<json> statuses(targets.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> any_failed{false};
  std::atomic<bool> any_numerical{false};
  std::mutex log_mutex;

  auto worker = [&]() {
    while (true) {
      const std::size_t index = next.fetch_add(1);
      if (index >= targets.size()) return;
      const TargetJob& job = targets[index];
      try {
        statuses[index] = run_one_registration(prior, ref_landmarks, cfg, job, out);
        std::lock_guard<std::mutex> lock(log_mutex);
        std::cerr << "registered " << job.mesh_path.filename().string() << "\n";
      } catch (const std::exception& e) {
        statuses[index] = {{"target", job.mesh_path.filename().string()},
                           {"status", "error"},
                           {"message", e.what()}};
        any_failed = true;
        if (dynamic_cast<const gpmm::NumericalError*>(&e)) any_numerical = true;
        std::lock_guard<std::mutex> lock(log_mutex);
        std::cerr << "FAILED " << job.mesh_path.filename().string() << ": " << e.what() << "\n";
      }
    }
  };

  const int thread_count = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, jobs)),
                                                 targets.size());
  std::vector<std::thread> pool;
  for (int i = 1; i < thread_count; ++i) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();

  json status_doc = json::array();
  std::vector<std::string> outputs;
  int ok_count = 0;
  for (const json& s : statuses) {
    status_doc.push_back(s);
    if (s.value("status", "") == "ok") {
      ++ok_count;
      for (const auto& o : s["outputs"]) outputs.push_back(o.get<std::string>());
    }
  }
  const fs::path status_path = fs::path(out) / "status.json";
  {
    std::ofstream status_out(status_path);
    status_out << status_doc.dump(2) << "\n";
  }
  outputs.push_back(status_path.string());

  print_status(any_failed ? "error" : "ok", outputs,
               {{"targets", targets.size()}, {"succeeded", ok_count}});
  if (any_failed) return any_numerical && ok_count == 0 ? kExitNumerical : kExitInput;
  return kExitOk;
}

// ---------------------------------------------------------------------------
// build-model

std::vector<bool> mask_from_report(const fs::path& report_path, Eigen::Index n) {
  std::vector<bool> mask(static_cast<std::size_t>(n), true);
  if (!fs::exists(report_path)) return mask;
  const json report = load_json_file(report_path.string());
  if (!report.contains("active_mask")) return mask;
  const auto& m = report["active_mask"];
  if (m.size() != static_cast<std::size_t>(n))
    throw gpmm::Error(report_path.string() + ": active_mask length mismatch");
  for (std::size_t i = 0; i < m.size(); ++i) mask[i] = m[i].get<int>() != 0;
  return mask;
}

int cmd_build_model(const std::string& reference_path, const std::string& registrations_dir,
                    const std::string& neutrals_dir, const std::string& expressions_dir,
                    int nystrom, int rank, double variance, const std::string& out) {
  gpmm::ReferencePtr reference = gpmm::make_reference(gpmm::load_mesh(reference_path));
  const Eigen::Index n = reference->mesh().vertex_count();

  std::vector<gpmm::TriangleMesh> registrations;
  std::vector<gpmm::ColorSample> color_samples;
  for (const fs::path& path : list_files(registrations_dir, ".ply")) {
    gpmm::TriangleMesh mesh = gpmm::load_mesh(path.string());
    if (mesh.vertex_count() != n)
      throw gpmm::Error(path.string() + ": vertex count does not match the reference");
    if (mesh.has_colors()) {
      gpmm::ColorSample sample;
      sample.colors = mesh.colors;
      const fs::path report = path.parent_path() / (path.stem().string() + "_report.json");
      // Registration reports carry the active mask; excluded vertices become
      // missing color data.
      fs::path report_path = report;
      const std::string stem = path.stem().string();
      const std::string suffix = "_registered";
      if (stem.size() > suffix.size() &&
          stem.compare(stem.size() - suffix.size(), suffix.size(), suffix) == 0) {
        report_path = path.parent_path() /
                      (stem.substr(0, stem.size() - suffix.size()) + "_report.json");
      }
      sample.visible = mask_from_report(report_path, n);
      color_samples.push_back(std::move(sample));
    }
    registrations.push_back(std::move(mesh));
  }
  if (registrations.size() < 2)
    throw gpmm::Error("build-model: need at least 2 registered meshes in " + registrations_dir);

  std::vector<const gpmm::TriangleMesh*> mesh_ptrs;
  for (const auto& mesh : registrations) mesh_ptrs.push_back(&mesh);
  gpmm::LowRankGP shape = gpmm::build_shape_model(mesh_ptrs, reference);
  std::cerr << "shape model: rank " << shape.rank() << " from " << registrations.size()
            << " meshes\n";

  gpmm::LowRankGP color;
  double color_retained = 1.0;
  if (color_samples.size() >= 2) {
    gpmm::ColorModelOptions options;
    options.nystrom.points = nystrom;
    options.nystrom.rank = rank;
    options.nystrom.variance_fraction = variance;
    gpmm::LowRankBuild build = gpmm::build_color_model(color_samples, reference, options);
    color = std::move(build.model);
    color_retained = build.retained_variance;
    std::cerr << "color model: rank " << color.rank() << " from " << color_samples.size()
              << " samples\n";
  } else {
    // No usable color data: rank-0 model around the reference colors.
    color.reference = reference;
    color.mean = reference->mesh().has_colors()
                     ? reference->mesh().colors
                     : Eigen::Matrix3Xd::Constant(3, n, 0.5);
    color.basis.resize(3 * n, 0);
    color.variances.resize(0);
    std::cerr << "color model: no colored registrations, using a rank-0 model\n";
  }

  gpmm::LowRankGP expression;
  std::size_t expression_pairs = 0;
  if (!neutrals_dir.empty() && !expressions_dir.empty()) {
    std::vector<gpmm::TriangleMesh> neutral_meshes;
    std::vector<std::string> neutral_subjects;
    for (const fs::path& path : list_files(neutrals_dir, ".ply")) {
      neutral_meshes.push_back(gpmm::load_mesh(path.string()));
      const std::string stem = path.stem().string();
      neutral_subjects.push_back(stem.substr(0, stem.find('_')));
    }
    std::vector<gpmm::TriangleMesh> expression_meshes;
    std::vector<std::size_t> paired_neutral;
    for (const fs::path& path : list_files(expressions_dir, ".ply")) {
      const std::string stem = path.stem().string();
      const std::string subject = stem.substr(0, stem.find('_'));
      const auto it =
          std::find(neutral_subjects.begin(), neutral_subjects.end(), subject);
      if (it == neutral_subjects.end())
        throw gpmm::Error("build-model: expression " + path.string() +
                          " has no neutral for subject '" + subject + "'");
      expression_meshes.push_back(gpmm::load_mesh(path.string()));
      paired_neutral.push_back(static_cast<std::size_t>(it - neutral_subjects.begin()));
    }
    std::vector<const gpmm::TriangleMesh*> neutral_ptrs, expression_ptrs;
    for (std::size_t i = 0; i < expression_meshes.size(); ++i) {
      expression_ptrs.push_back(&expression_meshes[i]);
      neutral_ptrs.push_back(&neutral_meshes[paired_neutral[i]]);
    }
    if (expression_ptrs.empty())
      throw gpmm::Error("build-model: no .ply expressions in " + expressions_dir);
    expression = gpmm::build_expression_model(neutral_ptrs, expression_ptrs, reference);
    expression_pairs = expression_ptrs.size();
    std::cerr << "expression model: rank " << expression.rank() << " from "
              << expression_pairs << " pairs\n";
  } else {
    expression.reference = reference;
    expression.mean = Eigen::Matrix3Xd::Zero(3, n);
    expression.basis.resize(3 * n, 0);
    expression.variances.resize(0);
  }

  const gpmm::MorphableModel model =
      gpmm::assemble_model(std::move(shape), std::move(color), std::move(expression));
  gpmm::save_morphable(model, out);

  print_status("ok", {out},
               {{"shape_rank", model.shape.rank()},
                {"color_rank", model.color.rank()},
                {"color_retained_variance", color_retained},
                {"expression_rank", model.expression.rank()},
                {"registrations", registrations.size()},
                {"expression_pairs", expression_pairs}});
  return kExitOk;
}

// ---------------------------------------------------------------------------
// sample

int cmd_sample(const std::string& container_path, std::uint64_t seed,
               const std::string& shape_csv, const std::string& color_csv,
               const std::string& expression_csv, const std::string& out) {
  const std::string type = gpmm::container_type(container_path);
  gpmm::TriangleMesh mesh;

  if (type == "gpmm-prior") {
    const gpmm::LowRankGP prior = gpmm::load_prior(container_path);
    Eigen::VectorXd alpha = shape_csv.empty()
                                ? gpmm::sample_coefficients(prior, seed)
                                : parse_coefficients(shape_csv, prior.rank(), "--shape");
    mesh = prior.reference->mesh();
    mesh.vertices += prior.evaluate_all(alpha);
  } else {
    const gpmm::MorphableModel model = gpmm::load_morphable(container_path);
    const Eigen::VectorXd shape_coeffs =
        shape_csv.empty() ? gpmm::sample_coefficients(model.shape, seed)
                          : parse_coefficients(shape_csv, model.shape.rank(), "--shape");
    const Eigen::VectorXd color_coeffs =
        color_csv.empty()
            ? gpmm::sample_coefficients(model.color, seed + 0x9e3779b97f4a7c15ull)
            : parse_coefficients(color_csv, model.color.rank(), "--color");
    const Eigen::VectorXd expr_coeffs =
        expression_csv.empty()
            ? gpmm::sample_coefficients(model.expression, seed + 2 * 0x9e3779b97f4a7c15ull)
            : parse_coefficients(expression_csv, model.expression.rank(), "--expression");
    mesh = gpmm::instance(model, shape_coeffs, color_coeffs, expr_coeffs);
  }

  gpmm::save_mesh(mesh, out, gpmm::PlyFormat::BinaryLittleEndian,
                  {"seed " + std::to_string(seed)});
  print_status("ok", {out}, {{"seed", seed}, {"type", type}});
  return kExitOk;
}

// ---------------------------------------------------------------------------
// eval-landmarks

int cmd_eval_landmarks(const std::string& results_path, const std::string& truth_path,
                       const std::string& regions_path, const std::string& out) {
  ordered_json regions_doc;
  {
    std::ifstream in(regions_path);
    if (!in) throw gpmm::Error("cannot open regions file: " + regions_path);
    try {
      regions_doc = ordered_json::parse(in);
    } catch (const ordered_json::exception& e) {
      throw gpmm::Error(regions_path + ": " + e.what());
    }
  }
  std::vector<std::pair<std::string, std::string>> region_of;
  for (const auto& [name, region] : regions_doc.items())
    region_of.push_back({name, region.get<std::string>()});

  gpmm::LandmarkSet registered, truth;
  if (fs::is_directory(results_path)) {
    if (!fs::is_directory(truth_path))
      throw gpmm::Error("directory results need a directory of ground-truth landmarks");
    int matched_files = 0;
    for (const fs::path& result_file : list_files(results_path, ".json")) {
      const fs::path truth_file = fs::path(truth_path) / result_file.filename();
      if (!fs::exists(truth_file)) continue;
      ++matched_files;
      // Prefix ids with the file stem so repeated landmark names aggregate
      // across scans without clashing.
      const std::string prefix = result_file.stem().string() + "/";
      for (const auto& lm : gpmm::load_landmarks(result_file.string()).entries)
        registered.add(prefix + lm.id, lm.point);
      for (const auto& lm : gpmm::load_landmarks(truth_file.string()).entries)
        truth.add(prefix + lm.id, lm.point);
    }
    if (matched_files == 0)
      throw gpmm::Error("no matching landmark files between " + results_path + " and " +
                        truth_path);
    // Region lookup goes by the bare landmark name.
    std::vector<std::pair<std::string, std::string>> expanded;
    for (const auto& lm : registered.entries) {
      const std::string bare = lm.id.substr(lm.id.find('/') + 1);
      for (const auto& [name, region] : region_of) {
        if (name == bare) {
          expanded.push_back({lm.id, region});
          break;
        }
      }
    }
    // Original entries keep the region output order; the prefixed copies
    // only serve the lookup.
    for (const auto& entry : expanded) region_of.push_back(entry);
  } else {
    registered = gpmm::load_landmarks(results_path);
    truth = gpmm::load_landmarks(truth_path);
  }

  const gpmm::LandmarkReport report = gpmm::evaluate_landmarks(registered, truth, region_of);
  std::cout << report.table();

  json report_json;
  json regions_json = json::array();
  for (const auto& stat : report.regions) {
    regions_json.push_back({{"region", stat.region},
                            {"mean_mm", stat.mean},
                            {"std_mm", stat.stddev},
                            {"count", stat.count}});
  }
  report_json["regions"] = regions_json;
  report_json["unmatched"] = report.unmatched;

  std::vector<std::string> outputs;
  if (!out.empty()) {
    fs::create_directories(out);
    const fs::path json_path = fs::path(out) / "landmark_report.json";
    const fs::path text_path = fs::path(out) / "landmark_report.txt";
    std::ofstream(json_path) << report_json.dump(2) << "\n";
    std::ofstream(text_path) << report.table();
    outputs = {json_path.string(), text_path.string()};
  }

  const bool ok = report.unmatched.empty();
  print_status(ok ? "ok" : "error", outputs,
               {{"regions", regions_json}, {"unmatched", report.unmatched}});
  return ok ? kExitOk : kExitInput;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian process face registration and morphable model pipeline"};
  app.require_subcommand(1);

  // build-prior
  auto* build_prior = app.add_subcommand("build-prior", "Build a low-rank deformation prior");
  std::string bp_reference, bp_kernel, bp_out;
  int bp_nystrom = 500, bp_rank = 0;
  double bp_variance = 0.99;
  build_prior->add_option("reference", bp_reference, "Reference mesh (.ply)")->required();
  build_prior->add_option("kernel", bp_kernel, "Kernel configuration (.json)")->required();
  build_prior->add_option("--nystrom", bp_nystrom, "Sample point count (0 = all vertices)");
  build_prior->add_option("--rank", bp_rank, "Hard rank cap (0 = variance fraction only)");
  build_prior->add_option("--variance", bp_variance, "Retained-variance fraction");
  build_prior->add_option("--out", bp_out, "Output prior container")->required();

  // register
  auto* reg = app.add_subcommand("register", "Register a prior to target scans");
  std::string rg_prior, rg_target, rg_lm_ref, rg_lm_target, rg_config, rg_out;
  int rg_jobs = default_jobs();
  reg->add_option("prior", rg_prior, "Prior container (.gpmm)")->required();
  reg->add_option("target", rg_target, "Target mesh (.ply) or directory")->required();
  reg->add_option("--landmarks-ref", rg_lm_ref, "Reference landmarks (.json)")->required();
  reg->add_option("--landmarks-target", rg_lm_target,
                  "Target landmarks (.json) or directory")->required();
  reg->add_option("--config", rg_config, "Registration config (.json)");
  reg->add_option("--out", rg_out, "Output directory")->required();
  reg->add_option("--jobs", rg_jobs, "Concurrent targets (default: GPMM_JOBS or cores)");

  // build-model
  auto* build_model = app.add_subcommand("build-model", "Build a morphable model");
  std::string bm_reference, bm_registrations, bm_neutrals, bm_expressions, bm_out;
  int bm_nystrom = 500, bm_rank = 0;
  double bm_variance = 0.99;
  build_model->add_option("--reference", bm_reference, "Reference mesh (.ply)")->required();
  build_model->add_option("--registrations", bm_registrations,
                          "Directory of registered meshes")->required();
  build_model->add_option("--neutrals", bm_neutrals,
                          "Directory of registered neutral scans (expression model)");
  build_model->add_option("--expressions", bm_expressions,
                          "Directory of registered expression scans; files pair with "
                          "neutrals by subject prefix up to the first '_'");
  build_model->add_option("--nystrom", bm_nystrom, "Color model sample points");
  build_model->add_option("--rank", bm_rank, "Color model rank cap");
  build_model->add_option("--variance", bm_variance, "Color model variance fraction");
  build_model->add_option("--out", bm_out, "Output model container")->required();

  // sample
  auto* sample = app.add_subcommand("sample", "Draw an instance from a prior or model");
  std::string sm_container, sm_shape, sm_color, sm_expression, sm_out;
  std::uint64_t sm_seed = 0;
  sample->add_option("container", sm_container, "Prior or model container")->required();
  sample->add_option("--seed", sm_seed, "Random seed");
  sample->add_option("--shape", sm_shape, "Comma-separated shape coefficients");
  sample->add_option("--color", sm_color, "Comma-separated color coefficients");
  sample->add_option("--expression", sm_expression, "Comma-separated expression coefficients");
  sample->add_option("--out", sm_out, "Output mesh (.ply)")->required();

  // eval-landmarks
  auto* eval = app.add_subcommand("eval-landmarks", "Per-region landmark distance report");
  std::string ev_results, ev_truth, ev_regions, ev_out;
  eval->add_option("results", ev_results, "Result landmarks (.json) or directory")->required();
  eval->add_option("truth", ev_truth, "Ground-truth landmarks (.json) or directory")->required();
  eval->add_option("regions", ev_regions, "Landmark-name to region map (.json)")->required();
  eval->add_option("--out", ev_out, "Optional output directory for the report");

  CLI11_PARSE(app, argc, argv);

  try {
    if (build_prior->parsed())
      return cmd_build_prior(bp_reference, bp_kernel, bp_nystrom, bp_rank, bp_variance, bp_out);
    if (reg->parsed())
      return cmd_register(rg_prior, rg_target, rg_lm_ref, rg_lm_target, rg_config, rg_out,
                          rg_jobs);
    if (build_model->parsed())
      return cmd_build_model(bm_reference, bm_registrations, bm_neutrals, bm_expressions,
                             bm_nystrom, bm_rank, bm_variance, bm_out);
    if (sample->parsed())
      return cmd_sample(sm_container, sm_seed, sm_shape, sm_color, sm_expression, sm_out);
    if (eval->parsed())
      return cmd_eval_landmarks(ev_results, ev_truth, ev_regions, ev_out);
  } catch (const gpmm::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    print_error_status(e.what());
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    print_error_status(e.what());
    return kExitInput;
  }
  return kExitInput;
}
