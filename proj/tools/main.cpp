// hartgeom: sparse-view human reconstruction pipeline front-end.
//
// Subcommands: cameras, recon, fit-body, align, eval-mesh, eval-body,
// init-splats, make-toy-body. Every successful run writes a
// <output>.manifest.json with resolved flags and input digests.
// Exit codes: 0 success, 64 usage error, 2 runtime failure (stage name on
// stderr).

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hartgeom/hartgeom.hpp"

namespace fs = std::filesystem;
using namespace hartgeom;

namespace {

struct StageError : std::runtime_error {
  std::string stage;
  StageError(std::string stage_name, const std::string& message)
      : std::runtime_error(message), stage(std::move(stage_name)) {}
};

template <typename Fn>
auto run_stage(const std::string& name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    throw StageError(name, e.what());
  }
}

std::vector<std::string> list_htf_dir(const std::string& dir) {
  if (!fs::is_directory(dir))
    throw IoError("not a directory: " + dir);
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    if (entry.path().extension() == ".htf") files.push_back(entry.path().string());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw IoError("no .htf files in " + dir);
  return files;
}

std::vector<Tensor> load_view_dir(const std::string& dir, std::size_t expect_views,
                                  RunManifest& manifest) {
  auto files = list_htf_dir(dir);
  if (expect_views && files.size() != expect_views)
    throw Error(dir + " holds " + std::to_string(files.size()) + " views, expected " +
                std::to_string(expect_views));
  std::vector<Tensor> tensors;
  tensors.reserve(files.size());
  for (const auto& f : files) {
    manifest.add_input(f);
    tensors.push_back(read_tensor(f));
  }
  return tensors;
}

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double elapsed_ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                     start)
        .count();
  }
};

void finish_manifest(RunManifest& manifest, const Timer& timer,
                     const std::string& output_path) {
  manifest.duration_ms = timer.elapsed_ms();
  manifest.write(output_path + ".manifest.json");
}

// ---------------------------------------------------------------- cameras

struct CameraArgs {
  std::string points_dir, masks_dir, output;
  std::size_t stride = 4;
  RansacOptions ransac;
};

int cmd_cameras(const CameraArgs& args) {
  Timer timer;
  RunManifest manifest;
  manifest.subcommand = "cameras";
  manifest.flags = {{"points", args.points_dir},
                    {"masks", args.masks_dir},
                    {"stride", std::to_string(args.stride)},
                    {"threshold", std::to_string(args.ransac.threshold_px)},
                    {"iters", std::to_string(args.ransac.max_iters)},
                    {"confidence", std::to_string(args.ransac.confidence)},
                    {"seed", std::to_string(args.ransac.seed)},
                    {"output", args.output}};

  auto points = run_stage("load-points",
                          [&] { return load_view_dir(args.points_dir, 0, manifest); });
  auto masks = run_stage("load-masks", [&] {
    return load_view_dir(args.masks_dir, points.size(), manifest);
  });

  std::vector<CameraPose> cams;
  for (std::size_t v = 0; v < points.size(); ++v) {
    PnpResult res = run_stage("camera-recovery", [&] {
      return camera_from_pointmap(points[v], masks[v], args.stride, args.ransac);
    });
    std::printf("view %zu: %zu inliers, mean reprojection %.4f px\n", v,
                res.inlier_count, res.mean_reproj_error);
    cams.push_back(res.pose);
  }
  run_stage("write-cameras", [&] { write_camera_json(args.output, cams); });
  finish_manifest(manifest, timer, args.output);
  return 0;
}

// ------------------------------------------------------------------ recon

struct ReconArgs {
  std::string points_dir, normals_base_dir, masks_dir, output;
  std::string normals_res_dir, point_confs_dir, cameras_file, residual_file;
  std::size_t resolution = 256;
  double sigma = 2.0;
  double conf_threshold = 1.0;
  double margin = 0.05;
  int fallback_iters = 32;
  int fallback_radius = 3;
  std::size_t stride = 4;
  RansacOptions ransac;
};

int cmd_recon(const ReconArgs& args) {
  Timer timer;
  RunManifest manifest;
  manifest.subcommand = "recon";
  manifest.flags = {{"points", args.points_dir},
                    {"normals-base", args.normals_base_dir},
                    {"normals-res", args.normals_res_dir},
                    {"masks", args.masks_dir},
                    {"point-confs", args.point_confs_dir},
                    {"cameras", args.cameras_file},
                    {"residual", args.residual_file},
                    {"res", std::to_string(args.resolution)},
                    {"sigma", std::to_string(args.sigma)},
                    {"conf-threshold", std::to_string(args.conf_threshold)},
                    {"margin", std::to_string(args.margin)},
                    {"fallback-iters", std::to_string(args.fallback_iters)},
                    {"fallback-radius", std::to_string(args.fallback_radius)},
                    {"seed", std::to_string(args.ransac.seed)},
                    {"output", args.output}};

  auto points = run_stage("load-points",
                          [&] { return load_view_dir(args.points_dir, 0, manifest); });
  const std::size_t n_views = points.size();
  auto normals_base = run_stage("load-normals", [&] {
    return load_view_dir(args.normals_base_dir, n_views, manifest);
  });
  auto masks = run_stage(
      "load-masks", [&] { return load_view_dir(args.masks_dir, n_views, manifest); });
  std::vector<Tensor> normals_res, confs;
  if (!args.normals_res_dir.empty())
    normals_res = run_stage("load-normal-residuals", [&] {
      return load_view_dir(args.normals_res_dir, n_views, manifest);
    });
  if (!args.point_confs_dir.empty())
    confs = run_stage("load-point-confidences", [&] {
      return load_view_dir(args.point_confs_dir, n_views, manifest);
    });

  // fuse residual normals: zero residual when none supplied
  std::vector<Tensor> fused;
  for (std::size_t v = 0; v < n_views; ++v) {
    fused.push_back(run_stage("combine-normals", [&] {
      if (normals_res.empty()) {
        Tensor zero = Tensor::zeros(Dtype::f32, {normals_base[v].dim(0),
                                                 normals_base[v].dim(1), 3});
        return combine_normals(normals_base[v], zero, &masks[v]);
      }
      return combine_normals(normals_base[v], normals_res[v], &masks[v]);
    }));
  }

  // cameras: given file or recovered from the point maps
  std::vector<CameraPose> cams;
  if (!args.cameras_file.empty()) {
    manifest.add_input(args.cameras_file);
    cams = run_stage("load-cameras", [&] { return read_camera_json(args.cameras_file); });
    if (cams.size() != n_views)
      throw StageError("load-cameras", "camera count does not match view count");
  } else {
    for (std::size_t v = 0; v < n_views; ++v)
      cams.push_back(run_stage("camera-recovery", [&] {
                       return camera_from_pointmap(points[v], masks[v], args.stride,
                                                   args.ransac)
                           .pose;
                     }));
  }

  // world-frame normals and the merged oriented cloud
  std::vector<Tensor> world_normals;
  for (std::size_t v = 0; v < n_views; ++v)
    world_normals.push_back(
        run_stage("normals-to-world", [&] { return normals_to_world(fused[v], cams[v]); }));

  std::vector<ViewGeometry> views;
  for (std::size_t v = 0; v < n_views; ++v)
    views.push_back({&points[v], &world_normals[v], &masks[v],
                     confs.empty() ? nullptr : &confs[v]});
  OrientedPointCloud cloud = run_stage(
      "merge", [&] { return merge_oriented_points(views, args.conf_threshold); });
  std::printf("merged cloud: %zu oriented points\n", cloud.size());

  auto normalized_pair = run_stage("normalize", [&] {
    return normalize_to_unit_cube(cloud, args.margin);
  });
  OrientedPointCloud& normalized = normalized_pair.first;
  SimilarityTransform& to_world = normalized_pair.second;

  VectorFieldGrid field = run_stage(
      "rasterize", [&] { return rasterize_points(normalized, args.resolution); });
  IndicatorGrid chi0 = run_stage(
      "poisson-solve", [&] { return solve_poisson_fft(field, args.sigma, normalized); });

  IndicatorGrid chi = run_stage("residual", [&] {
    if (!args.residual_file.empty()) {
      manifest.add_input(args.residual_file);
      Tensor t = read_tensor(args.residual_file);
      IndicatorGrid res = grid_from_tensor(t);
      return apply_residual(chi0, res);
    }
    return fallback_residual(chi0, normalized, args.fallback_iters,
                             args.fallback_radius);
  });
  chi.to_world = to_world;

  TriangleMesh mesh = run_stage("marching-cubes", [&] { return marching_cubes(chi, 0.0); });
  std::printf("mesh: %zu vertices, %zu faces, watertight=%s\n", mesh.vertices.size(),
              mesh.faces.size(), is_watertight(mesh) ? "yes" : "no");
  run_stage("write-mesh", [&] { write_mesh(args.output, mesh); });
  finish_manifest(manifest, timer, args.output);
  return 0;
}

// --------------------------------------------------------------- fit-body

struct FitArgs {
  std::string model_file, markers_file, output, out_mesh, out_markers;
  std::string points_dir, tight_dir_dir, tight_mag_dir, label_probs_dir,
      label_confs_dir, masks_dir;
  double alpha = 2.0;
  FitConfig config;
};

int cmd_fit_body(const FitArgs& args) {
  Timer timer;
  RunManifest manifest;
  manifest.subcommand = "fit-body";
  manifest.flags = {{"model", args.model_file},
                    {"markers", args.markers_file},
                    {"alpha", std::to_string(args.alpha)},
                    {"lambda-reg", std::to_string(args.config.lambda_reg)},
                    {"stage-iters", std::to_string(args.config.max_iterations_per_stage)},
                    {"output", args.output}};

  manifest.add_input(args.model_file);
  BodyModel model =
      run_stage("load-model", [&] { return read_body_model(args.model_file); });

  MarkerSet markers;
  if (!args.markers_file.empty()) {
    manifest.add_input(args.markers_file);
    markers = run_stage("load-markers", [&] { return read_markers_json(args.markers_file); });
  } else {
    auto points = run_stage("load-points",
                            [&] { return load_view_dir(args.points_dir, 0, manifest); });
    const std::size_t n_views = points.size();
    auto dirs = run_stage("load-tightness-dir", [&] {
      return load_view_dir(args.tight_dir_dir, n_views, manifest);
    });
    auto mags = run_stage("load-tightness-mag", [&] {
      return load_view_dir(args.tight_mag_dir, n_views, manifest);
    });
    auto probs = run_stage("load-label-probs", [&] {
      return load_view_dir(args.label_probs_dir, n_views, manifest);
    });
    auto lconfs = run_stage("load-label-confs", [&] {
      return load_view_dir(args.label_confs_dir, n_views, manifest);
    });
    auto masks = run_stage(
        "load-masks", [&] { return load_view_dir(args.masks_dir, n_views, manifest); });

    std::vector<Tensor> inner(n_views), labels(n_views), conf(n_views);
    for (std::size_t v = 0; v < n_views; ++v) {
      inner[v] = run_stage("inner-points",
                           [&] { return inner_points(points[v], dirs[v], mags[v]); });
      labels[v] = run_stage("argmax-labels", [&] { return argmax_labels(probs[v]); });
      conf[v] = run_stage("aggregate-confidence",
                          [&] { return aggregate_confidence(probs[v], lconfs[v]); });
    }
    std::vector<MarkerViewData> views;
    for (std::size_t v = 0; v < n_views; ++v)
      views.push_back({&inner[v], &labels[v], &conf[v], &masks[v]});
    markers = run_stage("aggregate-markers", [&] {
      return aggregate_markers(views, args.alpha, model.marker_count());
    });
  }

  if (markers.size() != model.marker_count())
    throw StageError("fit", "marker set size " + std::to_string(markers.size()) +
                                " does not match model marker count " +
                                std::to_string(model.marker_count()));

  FitResult fit = run_stage("fit", [&] { return fit_body(markers, model, args.config); });
  std::printf("fit: cost %.6e after %d iterations (%zu valid markers)\n",
              fit.final_cost, fit.iterations, markers.valid_count());

  nlohmann::json j;
  j["scale"] = fit.params.scale;
  j["translation"] = {fit.params.translation.x(), fit.params.translation.y(),
                      fit.params.translation.z()};
  j["pose"] = nlohmann::json::array();
  for (const auto& th : fit.params.pose) j["pose"].push_back({th.x(), th.y(), th.z()});
  j["shape"] = std::vector<double>(fit.params.shape.data(),
                                   fit.params.shape.data() + fit.params.shape.size());
  j["final_cost"] = fit.final_cost;
  j["iterations"] = fit.iterations;
  j["valid_markers"] = markers.valid_count();
  run_stage("write-fit", [&] {
    std::ofstream out(args.output);
    if (!out) throw IoError("cannot open " + args.output + " for writing");
    out << j.dump(2) << "\n";
  });

  if (!args.out_mesh.empty()) {
    LbsOutput body = lbs_forward(model, fit.params);
    TriangleMesh cloud_mesh;
    cloud_mesh.vertices = body.vertices;
    run_stage("write-fitted-mesh", [&] { write_mesh(args.out_mesh, cloud_mesh); });
  }
  if (!args.out_markers.empty())
    run_stage("write-markers", [&] { write_markers_json(args.out_markers, markers); });

  finish_manifest(manifest, timer, args.output);
  return 0;
}

// ------------------------------------------------------------------ align

int cmd_align(const std::string& source, const std::string& target,
              const std::string& output, const std::string& apply_path,
              bool no_scale) {
  Timer timer;
  RunManifest manifest;
  manifest.subcommand = "align";
  manifest.flags = {{"source", source},
                    {"target", target},
                    {"with-scale", no_scale ? "false" : "true"},
                    {"output", output}};
  manifest.add_input(source);
  manifest.add_input(target);

  TriangleMesh src = run_stage("load-source", [&] { return read_mesh(source); });
  TriangleMesh dst = run_stage("load-target", [&] { return read_mesh(target); });
  if (src.vertices.size() != dst.vertices.size())
    throw StageError("align", "vertex counts differ (" +
                                  std::to_string(src.vertices.size()) + " vs " +
                                  std::to_string(dst.vertices.size()) +
                                  "); correspondence is by vertex index");
  SimilarityTransform t = run_stage(
      "align", [&] { return umeyama(src.vertices, dst.vertices, !no_scale); });
  run_stage("write-transform", [&] { write_transform_json(output, t); });
  if (!apply_path.empty()) {
    TriangleMesh moved = src;
    for (auto& v : moved.vertices) v = t.apply(v);
    run_stage("write-aligned", [&] { write_mesh(apply_path, moved); });
  }
  finish_manifest(manifest, timer, output);
  return 0;
}

// -------------------------------------------------------------- eval-mesh

void append_csv(const std::string& path, const std::string& header,
                const std::string& row) {
  bool fresh = !fs::exists(path) || fs::file_size(path) == 0;
  std::ofstream out(path, std::ios::app);
  if (!out) throw IoError("cannot open " + path + " for appending");
  if (fresh) out << header << "\n";
  out << row << "\n";
}

int cmd_eval_mesh(const std::string& pred, const std::string& gt,
                  const std::string& output, std::size_t samples,
                  std::uint64_t seed, double tau_abs, double tau_frac,
                  const std::string& csv) {
  Timer timer;
  RunManifest manifest;
  manifest.subcommand = "eval-mesh";
  manifest.flags = {{"pred", pred},
                    {"gt", gt},
                    {"samples", std::to_string(samples)},
                    {"seed", std::to_string(seed)},
                    {"tau-abs", std::to_string(tau_abs)},
                    {"tau-frac", std::to_string(tau_frac)},
                    {"output", output}};
  manifest.add_input(pred);
  manifest.add_input(gt);

  TriangleMesh pred_mesh = run_stage("load-pred", [&] { return read_mesh(pred); });
  TriangleMesh gt_mesh = run_stage("load-gt", [&] { return read_mesh(gt); });
  MeshEvalReport report = run_stage("evaluate", [&] {
    return evaluate_mesh(pred_mesh, gt_mesh, samples, seed, tau_abs, tau_frac);
  });

  run_stage("write-report", [&] {
    std::ofstream out(output);
    if (!out) throw IoError("cannot open " + output + " for writing");
    out << mesh_report_to_json(report).dump(2) << "\n";
  });
  std::printf("accuracy %.4f  completeness %.4f  chamfer %.4f (x1e-3)  "
              "f-score %.4f  NC %.4f\n",
              report.accuracy, report.completeness, report.chamfer, report.fscore,
              report.normal_consistency);
  if (!csv.empty())
    run_stage("write-csv", [&] {
      char row[512];
      std::snprintf(row, sizeof row, "%s,%s,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g",
                    pred.c_str(), gt.c_str(), report.accuracy, report.completeness,
                    report.chamfer, report.fscore, report.normal_consistency,
                    report.tau);
      append_csv(csv, "pred,gt,accuracy,completeness,chamfer,fscore,normal_consistency,tau",
                 row);
    });
  finish_manifest(manifest, timer, output);
  return 0;
}

// -------------------------------------------------------------- eval-body

std::vector<Vec3> load_points_any(const std::string& path, RunManifest& manifest) {
  manifest.add_input(path);
  if (path.size() > 4 && path.substr(path.size() - 4) == ".htf") {
    Tensor t = read_tensor(path);
    if (t.ndim() != 2 || t.dim(1) != 3)
      throw Error(path + ": expected an [N,3] tensor");
    std::vector<Vec3> pts(t.dim(0));
    for (std::size_t i = 0; i < pts.size(); ++i)
      pts[i] = Vec3(t.f32()[3 * i], t.f32()[3 * i + 1], t.f32()[3 * i + 2]);
    return pts;
  }
  return read_mesh(path).vertices;
}

int cmd_eval_body(const std::string& pred_mesh, const std::string& gt_mesh,
                  const std::string& pred_joints, const std::string& gt_joints,
                  const std::string& output, const std::string& csv) {
  Timer timer;
  RunManifest manifest;
  manifest.subcommand = "eval-body";
  manifest.flags = {{"pred-mesh", pred_mesh},
                    {"gt-mesh", gt_mesh},
                    {"pred-joints", pred_joints},
                    {"gt-joints", gt_joints},
                    {"output", output}};

  BodyEvalReport report;
  if (!pred_mesh.empty()) {
    auto pv = run_stage("load-pred-vertices", [&] { return load_points_any(pred_mesh, manifest); });
    auto gv = run_stage("load-gt-vertices", [&] { return load_points_any(gt_mesh, manifest); });
    report.pa_v2v_mm = run_stage("pa-v2v", [&] { return pa_v2v(pv, gv); });
  }
  if (!pred_joints.empty()) {
    auto pj = run_stage("load-pred-joints", [&] { return load_points_any(pred_joints, manifest); });
    auto gj = run_stage("load-gt-joints", [&] { return load_points_any(gt_joints, manifest); });
    report.pa_mpjpe_mm = run_stage("pa-mpjpe", [&] { return pa_mpjpe(pj, gj); });
  }

  run_stage("write-report", [&] {
    std::ofstream out(output);
    if (!out) throw IoError("cannot open " + output + " for writing");
    out << body_report_to_json(report).dump(2) << "\n";
  });
  if (report.pa_v2v_mm >= 0) std::printf("PA-V2V  %.4f mm\n", report.pa_v2v_mm);
  if (report.pa_mpjpe_mm >= 0) std::printf("PA-MPJPE %.4f mm\n", report.pa_mpjpe_mm);
  if (!csv.empty())
    run_stage("write-csv", [&] {
      char row[512];
      std::snprintf(row, sizeof row, "%s,%s,%.9g,%.9g", pred_mesh.c_str(),
                    gt_mesh.c_str(), report.pa_v2v_mm, report.pa_mpjpe_mm);
      append_csv(csv, "pred,gt,pa_v2v_mm,pa_mpjpe_mm", row);
    });
  finish_manifest(manifest, timer, output);
  return 0;
}

// ------------------------------------------------------------ init-splats

int cmd_init_splats(const std::string& mesh_path, const std::string& output,
                    double opacity, const std::string& color_str) {
  Timer timer;
  RunManifest manifest;
  manifest.subcommand = "init-splats";
  manifest.flags = {{"mesh", mesh_path},
                    {"opacity", std::to_string(opacity)},
                    {"color", color_str},
                    {"output", output}};
  manifest.add_input(mesh_path);

  Vec3 color(0.5, 0.5, 0.5);
  if (!color_str.empty()) {
    double r, g, b;
    if (std::sscanf(color_str.c_str(), "%lf,%lf,%lf", &r, &g, &b) != 3)
      throw StageError("parse-color", "--color expects r,g,b in [0,1]");
    color = Vec3(r, g, b);
  }
  TriangleMesh mesh = run_stage("load-mesh", [&] { return read_mesh(mesh_path); });
  SurfelSet set = run_stage("init-surfels", [&] { return init_surfels(mesh, opacity, color); });
  run_stage("write-surfels", [&] { write_surfels_ply(output, set); });
  std::printf("%zu surfels\n", set.size());
  finish_manifest(manifest, timer, output);
  return 0;
}

// ---------------------------------------------------------- make-toy-body

int cmd_make_toy_body(const std::string& output) {
  Timer timer;
  RunManifest manifest;
  manifest.subcommand = "make-toy-body";
  manifest.flags = {{"output", output}};
  BodyModel model = make_toy_body_model();
  run_stage("write-model", [&] { write_body_model(output, model); });
  std::printf("toy body: %zu vertices, %zu joints, %zu shape coefficients\n",
              model.vertex_count(), model.joint_count(), model.shape_count());
  finish_manifest(manifest, timer, output);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hartgeom: sparse-view human reconstruction pipeline"};
  app.require_subcommand(1);

  unsigned threads = 0;
  app.add_option("--threads", threads,
                 "cap worker threads (default: hardware, env HARTGEOM_THREADS)");

  CameraArgs cam_args;
  auto* cameras = app.add_subcommand("cameras", "recover cameras from point maps");
  cameras->add_option("--points", cam_args.points_dir, "directory of point-map .htf files")
      ->required();
  cameras->add_option("--masks", cam_args.masks_dir, "directory of mask .htf files")
      ->required();
  cameras->add_option("--stride", cam_args.stride, "pixel stride for correspondences");
  cameras->add_option("--threshold", cam_args.ransac.threshold_px, "RANSAC inlier threshold, px");
  cameras->add_option("--iters", cam_args.ransac.max_iters, "RANSAC iteration budget");
  cameras->add_option("--confidence", cam_args.ransac.confidence, "RANSAC confidence");
  cameras->add_option("--seed", cam_args.ransac.seed, "RNG seed");
  cameras->add_option("-o,--output", cam_args.output, "output camera JSON")->required();

  ReconArgs recon_args;
  auto* recon = app.add_subcommand("recon", "clothed-surface reconstruction");
  recon->add_option("--points", recon_args.points_dir, "directory of point-map .htf files")
      ->required();
  recon->add_option("--normals-base", recon_args.normals_base_dir,
                    "directory of base normal maps (camera frame)")
      ->required();
  recon->add_option("--normals-res", recon_args.normals_res_dir,
                    "directory of residual normal maps");
  recon->add_option("--masks", recon_args.masks_dir, "directory of mask .htf files")
      ->required();
  recon->add_option("--point-confs", recon_args.point_confs_dir,
                    "directory of point confidence maps");
  recon->add_option("--cameras", recon_args.cameras_file,
                    "camera JSON (recovered from point maps when absent)");
  recon->add_option("--residual", recon_args.residual_file,
                    "residual indicator grid .htf (fallback closing when absent)");
  recon->add_option("--res", recon_args.resolution, "grid resolution (power of two)");
  recon->add_option("--sigma", recon_args.sigma, "spectral Gaussian width, cells");
  recon->add_option("--conf-threshold", recon_args.conf_threshold,
                    "point confidence threshold at merge");
  recon->add_option("--margin", recon_args.margin, "unit-cube padding fraction");
  recon->add_option("--fallback-iters", recon_args.fallback_iters,
                    "sign-diffusion iterations of the fallback residual");
  recon->add_option("--fallback-radius", recon_args.fallback_radius,
                    "observed-cell radius (cells) kept exact by the fallback");
  recon->add_option("--stride", recon_args.stride, "camera recovery stride");
  recon->add_option("--seed", recon_args.ransac.seed, "RNG seed");
  recon->add_option("-o,--output", recon_args.output, "output mesh PLY")->required();

  FitArgs fit_args;
  auto* fit = app.add_subcommand("fit-body", "fit the parametric body to markers");
  fit->add_option("--model", fit_args.model_file, "body model .hbm container")->required();
  fit->add_option("--markers", fit_args.markers_file, "aggregated markers JSON");
  fit->add_option("--points", fit_args.points_dir, "directory of point maps");
  fit->add_option("--tight-dir", fit_args.tight_dir_dir, "directory of tightness directions");
  fit->add_option("--tight-mag", fit_args.tight_mag_dir, "directory of tightness magnitudes");
  fit->add_option("--label-probs", fit_args.label_probs_dir, "directory of label probabilities");
  fit->add_option("--label-confs", fit_args.label_confs_dir, "directory of label confidences");
  fit->add_option("--masks", fit_args.masks_dir, "directory of masks");
  fit->add_option("--alpha", fit_args.alpha, "confidence exponent in marker aggregation");
  fit->add_option("--lambda-reg", fit_args.config.lambda_reg, "L2 weight on pose and shape");
  fit->add_option("--stage-iters", fit_args.config.max_iterations_per_stage,
                  "LM iterations per stage");
  fit->add_option("-o,--output", fit_args.output, "output fit JSON")->required();
  fit->add_option("--out-mesh", fit_args.out_mesh, "write fitted body vertices as PLY");
  fit->add_option("--out-markers", fit_args.out_markers, "write aggregated markers JSON");

  std::string align_source, align_target, align_output, align_apply;
  bool align_no_scale = false;
  auto* align = app.add_subcommand("align", "similarity-align one mesh to another");
  align->add_option("--source", align_source, "source mesh")->required();
  align->add_option("--target", align_target, "target mesh")->required();
  align->add_option("-o,--output", align_output, "output transform JSON")->required();
  align->add_option("--apply", align_apply, "write transformed source mesh here");
  align->add_flag("--no-scale", align_no_scale, "rigid alignment (scale fixed at 1)");

  std::string em_pred, em_gt, em_output, em_csv;
  std::size_t em_samples = 100000;
  std::uint64_t em_seed = 0;
  double em_tau_abs = -1.0, em_tau_frac = 0.005;
  auto* eval_mesh_cmd = app.add_subcommand("eval-mesh", "chamfer/f-score/NC evaluation");
  eval_mesh_cmd->add_option("--pred", em_pred, "predicted mesh")->required();
  eval_mesh_cmd->add_option("--gt", em_gt, "ground-truth mesh")->required();
  eval_mesh_cmd->add_option("--samples", em_samples, "surface samples per mesh");
  eval_mesh_cmd->add_option("--seed", em_seed, "sampling seed");
  eval_mesh_cmd->add_option("--tau-abs", em_tau_abs, "absolute f-score threshold");
  eval_mesh_cmd->add_option("--tau-frac", em_tau_frac,
                            "f-score threshold as a fraction of the gt bbox diagonal");
  eval_mesh_cmd->add_option("--csv", em_csv, "append a CSV row here");
  eval_mesh_cmd->add_option("-o,--output", em_output, "output report JSON")->required();

  std::string eb_pred_mesh, eb_gt_mesh, eb_pred_joints, eb_gt_joints, eb_output, eb_csv;
  auto* eval_body_cmd = app.add_subcommand("eval-body", "PA-V2V / PA-MPJPE evaluation");
  eval_body_cmd->add_option("--pred-mesh", eb_pred_mesh, "predicted body vertices (.ply/.htf)");
  eval_body_cmd->add_option("--gt-mesh", eb_gt_mesh, "ground-truth body vertices");
  eval_body_cmd->add_option("--pred-joints", eb_pred_joints, "predicted joints (.htf [J,3])");
  eval_body_cmd->add_option("--gt-joints", eb_gt_joints, "ground-truth joints");
  eval_body_cmd->add_option("--csv", eb_csv, "append a CSV row here");
  eval_body_cmd->add_option("-o,--output", eb_output, "output report JSON")->required();

  std::string is_mesh, is_output, is_color;
  double is_opacity = 0.8;
  auto* init_splats_cmd = app.add_subcommand("init-splats", "surfel initialization on mesh faces");
  init_splats_cmd->add_option("--mesh", is_mesh, "input mesh")->required();
  init_splats_cmd->add_option("--opacity", is_opacity, "initial opacity");
  init_splats_cmd->add_option("--color", is_color, "default color r,g,b");
  init_splats_cmd->add_option("-o,--output", is_output, "output surfel PLY")->required();

  std::string toy_output;
  auto* toy = app.add_subcommand("make-toy-body", "write the bundled demo body model");
  toy->add_option("-o,--output", toy_output, "output .hbm path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 64;
  }

  if (threads == 0) {
    if (const char* env = std::getenv("HARTGEOM_THREADS")) threads = unsigned(std::atoi(env));
  }
  if (threads > 0) set_max_threads(threads);

  try {
    if (app.got_subcommand(cameras)) return cmd_cameras(cam_args);
    if (app.got_subcommand(recon)) return cmd_recon(recon_args);
    if (app.got_subcommand(fit)) {
      bool has_markers = !fit_args.markers_file.empty();
      bool has_maps = !fit_args.points_dir.empty() && !fit_args.tight_dir_dir.empty() &&
                      !fit_args.tight_mag_dir.empty() && !fit_args.label_probs_dir.empty() &&
                      !fit_args.label_confs_dir.empty() && !fit_args.masks_dir.empty();
      if (!has_markers && !has_maps) {
        std::fprintf(stderr,
                     "fit-body needs either --markers or the full set of map "
                     "directories (--points --tight-dir --tight-mag --label-probs "
                     "--label-confs --masks)\n");
        return 64;
      }
      return cmd_fit_body(fit_args);
    }
    if (app.got_subcommand(align))
      return cmd_align(align_source, align_target, align_output, align_apply,
                       align_no_scale);
    if (app.got_subcommand(eval_mesh_cmd))
      return cmd_eval_mesh(em_pred, em_gt, em_output, em_samples, em_seed, em_tau_abs,
                           em_tau_frac, em_csv);
    if (app.got_subcommand(eval_body_cmd)) {
      if (eb_pred_mesh.empty() && eb_pred_joints.empty()) {
        std::fprintf(stderr, "eval-body needs --pred-mesh/--gt-mesh and/or "
                             "--pred-joints/--gt-joints\n");
        return 64;
      }
      if ((!eb_pred_mesh.empty() && eb_gt_mesh.empty()) ||
          (!eb_pred_joints.empty() && eb_gt_joints.empty())) {
        std::fprintf(stderr, "eval-body: pred/gt inputs must come in pairs\n");
        return 64;
      }
      return cmd_eval_body(eb_pred_mesh, eb_gt_mesh, eb_pred_joints, eb_gt_joints,
                           eb_output, eb_csv);
    }
    if (app.got_subcommand(init_splats_cmd))
      return cmd_init_splats(is_mesh, is_output, is_opacity, is_color);
    if (app.got_subcommand(toy)) return cmd_make_toy_body(toy_output);
  } catch (const StageError& e) {
    std::fprintf(stderr, "error in stage %s: %s\n", e.stage.c_str(), e.what());
    return 2;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
