#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hartgeom/camera.hpp"
#include "hartgeom/error.hpp"
#include "hartgeom/tensor.hpp"
#include "hartgeom/transform.hpp"

namespace hartgeom {

// Map shape helpers. Per-pixel maps are f32 tensors of shape [H,W] or
// [H,W,C]; masks are u8 [H,W].

inline void require_map_shape(const Tensor& t, std::size_t channels,
                              const char* what) {
  if (channels <= 1) {
    if (t.ndim() != 2)
      throw Error(std::string(what) + ": expected [H,W] tensor");
  } else {
    if (t.ndim() != 3 || t.dim(2) != channels)
      throw Error(std::string(what) + ": expected [H,W," +
                  std::to_string(channels) + "] tensor");
  }
}

inline void require_same_hw(const Tensor& a, const Tensor& b, const char* what) {
  if (a.dim(0) != b.dim(0) || a.dim(1) != b.dim(1))
    throw Error(std::string(what) + ": map sizes disagree");
}

inline bool mask_at(const Tensor& mask, std::size_t y, std::size_t x) {
  return mask.u8()[y * mask.dim(1) + x] != 0;
}

/// Per-view prediction bundle. Optional maps are empty when absent.
struct ViewPrediction {
  Tensor point_map;           // [H,W,3] f32, world frame (first camera)
  Tensor normal_base;         // [H,W,3] f32, camera frame, unit
  std::optional<Tensor> normal_residual;  // [H,W,3] f32
  Tensor mask;                // [H,W] u8, 0/1
  std::optional<Tensor> point_confidence;   // [H,W] f32 > 0
  std::optional<Tensor> normal_confidence;  // [H,W] f32 > 0
  std::optional<Tensor> tightness_dir;      // [H,W,3] f32, unit
  std::optional<Tensor> tightness_mag;      // [H,W] f32 >= 0
  std::optional<Tensor> label_probs;        // [H,W,86] f32, rows sum to 1
  std::optional<Tensor> label_confs;        // [H,W,86] f32 in [0,1]

  std::size_t height() const { return point_map.dim(0); }
  std::size_t width() const { return point_map.dim(1); }
};

struct PredictionSet {
  std::vector<ViewPrediction> views;
};

struct OrientedPointCloud {
  std::vector<Vec3> positions;
  std::vector<Vec3> normals;      // unit
  std::vector<double> confidences;

  std::size_t size() const { return positions.size(); }
};

/// normalize(base + residual) per pixel. Pixels where the sum cancels below
/// 1e-8 raise ZeroSumVector if they are masked (or if no mask is given);
/// unmasked cancelled pixels produce (0,0,0).
inline Tensor combine_normals(const Tensor& base, const Tensor& residual,
                              const Tensor* mask = nullptr) {
  require_map_shape(base, 3, "combine_normals base");
  require_map_shape(residual, 3, "combine_normals residual");
  require_same_hw(base, residual, "combine_normals");
  if (mask) require_same_hw(base, *mask, "combine_normals mask");
  std::size_t h = base.dim(0), w = base.dim(1);
  Tensor out = Tensor::zeros(Dtype::f32, {h, w, 3});
  const auto& b = base.f32();
  const auto& r = residual.f32();
  auto& o = out.f32();
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      std::size_t i = (y * w + x) * 3;
      double sx = double(b[i]) + double(r[i]);
      double sy = double(b[i + 1]) + double(r[i + 1]);
      double sz = double(b[i + 2]) + double(r[i + 2]);
      double n = std::sqrt(sx * sx + sy * sy + sz * sz);
      bool considered = !mask || mask_at(*mask, y, x);
      if (n < 1e-8) {
        if (considered)
          throw ZeroSumVector("combine_normals: base and residual cancel at pixel (" +
                              std::to_string(y) + "," + std::to_string(x) + ")");
        continue;
      }
      o[i] = static_cast<float>(sx / n);
      o[i + 1] = static_cast<float>(sy / n);
      o[i + 2] = static_cast<float>(sz / n);
    }
  return out;
}

/// Rotate a camera-frame normal map into the world frame: n_world = R_c2w n.
inline Tensor normals_to_world(const Tensor& normals, const CameraPose& pose) {
  require_map_shape(normals, 3, "normals_to_world");
  std::size_t h = normals.dim(0), w = normals.dim(1);
  Tensor out = Tensor::zeros(Dtype::f32, {h, w, 3});
  const auto& in = normals.f32();
  auto& o = out.f32();
  const Mat3& rot = pose.rotation_c2w;
  for (std::size_t p = 0; p < h * w; ++p) {
    Vec3 n(in[3 * p], in[3 * p + 1], in[3 * p + 2]);
    Vec3 wn = rot * n;
    o[3 * p] = static_cast<float>(wn.x());
    o[3 * p + 1] = static_cast<float>(wn.y());
    o[3 * p + 2] = static_cast<float>(wn.z());
  }
  return out;
}

struct ViewGeometry {
  const Tensor* points = nullptr;         // [H,W,3]
  const Tensor* normals_world = nullptr;  // [H,W,3]
  const Tensor* mask = nullptr;           // [H,W] u8
  const Tensor* confidence = nullptr;     // [H,W] f32, optional (1.0 if null)
};

/// Gather all pixels with mask=1 and confidence >= threshold across views.
inline OrientedPointCloud merge_oriented_points(
    const std::vector<ViewGeometry>& views, double conf_threshold) {
  OrientedPointCloud cloud;
  for (std::size_t v = 0; v < views.size(); ++v) {
    const auto& vw = views[v];
    require_map_shape(*vw.points, 3, "merge points");
    require_map_shape(*vw.normals_world, 3, "merge normals");
    require_same_hw(*vw.points, *vw.mask, "merge mask");
    require_same_hw(*vw.points, *vw.normals_world, "merge normals");
    if (vw.confidence) require_same_hw(*vw.points, *vw.confidence, "merge confidence");
    std::size_t h = vw.points->dim(0), w = vw.points->dim(1);
    const auto& p = vw.points->f32();
    const auto& n = vw.normals_world->f32();
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        if (!mask_at(*vw.mask, y, x)) continue;
        double conf = vw.confidence ? double(vw.confidence->f32()[y * w + x]) : 1.0;
        if (!(conf >= conf_threshold)) continue;
        std::size_t i = (y * w + x) * 3;
        cloud.positions.emplace_back(p[i], p[i + 1], p[i + 2]);
        cloud.normals.emplace_back(n[i], n[i + 1], n[i + 2]);
        cloud.confidences.push_back(conf);
      }
  }
  if (cloud.positions.empty())
    throw EmptyCloud("merge_oriented_points: no pixel passed mask and confidence threshold");
  return cloud;
}

/// Isotropically rescale a cloud into [margin, 1-margin]^3, centering the
/// shorter axes. The returned transform maps normalized coordinates back to
/// the original frame.
inline std::pair<OrientedPointCloud, SimilarityTransform> normalize_to_unit_cube(
    const OrientedPointCloud& cloud, double margin) {
  if (cloud.size() < 2)
    throw DegenerateBounds("normalize_to_unit_cube needs at least 2 points");
  if (!(margin >= 0) || margin >= 0.5)
    throw Error("margin must be in [0, 0.5)");
  Vec3 lo = cloud.positions[0], hi = lo;
  for (const auto& p : cloud.positions) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  Vec3 ext = hi - lo;
  double max_ext = ext.maxCoeff();
  if (max_ext < 1e-9)
    throw DegenerateBounds("bounding box extent below 1e-9 on every axis");
  double usable = 1.0 - 2.0 * margin;
  Vec3 pad = 0.5 * (Vec3::Constant(max_ext) - ext);  // centers shorter axes

  OrientedPointCloud out;
  out.positions.reserve(cloud.size());
  out.normals = cloud.normals;
  out.confidences = cloud.confidences;
  for (const auto& p : cloud.positions) {
    Vec3 q;
    for (int a = 0; a < 3; ++a)
      q[a] = ((p[a] - lo[a] + pad[a]) / max_ext) * usable + margin;
    out.positions.push_back(q);
  }

  SimilarityTransform to_world;
  to_world.scale = max_ext / usable;
  to_world.rotation = Mat3::Identity();
  to_world.translation = lo - pad - Vec3::Constant(margin * max_ext / usable);
  return {std::move(out), to_world};
}

}  // namespace hartgeom
