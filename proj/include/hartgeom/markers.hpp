#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hartgeom/error.hpp"
#include "hartgeom/prediction.hpp"
#include "hartgeom/tensor.hpp"

namespace hartgeom {

inline constexpr std::size_t kBodyMarkerCount = 86;

struct MarkerSet {
  std::vector<Vec3> positions;
  std::vector<std::uint8_t> valid;
  std::vector<double> support_weight;  // sum of confidence weights per marker

  std::size_t size() const { return positions.size(); }
  std::size_t valid_count() const {
    std::size_t n = 0;
    for (auto v : valid) n += v != 0;
    return n;
  }

  static MarkerSet empty(std::size_t count) {
    MarkerSet m;
    m.positions.assign(count, Vec3::Zero());
    m.valid.assign(count, 0);
    m.support_weight.assign(count, 0.0);
    return m;
  }
};

/// Per-pixel aggregated confidence: c_hat = sum_k p_k * c_k.
inline Tensor aggregate_confidence(const Tensor& label_probs,
                                   const Tensor& label_confs) {
  if (label_probs.ndim() != 3 || label_confs.ndim() != 3 ||
      label_probs.shape() != label_confs.shape())
    throw Error("aggregate_confidence: probs and confs must share [H,W,K]");
  const std::size_t h = label_probs.dim(0), w = label_probs.dim(1),
                    k = label_probs.dim(2);
  Tensor out = Tensor::zeros(Dtype::f32, {h, w});
  const auto& p = label_probs.f32();
  const auto& c = label_confs.f32();
  auto& o = out.f32();
  for (std::size_t px = 0; px < h * w; ++px) {
    double acc = 0;
    for (std::size_t ki = 0; ki < k; ++ki)
      acc += double(p[px * k + ki]) * double(c[px * k + ki]);
    o[px] = static_cast<float>(acc);
  }
  return out;
}

/// Per-pixel most probable class; ties resolve to the lowest class index.
inline Tensor argmax_labels(const Tensor& label_probs) {
  if (label_probs.ndim() != 3) throw Error("argmax_labels: expected [H,W,K]");
  const std::size_t h = label_probs.dim(0), w = label_probs.dim(1),
                    k = label_probs.dim(2);
  Tensor out = Tensor::zeros(Dtype::u32, {h, w});
  const auto& p = label_probs.f32();
  auto& o = out.u32();
  for (std::size_t px = 0; px < h * w; ++px) {
    std::uint32_t best = 0;
    float best_p = p[px * k];
    for (std::size_t ki = 1; ki < k; ++ki)
      if (p[px * k + ki] > best_p) {
        best_p = p[px * k + ki];
        best = static_cast<std::uint32_t>(ki);
      }
    o[px] = best;
  }
  return out;
}

/// Inner body points y = p + b * d per pixel.
inline Tensor inner_points(const Tensor& point_map, const Tensor& tightness_dir,
                           const Tensor& tightness_mag) {
  require_map_shape(point_map, 3, "inner_points point map");
  require_map_shape(tightness_dir, 3, "inner_points direction");
  require_map_shape(tightness_mag, 1, "inner_points magnitude");
  require_same_hw(point_map, tightness_dir, "inner_points");
  require_same_hw(point_map, tightness_mag, "inner_points");
  const std::size_t h = point_map.dim(0), w = point_map.dim(1);
  Tensor out = Tensor::zeros(Dtype::f32, {h, w, 3});
  const auto& p = point_map.f32();
  const auto& d = tightness_dir.f32();
  const auto& b = tightness_mag.f32();
  auto& o = out.f32();
  for (std::size_t px = 0; px < h * w; ++px)
    for (int c = 0; c < 3; ++c)
      o[3 * px + c] = static_cast<float>(double(p[3 * px + c]) +
                                         double(b[px]) * double(d[3 * px + c]));
  return out;
}

struct MarkerViewData {
  const Tensor* inner = nullptr;       // [H,W,3] f32
  const Tensor* labels = nullptr;      // [H,W] u32
  const Tensor* confidence = nullptr;  // [H,W] f32
  const Tensor* mask = nullptr;        // [H,W] u8
};

/// Confidence-weighted mean of inner points per label over masked pixels of
/// all views: m_k = sum(c^alpha * y) / sum(c^alpha). Markers with no
/// supporting pixel are flagged invalid.
inline MarkerSet aggregate_markers(const std::vector<MarkerViewData>& views,
                                   double alpha,
                                   std::size_t marker_count = kBodyMarkerCount) {
  if (alpha < 0) throw Error("aggregate_markers: alpha must be >= 0");
  MarkerSet markers = MarkerSet::empty(marker_count);
  std::vector<Vec3> weighted_sum(marker_count, Vec3::Zero());
  for (const auto& view : views) {
    require_map_shape(*view.inner, 3, "aggregate_markers inner");
    require_same_hw(*view.inner, *view.labels, "aggregate_markers labels");
    require_same_hw(*view.inner, *view.confidence, "aggregate_markers confidence");
    require_same_hw(*view.inner, *view.mask, "aggregate_markers mask");
    const std::size_t h = view.inner->dim(0), w = view.inner->dim(1);
    const auto& y = view.inner->f32();
    const auto& l = view.labels->u32();
    const auto& c = view.confidence->f32();
    const auto& m = view.mask->u8();
    for (std::size_t px = 0; px < h * w; ++px) {
      if (!m[px]) continue;
      std::uint32_t label = l[px];
      if (label >= marker_count)
        throw Error("aggregate_markers: label " + std::to_string(label) +
                    " out of range for " + std::to_string(marker_count) + " markers");
      double weight = std::pow(double(c[px]), alpha);
      weighted_sum[label] += weight * Vec3(y[3 * px], y[3 * px + 1], y[3 * px + 2]);
      markers.support_weight[label] += weight;
    }
  }
  bool any = false;
  for (std::size_t k = 0; k < marker_count; ++k) {
    if (markers.support_weight[k] > 0) {
      markers.positions[k] = weighted_sum[k] / markers.support_weight[k];
      markers.valid[k] = 1;
      any = true;
    }
  }
  if (!any) throw AllMarkersEmpty("aggregate_markers: no marker received any pixel");
  return markers;
}

inline void write_markers_json(const std::string& path, const MarkerSet& m) {
  nlohmann::json j;
  j["count"] = m.size();
  j["positions"] = nlohmann::json::array();
  for (const auto& p : m.positions) j["positions"].push_back({p.x(), p.y(), p.z()});
  j["valid"] = nlohmann::json::array();
  for (auto v : m.valid) j["valid"].push_back(v != 0);
  j["support_weight"] = m.support_weight;
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << j.dump(2) << "\n";
}

inline MarkerSet read_markers_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path + " for reading");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(path + ": JSON parse error: " + e.what());
  }
  for (const char* key : {"positions", "valid"})
    if (!j.contains(key))
      throw MissingField(path + ": markers JSON missing \"" + key + "\"");
  MarkerSet m = MarkerSet::empty(j["positions"].size());
  for (std::size_t k = 0; k < m.size(); ++k) {
    for (int c = 0; c < 3; ++c) m.positions[k][c] = j["positions"][k][c].get<double>();
    m.valid[k] = j["valid"][k].get<bool>() ? 1 : 0;
  }
  if (j.contains("support_weight"))
    m.support_weight = j["support_weight"].get<std::vector<double>>();
  return m;
}

}  // namespace hartgeom
