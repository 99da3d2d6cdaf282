#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hartgeom/error.hpp"

namespace hartgeom {

// Reference evaluators for the training losses. Pixel reduction is the mean
// over masked pixels within each view; views are then summed, except the
// label term which is averaged over views (it carries the 1/N itself).
// All evaluators run in double precision.

struct LossConfig {
  double alpha_conf = 0.2;  // weight of the -log(confidence) term

  void validate() const {
    if (alpha_conf < 0) throw Error("alpha_conf must be >= 0");
  }
};

struct PointLossView {
  std::span<const double> pred;        // 3*N, xyz per pixel
  std::span<const double> gt;          // 3*N
  std::span<const double> confidence;  // N, > 0
  std::span<const std::uint8_t> mask;  // N
};

/// Confidence-weighted L1 point loss with aleatoric regularizer:
/// per view, mean over masked pixels of C * |p_hat - p|_1 - alpha*log(C),
/// summed over views.
inline double point_loss(std::span<const PointLossView> views,
                         const LossConfig& cfg = {}) {
  cfg.validate();
  double total = 0;
  for (const auto& view : views) {
    const std::size_t n = view.mask.size();
    if (view.pred.size() != 3 * n || view.gt.size() != 3 * n ||
        view.confidence.size() != n)
      throw Error("point_loss: view buffer sizes disagree");
    double sum = 0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!view.mask[i]) continue;
      double c = view.confidence[i];
      if (!(c > 0))
        throw NonPositiveConfidence("point_loss: confidence " + std::to_string(c) +
                                    " at masked pixel " + std::to_string(i));
      double l1 = std::abs(view.pred[3 * i] - view.gt[3 * i]) +
                  std::abs(view.pred[3 * i + 1] - view.gt[3 * i + 1]) +
                  std::abs(view.pred[3 * i + 2] - view.gt[3 * i + 2]);
      sum += c * l1 - cfg.alpha_conf * std::log(c);
      ++count;
    }
    if (count) total += sum / double(count);
  }
  return total;
}

struct NormalLossView {
  std::span<const double> pred;        // 3*N unit normals
  std::span<const double> gt;          // 3*N unit normals
  std::span<const double> confidence;  // N, > 0
  std::span<const std::uint8_t> mask;  // N
};

/// Cosine normal loss with aleatoric regularizer: per view, mean over masked
/// pixels of C * (1 - n_hat . n) - alpha*log(C), summed over views.
inline double normal_loss(std::span<const NormalLossView> views,
                          const LossConfig& cfg = {}) {
  cfg.validate();
  double total = 0;
  for (const auto& view : views) {
    const std::size_t n = view.mask.size();
    if (view.pred.size() != 3 * n || view.gt.size() != 3 * n ||
        view.confidence.size() != n)
      throw Error("normal_loss: view buffer sizes disagree");
    double sum = 0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!view.mask[i]) continue;
      double np = std::hypot(view.pred[3 * i], view.pred[3 * i + 1], view.pred[3 * i + 2]);
      double ng = std::hypot(view.gt[3 * i], view.gt[3 * i + 1], view.gt[3 * i + 2]);
      if (std::abs(np - 1.0) > 1e-3 || std::abs(ng - 1.0) > 1e-3)
        throw NonUnitNormal("normal_loss: non-unit normal at masked pixel " +
                            std::to_string(i));
      double c = view.confidence[i];
      if (!(c > 0))
        throw NonPositiveConfidence("normal_loss: confidence at masked pixel " +
                                    std::to_string(i));
      double dot = view.pred[3 * i] * view.gt[3 * i] +
                   view.pred[3 * i + 1] * view.gt[3 * i + 1] +
                   view.pred[3 * i + 2] * view.gt[3 * i + 2];
      sum += c * (1.0 - dot) - cfg.alpha_conf * std::log(c);
      ++count;
    }
    if (count) total += sum / double(count);
  }
  return total;
}

struct SmplLossView {
  std::span<const double> pred_dir;          // 3*N unit directions
  std::span<const double> gt_dir;            // 3*N
  std::span<const double> pred_mag;          // N
  std::span<const double> gt_mag;            // N
  std::span<const double> label_probs;       // N*K, rows sum to 1
  std::span<const std::uint32_t> gt_labels;  // N, values < K
  std::span<const double> pred_conf;         // N
  std::span<const double> gt_conf;           // N
  std::span<const std::uint8_t> mask;        // N
  std::size_t label_count = 0;
};

struct SmplLosses {
  double direction = 0;   // sum over masked pixels of (1 - d_hat . d)
  double magnitude = 0;   // sum over masked pixels of (b_hat - b)^2
  double label = 0;       // mean over masked pixels of -log p[true class]
  double confidence = 0;  // sum over masked pixels of (c_hat - c)^2
  double total = 0;
  bool clamped_label_prob = false;  // some true-class probability hit the 1e-12 floor
};

/// The direction/magnitude/confidence terms are raw sums over masked pixels
/// across all views; the classification term carries its own 1/N and is the
/// mean over those pixels.
inline SmplLosses smpl_losses(std::span<const SmplLossView> views) {
  SmplLosses out;
  std::size_t pixel_count = 0;
  for (const auto& view : views) {
    const std::size_t n = view.mask.size();
    const std::size_t k = view.label_count;
    if (view.pred_dir.size() != 3 * n || view.gt_dir.size() != 3 * n ||
        view.pred_mag.size() != n || view.gt_mag.size() != n ||
        view.label_probs.size() != n * k || view.gt_labels.size() != n ||
        view.pred_conf.size() != n || view.gt_conf.size() != n)
      throw Error("smpl_losses: view buffer sizes disagree");
    for (std::size_t i = 0; i < n; ++i) {
      if (!view.mask[i]) continue;
      double dot = view.pred_dir[3 * i] * view.gt_dir[3 * i] +
                   view.pred_dir[3 * i + 1] * view.gt_dir[3 * i + 1] +
                   view.pred_dir[3 * i + 2] * view.gt_dir[3 * i + 2];
      out.direction += 1.0 - dot;
      double db = view.pred_mag[i] - view.gt_mag[i];
      out.magnitude += db * db;
      std::uint32_t label = view.gt_labels[i];
      if (label >= k)
        throw Error("smpl_losses: gt label out of range at pixel " + std::to_string(i));
      double p = view.label_probs[i * k + label];
      if (p < 1e-12) {
        p = 1e-12;
        out.clamped_label_prob = true;
      }
      out.label += -std::log(p);
      double dc = view.pred_conf[i] - view.gt_conf[i];
      out.confidence += dc * dc;
      ++pixel_count;
    }
  }
  if (pixel_count) out.label /= double(pixel_count);
  out.total = out.direction + out.magnitude + out.label + out.confidence;
  return out;
}

/// Unweighted total: point + normal + DPSR + SMPL.
inline double total_loss(double point, double normal, double dpsr, double smpl) {
  for (double v : {point, normal, dpsr, smpl})
    if (!std::isfinite(v))
      throw NonFiniteComponent("total_loss: non-finite component");
  return point + normal + dpsr + smpl;
}

}  // namespace hartgeom
