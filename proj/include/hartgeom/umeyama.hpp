#pragma once

#include <vector>

#include <Eigen/Core>
#include <Eigen/SVD>

#include "hartgeom/error.hpp"
#include "hartgeom/mesh.hpp"
#include "hartgeom/transform.hpp"

namespace hartgeom {

/// Closed-form least-squares similarity fit: argmin over (s,R,t) of
/// sum_k || s*R*src_k + t - dst_k ||^2, with reflection correction so R is
/// always a proper rotation. with_scale=false pins s=1 (rigid fit).
inline SimilarityTransform umeyama(const std::vector<Vec3>& src,
                                   const std::vector<Vec3>& dst,
                                   bool with_scale = true) {
  if (src.size() != dst.size())
    throw CountMismatch("umeyama: source and target sizes differ");
  const std::size_t n = src.size();
  if (n < 3) throw DegenerateSource("umeyama needs at least 3 points");

  Vec3 mean_src = Vec3::Zero(), mean_dst = Vec3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    mean_src += src[i];
    mean_dst += dst[i];
  }
  mean_src /= double(n);
  mean_dst /= double(n);

  Mat3 cov = Mat3::Zero();
  double src_var = 0;
  for (std::size_t i = 0; i < n; ++i) {
    Vec3 s = src[i] - mean_src;
    Vec3 d = dst[i] - mean_dst;
    cov += d * s.transpose();
    src_var += s.squaredNorm();
  }
  cov /= double(n);
  src_var /= double(n);
  if (src_var < 1e-18)
    throw DegenerateSource("umeyama: source points are all coincident");

  Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU(), v = svd.matrixV();
  Vec3 d_sing = svd.singularValues();
  Vec3 s_diag = Vec3::Ones();
  if ((u * v.transpose()).determinant() < 0) s_diag[2] = -1;

  SimilarityTransform t;
  t.rotation = u * s_diag.asDiagonal() * v.transpose();
  t.scale = with_scale ? (d_sing.dot(s_diag)) / src_var : 1.0;
  if (!(t.scale > 0))
    throw DegenerateSource("umeyama: non-positive optimal scale");
  t.translation = mean_dst - t.scale * (t.rotation * mean_src);
  return t;
}

/// Umeyama with scale applied to pred; returns the transformed points and
/// the transform itself.
inline std::pair<std::vector<Vec3>, SimilarityTransform> procrustes_align(
    const std::vector<Vec3>& pred, const std::vector<Vec3>& gt) {
  SimilarityTransform t = umeyama(pred, gt, true);
  std::vector<Vec3> aligned;
  aligned.reserve(pred.size());
  for (const auto& p : pred) aligned.push_back(t.apply(p));
  return {std::move(aligned), t};
}

}  // namespace hartgeom
