#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>
#include <Eigen/SVD>

#include "hartgeom/camera.hpp"
#include "hartgeom/error.hpp"
#include "hartgeom/levenberg_marquardt.hpp"
#include "hartgeom/rng.hpp"
#include "hartgeom/tensor.hpp"

namespace hartgeom {

struct PnpResult {
  CameraPose pose;
  std::vector<std::uint8_t> inlier_mask;
  double mean_reproj_error = 0;  // pixels, over inliers
  std::size_t inlier_count = 0;
};

struct RansacOptions {
  double threshold_px = 1.0;
  int max_iters = 512;
  double confidence = 0.999;
  std::uint64_t seed = 0;
};

namespace detail {

/// RQ decomposition of a 3x3 matrix into upper-triangular K and rotation R
/// (M = K * R), by Givens rotations zeroing m(2,1), m(2,0), m(1,0).
inline void rq_decompose(const Mat3& m, Mat3& k, Mat3& r) {
  Mat3 a = m;
  Mat3 q = Mat3::Identity();
  auto apply = [&](int i0, int i1, double c, double s) {
    // right-multiply a by the Givens rotation in the (i0,i1) plane
    for (int row = 0; row < 3; ++row) {
      double x = a(row, i0), y = a(row, i1);
      a(row, i0) = c * x + s * y;
      a(row, i1) = -s * x + c * y;
    }
    for (int row = 0; row < 3; ++row) {
      double x = q(row, i0), y = q(row, i1);
      q(row, i0) = c * x + s * y;
      q(row, i1) = -s * x + c * y;
    }
  };
  // zero a(2,1) using columns (y,z)
  {
    double x = a(2, 2), y = a(2, 1);
    double n = std::hypot(x, y);
    if (n > 0) apply(2, 1, x / n, y / n);
  }
  // zero a(2,0) using columns (x,z)
  {
    double x = a(2, 2), y = a(2, 0);
    double n = std::hypot(x, y);
    if (n > 0) apply(2, 0, x / n, y / n);
  }
  // zero a(1,0) using columns (x,y)
  {
    double x = a(1, 1), y = a(1, 0);
    double n = std::hypot(x, y);
    if (n > 0) apply(1, 0, x / n, y / n);
  }
  k = a;
  r = q.transpose();
}

inline double smallest_relative_extent(const std::vector<Vec3>& pts) {
  Vec3 mean = Vec3::Zero();
  for (const auto& p : pts) mean += p;
  mean /= double(pts.size());
  Mat3 cov = Mat3::Zero();
  for (const auto& p : pts) {
    Vec3 d = p - mean;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  double lo = eig.eigenvalues()(0), hi = eig.eigenvalues()(2);
  return hi > 0 ? lo / hi : 0.0;
}

}  // namespace detail

/// Direct linear transform on the 3x4 projection matrix followed by RQ
/// decomposition into intrinsics and pose. The principal point stays free.
/// Skew is discarded (zero for consistent pinhole data).
inline CameraPose pnp_dlt(const std::vector<Eigen::Vector2d>& points2d,
                          const std::vector<Vec3>& points3d) {
  if (points2d.size() != points3d.size())
    throw CountMismatch("pnp_dlt: 2D/3D correspondence counts differ");
  const std::size_t m = points2d.size();
  if (m < 6)
    throw DegenerateConfiguration("pnp_dlt needs at least 6 correspondences, got " +
                                  std::to_string(m));
  if (detail::smallest_relative_extent(points3d) < 1e-10)
    throw DegenerateConfiguration("pnp_dlt: 3D points are coplanar or collinear");

  // Hartley normalization for conditioning
  Eigen::Vector2d mean2 = Eigen::Vector2d::Zero();
  Vec3 mean3 = Vec3::Zero();
  for (std::size_t i = 0; i < m; ++i) {
    mean2 += points2d[i];
    mean3 += points3d[i];
  }
  mean2 /= double(m);
  mean3 /= double(m);
  double scale2 = 0, scale3 = 0;
  for (std::size_t i = 0; i < m; ++i) {
    scale2 += (points2d[i] - mean2).norm();
    scale3 += (points3d[i] - mean3).norm();
  }
  scale2 = std::sqrt(2.0) / std::max(scale2 / double(m), 1e-12);
  scale3 = std::sqrt(3.0) / std::max(scale3 / double(m), 1e-12);

  Eigen::MatrixXd a(2 * m, 12);
  for (std::size_t i = 0; i < m; ++i) {
    Eigen::Vector2d uv = (points2d[i] - mean2) * scale2;
    Vec3 x = (points3d[i] - mean3) * scale3;
    Eigen::RowVector4d xh(x.x(), x.y(), x.z(), 1.0);
    a.row(2 * i).setZero();
    a.row(2 * i + 1).setZero();
    a.block<1, 4>(2 * i, 0) = xh;
    a.block<1, 4>(2 * i, 8) = -uv.x() * xh;
    a.block<1, 4>(2 * i + 1, 4) = xh;
    a.block<1, 4>(2 * i + 1, 8) = -uv.y() * xh;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinV);
  const auto& sing = svd.singularValues();
  if (sing(10) < 1e-12 * sing(0))
    throw RankDeficient("pnp_dlt: design matrix has a degenerate null space");
  Eigen::VectorXd p_vec = svd.matrixV().col(11);

  Eigen::Matrix<double, 3, 4> p_norm;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c) p_norm(r, c) = p_vec(4 * r + c);

  // undo normalization: P = T2^-1 * P_norm * T3
  Eigen::Matrix3d t2inv = Eigen::Matrix3d::Identity();
  t2inv(0, 0) = t2inv(1, 1) = 1.0 / scale2;
  t2inv(0, 2) = mean2.x();
  t2inv(1, 2) = mean2.y();
  Eigen::Matrix4d t3 = Eigen::Matrix4d::Identity();
  t3.block<3, 3>(0, 0) *= scale3;
  t3.block<3, 1>(0, 3) = -scale3 * mean3;
  Eigen::Matrix<double, 3, 4> p = t2inv * p_norm * t3;

  // cheirality: majority of projective depths positive (fixes P vs -P, and
  // with it det of the rotation factor)
  int positive = 0;
  for (std::size_t i = 0; i < m; ++i) {
    Eigen::Vector4d xh(points3d[i].x(), points3d[i].y(), points3d[i].z(), 1.0);
    if (p.row(2) * xh > 0) ++positive;
  }
  if (2 * positive < int(m)) p = -p;

  Mat3 k, r;
  detail::rq_decompose(p.block<3, 3>(0, 0), k, r);
  Mat3 s = Mat3::Identity();
  for (int d = 0; d < 3; ++d) s(d, d) = k(d, d) < 0 ? -1.0 : 1.0;
  k = k * s;
  r = s * r;
  if (std::abs(k(2, 2)) < 1e-15) throw RankDeficient("pnp_dlt: singular intrinsics");
  Vec3 t_w2c = k.inverse() * p.block<3, 1>(0, 3);
  k /= k(2, 2);
  if (r.determinant() < 0) {
    r = -r;
    t_w2c = -t_w2c;
  }

  CameraPose pose;
  pose.rotation_c2w = r.transpose();
  pose.translation_c2w = -r.transpose() * t_w2c;
  pose.fx = k(0, 0);
  pose.fy = k(1, 1);
  pose.cx = k(0, 2);
  pose.cy = k(1, 2);
  pose.validate(1e-6);
  return pose;
}

namespace detail {

inline Eigen::VectorXd pose_to_vector(const CameraPose& pose) {
  Eigen::VectorXd x(10);
  Eigen::AngleAxisd aa(pose.rotation_w2c());
  x.segment<3>(0) = aa.angle() * aa.axis();
  x.segment<3>(3) = pose.translation_w2c();
  x[6] = pose.fx;
  x[7] = pose.fy;
  x[8] = pose.cx;
  x[9] = pose.cy;
  return x;
}

inline CameraPose vector_to_pose(const Eigen::VectorXd& x) {
  CameraPose pose;
  Vec3 w = x.segment<3>(0);
  double angle = w.norm();
  Mat3 r_w2c = Mat3::Identity();
  if (angle >= 1e-14)
    r_w2c = Eigen::AngleAxisd(angle, w / angle).toRotationMatrix();
  pose.rotation_c2w = r_w2c.transpose();
  pose.translation_c2w = -r_w2c.transpose() * x.segment<3>(3);
  pose.fx = x[6];
  pose.fy = x[7];
  pose.cx = x[8];
  pose.cy = x[9];
  return pose;
}

}  // namespace detail

/// LM refinement of a pose on a correspondence subset, minimizing pixel
/// reprojection with a Huber loss (delta = 2 * threshold) against residual
/// outliers.
inline CameraPose refine_pose(const CameraPose& init,
                              const std::vector<Eigen::Vector2d>& points2d,
                              const std::vector<Vec3>& points3d,
                              const std::vector<std::uint8_t>& subset,
                              double huber_delta) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < subset.size(); ++i)
    if (subset[i]) idx.push_back(i);

  LmResidualFn residuals = [&](const Eigen::VectorXd& x) {
    CameraPose pose = detail::vector_to_pose(x);
    Eigen::VectorXd r(2 * idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
      Eigen::Vector2d e = pose.project(points3d[idx[k]]) - points2d[idx[k]];
      double n = e.norm();
      double w = n <= huber_delta ? 1.0 : std::sqrt(huber_delta / n);
      r.segment<2>(2 * k) = w * e;
    }
    return r;
  };
  LmOptions opts;
  opts.max_iterations = 50;
  LmResult res = lm_minimize(residuals, detail::pose_to_vector(init), opts);
  CameraPose refined = detail::vector_to_pose(res.params);
  refined.rotation_c2w = nearest_rotation(refined.rotation_c2w);
  return refined;
}

/// RANSAC over 6-point DLT hypotheses with LM polish on the consensus set.
/// Deterministic given the seed; ties between trials resolve to the earlier
/// trial.
inline PnpResult pnp_ransac(const std::vector<Eigen::Vector2d>& points2d,
                            const std::vector<Vec3>& points3d,
                            const RansacOptions& opts = {}) {
  const std::size_t m = points2d.size();
  if (points3d.size() != m)
    throw CountMismatch("pnp_ransac: 2D/3D correspondence counts differ");
  if (m < 6) throw NoConsensus("pnp_ransac needs at least 6 correspondences");

  auto count_inliers = [&](const CameraPose& pose, std::vector<std::uint8_t>& mask) {
    std::size_t count = 0;
    mask.assign(m, 0);
    for (std::size_t i = 0; i < m; ++i) {
      Vec3 pc = pose.to_camera(points3d[i]);
      if (pc.z() <= 0) continue;
      double err = (pose.project(points3d[i]) - points2d[i]).norm();
      if (err <= opts.threshold_px) {
        mask[i] = 1;
        ++count;
      }
    }
    return count;
  };

  Pcg32 rng(opts.seed);
  CameraPose best_pose;
  std::vector<std::uint8_t> best_mask;
  std::size_t best_count = 0;
  bool found = false;
  int needed_iters = opts.max_iters;

  std::vector<Eigen::Vector2d> s2(6);
  std::vector<Vec3> s3(6);
  for (int trial = 0; trial < needed_iters; ++trial) {
    // sample 6 distinct indices
    std::size_t sample[6];
    for (int k = 0; k < 6;) {
      std::size_t cand = rng.next_below(static_cast<std::uint32_t>(m));
      bool dup = false;
      for (int j = 0; j < k; ++j) dup |= sample[j] == cand;
      if (!dup) sample[k++] = cand;
    }
    for (int k = 0; k < 6; ++k) {
      s2[k] = points2d[sample[k]];
      s3[k] = points3d[sample[k]];
    }
    CameraPose cand;
    try {
      cand = pnp_dlt(s2, s3);
    } catch (const Error&) {
      continue;  // degenerate minimal sample
    }
    std::vector<std::uint8_t> mask;
    std::size_t count = count_inliers(cand, mask);
    if (count > best_count) {
      best_count = count;
      best_pose = cand;
      best_mask = std::move(mask);
      found = true;
      // adaptive iteration bound from the current inlier ratio
      double w = double(count) / double(m);
      double p_fail = 1.0 - std::pow(w, 6);
      if (p_fail < 1e-12) break;
      double need = std::log(1.0 - opts.confidence) / std::log(p_fail);
      if (std::isfinite(need) && need < double(opts.max_iters))
        needed_iters = std::min(needed_iters,
                                trial + 1 + std::max(1, int(std::ceil(need))));
    }
  }
  if (!found || best_count < 6)
    throw NoConsensus("pnp_ransac: best consensus set has " +
                      std::to_string(best_count) + " inliers (need >= 6)");

  // polish on the consensus set, then recompute the final inlier set
  PnpResult result;
  result.pose = refine_pose(best_pose, points2d, points3d, best_mask,
                            2.0 * opts.threshold_px);
  result.inlier_count = count_inliers(result.pose, result.inlier_mask);
  if (result.inlier_count < 6)
    throw NoConsensus("pnp_ransac: refinement lost the consensus set");
  double err_sum = 0;
  for (std::size_t i = 0; i < m; ++i)
    if (result.inlier_mask[i])
      err_sum += (result.pose.project(points3d[i]) - points2d[i]).norm();
  result.mean_reproj_error = err_sum / double(result.inlier_count);
  return result;
}

/// Camera recovery from a predicted point map: correspondences are pixel
/// centers (u+0.5, v+0.5) against the 3D point stored at that pixel, taken
/// on masked pixels at the given stride.
inline PnpResult camera_from_pointmap(const Tensor& point_map, const Tensor& mask,
                                      std::size_t stride,
                                      const RansacOptions& opts = {}) {
  if (point_map.ndim() != 3 || point_map.dim(2) != 3)
    throw Error("camera_from_pointmap: point map must be [H,W,3]");
  if (stride == 0) stride = 1;
  const std::size_t h = point_map.dim(0), w = point_map.dim(1);
  std::vector<Eigen::Vector2d> points2d;
  std::vector<Vec3> points3d;
  const auto& p = point_map.f32();
  const auto& mk = mask.u8();
  for (std::size_t y = 0; y < h; y += stride)
    for (std::size_t x = 0; x < w; x += stride) {
      if (!mk[y * w + x]) continue;
      std::size_t i = (y * w + x) * 3;
      points2d.emplace_back(double(x) + 0.5, double(y) + 0.5);
      points3d.emplace_back(p[i], p[i + 1], p[i + 2]);
    }
  if (points2d.size() < 6)
    throw NoConsensus("camera_from_pointmap: fewer than 6 masked pixels after striding");
  return pnp_ransac(points2d, points3d, opts);
}

}  // namespace hartgeom
