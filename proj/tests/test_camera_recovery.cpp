#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "hartgeom/pnp.hpp"
#include "hartgeom/rng.hpp"
#include "hartgeom/umeyama.hpp"
#include "support/synthetic.hpp"

using namespace hartgeom;
using hartgeom::testing::make_pnp_fixture;
using hartgeom::testing::random_rotation;

TEST_CASE("umeyama: identity when dst == src") {
  Pcg32 rng(1);
  std::vector<Vec3> src;
  for (int i = 0; i < 50; ++i)
    src.emplace_back(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
  SimilarityTransform t = umeyama(src, src, true);
  CHECK(t.scale == doctest::Approx(1.0).epsilon(1e-12));
  CHECK((t.rotation - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(t.translation.norm() < 1e-12);
}

TEST_CASE("umeyama recovers a constructed similarity to 1e-9") {
  Pcg32 rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Vec3> src;
    int n = 4 + int(rng.next_below(60));
    for (int i = 0; i < n; ++i)
      src.emplace_back(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));
    Mat3 r0 = random_rotation(rng);
    double s0 = rng.uniform(0.1, 5.0);
    Vec3 t0(rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(-10, 10));
    std::vector<Vec3> dst;
    for (const auto& p : src) dst.push_back(s0 * (r0 * p) + t0);

    SimilarityTransform t = umeyama(src, dst, true);
    CHECK(std::abs(t.scale - s0) < 1e-9 * s0);
    CHECK((t.rotation - r0).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((t.translation - t0).norm() < 1e-8);
  }
}

TEST_CASE("umeyama on mirrored source returns a proper rotation with residual") {
  Pcg32 rng(3);
  std::vector<Vec3> src, dst;
  for (int i = 0; i < 40; ++i) {
    Vec3 p(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    src.push_back(p);
    dst.emplace_back(-p.x(), p.y(), p.z());  // reflection of src
  }
  SimilarityTransform t = umeyama(src, dst, true);
  CHECK(t.rotation.determinant() == doctest::Approx(1.0).epsilon(1e-9));
  double residual = 0;
  for (std::size_t i = 0; i < src.size(); ++i)
    residual += (t.apply(src[i]) - dst[i]).squaredNorm();
  CHECK(residual > 1e-3);
}

TEST_CASE("umeyama degeneracies raise DegenerateSource") {
  std::vector<Vec3> same(5, Vec3(1, 2, 3));
  std::vector<Vec3> dst(5, Vec3(0, 0, 0));
  CHECK_THROWS_AS(umeyama(same, dst, true), DegenerateSource);
  std::vector<Vec3> two = {Vec3(0, 0, 0), Vec3(1, 0, 0)};
  CHECK_THROWS_AS(umeyama(two, two, true), DegenerateSource);
}

TEST_CASE("procrustes_align removes similarity transforms") {
  Pcg32 rng(4);
  std::vector<Vec3> gt;
  for (int i = 0; i < 100; ++i)
    gt.emplace_back(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));

  auto [aligned_same, t_same] = procrustes_align(gt, gt);
  for (std::size_t i = 0; i < gt.size(); ++i)
    CHECK((aligned_same[i] - gt[i]).norm() < 1e-12);

  std::vector<Vec3> half;
  for (const auto& p : gt) half.push_back(0.5 * p);
  auto [aligned, t] = procrustes_align(half, gt);
  for (std::size_t i = 0; i < gt.size(); ++i)
    CHECK((aligned[i] - gt[i]).norm() < 1e-9);
}

TEST_CASE("procrustes alignment never increases RMS error (optimality)") {
  Pcg32 rng(5);
  for (double sigma : {0.01, 0.1, 0.5}) {
    std::vector<Vec3> gt, noisy;
    for (int i = 0; i < 200; ++i) {
      Vec3 p(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
      gt.push_back(p);
      noisy.push_back(p + sigma * Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1),
                                       rng.uniform(-1, 1)));
    }
    double rms_before = 0, rms_after = 0;
    auto [aligned, t] = procrustes_align(noisy, gt);
    for (std::size_t i = 0; i < gt.size(); ++i) {
      rms_before += (noisy[i] - gt[i]).squaredNorm();
      rms_after += (aligned[i] - gt[i]).squaredNorm();
    }
    CHECK(rms_after <= rms_before + 1e-12);
  }
}

TEST_CASE("pnp_dlt recovers a noiseless camera exactly") {
  for (std::uint64_t seed : {10ull, 11ull, 12ull, 13ull}) {
    auto fx = make_pnp_fixture(20, 0.0, seed);
    CameraPose got = pnp_dlt(fx.pixels, fx.points);
    CHECK(rotation_geodesic_error(got.rotation_c2w, fx.camera.rotation_c2w) < 1e-6);
    CHECK(std::abs(got.cx - fx.camera.cx) < 1e-3);
    CHECK(std::abs(got.cy - fx.camera.cy) < 1e-3);
    CHECK(std::abs(got.fx - fx.camera.fx) < 1e-2);
    CHECK((got.translation_c2w - fx.camera.translation_c2w).norm() < 1e-5);
  }
}

TEST_CASE("pnp_dlt rejects too-few and coplanar configurations") {
  auto fx = make_pnp_fixture(20, 0.0, 1);
  std::vector<Eigen::Vector2d> p2(fx.pixels.begin(), fx.pixels.begin() + 5);
  std::vector<Vec3> p3(fx.points.begin(), fx.points.begin() + 5);
  CHECK_THROWS_AS(pnp_dlt(p2, p3), DegenerateConfiguration);

  // all 3D points on a plane
  Pcg32 rng(6);
  CameraPose cam;
  cam.fx = cam.fy = 500;
  cam.cx = cam.cy = 259;
  std::vector<Eigen::Vector2d> uv;
  std::vector<Vec3> pts;
  for (int i = 0; i < 30; ++i) {
    Vec3 p(rng.uniform(-1, 1), rng.uniform(-1, 1), 4.0);  // plane z = 4
    pts.push_back(p);
    uv.push_back(cam.project(p));
  }
  CHECK_THROWS_AS(pnp_dlt(uv, pts), DegenerateConfiguration);
}

TEST_CASE("pnp_ransac with 30% outliers recovers all true inliers") {
  auto fx = make_pnp_fixture(200, 0.3, 42);
  RansacOptions opts;
  opts.threshold_px = 1.0;
  opts.seed = 0;
  PnpResult res = pnp_ransac(fx.pixels, fx.points, opts);
  CHECK(rotation_geodesic_error(res.pose.rotation_c2w, fx.camera.rotation_c2w) < 1e-3);
  CHECK(std::abs(res.pose.cx - fx.camera.cx) < 0.5);
  // the 140 clean correspondences must all be inliers
  std::size_t true_inliers = 0;
  for (std::size_t i = 60; i < 200; ++i) true_inliers += res.inlier_mask[i];
  CHECK(true_inliers == 140);
  CHECK(res.mean_reproj_error < 0.1);
}

TEST_CASE("pnp_ransac without outliers matches pnp_dlt plus refinement") {
  auto fx = make_pnp_fixture(100, 0.0, 77);
  PnpResult res = pnp_ransac(fx.pixels, fx.points, {});
  CameraPose direct = pnp_dlt(fx.pixels, fx.points);
  CHECK(rotation_geodesic_error(res.pose.rotation_c2w, direct.rotation_c2w) < 1e-6);
  CHECK(std::abs(res.pose.cx - direct.cx) < 1e-3);
  CHECK(res.inlier_count == 100);
}

TEST_CASE("pnp_ransac at 95% outliers yields NoConsensus") {
  auto fx = make_pnp_fixture(200, 0.95, 5);
  CHECK_THROWS_AS(pnp_ransac(fx.pixels, fx.points, {}), NoConsensus);
}

TEST_CASE("pnp_ransac is deterministic and a fixed point of its inlier set") {
  auto fx = make_pnp_fixture(200, 0.3, 99);
  PnpResult a = pnp_ransac(fx.pixels, fx.points, {});
  PnpResult b = pnp_ransac(fx.pixels, fx.points, {});
  CHECK(a.pose.rotation_c2w == b.pose.rotation_c2w);
  CHECK(a.pose.cx == b.pose.cx);
  CHECK(a.inlier_mask == b.inlier_mask);

  // re-fit on the returned inlier set reproduces the pose
  std::vector<Eigen::Vector2d> in2;
  std::vector<Vec3> in3;
  for (std::size_t i = 0; i < a.inlier_mask.size(); ++i)
    if (a.inlier_mask[i]) {
      in2.push_back(fx.pixels[i]);
      in3.push_back(fx.points[i]);
    }
  CameraPose refit = refine_pose(pnp_dlt(in2, in3), fx.pixels, fx.points,
                                 a.inlier_mask, 2.0);
  CHECK(rotation_geodesic_error(refit.rotation_c2w, a.pose.rotation_c2w) < 1e-6);
  CHECK(std::abs(refit.cx - a.pose.cx) < 1e-3);
}

TEST_CASE("pnp_ransac result is invariant to permutation of the correspondences") {
  auto fx = make_pnp_fixture(150, 0.0, 31);
  PnpResult base = pnp_ransac(fx.pixels, fx.points, {});

  std::vector<std::size_t> perm(150);
  std::iota(perm.begin(), perm.end(), 0);
  Pcg32 rng(8);
  for (std::size_t i = perm.size(); i > 1; --i)
    std::swap(perm[i - 1], perm[rng.next_below(static_cast<std::uint32_t>(i))]);
  std::vector<Eigen::Vector2d> p2;
  std::vector<Vec3> p3;
  for (auto i : perm) {
    p2.push_back(fx.pixels[i]);
    p3.push_back(fx.points[i]);
  }
  PnpResult permuted = pnp_ransac(p2, p3, {});
  CHECK(rotation_geodesic_error(base.pose.rotation_c2w, permuted.pose.rotation_c2w) < 1e-6);
  CHECK(std::abs(base.pose.cx - permuted.pose.cx) < 1e-3);
  CHECK(std::abs(base.pose.fx - permuted.pose.fx) < 1e-2);
}

TEST_CASE("camera_from_pointmap recovers the camera from a rendered sphere") {
  // render a depth sphere: rays through pixel centers hit a sphere in front
  CameraPose cam;
  cam.fx = 480;
  cam.fy = 500;
  cam.cx = 300;  // off-center on purpose
  cam.cy = 240;
  Pcg32 rng(12);
  cam.rotation_c2w = random_rotation(rng);
  cam.translation_c2w = Vec3(0.4, -0.2, 0.1);

  const std::size_t h = 518, w = 518;
  Vec3 center_cam(0.1, -0.05, 4.0);  // sphere center in camera frame
  const double radius = 1.2;
  Tensor point_map = Tensor::zeros(Dtype::f32, {h, w, 3});
  Tensor mask = Tensor::zeros(Dtype::u8, {h, w});
  auto& pm = point_map.f32();
  auto& mk = mask.u8();
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      Vec3 dir((double(x) + 0.5 - cam.cx) / cam.fx,
               (double(y) + 0.5 - cam.cy) / cam.fy, 1.0);
      // smallest positive t with |t*dir - c| = radius
      double a = dir.squaredNorm();
      double b = -2.0 * dir.dot(center_cam);
      double c = center_cam.squaredNorm() - radius * radius;
      double disc = b * b - 4 * a * c;
      if (disc <= 0) continue;
      double t = (-b - std::sqrt(disc)) / (2 * a);
      if (t <= 0) continue;
      Vec3 p_cam = t * dir;
      Vec3 p_world = cam.rotation_c2w * p_cam + cam.translation_c2w;
      std::size_t i = (y * w + x) * 3;
      pm[i] = static_cast<float>(p_world.x());
      pm[i + 1] = static_cast<float>(p_world.y());
      pm[i + 2] = static_cast<float>(p_world.z());
      mk[y * w + x] = 1;
    }

  RansacOptions opts;
  opts.threshold_px = 1.0;
  PnpResult res = camera_from_pointmap(point_map, mask, 4, opts);
  CHECK(res.mean_reproj_error < 0.1);
  CHECK(rotation_geodesic_error(res.pose.rotation_c2w, cam.rotation_c2w) < 1e-3);
  CHECK(std::abs(res.pose.cx - cam.cx) < 0.5);

  // coarser stride still recovers the same pose on noiseless data
  PnpResult res1 = camera_from_pointmap(point_map, mask, 8, opts);
  CHECK(rotation_geodesic_error(res.pose.rotation_c2w, res1.pose.rotation_c2w) < 1e-4);

  // too-few masked pixels
  Tensor tiny_mask = Tensor::zeros(Dtype::u8, {h, w});
  tiny_mask.u8()[0] = tiny_mask.u8()[1] = tiny_mask.u8()[2] = 1;
  CHECK_THROWS_AS(camera_from_pointmap(point_map, tiny_mask, 1, opts), NoConsensus);
}
