#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hartgeom/metrics.hpp"
#include "hartgeom/rng.hpp"
#include "support/synthetic.hpp"

using namespace hartgeom;
using hartgeom::testing::random_rotation;

namespace {

std::vector<Vec3> random_cloud(std::size_t n, Pcg32& rng, double extent = 1.0) {
  std::vector<Vec3> pts;
  for (std::size_t i = 0; i < n; ++i)
    pts.emplace_back(rng.uniform(-extent, extent), rng.uniform(-extent, extent),
                     rng.uniform(-extent, extent));
  return pts;
}

TriangleMesh square_xy(double z = 0.0, bool flip = false) {
  TriangleMesh m;
  m.vertices = {Vec3(0, 0, z), Vec3(1, 0, z), Vec3(1, 1, z), Vec3(0, 1, z)};
  if (!flip)
    m.faces = {{0, 1, 2}, {0, 2, 3}};
  else
    m.faces = {{0, 2, 1}, {0, 3, 2}};
  return m;
}

double gaussian(Pcg32& rng) {
  // Box-Muller
  double u1 = std::max(rng.next_double(), 1e-12);
  double u2 = rng.next_double();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace

TEST_CASE("chamfer: identical clouds give zero") {
  Pcg32 rng(1);
  auto pts = random_cloud(100, rng);
  ChamferResult r = chamfer(pts, pts);
  CHECK(r.accuracy == 0.0);
  CHECK(r.completeness == 0.0);
  CHECK(r.chamfer == 0.0);
}

TEST_CASE("chamfer equals the O(K^2) brute force on 500-point clouds") {
  Pcg32 rng(2);
  auto pred = random_cloud(500, rng);
  auto gt = random_cloud(500, rng);
  ChamferResult r = chamfer(pred, gt);

  double acc = 0, comp = 0;
  for (const auto& p : pred) {
    double best = 1e300;
    for (const auto& g : gt) best = std::min(best, (p - g).squaredNorm());
    acc += std::sqrt(best);
  }
  for (const auto& g : gt) {
    double best = 1e300;
    for (const auto& p : pred) best = std::min(best, (p - g).squaredNorm());
    comp += std::sqrt(best);
  }
  acc /= 500.0;
  comp /= 500.0;
  CHECK(std::abs(r.accuracy - acc) < 1e-9);
  CHECK(std::abs(r.completeness - comp) < 1e-9);
  CHECK(r.chamfer == r.accuracy + r.completeness);  // exact additivity
}

TEST_CASE("chamfer and fscore are symmetric under pred/gt swap") {
  Pcg32 rng(3);
  auto a = random_cloud(300, rng);
  auto b = random_cloud(250, rng);
  ChamferResult ab = chamfer(a, b), ba = chamfer(b, a);
  CHECK(ab.accuracy == ba.completeness);
  CHECK(ab.completeness == ba.accuracy);
  CHECK(ab.chamfer == doctest::Approx(ba.chamfer).epsilon(1e-15));
  FscoreResult fab = fscore(a, b, 0.3), fba = fscore(b, a, 0.3);
  CHECK(fab.precision == fba.recall);
  CHECK(fab.fscore == doctest::Approx(fba.fscore).epsilon(1e-15));
}

TEST_CASE("metrics are invariant under a shared rigid transform") {
  Pcg32 rng(4);
  auto a = random_cloud(200, rng);
  auto b = random_cloud(200, rng);
  Mat3 rot = random_rotation(rng);
  Vec3 t(5, -3, 2);
  std::vector<Vec3> ra, rb;
  for (const auto& p : a) ra.push_back(rot * p + t);
  for (const auto& p : b) rb.push_back(rot * p + t);
  ChamferResult c0 = chamfer(a, b), c1 = chamfer(ra, rb);
  CHECK(std::abs(c0.chamfer - c1.chamfer) < 1e-9);
  FscoreResult f0 = fscore(a, b, 0.25), f1 = fscore(ra, rb, 0.25);
  CHECK(f0.fscore == doctest::Approx(f1.fscore).epsilon(1e-12));
}

TEST_CASE("reporting-scale additivity fixture: 0.0067 + 0.0105 = 0.0172") {
  ChamferResult raw;
  raw.accuracy = 0.0067e-3;  // raw distances at the 1e-3 reporting scale
  raw.completeness = 0.0105e-3;
  raw.chamfer = raw.accuracy + raw.completeness;
  MeshEvalReport report = MeshEvalReport::from_raw(raw, {}, 0.0, 0, 0, 0.0);
  CHECK(report.accuracy == doctest::Approx(0.0067).epsilon(1e-12));
  CHECK(report.completeness == doctest::Approx(0.0105).epsilon(1e-12));
  CHECK(report.chamfer == report.accuracy + report.completeness);
  CHECK(report.chamfer == doctest::Approx(0.0172).epsilon(1e-9));
}

TEST_CASE("fscore: identical, disjoint, constructed half-overlap") {
  Pcg32 rng(5);
  auto pts = random_cloud(200, rng);
  CHECK(fscore(pts, pts, 1e-9).fscore == 1.0);

  std::vector<Vec3> far;
  const double tau = 0.05;
  for (const auto& p : pts) far.push_back(p + Vec3(10 * tau + 3, 0, 0));
  CHECK(fscore(far, pts, tau).fscore == 0.0);

  // pred sits exactly on half of gt: precision 1, recall 1/2, F = 2/3
  std::vector<Vec3> gt, pred;
  for (int i = 0; i < 100; ++i) {
    Vec3 p(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    gt.push_back(p);
    gt.push_back(p + Vec3(100, 0, 0));  // unreachable half
    pred.push_back(p);
  }
  FscoreResult f = fscore(pred, gt, 1e-6);
  CHECK(f.precision == 1.0);
  CHECK(f.recall == 0.5);
  CHECK(f.fscore == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("fscore is monotone non-increasing as tau decreases") {
  Pcg32 rng(6);
  auto a = random_cloud(200, rng);
  auto b = random_cloud(200, rng);
  double prev = -1;
  for (double tau : {1.0, 0.5, 0.25, 0.1, 0.05, 0.01}) {
    double f = fscore(a, b, tau).fscore;
    if (prev >= 0) CHECK(f <= prev + 1e-12);
    prev = f;
  }
}

TEST_CASE("normal consistency: self, flipped winding, orthogonal planes") {
  TriangleMesh plane = square_xy();
  CHECK(normal_consistency(plane, plane, 5000, 0) == doctest::Approx(1.0).epsilon(1e-6));

  TriangleMesh flipped = square_xy(0.0, true);
  CHECK(normal_consistency(plane, flipped, 5000, 0) == doctest::Approx(1.0).epsilon(1e-6));

  // plane in xy vs plane in xz through the same region
  TriangleMesh xz;
  xz.vertices = {Vec3(0, 0.5, -0.5), Vec3(1, 0.5, -0.5), Vec3(1, 0.5, 0.5),
                 Vec3(0, 0.5, 0.5)};
  xz.faces = {{0, 1, 2}, {0, 2, 3}};
  CHECK(normal_consistency(plane, xz, 5000, 0) < 0.05);
}

TEST_CASE("pa_v2v: zero for identical and similarity-transformed inputs") {
  Pcg32 rng(7);
  auto gt = random_cloud(150, rng);
  CHECK(pa_v2v(gt, gt) == doctest::Approx(0.0));

  Mat3 rot = random_rotation(rng);
  std::vector<Vec3> moved;
  for (const auto& p : gt) moved.push_back(0.5 * (rot * p) + Vec3(4, 5, 6));
  CHECK(pa_v2v(moved, gt) < 1e-6);  // mm

  std::vector<Vec3> short_list(gt.begin(), gt.begin() + 10);
  CHECK_THROWS_AS(pa_v2v(short_list, gt), CountMismatch);
}

TEST_CASE("pa_mpjpe: identical, rotated, and noise lower/upper bound") {
  Pcg32 rng(8);
  auto joints = random_cloud(24, rng);
  CHECK(pa_mpjpe(joints, joints) == doctest::Approx(0.0));

  Mat3 rot = Eigen::AngleAxisd(M_PI / 4, Vec3::UnitY()).toRotationMatrix();
  std::vector<Vec3> rotated;
  for (const auto& p : joints) rotated.push_back(rot * p);
  CHECK(pa_mpjpe(rotated, joints) < 1e-6);

  // isotropic noise sigma = 10mm on many joints: alignment reduces but
  // cannot eliminate the error; empirical mean norm is the reference
  auto big = random_cloud(400, rng);
  const double sigma = 0.010;
  std::vector<Vec3> noisy;
  double mean_norm = 0;
  for (const auto& p : big) {
    Vec3 n(sigma * gaussian(rng), sigma * gaussian(rng), sigma * gaussian(rng));
    noisy.push_back(p + n);
    mean_norm += n.norm();
  }
  mean_norm = 1000.0 * mean_norm / double(big.size());  // mm
  double err = pa_mpjpe(noisy, big);
  CHECK(err >= 0.7 * mean_norm);
  CHECK(err <= 1.0 * mean_norm + 1e-9);
}

TEST_CASE("evaluate_mesh on identical meshes reports zero distance, unit fscore") {
  TriangleMesh cube;
  for (int i = 0; i < 8; ++i)
    cube.vertices.emplace_back(double(i & 1), double((i >> 1) & 1), double((i >> 2) & 1));
  auto quad = [&cube](int a, int b, int c, int d) {
    cube.faces.push_back({std::uint32_t(a), std::uint32_t(b), std::uint32_t(c)});
    cube.faces.push_back({std::uint32_t(a), std::uint32_t(c), std::uint32_t(d)});
  };
  quad(0, 2, 3, 1);
  quad(4, 5, 7, 6);
  quad(0, 1, 5, 4);
  quad(2, 6, 7, 3);
  quad(0, 4, 6, 2);
  quad(1, 3, 7, 5);

  MeshEvalReport r = evaluate_mesh(cube, cube, 20000, 0);
  CHECK(r.chamfer == 0.0);
  CHECK(r.fscore == doctest::Approx(1.0));
  CHECK(r.normal_consistency == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(r.chamfer == r.accuracy + r.completeness);
  CHECK(r.tau == doctest::Approx(0.005 * std::sqrt(3.0)));

  nlohmann::json j = mesh_report_to_json(r);
  CHECK(j.contains("chamfer"));
  CHECK(j["distance_scale"] == "1e-3");
}

TEST_CASE("body report serializes millimeter values (format fixture)") {
  BodyEvalReport r;
  r.pa_v2v_mm = 15.72;
  r.pa_mpjpe_mm = 16.18;
  nlohmann::json j = body_report_to_json(r);
  CHECK(j["pa_v2v_mm"] == doctest::Approx(15.72));
  CHECK(j["pa_mpjpe_mm"] == doctest::Approx(16.18));
}
