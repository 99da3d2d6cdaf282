#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hartgeom/kdtree.hpp"
#include "hartgeom/rng.hpp"
#include "hartgeom/sampling.hpp"

using namespace hartgeom;

TEST_CASE("kd-tree nearest equals brute force on 500 random points") {
  Pcg32 rng(41);
  std::vector<Vec3> pts;
  for (int i = 0; i < 500; ++i)
    pts.emplace_back(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
  KdTree3 tree(pts);
  for (int q = 0; q < 300; ++q) {
    Vec3 query(rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2));
    auto hit = tree.nearest(query);
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_i = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      double d = (pts[i] - query).squaredNorm();
      if (d < best) { best = d; best_i = i; }
    }
    CHECK(hit.index == best_i);
    CHECK(hit.distance_sq == doctest::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("sample_surface keeps samples inside a single triangle") {
  TriangleMesh m;
  m.vertices = {Vec3(0, 0, 0), Vec3(2, 0, 0), Vec3(0, 1, 0)};
  m.faces = {{0, 1, 2}};
  auto s = sample_surface(m, 1000, 0);
  REQUIRE(s.positions.size() == 1000);
  for (const auto& p : s.positions) {
    // barycentric check: x/2 + y <= 1, x,y >= 0, z == 0
    CHECK(p.z() == doctest::Approx(0.0));
    CHECK(p.x() >= -1e-12);
    CHECK(p.y() >= -1e-12);
    CHECK(p.x() / 2 + p.y() <= 1 + 1e-12);
  }
  for (const auto& n : s.normals) CHECK((n - Vec3(0, 0, 1)).norm() < 1e-12);
}

TEST_CASE("sample_surface is area-weighted: 3:1 triangles draw 3:1 samples") {
  TriangleMesh m;
  // area 3 triangle and area 1 triangle
  m.vertices = {Vec3(0, 0, 0), Vec3(3, 0, 0), Vec3(0, 2, 0),
                Vec3(10, 0, 0), Vec3(11, 0, 0), Vec3(10, 2, 0)};
  m.faces = {{0, 1, 2}, {3, 4, 5}};
  const std::size_t n = 100000;
  auto s = sample_surface(m, n, 7);
  std::size_t big = 0;
  for (const auto& p : s.positions)
    if (p.x() < 5) ++big;
  double ratio = double(big) / double(n - big);
  CHECK(ratio == doctest::Approx(3.0).epsilon(0.02));
}

TEST_CASE("sample_surface is deterministic given the seed") {
  TriangleMesh m;
  m.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)};
  m.faces = {{0, 1, 2}};
  auto a = sample_surface(m, 256, 42);
  auto b = sample_surface(m, 256, 42);
  for (std::size_t i = 0; i < a.positions.size(); ++i)
    CHECK(a.positions[i] == b.positions[i]);
  auto c = sample_surface(m, 256, 43);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.positions.size(); ++i)
    if (a.positions[i] != c.positions[i]) any_diff = true;
  CHECK(any_diff);
}

TEST_CASE("empty mesh cannot be sampled") {
  TriangleMesh m;
  CHECK_THROWS_AS(sample_surface(m, 10, 0), EmptyMesh);
}
