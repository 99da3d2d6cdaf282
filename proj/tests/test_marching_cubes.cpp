#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hartgeom/kdtree.hpp"
#include "hartgeom/marching_cubes.hpp"
#include "hartgeom/poisson.hpp"
#include "hartgeom/rng.hpp"
#include "hartgeom/sampling.hpp"
#include "support/synthetic.hpp"

using namespace hartgeom;

namespace {

IndicatorGrid sphere_sdf(std::size_t r, const Vec3& c, double radius) {
  IndicatorGrid g = IndicatorGrid::zeros(r);
  for (std::size_t x = 0; x < r; ++x)
    for (std::size_t y = 0; y < r; ++y)
      for (std::size_t z = 0; z < r; ++z) {
        Vec3 p(double(x) / r, double(y) / r, double(z) / r);
        g.at(x, y, z) = (p - c).norm() - radius;
      }
  return g;
}

/// Blobby field that is strictly positive near the domain boundary, so the
/// level set stays interior and the MC watertightness guarantee applies.
IndicatorGrid random_blobs(std::size_t r, std::uint64_t seed) {
  Pcg32 rng(seed);
  std::vector<Vec3> centers;
  std::vector<double> radii;
  int n = 2 + int(rng.next_below(3));
  for (int i = 0; i < n; ++i) {
    centers.emplace_back(rng.uniform(0.3, 0.7), rng.uniform(0.3, 0.7),
                         rng.uniform(0.3, 0.7));
    radii.push_back(rng.uniform(0.08, 0.2));
  }
  IndicatorGrid g = IndicatorGrid::zeros(r);
  for (std::size_t x = 0; x < r; ++x)
    for (std::size_t y = 0; y < r; ++y)
      for (std::size_t z = 0; z < r; ++z) {
        Vec3 p(double(x) / r, double(y) / r, double(z) / r);
        double d = 1e9;
        for (int i = 0; i < n; ++i)
          d = std::min(d, (p - centers[i]).norm() - radii[i]);
        g.at(x, y, z) = d;
      }
  return g;
}

}  // namespace

TEST_CASE("analytic sphere: radii within 1.5 cells, Euler characteristic 2") {
  const std::size_t r = 64;
  const double radius = 0.3;
  Vec3 c(0.5, 0.5, 0.5);
  IndicatorGrid g = sphere_sdf(r, c, radius);
  TriangleMesh mesh = marching_cubes(g, 0.0);
  REQUIRE(mesh.faces.size() > 100);
  const double cell = 1.0 / double(r);
  for (const auto& v : mesh.vertices)
    CHECK(std::abs((v - c).norm() - radius) < 1.5 * cell);
  CHECK(euler_characteristic(mesh) == 2);
  CHECK(is_watertight(mesh));
  CHECK(has_consistent_orientation(mesh));
  // outward normals (toward chi > iso): positive enclosed volume near 4/3 pi R^3
  double vol = mesh.signed_volume();
  CHECK(vol > 0);
  CHECK(vol == doctest::Approx(4.0 / 3.0 * M_PI * radius * radius * radius).epsilon(0.02));
}

TEST_CASE("iso above the grid maximum raises EmptyLevelSet") {
  IndicatorGrid g = sphere_sdf(32, Vec3(0.5, 0.5, 0.5), 0.3);
  CHECK_THROWS_AS(marching_cubes(g, 10.0), EmptyLevelSet);
  CHECK_THROWS_AS(marching_cubes(g, -10.0), EmptyLevelSet);
}

TEST_CASE("interior level sets are watertight for random blobby fields") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
    IndicatorGrid g = random_blobs(32, seed);
    TriangleMesh mesh = marching_cubes(g, 0.0);
    CHECK(is_watertight(mesh));
    CHECK(has_consistent_orientation(mesh));
  }
}

TEST_CASE("cell values exactly at iso are perturbed, watertightness holds") {
  // plane of exact zeros through a sphere SDF: grid nodes at x=16 get 0.0
  const std::size_t r = 32;
  IndicatorGrid g = sphere_sdf(r, Vec3(0.5, 0.5, 0.5), 0.25);
  for (std::size_t y = 0; y < r; ++y)
    for (std::size_t z = 0; z < r; ++z) g.at(16, y, z) = 0.0;
  TriangleMesh mesh = marching_cubes(g, 0.0);
  CHECK(is_watertight(mesh));
}

TEST_CASE("grid transform maps the mesh back to world coordinates") {
  IndicatorGrid g = sphere_sdf(32, Vec3(0.5, 0.5, 0.5), 0.3);
  g.to_world.scale = 2.5;
  g.to_world.translation = Vec3(10, -3, 7);
  TriangleMesh mesh = marching_cubes(g, 0.0);
  Vec3 world_center = g.to_world.apply(Vec3(0.5, 0.5, 0.5));
  for (const auto& v : mesh.vertices)
    CHECK(std::abs((v - world_center).norm() - 0.3 * 2.5) < 2.5 * 1.5 / 32.0);
}

TEST_CASE("grid_from_mesh: cube occupancy has -0.5 inside, +0.5 outside") {
  TriangleMesh cube;
  for (int i = 0; i < 8; ++i)
    cube.vertices.emplace_back(0.25 + 0.5 * (i & 1), 0.25 + 0.5 * ((i >> 1) & 1),
                               0.25 + 0.5 * ((i >> 2) & 1));
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
  REQUIRE(is_watertight(cube));

  IndicatorGrid g = grid_from_mesh(cube, 64, 0.0);
  CHECK(g.at(32, 32, 32) == -0.5);
  CHECK(g.at(0, 0, 0) == 0.5);
  CHECK(g.at(63, 63, 63) == 0.5);
  CHECK(g.at(20, 32, 32) == -0.5);  // x = 0.3125, inside
  CHECK(g.at(10, 32, 32) == 0.5);   // x = 0.15625, outside
}

TEST_CASE("grid_from_mesh rejects open meshes") {
  TriangleMesh open_mesh;
  open_mesh.vertices = {Vec3(0.2, 0.2, 0.2), Vec3(0.8, 0.2, 0.2), Vec3(0.2, 0.8, 0.2)};
  open_mesh.faces = {{0, 1, 2}};
  CHECK_THROWS_AS(grid_from_mesh(open_mesh, 32, 0.0), NotWatertight);
}

TEST_CASE("grid_from_mesh sphere volume matches the analytic value within 2%") {
  const std::size_t r = 128;
  const double radius = 0.3;
  IndicatorGrid sdf = sphere_sdf(r, Vec3(0.5, 0.5, 0.5), radius);
  TriangleMesh sphere = marching_cubes(sdf, 0.0);
  REQUIRE(is_watertight(sphere));

  IndicatorGrid occ = grid_from_mesh(sphere, r, 0.0);
  std::size_t negative = 0;
  for (double v : occ.values)
    if (v < 0) ++negative;
  double est = double(negative) / double(r * r * r);
  double expect = 4.0 / 3.0 * M_PI * radius * radius * radius;
  CHECK(est == doctest::Approx(expect).epsilon(0.02));
}

TEST_CASE("grid_from_mesh . marching_cubes . grid_from_mesh contracts") {
  const std::size_t r = 64;
  IndicatorGrid sdf = sphere_sdf(r, Vec3(0.5, 0.5, 0.5), 0.28);
  TriangleMesh mesh0 = marching_cubes(sdf, 0.0);

  IndicatorGrid g1 = grid_from_mesh(mesh0, r, 1.0);
  TriangleMesh mesh1 = marching_cubes(g1, 0.0);
  IndicatorGrid g2 = grid_from_mesh(mesh1, r, 1.0);
  TriangleMesh mesh2 = marching_cubes(g2, 0.0);
  IndicatorGrid g3 = grid_from_mesh(mesh2, r, 1.0);

  // successive passes must not drift: MSE decreases or stays within 10%
  double first = dpsr_loss(g2, g1);
  double second = dpsr_loss(g3, g2);
  CHECK(second <= 1.1 * first);
}

TEST_CASE("poisson pipeline on sphere samples reconstructs the surface (r=64)") {
  auto cloud = hartgeom::testing::sphere_cloud(Vec3(0.5, 0.5, 0.5), 0.3, 6000, 21);
  VectorFieldGrid v = rasterize_points(cloud, 64);
  IndicatorGrid chi = solve_poisson_fft(v, 2.0, cloud);
  TriangleMesh mesh = marching_cubes(chi, 0.0);
  CHECK(is_watertight(mesh));
  CHECK(euler_characteristic(mesh) == 2);

  // accuracy against the analytic sphere: mean |distance to surface|
  auto samples = sample_surface(mesh, 20000, 0);
  double acc = 0;
  for (const auto& p : samples.positions)
    acc += std::abs((p - Vec3(0.5, 0.5, 0.5)).norm() - 0.3);
  acc /= double(samples.positions.size());
  CHECK(acc < 5e-3);
}
