#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "hartgeom/camera.hpp"
#include "hartgeom/mesh.hpp"
#include "hartgeom/rng.hpp"

using namespace hartgeom;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  auto dir = fs::temp_directory_path() / "hartgeom_mesh_tests";
  fs::create_directories(dir);
  return dir;
}

// Unit cube as 8 vertices / 12 triangles with outward CCW winding.
TriangleMesh make_cube() {
  TriangleMesh m;
  for (int i = 0; i < 8; ++i)
    m.vertices.emplace_back(double(i & 1), double((i >> 1) & 1), double((i >> 2) & 1));
  auto quad = [&m](int a, int b, int c, int d) {
    m.faces.push_back({std::uint32_t(a), std::uint32_t(b), std::uint32_t(c)});
    m.faces.push_back({std::uint32_t(a), std::uint32_t(c), std::uint32_t(d)});
  };
  quad(0, 2, 3, 1);  // z = 0, normal -z
  quad(4, 5, 7, 6);  // z = 1, normal +z
  quad(0, 1, 5, 4);  // y = 0, normal -y
  quad(2, 6, 7, 3);  // y = 1, normal +y
  quad(0, 4, 6, 2);  // x = 0, normal -x
  quad(1, 3, 7, 5);  // x = 1, normal +x
  return m;
}

/// Polar-decomposition by Newton iteration; independent of the SVD route
/// used inside nearest_rotation.
Mat3 polar_rotation_oracle(Mat3 m) {
  for (int i = 0; i < 60; ++i) m = 0.5 * (m + m.inverse().transpose());
  return m;
}

}  // namespace

TEST_CASE("single triangle OBJ reads as 3 vertices, 1 face") {
  auto path = (temp_dir() / "tri.obj").string();
  std::ofstream(path) << "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n";
  TriangleMesh m = read_mesh(path);
  CHECK(m.vertices.size() == 3);
  REQUIRE(m.faces.size() == 1);
  CHECK(m.faces[0] == std::array<std::uint32_t, 3>{0, 1, 2});
}

TEST_CASE("quad faces are rejected, not split") {
  auto obj = (temp_dir() / "quad.obj").string();
  std::ofstream(obj) << "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n";
  CHECK_THROWS_AS(read_mesh(obj), NonTriangleFace);

  auto ply = (temp_dir() / "quad.ply").string();
  std::ofstream(ply) << "ply\nformat ascii 1.0\nelement vertex 4\n"
                        "property float x\nproperty float y\nproperty float z\n"
                        "element face 1\nproperty list uchar int vertex_indices\n"
                        "end_header\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n";
  CHECK_THROWS_AS(read_mesh(ply), NonTriangleFace);
}

TEST_CASE("unknown PLY element is rejected") {
  auto ply = (temp_dir() / "edge_elem.ply").string();
  std::ofstream(ply) << "ply\nformat ascii 1.0\nelement vertex 1\n"
                        "property float x\nproperty float y\nproperty float z\n"
                        "element edge 1\nproperty int vertex1\nproperty int vertex2\n"
                        "end_header\n0 0 0\n0 0\n";
  CHECK_THROWS_AS(read_mesh(ply), UnsupportedElement);
}

TEST_CASE("cube round-trip through binary PLY is bit-identical") {
  TriangleMesh cube = make_cube();
  auto path = (temp_dir() / "cube.ply").string();
  write_mesh(path, cube);
  TriangleMesh back = read_mesh(path);
  REQUIRE(back.vertices.size() == cube.vertices.size());
  REQUIRE(back.faces.size() == cube.faces.size());
  for (std::size_t i = 0; i < cube.vertices.size(); ++i)
    for (int c = 0; c < 3; ++c) {
      float orig = static_cast<float>(cube.vertices[i][c]);
      float got = static_cast<float>(back.vertices[i][c]);
      CHECK(std::memcmp(&orig, &got, 4) == 0);
    }
  for (std::size_t f = 0; f < cube.faces.size(); ++f) CHECK(back.faces[f] == cube.faces[f]);
}

TEST_CASE("round-trip preserves Euler characteristic (property)") {
  TriangleMesh cube = make_cube();
  CHECK(euler_characteristic(cube) == 2);
  CHECK(is_watertight(cube));
  CHECK(has_consistent_orientation(cube));
  CHECK(cube.signed_volume() == doctest::Approx(1.0));

  for (const char* name : {"rt.ply", "rt.obj"}) {
    auto path = (temp_dir() / name).string();
    write_mesh(path, cube);
    TriangleMesh back = read_mesh(path);
    CHECK(euler_characteristic(back) == euler_characteristic(cube));
  }
}

TEST_CASE("vertex colors survive a PLY round-trip") {
  TriangleMesh cube = make_cube();
  for (std::size_t i = 0; i < cube.vertices.size(); ++i)
    cube.colors.emplace_back(double(i) / 8.0, 0.5, 1.0 - double(i) / 8.0);
  auto path = (temp_dir() / "colored.ply").string();
  write_mesh(path, cube);
  TriangleMesh back = read_mesh(path);
  REQUIRE(back.has_colors());
  for (std::size_t i = 0; i < cube.vertices.size(); ++i)
    CHECK((back.colors[i] - cube.colors[i]).cwiseAbs().maxCoeff() < 1.0 / 255.0);
}

TEST_CASE("identity pose JSON round-trips") {
  auto path = (temp_dir() / "cams.json").string();
  CameraPose cam;
  cam.fx = 500;
  cam.fy = 510;
  cam.cx = 320;
  cam.cy = 240;
  write_camera_json(path, {cam});
  auto cams = read_camera_json(path);
  REQUIRE(cams.size() == 1);
  CHECK((cams[0].rotation_c2w - Mat3::Identity()).norm() == doctest::Approx(0.0));
  CHECK(cams[0].fx == 500);
  CHECK(cams[0].cy == 240);
}

TEST_CASE("rotation with determinant -1 is rejected") {
  auto path = (temp_dir() / "reflect.json").string();
  std::ofstream(path) << R"([{"rotation":[1,0,0, 0,1,0, 0,0,-1],
    "translation":[0,0,0], "fx":500, "fy":500, "cx":0, "cy":0}])";
  CHECK_THROWS_AS(read_camera_json(path), NotARotation);
}

TEST_CASE("missing field is reported by name") {
  auto path = (temp_dir() / "missing.json").string();
  std::ofstream(path) << R"([{"rotation":[1,0,0, 0,1,0, 0,0,1],
    "translation":[0,0,0], "fx":500, "fy":500, "cx":0}])";
  try {
    read_camera_json(path);
    FAIL("expected MissingField");
  } catch (const MissingField& e) {
    CHECK(std::string(e.what()).find("cy") != std::string::npos);
  }
}

TEST_CASE("1e-5 perturbed rotation is accepted and re-orthonormalized") {
  Pcg32 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    Vec3 axis = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)).normalized();
    Mat3 r0 = Eigen::AngleAxisd(rng.uniform(-3, 3), axis).toRotationMatrix();
    Mat3 noisy = r0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) noisy(i, j) += rng.uniform(-1e-5, 1e-5);

    nlohmann::json j;
    j["rotation"] = nlohmann::json::array();
    for (int rr = 0; rr < 3; ++rr)
      for (int cc = 0; cc < 3; ++cc) j["rotation"].push_back(noisy(rr, cc));
    j["translation"] = {0.0, 0.0, 0.0};
    j["fx"] = 100.0; j["fy"] = 100.0; j["cx"] = 0.0; j["cy"] = 0.0;

    CameraPose cam = camera_from_json(j);
    Mat3 err = cam.rotation_c2w.transpose() * cam.rotation_c2w - Mat3::Identity();
    CHECK(err.cwiseAbs().maxCoeff() < 1e-9);
    // agrees with an independent polar-decomposition oracle
    Mat3 oracle = polar_rotation_oracle(noisy);
    CHECK((cam.rotation_c2w - oracle).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("camera JSON round-trip preserves reprojection to < 1e-4 px") {
  Pcg32 rng(13);
  auto path = (temp_dir() / "reproj.json").string();
  std::vector<CameraPose> cams;
  for (int i = 0; i < 5; ++i) {
    CameraPose cam;
    Vec3 axis = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)).normalized();
    cam.rotation_c2w = Eigen::AngleAxisd(rng.uniform(-3, 3), axis).toRotationMatrix();
    cam.translation_c2w = Vec3(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));
    cam.fx = rng.uniform(300, 800);
    cam.fy = rng.uniform(300, 800);
    cam.cx = rng.uniform(200, 400);
    cam.cy = rng.uniform(150, 350);
    cams.push_back(cam);
  }
  write_camera_json(path, cams);
  auto back = read_camera_json(path);
  REQUIRE(back.size() == cams.size());
  for (std::size_t i = 0; i < cams.size(); ++i)
    for (int k = 0; k < 20; ++k) {
      // points in front of the camera
      Vec3 p_cam(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(2, 5));
      Vec3 p = cams[i].rotation_c2w * p_cam + cams[i].translation_c2w;
      Eigen::Vector2d a = cams[i].project(p);
      Eigen::Vector2d b = back[i].project(p);
      CHECK((a - b).norm() < 1e-4);
    }
}
