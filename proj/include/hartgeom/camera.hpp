#pragma once

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SVD>

#include <json.hpp>

#include "hartgeom/error.hpp"
#include "hartgeom/mesh.hpp"

namespace hartgeom {

/// Nearest rotation (orthogonal Procrustes): argmin_R ||R - M||_F over SO(3).
inline Mat3 nearest_rotation(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU(), v = svd.matrixV();
  Mat3 d = Mat3::Identity();
  d(2, 2) = (u * v.transpose()).determinant() > 0 ? 1.0 : -1.0;
  return u * d * v.transpose();
}

/// Camera-to-world pose with pinhole intrinsics. The principal point is NOT
/// assumed centered.
struct CameraPose {
  Mat3 rotation_c2w = Mat3::Identity();
  Vec3 translation_c2w = Vec3::Zero();  // camera center in world coordinates
  double fx = 1, fy = 1;
  double cx = 0, cy = 0;

  Mat3 rotation_w2c() const { return rotation_c2w.transpose(); }
  Vec3 translation_w2c() const { return -rotation_c2w.transpose() * translation_c2w; }

  /// World point -> camera frame.
  Vec3 to_camera(const Vec3& p_world) const {
    return rotation_c2w.transpose() * (p_world - translation_c2w);
  }

  /// World point -> pixel coordinates. Points behind the camera still project
  /// (z sign preserved in caller checks); callers needing cheirality test z.
  Eigen::Vector2d project(const Vec3& p_world) const {
    Vec3 pc = to_camera(p_world);
    return {fx * pc.x() / pc.z() + cx, fy * pc.y() / pc.z() + cy};
  }

  void validate(double tol = 1e-6) const {
    if (!(fx > 0) || !(fy > 0))
      throw Error("camera focal lengths must be positive");
    Mat3 err = rotation_c2w.transpose() * rotation_c2w - Mat3::Identity();
    if (err.cwiseAbs().maxCoeff() > tol)
      throw NotARotation("rotation not orthonormal within tolerance");
    if (std::abs(rotation_c2w.determinant() - 1.0) > tol)
      throw NotARotation("rotation determinant deviates from +1");
  }
};

/// Angle of the relative rotation between two rotation matrices, radians.
inline double rotation_geodesic_error(const Mat3& a, const Mat3& b) {
  double c = ((a.transpose() * b).trace() - 1.0) / 2.0;
  return std::acos(std::clamp(c, -1.0, 1.0));
}

// JSON schema: array of objects with keys
//   rotation: 9 numbers, row-major camera-to-world
//   translation: 3 numbers (camera center, world units)
//   fx, fy, cx, cy: pixels

inline nlohmann::json camera_to_json(const CameraPose& cam) {
  nlohmann::json j;
  j["rotation"] = nlohmann::json::array();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) j["rotation"].push_back(cam.rotation_c2w(r, c));
  j["translation"] = {cam.translation_c2w.x(), cam.translation_c2w.y(),
                      cam.translation_c2w.z()};
  j["fx"] = cam.fx;
  j["fy"] = cam.fy;
  j["cx"] = cam.cx;
  j["cy"] = cam.cy;
  return j;
}

inline void write_camera_json(const std::string& path,
                              const std::vector<CameraPose>& cams) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : cams) arr.push_back(camera_to_json(c));
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << arr.dump(2) << "\n";
  if (!out) throw IoError("write failed for " + path);
}

inline CameraPose camera_from_json(const nlohmann::json& j) {
  for (const char* key : {"rotation", "translation", "fx", "fy", "cx", "cy"})
    if (!j.contains(key))
      throw MissingField(std::string("camera JSON missing field \"") + key + "\"");
  if (j["rotation"].size() != 9) throw MissingField("rotation must have 9 entries");
  if (j["translation"].size() != 3) throw MissingField("translation must have 3 entries");
  CameraPose cam;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c)
      cam.rotation_c2w(r, c) = j["rotation"][3 * r + c].get<double>();
  for (int k = 0; k < 3; ++k) cam.translation_c2w[k] = j["translation"][k].get<double>();
  cam.fx = j["fx"].get<double>();
  cam.fy = j["fy"].get<double>();
  cam.cx = j["cx"].get<double>();
  cam.cy = j["cy"].get<double>();

  if (cam.rotation_c2w.determinant() <= 0)
    throw NotARotation("rotation determinant <= 0 (reflection or singular)");
  Mat3 err = cam.rotation_c2w.transpose() * cam.rotation_c2w - Mat3::Identity();
  if (err.cwiseAbs().maxCoeff() > 1e-4)
    throw NotARotation("rotation deviates from orthonormal by more than 1e-4");
  cam.rotation_c2w = nearest_rotation(cam.rotation_c2w);
  cam.validate();
  return cam;
}

inline std::vector<CameraPose> read_camera_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path + " for reading");
  nlohmann::json arr;
  try {
    in >> arr;
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(path + ": JSON parse error: " + e.what());
  }
  if (!arr.is_array()) throw MissingField(path + ": expected a JSON array of cameras");
  std::vector<CameraPose> cams;
  cams.reserve(arr.size());
  for (const auto& j : arr) cams.push_back(camera_from_json(j));
  return cams;
}

}  // namespace hartgeom
