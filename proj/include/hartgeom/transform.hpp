#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "hartgeom/error.hpp"
#include "hartgeom/mesh.hpp"

namespace hartgeom {

/// p -> scale * rotation * p + translation
struct SimilarityTransform {
  double scale = 1.0;
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return scale * (rotation * p) + translation; }

  SimilarityTransform inverse() const {
    SimilarityTransform inv;
    inv.scale = 1.0 / scale;
    inv.rotation = rotation.transpose();
    inv.translation = -(inv.rotation * translation) / scale;
    return inv;
  }

  void validate(double tol = 1e-9) const {
    if (!(scale > 0)) throw Error("similarity scale must be positive");
    if (std::abs(rotation.determinant() - 1.0) > tol)
      throw NotARotation("similarity rotation determinant deviates from +1");
  }
};

inline nlohmann::json transform_to_json(const SimilarityTransform& t) {
  nlohmann::json j;
  j["scale"] = t.scale;
  j["rotation"] = nlohmann::json::array();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) j["rotation"].push_back(t.rotation(r, c));
  j["translation"] = {t.translation.x(), t.translation.y(), t.translation.z()};
  return j;
}

inline SimilarityTransform transform_from_json(const nlohmann::json& j) {
  for (const char* key : {"scale", "rotation", "translation"})
    if (!j.contains(key))
      throw MissingField(std::string("transform JSON missing field \"") + key + "\"");
  SimilarityTransform t;
  t.scale = j["scale"].get<double>();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) t.rotation(r, c) = j["rotation"][3 * r + c].get<double>();
  for (int k = 0; k < 3; ++k) t.translation[k] = j["translation"][k].get<double>();
  return t;
}

inline void write_transform_json(const std::string& path,
                                 const SimilarityTransform& t) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << transform_to_json(t).dump(2) << "\n";
}

inline SimilarityTransform read_transform_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path + " for reading");
  nlohmann::json j;
  in >> j;
  return transform_from_json(j);
}

}  // namespace hartgeom
