#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <json.hpp>

#include "hartgeom/error.hpp"
#include "hartgeom/mesh.hpp"
#include "hartgeom/tensor.hpp"

namespace hartgeom {

/// Generic linear blend-skinned parametric body: shape blendshapes on a
/// template, joints regressed from the shaped vertices, rigid transforms
/// composed along the kinematic tree, vertices skinned by blended joint
/// transforms, then similarity-posed into the world.
struct BodyModel {
  std::string name;
  std::vector<Vec3> template_vertices;           // V
  std::vector<double> shape_blendshapes;         // V*3*B, index (v*3 + c)*B + b
  std::vector<double> joint_regressor;           // J*V, index j*V + v
  std::vector<int> parent;                       // J entries, parent[0] == -1
  std::vector<double> skinning_weights;          // V*J, index v*J + j
  std::vector<std::uint32_t> marker_vertex_ids;  // marker anchors on the template

  std::size_t vertex_count() const { return template_vertices.size(); }
  std::size_t joint_count() const { return parent.size(); }
  std::size_t shape_count() const {
    return template_vertices.empty()
               ? 0
               : shape_blendshapes.size() / (template_vertices.size() * 3);
  }
  std::size_t marker_count() const { return marker_vertex_ids.size(); }

  void validate() const {
    const std::size_t v = vertex_count(), j = joint_count(), b = shape_count();
    if (v == 0 || j == 0) throw Error("body model needs vertices and joints");
    if (shape_blendshapes.size() != v * 3 * b)
      throw Error("blendshape payload size mismatch");
    if (joint_regressor.size() != j * v) throw Error("joint regressor size mismatch");
    if (skinning_weights.size() != v * j) throw Error("skinning weights size mismatch");
    if (parent[0] != -1) throw Error("joint 0 must be the root (parent -1)");
    for (std::size_t k = 1; k < j; ++k)
      if (parent[k] < 0 || std::size_t(parent[k]) >= k)
        throw Error("kinematic tree must be topologically ordered (parent[j] < j)");
    for (std::size_t vi = 0; vi < v; ++vi) {
      double sum = 0;
      for (std::size_t ji = 0; ji < j; ++ji) sum += skinning_weights[vi * j + ji];
      if (std::abs(sum - 1.0) > 1e-6)
        throw Error("skinning weights row " + std::to_string(vi) +
                    " sums to " + std::to_string(sum));
    }
    for (auto id : marker_vertex_ids)
      if (id >= v) throw Error("marker vertex id out of range");
  }
};

struct BodyParams {
  std::vector<Vec3> pose;  // J axis-angle rotations, radians
  Eigen::VectorXd shape;   // B coefficients
  Vec3 translation = Vec3::Zero();
  double scale = 1.0;

  static BodyParams rest(const BodyModel& model) {
    BodyParams p;
    p.pose.assign(model.joint_count(), Vec3::Zero());
    p.shape = Eigen::VectorXd::Zero(model.shape_count());
    return p;
  }
};

namespace detail {

struct JointTransforms {
  std::vector<Mat3> rot;      // world rotation per joint
  std::vector<Vec3> trans;    // world position per joint (pre scale/translate)
  std::vector<Vec3> skin_offset;  // trans - rot * rest_joint
};

inline std::vector<Vec3> shaped_vertices(const BodyModel& model,
                                         const BodyParams& params) {
  const std::size_t v = model.vertex_count(), b = model.shape_count();
  std::vector<Vec3> out(model.template_vertices);
  for (std::size_t vi = 0; vi < v; ++vi)
    for (int c = 0; c < 3; ++c) {
      double d = 0;
      const double* row = &model.shape_blendshapes[(vi * 3 + c) * b];
      for (std::size_t bi = 0; bi < b; ++bi) d += params.shape[bi] * row[bi];
      out[vi][c] += d;
    }
  return out;
}

inline std::vector<Vec3> regress_joints(const BodyModel& model,
                                        const std::vector<Vec3>& verts) {
  const std::size_t j = model.joint_count(), v = model.vertex_count();
  std::vector<Vec3> joints(j, Vec3::Zero());
  for (std::size_t ji = 0; ji < j; ++ji) {
    const double* row = &model.joint_regressor[ji * v];
    Vec3 acc = Vec3::Zero();
    for (std::size_t vi = 0; vi < v; ++vi) acc += row[vi] * verts[vi];
    joints[ji] = acc;
  }
  return joints;
}

inline JointTransforms compose_transforms(const BodyModel& model,
                                          const BodyParams& params,
                                          const std::vector<Vec3>& rest_joints) {
  const std::size_t j = model.joint_count();
  JointTransforms t;
  t.rot.resize(j);
  t.trans.resize(j);
  t.skin_offset.resize(j);
  for (std::size_t ji = 0; ji < j; ++ji) {
    double angle = params.pose[ji].norm();
    Mat3 local = Mat3::Identity();
    if (angle >= 1e-14)
      local = Eigen::AngleAxisd(angle, params.pose[ji] / angle).toRotationMatrix();
    if (ji == 0) {
      t.rot[0] = local;
      t.trans[0] = rest_joints[0];
    } else {
      int p = model.parent[ji];
      Vec3 offset = rest_joints[ji] - rest_joints[p];
      t.rot[ji] = t.rot[p] * local;
      t.trans[ji] = t.rot[p] * offset + t.trans[p];
    }
    t.skin_offset[ji] = t.trans[ji] - t.rot[ji] * rest_joints[ji];
  }
  return t;
}

}  // namespace detail

struct LbsOutput {
  std::vector<Vec3> vertices;
  std::vector<Vec3> joints;
};

/// Skins only the requested vertex ids (empty = all), which keeps repeated
/// marker evaluations inside the fit loop cheap.
inline LbsOutput lbs_forward_subset(const BodyModel& model, const BodyParams& params,
                                    const std::vector<std::uint32_t>& subset) {
  const std::size_t j = model.joint_count();
  std::vector<Vec3> v_shaped = detail::shaped_vertices(model, params);
  std::vector<Vec3> rest_joints = detail::regress_joints(model, v_shaped);
  detail::JointTransforms t = detail::compose_transforms(model, params, rest_joints);

  LbsOutput out;
  out.joints.resize(j);
  for (std::size_t ji = 0; ji < j; ++ji)
    out.joints[ji] = params.scale * t.trans[ji] + params.translation;

  auto skin_one = [&](std::size_t vi) -> Vec3 {
    const double* w = &model.skinning_weights[vi * j];
    Vec3 acc = Vec3::Zero();
    for (std::size_t ji = 0; ji < j; ++ji) {
      if (w[ji] == 0.0) continue;
      Vec3 moved = t.rot[ji] * v_shaped[vi];
      moved += t.skin_offset[ji];
      acc += w[ji] * moved;
    }
    Vec3 result = params.scale * acc;
    result += params.translation;
    return result;
  };

  if (subset.empty()) {
    out.vertices.resize(model.vertex_count());
    for (std::size_t vi = 0; vi < model.vertex_count(); ++vi)
      out.vertices[vi] = skin_one(vi);
  } else {
    out.vertices.reserve(subset.size());
    for (auto vi : subset) out.vertices.push_back(skin_one(vi));
  }
  return out;
}

inline LbsOutput lbs_forward(const BodyModel& model, const BodyParams& params) {
  return lbs_forward_subset(model, params, {});
}

// --- container I/O -------------------------------------------------------
// Layout: "HBM1\0\0\0\0" | u64 LE JSON length | JSON header | HTF payloads.
// The JSON carries J/B/V, the parent list, marker ids, and absolute file
// offsets of the four HTF tensors.

inline void write_body_model(const std::string& path, const BodyModel& model) {
  model.validate();
  const std::size_t v = model.vertex_count(), j = model.joint_count(),
                    b = model.shape_count();

  auto to_f32 = [](const std::vector<double>& d) {
    std::vector<float> f(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) f[i] = static_cast<float>(d[i]);
    return f;
  };
  std::vector<float> tmpl(v * 3);
  for (std::size_t vi = 0; vi < v; ++vi)
    for (int c = 0; c < 3; ++c)
      tmpl[vi * 3 + c] = static_cast<float>(model.template_vertices[vi][c]);

  struct Payload {
    const char* name;
    Tensor tensor;
  };
  std::vector<Payload> payloads;
  payloads.push_back({"template_vertices", Tensor::from_f32({v, 3}, std::move(tmpl))});
  payloads.push_back({"shape_blendshapes",
                      Tensor::from_f32({v, 3, std::max<std::size_t>(b, 1)},
                                       b ? to_f32(model.shape_blendshapes)
                                         : std::vector<float>(v * 3, 0.0f))});
  payloads.push_back({"joint_regressor", Tensor::from_f32({j, v}, to_f32(model.joint_regressor))});
  payloads.push_back({"skinning_weights", Tensor::from_f32({v, j}, to_f32(model.skinning_weights))});

  std::vector<std::string> blobs;
  for (auto& p : payloads) blobs.push_back(serialize_tensor(p.tensor));

  nlohmann::json header;
  header["name"] = model.name;
  header["joint_count"] = j;
  header["shape_count"] = b;
  header["vertex_count"] = v;
  header["parent"] = model.parent;
  header["marker_vertex_ids"] = model.marker_vertex_ids;

  // two-pass offset computation: header length changes with the offsets, so
  // fix the JSON once with placeholder offsets, then patch real values in a
  // second serialization of identical field order and digit widths
  nlohmann::json tensors;
  std::uint64_t base = 0;
  for (std::size_t i = 0; i < payloads.size(); ++i) {
    tensors[payloads[i].name] = {{"offset", 0}, {"length", blobs[i].size()}};
  }
  header["tensors"] = tensors;
  std::string js = header.dump();
  std::uint64_t header_end = 8 + 8 + js.size();
  base = header_end;
  for (std::size_t i = 0; i < payloads.size(); ++i) {
    header["tensors"][payloads[i].name]["offset"] = base;
    base += blobs[i].size();
  }
  std::string js2 = header.dump();
  while (js2.size() != js.size()) {
    // offsets gained digits; re-derive until stable
    js = js2;
    header_end = 8 + 8 + js.size();
    base = header_end;
    for (std::size_t i = 0; i < payloads.size(); ++i) {
      header["tensors"][payloads[i].name]["offset"] = base;
      base += blobs[i].size();
    }
    js2 = header.dump();
  }

  detail::FileWriter w(path);
  w.write("HBM1\0\0\0\0", 8);
  std::uint8_t len_le[8];
  detail::put_u64_le(js2.size(), len_le);
  w.write(len_le, 8);
  w.write(js2.data(), js2.size());
  for (const auto& blob : blobs) w.write(blob.data(), blob.size());
  w.close();
}

inline BodyModel read_body_model(const std::string& path) {
  detail::FileReader r(path);
  char magic[8];
  r.read(magic, 8);
  if (std::memcmp(magic, "HBM1\0\0\0\0", 8) != 0)
    throw BadMagic(path + ": bad body-model magic at byte offset 0");
  std::uint8_t len_le[8];
  r.read(len_le, 8);
  std::uint64_t js_len = detail::get_u64_le(len_le);
  std::string js(js_len, '\0');
  r.read(js.data(), js_len);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(js);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(path + ": body model header parse error: " + e.what());
  }
  for (const char* key : {"joint_count", "shape_count", "vertex_count", "parent",
                          "marker_vertex_ids", "tensors"})
    if (!header.contains(key))
      throw MissingField(path + ": body model header missing \"" + key + "\"");

  // payloads are concatenated in header order right after the JSON; read
  // them sequentially and verify the recorded offsets
  std::uint64_t cursor = 8 + 8 + js_len;
  auto read_payload = [&](const char* name) {
    const auto& meta = header["tensors"].at(name);
    std::uint64_t offset = meta.at("offset").get<std::uint64_t>();
    std::uint64_t length = meta.at("length").get<std::uint64_t>();
    if (offset != cursor)
      throw IoError(path + ": payload \"" + name + "\" offset " +
                    std::to_string(offset) + " does not match stream position " +
                    std::to_string(cursor));
    std::string blob(length, '\0');
    r.read(blob.data(), length);
    cursor += length;
    return parse_tensor(blob, path + ":" + name);
  };

  BodyModel model;
  model.name = header.value("name", "");
  model.parent = header["parent"].get<std::vector<int>>();
  model.marker_vertex_ids =
      header["marker_vertex_ids"].get<std::vector<std::uint32_t>>();

  Tensor tmpl = read_payload("template_vertices");
  Tensor blend = read_payload("shape_blendshapes");
  Tensor regress = read_payload("joint_regressor");
  Tensor skin = read_payload("skinning_weights");

  const std::size_t v = header["vertex_count"].get<std::size_t>();
  const std::size_t j = header["joint_count"].get<std::size_t>();
  const std::size_t b = header["shape_count"].get<std::size_t>();
  if (tmpl.dim(0) != v || regress.dim(0) != j)
    throw Error(path + ": tensor shapes disagree with header counts");

  model.template_vertices.resize(v);
  for (std::size_t vi = 0; vi < v; ++vi)
    model.template_vertices[vi] = Vec3(tmpl.f32()[vi * 3], tmpl.f32()[vi * 3 + 1],
                                       tmpl.f32()[vi * 3 + 2]);
  auto to_double = [](const std::vector<float>& f) {
    return std::vector<double>(f.begin(), f.end());
  };
  model.shape_blendshapes = to_double(blend.f32());
  if (b == 0) model.shape_blendshapes.clear();
  model.joint_regressor = to_double(regress.f32());
  model.skinning_weights = to_double(skin.f32());
  model.validate();
  return model;
}

}  // namespace hartgeom
