#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "hartgeom/body_model.hpp"
#include "hartgeom/markers.hpp"

namespace hartgeom {

/// Deterministic 8-joint demo body (tube limbs, 4 shape coefficients,
/// 86 markers). Small enough for tests, structured enough that scale,
/// translation, every joint rotation and every shape coefficient are
/// identifiable from the markers. No licensed assets involved.
inline BodyModel make_toy_body_model() {
  BodyModel model;
  model.name = "toy-8joint";

  // joints: pelvis, chest, neck, head, left/right arm, left/right leg
  const Vec3 joint_pos[8] = {
      {0.00, 0.90, 0.00},  // 0 pelvis (root)
      {0.00, 1.25, 0.00},  // 1 chest
      {0.00, 1.45, 0.00},  // 2 neck
      {0.00, 1.60, 0.00},  // 3 head
      {0.22, 1.38, 0.00},  // 4 left arm
      {-0.22, 1.38, 0.00}, // 5 right arm
      {0.10, 0.45, 0.00},  // 6 left leg
      {-0.10, 0.45, 0.00}, // 7 right leg
  };
  model.parent = {-1, 0, 1, 2, 1, 1, 0, 0};

  struct Bone {
    int parent_joint, child_joint;
    double radius;
  };
  const Bone bones[] = {
      {0, 1, 0.13}, {1, 2, 0.05}, {2, 3, 0.045},
      {1, 4, 0.05}, {1, 5, 0.05}, {0, 6, 0.07}, {0, 7, 0.07},
  };
  const int rings = 6, segments = 12;

  std::vector<double> weights;  // per-vertex rows appended as (J) blocks
  auto push_vertex = [&](const Vec3& p, int joint_a, int joint_b, double w_b) {
    model.template_vertices.push_back(p);
    std::vector<double> row(8, 0.0);
    row[joint_a] = 1.0 - w_b;
    row[joint_b] += w_b;
    weights.insert(weights.end(), row.begin(), row.end());
  };

  for (const auto& bone : bones) {
    Vec3 pa = joint_pos[bone.parent_joint];
    Vec3 pb = joint_pos[bone.child_joint];
    Vec3 axis = (pb - pa).normalized();
    Vec3 u = std::abs(axis.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
    u = (u - u.dot(axis) * axis).normalized();
    Vec3 v = axis.cross(u);
    for (int ri = 0; ri < rings; ++ri) {
      double f = double(ri) / double(rings - 1);
      Vec3 center = pa + f * (pb - pa);
      // blend toward the child joint over the outer part of the bone
      double t = std::clamp((f - 0.55) / 0.45, 0.0, 1.0);
      double w_child = t * t * (3 - 2 * t);
      for (int si = 0; si < segments; ++si) {
        double phi = 2.0 * M_PI * double(si) / double(segments);
        Vec3 p = center + bone.radius * (std::cos(phi) * u + std::sin(phi) * v);
        push_vertex(p, bone.parent_joint, bone.child_joint, w_child);
      }
    }
  }
  // head blob, rigidly attached to the head joint
  for (int ri = 0; ri < rings; ++ri) {
    double theta = M_PI * (double(ri) + 0.5) / double(rings);
    for (int si = 0; si < segments; ++si) {
      double phi = 2.0 * M_PI * double(si) / double(segments);
      Vec3 p = joint_pos[3] + 0.11 * Vec3(std::sin(theta) * std::cos(phi),
                                          std::cos(theta),
                                          std::sin(theta) * std::sin(phi));
      push_vertex(p, 3, 3, 0.0);
    }
  }
  model.skinning_weights = std::move(weights);

  const std::size_t v = model.template_vertices.size();
  const std::size_t b = 4;

  // blendshapes: height, girth, arm flare, head size
  model.shape_blendshapes.assign(v * 3 * b, 0.0);
  auto bs = [&](std::size_t vi, int c, std::size_t bi) -> double& {
    return model.shape_blendshapes[(vi * 3 + c) * b + bi];
  };
  for (std::size_t vi = 0; vi < v; ++vi) {
    const Vec3& p = model.template_vertices[vi];
    bs(vi, 1, 0) = 0.15 * (p.y() - 0.9);
    bs(vi, 0, 1) = 0.10 * p.x();
    bs(vi, 2, 1) = 0.10 * p.z();
    bs(vi, 0, 2) = 0.10 * p.x() * std::abs(p.x());
    double head_w = std::clamp((p.y() - 1.45) / 0.15, 0.0, 1.0);
    Vec3 from_head = p - joint_pos[3];
    for (int c = 0; c < 3; ++c) bs(vi, c, 3) = 0.2 * head_w * from_head[c];
  }

  // joint regressor: uniform weights over the 10 template vertices nearest
  // to each joint
  model.joint_regressor.assign(8 * v, 0.0);
  for (int ji = 0; ji < 8; ++ji) {
    std::vector<std::pair<double, std::size_t>> by_dist;
    by_dist.reserve(v);
    for (std::size_t vi = 0; vi < v; ++vi)
      by_dist.emplace_back((model.template_vertices[vi] - joint_pos[ji]).squaredNorm(), vi);
    std::partial_sort(by_dist.begin(), by_dist.begin() + 10, by_dist.end());
    for (int k = 0; k < 10; ++k)
      model.joint_regressor[ji * v + by_dist[k].second] = 0.1;
  }

  // markers: evenly strided through the vertex list
  model.marker_vertex_ids.resize(kBodyMarkerCount);
  for (std::size_t k = 0; k < kBodyMarkerCount; ++k)
    model.marker_vertex_ids[k] =
        static_cast<std::uint32_t>(k * v / kBodyMarkerCount);

  model.validate();
  return model;
}

}  // namespace hartgeom
