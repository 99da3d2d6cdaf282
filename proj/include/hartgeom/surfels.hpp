#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Geometry>

#include "hartgeom/error.hpp"
#include "hartgeom/mesh.hpp"

namespace hartgeom {

/// Flat 2D Gaussian primitive pinned to a mesh face: orthonormal tangent
/// frame {tangent_u, tangent_v, normal} with normal = tangent_u x tangent_v.
struct Surfel {
  Vec3 center;
  Vec3 tangent_u;
  Vec3 tangent_v;
  double scale_u = 0;
  double scale_v = 0;
  Vec3 color{0.5, 0.5, 0.5};
  double opacity = 0.8;
  // rotation exactly as read from a file, preserved so rewrites are
  // byte-identical; empty for freshly built surfels
  std::optional<std::array<float, 4>> stored_rotation;

  Vec3 normal() const { return tangent_u.cross(tangent_v); }
};

struct SurfelSet {
  std::vector<Surfel> surfels;
  std::size_t size() const { return surfels.size(); }
};

/// One surfel per face: centered at the centroid, tangent_u along the
/// longest edge, isotropic scale sqrt(face area). Colors average the face's
/// vertex colors when the mesh carries them.
inline SurfelSet init_surfels(const TriangleMesh& mesh, double default_opacity = 0.8,
                              const Vec3& default_color = Vec3(0.5, 0.5, 0.5)) {
  if (mesh.faces.empty()) throw EmptyMesh("init_surfels on empty mesh");
  SurfelSet set;
  set.surfels.reserve(mesh.faces.size());
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const auto& t = mesh.faces[f];
    const Vec3& a = mesh.vertices[t[0]];
    const Vec3& b = mesh.vertices[t[1]];
    const Vec3& c = mesh.vertices[t[2]];
    Vec3 n2 = (b - a).cross(c - a);  // length = 2*area
    double area = 0.5 * n2.norm();
    if (!(area > 0))
      throw Error("init_surfels: degenerate face " + std::to_string(f));

    Surfel s;
    s.center = (a + b + c) / 3.0;
    // longest edge in the canonical order (a->b, b->c, c->a); strict
    // comparison keeps the choice deterministic under ties
    Vec3 edges[3] = {b - a, c - b, a - c};
    int longest = 0;
    for (int e = 1; e < 3; ++e)
      if (edges[e].squaredNorm() > edges[longest].squaredNorm()) longest = e;
    Vec3 normal = n2.normalized();
    s.tangent_u = (edges[longest] - edges[longest].dot(normal) * normal).normalized();
    s.tangent_v = normal.cross(s.tangent_u);
    s.scale_u = s.scale_v = std::sqrt(area);
    s.opacity = default_opacity;
    if (mesh.has_colors())
      s.color = (mesh.colors[t[0]] + mesh.colors[t[1]] + mesh.colors[t[2]]) / 3.0;
    else
      s.color = default_color;
    set.surfels.push_back(s);
  }
  return set;
}

/// Unit quaternion (w,x,y,z) of the frame matrix [tangent_u|tangent_v|normal],
/// w >= 0 for a canonical sign.
inline Eigen::Vector4d surfel_quaternion(const Surfel& s) {
  Mat3 frame;
  frame.col(0) = s.tangent_u;
  frame.col(1) = s.tangent_v;
  frame.col(2) = s.normal();
  Eigen::Quaterniond q(frame);
  q.normalize();
  // canonical sign: first nonzero of (w,x,y,z) positive, so 180-degree
  // rotations (w == 0) still map to a unique representative
  double comps[4] = {q.w(), q.x(), q.y(), q.z()};
  for (double c : comps) {
    if (c > 0) break;
    if (c < 0) {
      q.coeffs() *= -1;
      break;
    }
  }
  return {q.w(), q.x(), q.y(), q.z()};
}



// Surfel PLY: binary little-endian, one vertex element, property order
//   x y z, nx ny nz, scale_0 scale_1, rot_0 rot_1 rot_2 rot_3 (w,x,y,z),
//   red green blue (u8), opacity (f32)

inline void write_surfels_ply(const std::string& path, const SurfelSet& set) {
  if (set.size() == 0) throw EmptyMesh("write_surfels_ply: empty surfel set");
  detail::FileWriter w(path);
  std::string header =
      "ply\nformat binary_little_endian 1.0\nelement vertex " +
      std::to_string(set.size()) +
      "\nproperty float x\nproperty float y\nproperty float z\n"
      "property float nx\nproperty float ny\nproperty float nz\n"
      "property float scale_0\nproperty float scale_1\n"
      "property float rot_0\nproperty float rot_1\nproperty float rot_2\nproperty float rot_3\n"
      "property uchar red\nproperty uchar green\nproperty uchar blue\n"
      "property float opacity\nend_header\n";
  w.write(header.data(), header.size());
  for (const auto& s : set.surfels) {
    // rotations read from a file are written back verbatim; fresh surfels
    // get the f32-quantized canonical quaternion of their frame. The stored
    // normal is derived from that quaternion so every write generation
    // performs identical arithmetic and rewrites stay byte-identical.
    std::array<float, 4> q;
    if (s.stored_rotation) {
      q = *s.stored_rotation;
    } else {
      Eigen::Vector4d qd = surfel_quaternion(s);
      for (int i = 0; i < 4; ++i) q[i] = static_cast<float>(qd[i]);
    }
    Eigen::Quaterniond qq(q[0], q[1], q[2], q[3]);
    qq.normalize();
    Mat3 frame = qq.toRotationMatrix();
    Vec3 n = frame.col(0).cross(frame.col(1));
    float f[12] = {
        float(s.center.x()), float(s.center.y()), float(s.center.z()),
        float(n.x()),        float(n.y()),        float(n.z()),
        float(s.scale_u),    float(s.scale_v),
        q[0],                q[1],                q[2],           q[3]};
    w.write(f, sizeof f);
    auto quant = [](double c) {
      return static_cast<std::uint8_t>(std::lround(std::clamp(c, 0.0, 1.0) * 255.0));
    };
    std::uint8_t rgb[3] = {quant(s.color.x()), quant(s.color.y()), quant(s.color.z())};
    w.write(rgb, 3);
    float op = static_cast<float>(s.opacity);
    w.write(&op, 4);
  }
  w.close();
}

inline SurfelSet read_surfels_ply(const std::string& path) {
  detail::FileReader r(path);
  auto read_line = [&r]() {
    std::string line;
    char c;
    for (;;) {
      r.read(&c, 1);
      if (c == '\n') break;
      if (c != '\r') line.push_back(c);
    }
    return line;
  };
  if (read_line() != "ply") throw BadMagic(path + ": not a PLY file");
  std::size_t count = 0;
  std::vector<std::string> props;
  for (;;) {
    std::string line = read_line();
    if (line == "end_header") break;
    std::istringstream ss(line);
    std::string tok;
    ss >> tok;
    if (tok == "format") {
      std::string fmt;
      ss >> fmt;
      if (fmt != "binary_little_endian")
        throw UnsupportedElement(path + ": surfel PLY must be binary little-endian");
    } else if (tok == "element") {
      std::string name;
      ss >> name >> count;
      if (name != "vertex")
        throw UnsupportedElement(path + ": unexpected element " + name);
    } else if (tok == "property") {
      std::string type, name;
      ss >> type >> name;
      props.push_back(name);
    }
  }
  const std::vector<std::string> expected = {
      "x", "y", "z", "nx", "ny", "nz", "scale_0", "scale_1",
      "rot_0", "rot_1", "rot_2", "rot_3", "red", "green", "blue", "opacity"};
  if (props != expected)
    throw UnsupportedElement(path + ": surfel PLY property order mismatch");

  SurfelSet set;
  set.surfels.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    float f[12];
    r.read(f, sizeof f);
    std::uint8_t rgb[3];
    r.read(rgb, 3);
    float op;
    r.read(&op, 4);
    Surfel s;
    s.center = Vec3(f[0], f[1], f[2]);
    Eigen::Quaterniond q(f[8], f[9], f[10], f[11]);  // (w,x,y,z)
    q.normalize();
    Mat3 frame = q.toRotationMatrix();
    s.tangent_u = frame.col(0);
    s.tangent_v = frame.col(1);
    s.stored_rotation = std::array<float, 4>{f[8], f[9], f[10], f[11]};
    s.scale_u = f[6];
    s.scale_v = f[7];
    s.color = Vec3(rgb[0] / 255.0, rgb[1] / 255.0, rgb[2] / 255.0);
    s.opacity = op;
    set.surfels.push_back(s);
  }
  return set;
}

}  // namespace hartgeom
