#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "hartgeom/error.hpp"
#include "hartgeom/tensor.hpp"

namespace hartgeom {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Indexed triangle mesh. Faces wind counter-clockwise when seen from
/// outside, so cross(v1-v0, v2-v0) points outward.
struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<std::uint32_t, 3>> faces;
  std::vector<Vec3> colors;  // optional, per-vertex RGB in [0,1]

  bool has_colors() const { return colors.size() == vertices.size(); }

  Vec3 face_normal(std::size_t f) const {
    const auto& t = faces[f];
    Vec3 e1 = vertices[t[1]] - vertices[t[0]];
    Vec3 e2 = vertices[t[2]] - vertices[t[0]];
    return e1.cross(e2);  // unnormalized, length = 2*area
  }

  double face_area(std::size_t f) const { return 0.5 * face_normal(f).norm(); }

  double surface_area() const {
    double a = 0;
    for (std::size_t f = 0; f < faces.size(); ++f) a += face_area(f);
    return a;
  }

  void bounds(Vec3& lo, Vec3& hi) const {
    if (vertices.empty()) throw EmptyMesh("bounds of empty mesh");
    lo = hi = vertices[0];
    for (const auto& v : vertices) {
      lo = lo.cwiseMin(v);
      hi = hi.cwiseMax(v);
    }
  }

  double signed_volume() const {
    // Divergence theorem; positive when faces wind CCW with outward normals.
    double v = 0;
    for (const auto& t : faces)
      v += vertices[t[0]].cross(vertices[t[1]]).dot(vertices[t[2]]);
    return v / 6.0;
  }
};

/// Drops faces with repeated indices or area below rel_eps * bbox diagonal^2.
inline void remove_degenerate_faces(TriangleMesh& mesh,
                                    double rel_eps = 1e-12) {
  if (mesh.vertices.empty() || mesh.faces.empty()) return;
  Vec3 lo, hi;
  mesh.bounds(lo, hi);
  double threshold = rel_eps * (hi - lo).squaredNorm();
  std::vector<std::array<std::uint32_t, 3>> kept;
  kept.reserve(mesh.faces.size());
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const auto& t = mesh.faces[f];
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) continue;
    if (mesh.face_area(f) <= threshold) continue;
    kept.push_back(t);
  }
  mesh.faces = std::move(kept);
}

inline void validate_indices(const TriangleMesh& mesh) {
  for (const auto& t : mesh.faces)
    for (auto i : t)
      if (i >= mesh.vertices.size())
        throw Error("face index " + std::to_string(i) + " out of range (V=" +
                    std::to_string(mesh.vertices.size()) + ")");
}

/// Every undirected edge shared by exactly two faces.
inline bool is_watertight(const TriangleMesh& mesh) {
  if (mesh.faces.empty()) return false;
  std::map<std::pair<std::uint32_t, std::uint32_t>, int> edges;
  for (const auto& t : mesh.faces) {
    for (int k = 0; k < 3; ++k) {
      std::uint32_t a = t[k], b = t[(k + 1) % 3];
      edges[{std::min(a, b), std::max(a, b)}]++;
    }
  }
  for (const auto& [e, n] : edges)
    if (n != 2) return false;
  return true;
}

/// Directed-edge orientation check: each directed edge used exactly once.
inline bool has_consistent_orientation(const TriangleMesh& mesh) {
  std::map<std::pair<std::uint32_t, std::uint32_t>, int> directed;
  for (const auto& t : mesh.faces)
    for (int k = 0; k < 3; ++k)
      if (++directed[{t[k], t[(k + 1) % 3]}] > 1) return false;
  return true;
}

inline long euler_characteristic(const TriangleMesh& mesh) {
  std::map<std::pair<std::uint32_t, std::uint32_t>, int> edges;
  for (const auto& t : mesh.faces)
    for (int k = 0; k < 3; ++k) {
      std::uint32_t a = t[k], b = t[(k + 1) % 3];
      edges[{std::min(a, b), std::max(a, b)}]++;
    }
  return static_cast<long>(mesh.vertices.size()) -
         static_cast<long>(edges.size()) + static_cast<long>(mesh.faces.size());
}

namespace detail {

inline std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

inline bool ends_with(const std::string& s, const std::string& suf) {
  return s.size() >= suf.size() &&
         s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}

struct PlyProperty {
  std::string name;
  std::string type;       // scalar type, or list value type
  std::string count_type; // non-empty for list properties
  bool is_list = false;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> props;
};

inline std::size_t ply_type_size(const std::string& t) {
  if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
  if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
  if (t == "int" || t == "uint" || t == "int32" || t == "uint32" || t == "float" || t == "float32") return 4;
  if (t == "double" || t == "float64" || t == "int64" || t == "uint64") return 8;
  throw UnsupportedElement("unknown PLY property type: " + t);
}

inline double ply_read_scalar(FileReader& r, const std::string& type) {
  unsigned char buf[8];
  std::size_t n = ply_type_size(type);
  r.read(buf, n);
  if (type == "float" || type == "float32") { float v; std::memcpy(&v, buf, 4); return v; }
  if (type == "double" || type == "float64") { double v; std::memcpy(&v, buf, 8); return v; }
  if (type == "char" || type == "int8") return static_cast<signed char>(buf[0]);
  if (type == "uchar" || type == "uint8") return buf[0];
  if (type == "short" || type == "int16") { std::int16_t v; std::memcpy(&v, buf, 2); return v; }
  if (type == "ushort" || type == "uint16") { std::uint16_t v; std::memcpy(&v, buf, 2); return v; }
  if (type == "int" || type == "int32") { std::int32_t v; std::memcpy(&v, buf, 4); return v; }
  if (type == "uint" || type == "uint32") { std::uint32_t v; std::memcpy(&v, buf, 4); return v; }
  if (type == "int64") { std::int64_t v; std::memcpy(&v, buf, 8); return static_cast<double>(v); }
  std::uint64_t v; std::memcpy(&v, buf, 8); return static_cast<double>(v);
}

}  // namespace detail

inline TriangleMesh read_mesh_ply(const std::string& path) {
  detail::FileReader r(path);
  // Header is line-oriented ASCII regardless of body format.
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
  std::string format;
  std::vector<detail::PlyElement> elements;
  for (;;) {
    std::string line = read_line();
    std::istringstream ss(line);
    std::string tok;
    ss >> tok;
    if (tok == "comment" || tok.empty()) continue;
    if (tok == "format") { ss >> format; continue; }
    if (tok == "element") {
      detail::PlyElement e;
      ss >> e.name >> e.count;
      elements.push_back(e);
      continue;
    }
    if (tok == "property") {
      if (elements.empty()) throw UnsupportedElement(path + ": property before element");
      detail::PlyProperty p;
      std::string t;
      ss >> t;
      if (t == "list") {
        p.is_list = true;
        ss >> p.count_type >> p.type >> p.name;
      } else {
        p.type = t;
        ss >> p.name;
      }
      elements.back().props.push_back(p);
      continue;
    }
    if (tok == "end_header") break;
    throw UnsupportedElement(path + ": unsupported header line: " + line);
  }
  bool ascii = (format == "ascii");
  if (!ascii && format != "binary_little_endian")
    throw UnsupportedElement(path + ": unsupported PLY format " + format);

  TriangleMesh mesh;
  std::istringstream body;  // for ascii: slurp the remainder once
  std::string body_text;
  if (ascii) {
    std::string rest;
    char c;
    try {
      for (;;) { r.read(&c, 1); rest.push_back(c); }
    } catch (const TruncatedFile&) {}
    body.str(rest);
  }
  auto next_ascii = [&body, &path]() {
    double v;
    if (!(body >> v)) throw TruncatedFile(path + ": ascii body ended early");
    return v;
  };

  for (const auto& e : elements) {
    if (e.name == "vertex") {
      int ix = -1, iy = -1, iz = -1, ir = -1, ig = -1, ib = -1;
      for (std::size_t p = 0; p < e.props.size(); ++p) {
        if (e.props[p].is_list)
          throw UnsupportedElement(path + ": list property on vertex element");
        const std::string& n = e.props[p].name;
        if (n == "x") ix = int(p);
        else if (n == "y") iy = int(p);
        else if (n == "z") iz = int(p);
        else if (n == "red") ir = int(p);
        else if (n == "green") ig = int(p);
        else if (n == "blue") ib = int(p);
      }
      if (ix < 0 || iy < 0 || iz < 0)
        throw MissingField(path + ": vertex element lacks x/y/z");
      bool rgb = ir >= 0 && ig >= 0 && ib >= 0;
      mesh.vertices.reserve(e.count);
      if (rgb) mesh.colors.reserve(e.count);
      std::vector<double> vals(e.props.size());
      for (std::size_t i = 0; i < e.count; ++i) {
        for (std::size_t p = 0; p < e.props.size(); ++p)
          vals[p] = ascii ? next_ascii() : detail::ply_read_scalar(r, e.props[p].type);
        mesh.vertices.emplace_back(vals[ix], vals[iy], vals[iz]);
        if (rgb) mesh.colors.emplace_back(vals[ir] / 255.0, vals[ig] / 255.0, vals[ib] / 255.0);
      }
    } else if (e.name == "face") {
      int ilist = -1;
      for (std::size_t p = 0; p < e.props.size(); ++p) {
        const auto& pr = e.props[p];
        if (pr.is_list && (pr.name == "vertex_indices" || pr.name == "vertex_index"))
          ilist = int(p);
        else if (pr.is_list)
          throw UnsupportedElement(path + ": unsupported face list property " + pr.name);
      }
      if (ilist < 0) throw MissingField(path + ": face element lacks vertex_indices");
      mesh.faces.reserve(e.count);
      for (std::size_t i = 0; i < e.count; ++i) {
        for (std::size_t p = 0; p < e.props.size(); ++p) {
          const auto& pr = e.props[p];
          if (int(p) == ilist) {
            std::size_t n = static_cast<std::size_t>(
                ascii ? next_ascii() : detail::ply_read_scalar(r, pr.count_type));
            if (n != 3)
              throw NonTriangleFace(path + ": face " + std::to_string(i) +
                                    " has " + std::to_string(n) + " vertices");
            std::array<std::uint32_t, 3> f;
            for (int k = 0; k < 3; ++k)
              f[k] = static_cast<std::uint32_t>(
                  ascii ? next_ascii() : detail::ply_read_scalar(r, pr.type));
            mesh.faces.push_back(f);
          } else if (!pr.is_list) {
            if (ascii) next_ascii();
            else detail::ply_read_scalar(r, pr.type);
          }
        }
      }
    } else {
      throw UnsupportedElement(path + ": unsupported element \"" + e.name + "\"");
    }
  }
  validate_indices(mesh);
  remove_degenerate_faces(mesh, 0.0);  // exact zero-area only; keep slivers
  return mesh;
}

inline TriangleMesh read_mesh_obj(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw IoError("cannot open " + path + " for reading");
  std::string text;
  {
    char buf[65536];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, f)) > 0) text.append(buf, n);
    std::fclose(f);
  }
  TriangleMesh mesh;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string tok;
    ss >> tok;
    if (tok == "v") {
      double x, y, z;
      if (!(ss >> x >> y >> z)) throw Error(path + ": malformed vertex line: " + line);
      mesh.vertices.emplace_back(x, y, z);
    } else if (tok == "f") {
      std::vector<std::uint32_t> idx;
      std::string vert;
      while (ss >> vert) {
        // forms: v, v/vt, v//vn, v/vt/vn
        std::size_t slash = vert.find('/');
        long v = std::stol(vert.substr(0, slash));
        if (v < 0) v = static_cast<long>(mesh.vertices.size()) + v + 1;
        if (v < 1 || static_cast<std::size_t>(v) > mesh.vertices.size())
          throw Error(path + ": face references vertex " + std::to_string(v) +
                      " before definition");
        idx.push_back(static_cast<std::uint32_t>(v - 1));
      }
      if (idx.size() != 3)
        throw NonTriangleFace(path + ": face with " + std::to_string(idx.size()) +
                              " vertices (triangles only)");
      mesh.faces.push_back({idx[0], idx[1], idx[2]});
    }
    // vn/vt/usemtl/etc. ignored
  }
  validate_indices(mesh);
  remove_degenerate_faces(mesh, 0.0);
  return mesh;
}

inline TriangleMesh read_mesh(const std::string& path) {
  std::string p = detail::lower(path);
  if (detail::ends_with(p, ".obj")) return read_mesh_obj(path);
  return read_mesh_ply(path);
}

/// Binary little-endian PLY with float32 positions (and optional u8 colors).
inline void write_mesh_ply(const std::string& path, const TriangleMesh& mesh) {
  detail::FileWriter w(path);
  std::ostringstream h;
  h << "ply\nformat binary_little_endian 1.0\n";
  h << "element vertex " << mesh.vertices.size() << "\n";
  h << "property float x\nproperty float y\nproperty float z\n";
  bool rgb = mesh.has_colors();
  if (rgb) h << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  h << "element face " << mesh.faces.size() << "\n";
  h << "property list uchar uint vertex_indices\n";
  h << "end_header\n";
  std::string header = h.str();
  w.write(header.data(), header.size());
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    float v[3] = {static_cast<float>(mesh.vertices[i].x()),
                  static_cast<float>(mesh.vertices[i].y()),
                  static_cast<float>(mesh.vertices[i].z())};
    w.write(v, 12);
    if (rgb) {
      auto q = [](double c) {
        return static_cast<std::uint8_t>(std::lround(std::clamp(c, 0.0, 1.0) * 255.0));
      };
      std::uint8_t rgb8[3] = {q(mesh.colors[i].x()), q(mesh.colors[i].y()), q(mesh.colors[i].z())};
      w.write(rgb8, 3);
    }
  }
  for (const auto& t : mesh.faces) {
    std::uint8_t n = 3;
    w.write(&n, 1);
    std::uint32_t idx[3] = {t[0], t[1], t[2]};
    w.write(idx, 12);
  }
  w.close();
}

inline void write_mesh_obj(const std::string& path, const TriangleMesh& mesh) {
  detail::FileWriter w(path);
  std::ostringstream out;
  out.precision(9);
  for (const auto& v : mesh.vertices)
    out << "v " << v.x() << " " << v.y() << " " << v.z() << "\n";
  for (const auto& t : mesh.faces)
    out << "f " << t[0] + 1 << " " << t[1] + 1 << " " << t[2] + 1 << "\n";
  std::string s = out.str();
  w.write(s.data(), s.size());
  w.close();
}

inline void write_mesh(const std::string& path, const TriangleMesh& mesh) {
  std::string p = detail::lower(path);
  if (detail::ends_with(p, ".obj")) write_mesh_obj(path, mesh);
  else write_mesh_ply(path, mesh);
}

}  // namespace hartgeom
