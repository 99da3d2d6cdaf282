#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "hartgeom/mesh.hpp"
#include "hartgeom/rng.hpp"

namespace hartgeom {

struct SurfaceSamples {
  std::vector<Vec3> positions;
  std::vector<Vec3> normals;  // per-sample face normal, unit length
};

/// Area-weighted uniform surface sampling, deterministic given seed.
inline SurfaceSamples sample_surface(const TriangleMesh& mesh, std::size_t n,
                                     std::uint64_t seed) {
  if (mesh.faces.empty()) throw EmptyMesh("sample_surface on empty mesh");
  std::vector<double> cumulative(mesh.faces.size());
  double total = 0;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    total += mesh.face_area(f);
    cumulative[f] = total;
  }
  if (!(total > 0)) throw EmptyMesh("mesh has no positive-area face");

  SurfaceSamples out;
  out.positions.reserve(n);
  out.normals.reserve(n);
  Pcg32 rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    double u = rng.next_double() * total;
    std::size_t f =
        std::lower_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin();
    if (f >= mesh.faces.size()) f = mesh.faces.size() - 1;
    const auto& t = mesh.faces[f];
    // sqrt trick for uniform barycentric coordinates
    double r1 = std::sqrt(rng.next_double());
    double r2 = rng.next_double();
    double a = 1.0 - r1, b = r1 * (1.0 - r2), c = r1 * r2;
    out.positions.push_back(a * mesh.vertices[t[0]] + b * mesh.vertices[t[1]] +
                            c * mesh.vertices[t[2]]);
    out.normals.push_back(mesh.face_normal(f).normalized());
  }
  return out;
}

}  // namespace hartgeom
