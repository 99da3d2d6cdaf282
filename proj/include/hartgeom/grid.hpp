#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "hartgeom/error.hpp"
#include "hartgeom/tensor.hpp"
#include "hartgeom/transform.hpp"

namespace hartgeom {

/// Scalar indicator field chi on an r^3 lattice over the unit cube.
/// Node (x,y,z) sits at position (x/r, y/r, z/r); the domain is periodic.
/// Sign convention: chi < 0 inside the surface, chi > 0 outside; the surface
/// is the zero level set. to_world maps unit-cube coordinates back to the
/// original frame.
struct IndicatorGrid {
  std::size_t resolution = 0;
  std::vector<double> values;  // index (x*r + y)*r + z
  SimilarityTransform to_world;

  static IndicatorGrid zeros(std::size_t r) {
    IndicatorGrid g;
    g.resolution = r;
    g.values.assign(r * r * r, 0.0);
    return g;
  }

  double& at(std::size_t x, std::size_t y, std::size_t z) {
    return values[(x * resolution + y) * resolution + z];
  }
  double at(std::size_t x, std::size_t y, std::size_t z) const {
    return values[(x * resolution + y) * resolution + z];
  }

  /// Trilinear sample at unit-cube position p, with periodic wrap.
  double sample(double px, double py, double pz) const {
    const std::size_t r = resolution;
    double sx = px * double(r), sy = py * double(r), sz = pz * double(r);
    long ix = static_cast<long>(std::floor(sx));
    long iy = static_cast<long>(std::floor(sy));
    long iz = static_cast<long>(std::floor(sz));
    double fx = sx - double(ix), fy = sy - double(iy), fz = sz - double(iz);
    auto wrap = [r](long i) {
      long m = i % static_cast<long>(r);
      return static_cast<std::size_t>(m < 0 ? m + static_cast<long>(r) : m);
    };
    std::size_t x0 = wrap(ix), x1 = wrap(ix + 1);
    std::size_t y0 = wrap(iy), y1 = wrap(iy + 1);
    std::size_t z0 = wrap(iz), z1 = wrap(iz + 1);
    double c00 = at(x0, y0, z0) * (1 - fx) + at(x1, y0, z0) * fx;
    double c01 = at(x0, y0, z1) * (1 - fx) + at(x1, y0, z1) * fx;
    double c10 = at(x0, y1, z0) * (1 - fx) + at(x1, y1, z0) * fx;
    double c11 = at(x0, y1, z1) * (1 - fx) + at(x1, y1, z1) * fx;
    double c0 = c00 * (1 - fy) + c10 * fy;
    double c1 = c01 * (1 - fy) + c11 * fy;
    return c0 * (1 - fz) + c1 * fz;
  }
};

/// Vector field v on the same lattice, r^3 x 3.
struct VectorFieldGrid {
  std::size_t resolution = 0;
  std::vector<double> values;  // index ((x*r + y)*r + z)*3 + component

  static VectorFieldGrid zeros(std::size_t r) {
    VectorFieldGrid g;
    g.resolution = r;
    g.values.assign(r * r * r * 3, 0.0);
    return g;
  }

  double& at(std::size_t x, std::size_t y, std::size_t z, int c) {
    return values[((x * resolution + y) * resolution + z) * 3 + c];
  }
  double at(std::size_t x, std::size_t y, std::size_t z, int c) const {
    return values[((x * resolution + y) * resolution + z) * 3 + c];
  }
};

/// chi_refined = chi0 + chi_res, element-wise.
inline IndicatorGrid apply_residual(const IndicatorGrid& chi0,
                                    const IndicatorGrid& chi_res) {
  if (chi0.resolution != chi_res.resolution)
    throw ResolutionMismatch("apply_residual: " + std::to_string(chi0.resolution) +
                             " vs " + std::to_string(chi_res.resolution));
  IndicatorGrid out = chi0;
  for (std::size_t i = 0; i < out.values.size(); ++i)
    out.values[i] += chi_res.values[i];
  return out;
}

/// Mean squared difference over all cells.
inline double dpsr_loss(const IndicatorGrid& chi_refined,
                        const IndicatorGrid& chi_gt) {
  if (chi_refined.resolution != chi_gt.resolution)
    throw ResolutionMismatch("dpsr_loss: " + std::to_string(chi_refined.resolution) +
                             " vs " + std::to_string(chi_gt.resolution));
  double sum = 0;
  for (std::size_t i = 0; i < chi_refined.values.size(); ++i) {
    double d = chi_refined.values[i] - chi_gt.values[i];
    sum += d * d;
  }
  return sum / double(chi_refined.values.size());
}

/// HTF exchange: [r,r,r] f32 tensor with dims ordered (x,y,z).
inline Tensor grid_to_tensor(const IndicatorGrid& g) {
  std::vector<float> data(g.values.size());
  for (std::size_t i = 0; i < data.size(); ++i)
    data[i] = static_cast<float>(g.values[i]);
  std::uint64_t r = g.resolution;
  return Tensor::from_f32({r, r, r}, std::move(data));
}

inline IndicatorGrid grid_from_tensor(const Tensor& t) {
  if (t.ndim() != 3 || t.dim(0) != t.dim(1) || t.dim(1) != t.dim(2))
    throw Error("indicator grid tensor must have shape [r,r,r]");
  IndicatorGrid g = IndicatorGrid::zeros(t.dim(0));
  const auto& src = t.f32();
  for (std::size_t i = 0; i < src.size(); ++i) g.values[i] = src[i];
  return g;
}

}  // namespace hartgeom
