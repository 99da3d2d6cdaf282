#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <vector>

#include "hartgeom/fft.hpp"
#include "hartgeom/grid.hpp"
#include "hartgeom/mesh.hpp"
#include "hartgeom/prediction.hpp"

namespace hartgeom {

/// Trilinear splat of each oriented point's normal onto the 8 surrounding
/// lattice nodes (periodic). Weights sum to one per point, so the field sums
/// to the sum of splatted normals.
inline VectorFieldGrid rasterize_points(const OrientedPointCloud& cloud,
                                        std::size_t r,
                                        bool confidence_weighted = false) {
  if (cloud.size() == 0) throw EmptyCloud("rasterize_points: empty cloud");
  VectorFieldGrid grid = VectorFieldGrid::zeros(r);
  for (std::size_t k = 0; k < cloud.size(); ++k) {
    const Vec3& p = cloud.positions[k];
    for (int a = 0; a < 3; ++a)
      if (!(p[a] >= 0.0 && p[a] < 1.0))
        throw OutOfDomain("rasterize_points: point " + std::to_string(k) +
                          " outside [0,1)^3");
    double weight = confidence_weighted ? cloud.confidences[k] : 1.0;
    Vec3 n = cloud.normals[k] * weight;
    double sx = p.x() * double(r), sy = p.y() * double(r), sz = p.z() * double(r);
    std::size_t ix = static_cast<std::size_t>(sx);
    std::size_t iy = static_cast<std::size_t>(sy);
    std::size_t iz = static_cast<std::size_t>(sz);
    double fx = sx - double(ix), fy = sy - double(iy), fz = sz - double(iz);
    std::size_t x1 = (ix + 1) % r, y1 = (iy + 1) % r, z1 = (iz + 1) % r;
    const double wx[2] = {1.0 - fx, fx};
    const double wy[2] = {1.0 - fy, fy};
    const double wz[2] = {1.0 - fz, fz};
    const std::size_t xs[2] = {ix, x1}, ys[2] = {iy, y1}, zs[2] = {iz, z1};
    for (int dx = 0; dx < 2; ++dx)
      for (int dy = 0; dy < 2; ++dy)
        for (int dz = 0; dz < 2; ++dz) {
          double w = wx[dx] * wy[dy] * wz[dz];
          for (int c = 0; c < 3; ++c)
            grid.at(xs[dx], ys[dy], zs[dz], c) += w * n[c];
        }
  }
  return grid;
}

namespace detail {

/// Spectral Gaussian filter value for signed frequency triple, sigma in cells.
inline double gaussian_filter(double wx, double wy, double wz, double sigma_cells) {
  double w2 = wx * wx + wy * wy + wz * wz;
  return std::exp(-0.5 * sigma_cells * sigma_cells * w2);
}

}  // namespace detail

/// Spectral solve of the periodic Poisson equation lap(chi) = div(v),
/// diagonalizing the second-order central-difference discretization
/// (derivative symbol i*r*sin(2*pi*f/r), Laplacian symbol
/// -4*r^2*sum sin^2(pi*f/r)). A spectral Gaussian filter of width
/// sigma_cells is applied to the solution. The zero mode is set to zero;
/// no other gauge fixing happens here, so the result is linear in v.
inline IndicatorGrid solve_poisson_fft_raw(const VectorFieldGrid& v,
                                           double sigma_cells) {
  const std::size_t r = v.resolution;
  if (!is_power_of_two(r) || r < 16)
    throw ResolutionNotSupported("poisson solve needs power-of-two resolution >= 16, got " +
                                 std::to_string(r));
  const std::size_t n = r * r * r;
  const double pi = 3.14159265358979323846;

  std::vector<Complex> chi_hat(n, Complex(0, 0));
  std::vector<Complex> scratch(n);
  for (int c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < n; ++i)
      scratch[i] = Complex(v.values[3 * i + c], 0.0);
    fft3(scratch, r, -1);
    // multiply by the component's derivative symbol and accumulate div_hat
    for (std::size_t x = 0; x < r; ++x) {
      double wx = 2.0 * pi * double(fft_freq(x, r)) / double(r);
      for (std::size_t y = 0; y < r; ++y) {
        double wy = 2.0 * pi * double(fft_freq(y, r)) / double(r);
        for (std::size_t z = 0; z < r; ++z) {
          double wz = 2.0 * pi * double(fft_freq(z, r)) / double(r);
          double w[3] = {wx, wy, wz};
          double sym = double(r) * std::sin(w[c]);  // i * sym
          std::size_t i = (x * r + y) * r + z;
          chi_hat[i] += Complex(0.0, sym) * scratch[i];
        }
      }
    }
  }
  // divide by the discrete Laplacian symbol, apply the Gaussian filter
  for (std::size_t x = 0; x < r; ++x) {
    double wx = 2.0 * pi * double(fft_freq(x, r)) / double(r);
    for (std::size_t y = 0; y < r; ++y) {
      double wy = 2.0 * pi * double(fft_freq(y, r)) / double(r);
      for (std::size_t z = 0; z < r; ++z) {
        double wz = 2.0 * pi * double(fft_freq(z, r)) / double(r);
        std::size_t i = (x * r + y) * r + z;
        if (i == 0 && x == 0 && y == 0 && z == 0) {
          chi_hat[0] = Complex(0, 0);
          continue;
        }
        auto s2 = [](double w) { double s = std::sin(0.5 * w); return s * s; };
        double lap = -4.0 * double(r) * double(r) * (s2(wx) + s2(wy) + s2(wz));
        if (lap == 0.0) {
          chi_hat[i] = Complex(0, 0);  // Nyquist-only modes invisible to the stencil
          continue;
        }
        chi_hat[i] *= detail::gaussian_filter(wx, wy, wz, sigma_cells) / lap;
      }
    }
  }
  fft3(chi_hat, r, +1);

  IndicatorGrid chi = IndicatorGrid::zeros(r);
  for (std::size_t i = 0; i < n; ++i) chi.values[i] = chi_hat[i].real();
  return chi;
}

/// Shift chi so its trilinear samples at the input points average to zero,
/// then flip the global sign if needed so the domain corner (outside the
/// surface) is positive. Shared by the spectral solver and any oracle solve
/// so both routes are compared under the identical gauge.
inline void pin_indicator_gauge(IndicatorGrid& chi,
                                const OrientedPointCloud& cloud) {
  if (cloud.size() == 0) throw EmptyCloud("pin_indicator_gauge: empty cloud");
  double mean = 0;
  for (const auto& p : cloud.positions) mean += chi.sample(p.x(), p.y(), p.z());
  mean /= double(cloud.size());
  for (auto& c : chi.values) c -= mean;
  if (chi.at(0, 0, 0) < 0)
    for (auto& c : chi.values) c = -c;
}

/// Full solve: spectral Poisson solution with the gauge pinned by the input
/// point samples (mean zero at points, positive at the domain corner).
inline IndicatorGrid solve_poisson_fft(const VectorFieldGrid& v,
                                       double sigma_cells,
                                       const OrientedPointCloud& cloud) {
  IndicatorGrid chi = solve_poisson_fft_raw(v, sigma_cells);
  pin_indicator_gauge(chi, cloud);
  return chi;
}

/// Deterministic stand-in for a learned residual refinement: closes holes in
/// unobserved regions by diffusing the inside/outside sign field and blending
/// it into chi0 away from the input points. Cells within `rho` cells of any
/// input point are returned unchanged.
inline IndicatorGrid fallback_residual(const IndicatorGrid& chi0,
                                       const OrientedPointCloud& cloud,
                                       int iterations = 32, int rho = 3) {
  const std::size_t r = chi0.resolution;
  IndicatorGrid out = chi0;
  if (iterations <= 0) return out;

  // Chebyshev distance (in cells) to the nearest occupied cell, by BFS over
  // the 26-neighborhood. Saturates at `far`.
  const int far = 2 * rho + 1;
  std::vector<std::uint8_t> dist(r * r * r, static_cast<std::uint8_t>(far));
  std::deque<std::size_t> frontier;
  for (const auto& p : cloud.positions) {
    std::size_t x = std::min<std::size_t>(r - 1, std::size_t(p.x() * double(r)));
    std::size_t y = std::min<std::size_t>(r - 1, std::size_t(p.y() * double(r)));
    std::size_t z = std::min<std::size_t>(r - 1, std::size_t(p.z() * double(r)));
    std::size_t i = (x * r + y) * r + z;
    if (dist[i] != 0) {
      dist[i] = 0;
      frontier.push_back(i);
    }
  }
  while (!frontier.empty()) {
    std::size_t i = frontier.front();
    frontier.pop_front();
    int d = dist[i];
    if (d + 1 >= far) continue;
    std::size_t z = i % r, y = (i / r) % r, x = i / (r * r);
    for (int dx = -1; dx <= 1; ++dx)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dz = -1; dz <= 1; ++dz) {
          if (!dx && !dy && !dz) continue;
          long nx = long(x) + dx, ny = long(y) + dy, nz = long(z) + dz;
          if (nx < 0 || ny < 0 || nz < 0 || nx >= long(r) || ny >= long(r) || nz >= long(r))
            continue;
          std::size_t j = (std::size_t(nx) * r + std::size_t(ny)) * r + std::size_t(nz);
          if (dist[j] > d + 1) {
            dist[j] = static_cast<std::uint8_t>(d + 1);
            frontier.push_back(j);
          }
        }
  }

  // characteristic magnitude of the observed band; used both to normalize
  // the diffusion seed and to scale the closed field back
  double amp = 0;
  std::size_t amp_n = 0;
  for (std::size_t i = 0; i < dist.size(); ++i)
    if (dist[i] <= rho) {
      amp += std::abs(chi0.values[i]);
      ++amp_n;
    }
  amp = amp_n ? amp / double(amp_n) : 1.0;
  if (!(amp > 0)) amp = 1.0;

  // diffuse the normalized sign field with a separable 3-wide box filter,
  // clamping the observed band back after every pass. Seeding with the
  // clamped field (rather than the hard sign) preserves the solve's own
  // smooth continuation across unobserved holes instead of flattening it.
  std::vector<float> sign(r * r * r), tmp(r * r * r);
  for (std::size_t i = 0; i < sign.size(); ++i)
    sign[i] = static_cast<float>(std::clamp(chi0.values[i] / amp, -1.0, 1.0));
  std::vector<float> observed_sign = sign;

  auto blur_axis = [&](int axis) {
    const long rl = static_cast<long>(r);
    for (std::size_t a = 0; a < r; ++a)
      for (std::size_t b = 0; b < r; ++b)
        for (long k = 0; k < rl; ++k) {
          auto idx = [&](long q) -> std::size_t {
            long c = std::clamp(q, 0L, rl - 1);
            if (axis == 0) return (std::size_t(c) * r + a) * r + b;
            if (axis == 1) return (a * r + std::size_t(c)) * r + b;
            return (a * r + b) * r + std::size_t(c);
          };
          tmp[idx(k)] = (sign[idx(k - 1)] + sign[idx(k)] + sign[idx(k + 1)]) / 3.0f;
        }
    sign.swap(tmp);
  };

  for (int it = 0; it < iterations; ++it) {
    for (int axis = 0; axis < 3; ++axis) blur_axis(axis);
    for (std::size_t i = 0; i < sign.size(); ++i)
      if (dist[i] <= rho) sign[i] = observed_sign[i];
  }

  for (std::size_t i = 0; i < out.values.size(); ++i) {
    int d = dist[i];
    if (d <= rho) continue;  // observed cells stay exact
    double t = std::min(1.0, double(d - rho) / double(rho));  // 0 at rho, 1 at 2*rho
    out.values[i] = (1.0 - t) * chi0.values[i] + t * amp * double(sign[i]);
  }
  return out;
}

/// Occupancy grid from a watertight mesh in unit-cube coordinates:
/// -0.5 inside, +0.5 outside, decided by ray-crossing parity with a majority
/// vote over the three axis directions, then (optionally) Gaussian-smoothed.
inline IndicatorGrid grid_from_mesh(const TriangleMesh& mesh, std::size_t r,
                                    double smooth_sigma_cells) {
  if (mesh.faces.empty()) throw EmptyMesh("grid_from_mesh on empty mesh");
  if (!is_watertight(mesh))
    throw NotWatertight("grid_from_mesh requires a watertight mesh");

  IndicatorGrid grid = IndicatorGrid::zeros(r);
  std::vector<std::uint8_t> votes(r * r * r, 0);

  // For each axis, collect ray crossings per lattice column and accumulate
  // parity votes. Columns are jittered off exact lattice alignment, with
  // distinct offsets per in-plane axis so rays also miss the diagonal edges
  // of lattice-aligned meshes (marching-cubes outputs in particular).
  const double jitter_u = 0.5 / double(r) * 0.2137;
  const double jitter_w = 0.5 / double(r) * 0.3719;
  for (int axis = 0; axis < 3; ++axis) {
    int u = (axis + 1) % 3, w = (axis + 2) % 3;
    std::vector<std::vector<double>> crossings(r * r);
    for (const auto& t : mesh.faces) {
      const Vec3& a = mesh.vertices[t[0]];
      const Vec3& b = mesh.vertices[t[1]];
      const Vec3& c = mesh.vertices[t[2]];
      double ulo = std::min({a[u], b[u], c[u]}), uhi = std::max({a[u], b[u], c[u]});
      double wlo = std::min({a[w], b[w], c[w]}), whi = std::max({a[w], b[w], c[w]});
      long iu0 = std::max(0L, static_cast<long>(std::ceil((ulo - jitter_u) * double(r))));
      long iu1 = std::min(static_cast<long>(r) - 1,
                          static_cast<long>(std::floor((uhi - jitter_u) * double(r))));
      long iw0 = std::max(0L, static_cast<long>(std::ceil((wlo - jitter_w) * double(r))));
      long iw1 = std::min(static_cast<long>(r) - 1,
                          static_cast<long>(std::floor((whi - jitter_w) * double(r))));
      for (long iu = iu0; iu <= iu1; ++iu)
        for (long iw = iw0; iw <= iw1; ++iw) {
          double pu = double(iu) / double(r) + jitter_u;
          double pw = double(iw) / double(r) + jitter_w;
          // 2D point-in-triangle via signed areas in the (u,w) plane
          double aux = a[u] - pu, auy = a[w] - pw;
          double bux = b[u] - pu, buy = b[w] - pw;
          double cux = c[u] - pu, cuy = c[w] - pw;
          double s0 = aux * buy - auy * bux;
          double s1 = bux * cuy - buy * cux;
          double s2 = cux * auy - cuy * aux;
          bool pos = s0 > 0 && s1 > 0 && s2 > 0;
          bool neg = s0 < 0 && s1 < 0 && s2 < 0;
          if (!pos && !neg) continue;
          double denom = s0 + s1 + s2;
          double t_axis = (s1 * a[axis] + s2 * b[axis] + s0 * c[axis]) / denom;
          crossings[std::size_t(iu) * r + std::size_t(iw)].push_back(t_axis);
        }
    }
    for (std::size_t iu = 0; iu < r; ++iu)
      for (std::size_t iw = 0; iw < r; ++iw) {
        auto& cs = crossings[iu * r + iw];
        if (cs.empty()) continue;
        std::sort(cs.begin(), cs.end());
        for (std::size_t k = 0; k < r; ++k) {
          double pa = double(k) / double(r);
          // parity of crossings beyond this node along +axis
          std::size_t above = cs.end() - std::upper_bound(cs.begin(), cs.end(), pa);
          if (above % 2 == 1) {
            std::size_t xyz[3];
            xyz[axis] = k;
            xyz[u] = iu;
            xyz[w] = iw;
            votes[(xyz[0] * r + xyz[1]) * r + xyz[2]]++;
          }
        }
      }
  }
  for (std::size_t i = 0; i < votes.size(); ++i)
    grid.values[i] = votes[i] >= 2 ? -0.5 : 0.5;

  if (smooth_sigma_cells > 0) {
    const double pi = 3.14159265358979323846;
    std::vector<Complex> buf(r * r * r);
    for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = Complex(grid.values[i], 0);
    fft3(buf, r, -1);
    for (std::size_t x = 0; x < r; ++x) {
      double wx = 2.0 * pi * double(fft_freq(x, r)) / double(r);
      for (std::size_t y = 0; y < r; ++y) {
        double wy = 2.0 * pi * double(fft_freq(y, r)) / double(r);
        for (std::size_t z = 0; z < r; ++z) {
          double wz = 2.0 * pi * double(fft_freq(z, r)) / double(r);
          buf[(x * r + y) * r + z] *= detail::gaussian_filter(wx, wy, wz, smooth_sigma_cells);
        }
      }
    }
    fft3(buf, r, +1);
    for (std::size_t i = 0; i < buf.size(); ++i) grid.values[i] = buf[i].real();
  }
  return grid;
}

}  // namespace hartgeom
