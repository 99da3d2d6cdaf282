#pragma once

// Test-only oracle: solves the same periodic central-difference Poisson
// problem as the spectral path, but entirely in real space — divergence by
// explicit stencils and the linear system by conjugate gradients on the
// 7-point Laplacian. No Fourier transform anywhere, so agreement with the
// FFT route checks the solver rather than restating it.

#include <cmath>
#include <cstddef>
#include <vector>

#include "hartgeom/grid.hpp"
#include "hartgeom/poisson.hpp"

namespace hartgeom::testing {

inline std::vector<double> central_difference_divergence(const VectorFieldGrid& v) {
  const std::size_t r = v.resolution;
  std::vector<double> div(r * r * r, 0.0);
  auto wrap = [r](long i) {
    long m = i % static_cast<long>(r);
    return static_cast<std::size_t>(m < 0 ? m + static_cast<long>(r) : m);
  };
  const double half_over_h = 0.5 * double(r);  // 1/(2h), h = 1/r
  for (std::size_t x = 0; x < r; ++x)
    for (std::size_t y = 0; y < r; ++y)
      for (std::size_t z = 0; z < r; ++z) {
        double d = 0;
        d += (v.at(wrap(long(x) + 1), y, z, 0) - v.at(wrap(long(x) - 1), y, z, 0));
        d += (v.at(x, wrap(long(y) + 1), z, 1) - v.at(x, wrap(long(y) - 1), z, 1));
        d += (v.at(x, y, wrap(long(z) + 1), 2) - v.at(x, y, wrap(long(z) - 1), 2));
        div[(x * r + y) * r + z] = d * half_over_h;
      }
  return div;
}

/// 7-point periodic Laplacian applied to a grid vector, scaled by r^2 = 1/h^2.
inline void apply_laplacian(const std::vector<double>& in, std::vector<double>& out,
                            std::size_t r) {
  auto wrap = [r](long i) {
    long m = i % static_cast<long>(r);
    return static_cast<std::size_t>(m < 0 ? m + static_cast<long>(r) : m);
  };
  const double inv_h2 = double(r) * double(r);
  for (std::size_t x = 0; x < r; ++x)
    for (std::size_t y = 0; y < r; ++y)
      for (std::size_t z = 0; z < r; ++z) {
        auto at = [&](std::size_t a, std::size_t b, std::size_t c) {
          return in[(a * r + b) * r + c];
        };
        double s = at(wrap(long(x) + 1), y, z) + at(wrap(long(x) - 1), y, z) +
                   at(x, wrap(long(y) + 1), z) + at(x, wrap(long(y) - 1), z) +
                   at(x, y, wrap(long(z) + 1)) + at(x, y, wrap(long(z) - 1)) -
                   6.0 * at(x, y, z);
        out[(x * r + y) * r + z] = s * inv_h2;
      }
}

/// Conjugate gradients on -lap(chi) = -div (SPD on the zero-mean subspace).
/// Solves to machine-level tolerance; the nullspace (constants) is projected
/// out of the iterates.
inline IndicatorGrid solve_poisson_real_space(const VectorFieldGrid& v,
                                              double cg_tolerance = 1e-13,
                                              std::size_t max_iters = 20000) {
  const std::size_t r = v.resolution;
  const std::size_t n = r * r * r;
  std::vector<double> b = central_difference_divergence(v);
  // compatibility: remove the (numerically tiny) mean of the RHS
  double bmean = 0;
  for (double x : b) bmean += x;
  bmean /= double(n);
  for (double& x : b) x = -(x - bmean);  // solve A x = -div with A = -lap (SPD)

  std::vector<double> x(n, 0.0), res = b, p = b, ap(n);
  auto dot = [n](const std::vector<double>& a, const std::vector<double>& c) {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * c[i];
    return s;
  };
  double rr_old = dot(res, res);
  double b_norm = std::sqrt(dot(b, b));
  if (b_norm == 0) b_norm = 1;
  for (std::size_t it = 0; it < max_iters; ++it) {
    if (std::sqrt(rr_old) / b_norm < cg_tolerance) break;
    apply_laplacian(p, ap, r);
    for (double& val : ap) val = -val;  // A = -lap
    double alpha = rr_old / dot(p, ap);
    for (std::size_t i = 0; i < n; ++i) x[i] += alpha * p[i];
    for (std::size_t i = 0; i < n; ++i) res[i] -= alpha * ap[i];
    // project constants out to keep the iteration on the solvable subspace
    double xmean = 0;
    for (double val : x) xmean += val;
    xmean /= double(n);
    for (double& val : x) val -= xmean;
    double rr_new = dot(res, res);
    for (std::size_t i = 0; i < n; ++i) p[i] = res[i] + (rr_new / rr_old) * p[i];
    rr_old = rr_new;
  }
  IndicatorGrid chi = IndicatorGrid::zeros(r);
  chi.values = std::move(x);
  return chi;
}

}  // namespace hartgeom::testing
