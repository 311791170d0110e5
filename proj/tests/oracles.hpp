#pragma once

// Independent reference implementations the tests compare the library
// against. Each one favors the most literal formulation available (direct
// summation, brute-force search, dense walks) over speed, and none of them
// share code with the library paths they check.

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "hairkit/texture.hpp"
#include "hairkit/types.hpp"

namespace oracle {

using hairkit::PointMat;
using hairkit::Vec2;
using hairkit::Vec3;
using hairkit::VecX;

// O(L^2) forward DFT by direct complex summation, one axis at a time.
inline Eigen::MatrixXcd naive_dft(const PointMat& pts) {
  const int L = static_cast<int>(pts.rows());
  const int k = L / 2 + 1;
  Eigen::MatrixXcd coeffs(k, 3);
  for (int a = 0; a < 3; ++a)
    for (int j = 0; j < k; ++j) {
      std::complex<double> sum = 0.0;
      for (int n = 0; n < L; ++n)
        sum += pts(n, a) * std::polar(1.0, -2.0 * M_PI * j * n / L);
      coeffs(j, a) = sum;
    }
  return coeffs;
}

// O(L^2) inverse: rebuild the full length-L spectrum by conjugate symmetry,
// then sum all L terms per point.
inline PointMat naive_idft(const Eigen::MatrixXcd& coeffs, int L) {
  const int k = L / 2 + 1;
  PointMat pts(L, 3);
  for (int a = 0; a < 3; ++a) {
    std::vector<std::complex<double>> full(L);
    for (int j = 0; j < L; ++j)
      full[j] = j < k ? coeffs(j, a) : std::conj(coeffs(L - j, a));
    for (int n = 0; n < L; ++n) {
      std::complex<double> sum = 0.0;
      for (int j = 0; j < L; ++j) sum += full[j] * std::polar(1.0, 2.0 * M_PI * j * n / L);
      pts(n, a) = sum.real() / L;
    }
  }
  return pts;
}

// Circumradius by solving for the circumcenter in the triangle plane (the
// point equidistant from all three vertices), not by the cross-product
// formula the library uses.
inline double circumradius(const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 u = b - a, v = c - a;
  // Circumcenter = a + s*u + t*v with |center-a| = |center-b| = |center-c|.
  Eigen::Matrix2d M;
  M << u.dot(u), u.dot(v), u.dot(v), v.dot(v);
  const Eigen::Vector2d rhs(0.5 * u.dot(u), 0.5 * v.dot(v));
  const Eigen::Vector2d st = M.colPivHouseholderQr().solve(rhs);
  const Vec3 center = a + st[0] * u + st[1] * v;
  return (center - a).norm();
}

// Arc-length resampling by walking a densified copy of the polyline and
// emitting a point whenever the walked distance crosses the next target.
inline PointMat dense_resample(const PointMat& pts, int L, int steps_per_segment = 20000) {
  const int n = static_cast<int>(pts.rows());
  double total = 0.0;
  for (int i = 0; i + 1 < n; ++i) total += (pts.row(i + 1) - pts.row(i)).norm();
  PointMat out(L, 3);
  out.row(0) = pts.row(0);
  out.row(L - 1) = pts.row(n - 1);
  int next = 1;
  double walked = 0.0;
  for (int i = 0; i + 1 < n && next < L - 1; ++i) {
    const Vec3 p0 = pts.row(i), p1 = pts.row(i + 1);
    const double step = (p1 - p0).norm() / steps_per_segment;
    if (step <= 0.0) continue;
    for (int s = 0; s < steps_per_segment && next < L - 1; ++s) {
      // Emit every target inside this micro-step, then advance the walk.
      while (next < L - 1) {
        const double target = total * next / (L - 1);
        if (target > walked + step) break;
        const double frac = (static_cast<double>(s) + (target - walked) / step) /
                            steps_per_segment;
        out.row(next) = p0 + frac * (p1 - p0);
        ++next;
      }
      walked += step;
    }
  }
  return out;
}

// Brute-force nearest-root assignment per texel: smaller uv distance wins,
// ties go to the lower strand index (ascending scan with strict <), roots
// beyond epsilon leave the texel bald (-1).
inline std::vector<int> voronoi_texels(const std::vector<Vec2>& roots_uv, int width, int height,
                                       double epsilon) {
  std::vector<int> winner(static_cast<size_t>(width) * height, -1);
  for (int row = 0; row < height; ++row)
    for (int col = 0; col < width; ++col) {
      const Vec2 center((col + 0.5) / width, (row + 0.5) / height);
      double best = std::numeric_limits<double>::max();
      int idx = -1;
      for (size_t i = 0; i < roots_uv.size(); ++i) {
        const double d = (roots_uv[i] - center).squaredNorm();
        if (d < best) {
          best = d;
          idx = static_cast<int>(i);
        }
      }
      if (idx >= 0 && best <= epsilon * epsilon)
        winner[static_cast<size_t>(row) * width + col] = idx;
    }
  return winner;
}

// Direct 4-neighbor texel-center-aligned bilinear interpolation.
inline hairkit::texture::GeometryTexture bilinear_resize(
    const hairkit::texture::GeometryTexture& guide, int out_w, int out_h) {
  using hairkit::texture::GeometryTexture;
  GeometryTexture out = GeometryTexture::zeros(out_w, out_h, guide.channels);
  for (int row = 0; row < out_h; ++row)
    for (int col = 0; col < out_w; ++col) {
      double x = (col + 0.5) * guide.width / out_w - 0.5;
      double y = (row + 0.5) * guide.height / out_h - 0.5;
      x = std::clamp(x, 0.0, guide.width - 1.0);
      y = std::clamp(y, 0.0, guide.height - 1.0);
      const int x0 = static_cast<int>(std::floor(x)), y0 = static_cast<int>(std::floor(y));
      const int x1 = std::min(x0 + 1, guide.width - 1), y1 = std::min(y0 + 1, guide.height - 1);
      const double fx = x - x0, fy = y - y0;
      for (int ch = 0; ch < guide.channels; ++ch) {
        const double v = (1 - fx) * (1 - fy) * guide.at(x0, y0)[ch] +
                         fx * (1 - fy) * guide.at(x1, y0)[ch] +
                         (1 - fx) * fy * guide.at(x0, y1)[ch] + fx * fy * guide.at(x1, y1)[ch];
        out.at(col, row)[ch] = static_cast<float>(v);
      }
    }
  return out;
}

// Reference scalar Adam (bias-corrected), for trace comparison.
struct ScalarAdam {
  double lr = 0.001, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  double m = 0.0, v = 0.0;
  long t = 0;

  double step(double x, double g) {
    ++t;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mh = m / (1 - std::pow(b1, static_cast<double>(t)));
    const double vh = v / (1 - std::pow(b2, static_cast<double>(t)));
    return x - lr * mh / (std::sqrt(vh) + eps);
  }
};

}  // namespace oracle
