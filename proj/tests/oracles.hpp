// Independent reference computations used as test oracles. Written from the
// textbook definitions, deliberately without sharing code with the library.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <queue>
#include <vector>

namespace oracle {

/// Brute force co-occurrence counts: scans every (pixel, level i, level j)
/// triple. patch uses -1 for pixels outside the region.
inline std::vector<double> glcm_counts(const std::vector<int>& patch, int w, int h, int levels, int dx,
                                       int dy) {
  std::vector<double> c(static_cast<std::size_t>(levels * levels), 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int nx = x + dx, ny = y + dy;
      if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
      const int a = patch[y * w + x], b = patch[ny * w + nx];
      if (a < 0 || b < 0) continue;
      for (int i = 0; i < levels; ++i) {
        for (int j = 0; j < levels; ++j) {
          if (a == i && b == j) c[i * levels + j] += 1.0;
          if (a == j && b == i) c[i * levels + j] += 1.0;
        }
      }
    }
  }
  return c;
}

/// The 13 Haralick statistics evaluated term by term from their definitions,
/// gray levels numbered from 1, logarithms base 2.
inline std::array<double, 13> haralick(const std::vector<double>& p, int g) {
  auto P = [&](int i, int j) { return p[(i - 1) * g + (j - 1)]; };
  auto lg = [](double v) { return v > 0 ? std::log2(v) : 0.0; };
  std::vector<double> px(g + 1, 0.0), py(g + 1, 0.0), pxpy(2 * g + 1, 0.0), pxmy(g, 0.0);
  for (int i = 1; i <= g; ++i)
    for (int j = 1; j <= g; ++j) {
      px[i] += P(i, j);
      py[j] += P(i, j);
      pxpy[i + j] += P(i, j);
      pxmy[std::abs(i - j)] += P(i, j);
    }
  double f1 = 0, f2 = 0, f5 = 0, f9 = 0, sij = 0;
  for (int i = 1; i <= g; ++i)
    for (int j = 1; j <= g; ++j) {
      f1 += P(i, j) * P(i, j);
      f5 += P(i, j) / (1.0 + (i - j) * (i - j));
      f9 -= P(i, j) * lg(P(i, j));
      sij += i * j * P(i, j);
    }
  for (int n = 0; n < g; ++n) {
    double s = 0;
    for (int i = 1; i <= g; ++i)
      for (int j = 1; j <= g; ++j)
        if (std::abs(i - j) == n) s += P(i, j);
    f2 += n * n * s;
  }
  double mx = 0, my = 0;
  for (int i = 1; i <= g; ++i) {
    mx += i * px[i];
    my += i * py[i];
  }
  double sx = 0, sy = 0;
  for (int i = 1; i <= g; ++i) {
    sx += (i - mx) * (i - mx) * px[i];
    sy += (i - my) * (i - my) * py[i];
  }
  const double f3 = (sx > 0 && sy > 0) ? (sij - mx * my) / std::sqrt(sx * sy) : 0.0;
  double f4 = 0;
  for (int i = 1; i <= g; ++i)
    for (int j = 1; j <= g; ++j) f4 += (i - mx) * (i - mx) * P(i, j);
  double f6 = 0, f8 = 0;
  for (int k = 2; k <= 2 * g; ++k) {
    f6 += k * pxpy[k];
    f8 -= pxpy[k] * lg(pxpy[k]);
  }
  double f7 = 0;
  for (int k = 2; k <= 2 * g; ++k) f7 += (k - f6) * (k - f6) * pxpy[k];
  double dm = 0, f11 = 0;
  for (int k = 0; k < g; ++k) {
    dm += k * pxmy[k];
    f11 -= pxmy[k] * lg(pxmy[k]);
  }
  double f10 = 0;
  for (int k = 0; k < g; ++k) f10 += (k - dm) * (k - dm) * pxmy[k];
  double hx = 0, hy = 0, hxy1 = 0, hxy2 = 0;
  for (int i = 1; i <= g; ++i) {
    hx -= px[i] * lg(px[i]);
    hy -= py[i] * lg(py[i]);
  }
  for (int i = 1; i <= g; ++i)
    for (int j = 1; j <= g; ++j) {
      hxy1 -= P(i, j) * lg(px[i] * py[j]);
      hxy2 -= px[i] * py[j] * lg(px[i] * py[j]);
    }
  const double hm = std::max(hx, hy);
  const double f12 = hm > 0 ? (f9 - hxy1) / hm : 0.0;
  const double f13 = std::sqrt(std::max(0.0, 1.0 - std::pow(2.0, -2.0 * (hxy2 - f9))));
  return {f1, f2, f3, f4, f5, f6, f7, f8, f9, f10, f11, f12, f13};
}

/// sRGB -> CIELAB (D65) via the CIE epsilon/kappa formulation.
inline std::array<double, 3> srgb_to_lab(double r, double g, double b) {
  auto lin = [](double c) { return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4); };
  const double R = lin(r), G = lin(g), B = lin(b);
  const double X = 0.4124564 * R + 0.3575761 * G + 0.1804375 * B;
  const double Y = 0.2126729 * R + 0.7151522 * G + 0.0721750 * B;
  const double Z = 0.0193339 * R + 0.1191920 * G + 0.9503041 * B;
  const double eps = 216.0 / 24389.0, kappa = 24389.0 / 27.0;
  auto f = [&](double t) { return t > eps ? std::cbrt(t) : (kappa * t + 16.0) / 116.0; };
  const double fx = f(X / 0.95047), fy = f(Y / 1.0), fz = f(Z / 1.08883);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

/// Number of 4-connected components per label, by breadth-first flood fill.
inline std::vector<int> components_per_label(const std::vector<std::uint32_t>& labels, int w, int h,
                                             std::uint32_t n_labels) {
  std::vector<int> comps(n_labels, 0);
  std::vector<char> seen(labels.size(), 0);
  for (int s = 0; s < w * h; ++s) {
    if (seen[s]) continue;
    const auto l = labels[s];
    if (l < n_labels) ++comps[l];
    std::queue<int> q;
    q.push(s);
    seen[s] = 1;
    while (!q.empty()) {
      const int c = q.front();
      q.pop();
      const int x = c % w, y = c / w;
      const int nb[4][2] = {{x - 1, y}, {x + 1, y}, {x, y - 1}, {x, y + 1}};
      for (auto& n : nb) {
        if (n[0] < 0 || n[1] < 0 || n[0] >= w || n[1] >= h) continue;
        const int k = n[1] * w + n[0];
        if (!seen[k] && labels[k] == l) {
          seen[k] = 1;
          q.push(k);
        }
      }
    }
  }
  return comps;
}

}  // namespace oracle
