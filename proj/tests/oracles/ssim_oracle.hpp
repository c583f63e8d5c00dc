#pragma once

// SSIM straight from its windowed definition: an explicit 2D Gaussian window
// at every pixel (zero outside the image), channel-averaged mean of the map.

#include <cmath>
#include <vector>

#include "gamo/image.hpp"

namespace oracle {

inline double windowed_ssim(const gamo::Image& a, const gamo::Image& b) {
  const int half = 5;
  const double sigma = 1.5, c1 = 1e-4, c2 = 9e-4;
  std::vector<double> g1(11);
  double s = 0;
  for (int i = -half; i <= half; ++i) s += g1[i + half] = std::exp(-i * i / (2 * sigma * sigma));
  for (double& v : g1) v /= s;
  double total = 0;
  for (int ch = 0; ch < a.channels(); ++ch) {
    for (int y = 0; y < a.height(); ++y) {
      for (int x = 0; x < a.width(); ++x) {
        double ma = 0, mb = 0, aa = 0, bb = 0, ab = 0;
        for (int j = -half; j <= half; ++j) {
          for (int i = -half; i <= half; ++i) {
            const int xx = x + i, yy = y + j;
            if (xx < 0 || yy < 0 || xx >= a.width() || yy >= a.height()) continue;
            const double w = g1[i + half] * g1[j + half];
            const double va = a.at(xx, yy, ch), vb = b.at(xx, yy, ch);
            ma += w * va;
            mb += w * vb;
            aa += w * va * va;
            bb += w * vb * vb;
            ab += w * va * vb;
          }
        }
        const double va = aa - ma * ma, vb = bb - mb * mb, cov = ab - ma * mb;
        total += (2 * ma * mb + c1) * (2 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
      }
    }
  }
  return total / static_cast<double>(a.size());
}

// Gradient-magnitude pyramid L1: full, 1/2 and 1/4 resolution (2x2 means),
// Sobel with replicated borders, mean |mag(a) - mag(b)| averaged over levels
// and channels.
inline double gradient_pyramid_l1(const gamo::Image& a, const gamo::Image& b) {
  auto sobel_mag = [](const std::vector<std::vector<double>>& p) {
    const int h = static_cast<int>(p.size()), w = static_cast<int>(p[0].size());
    auto at = [&](int x, int y) {
      x = std::clamp(x, 0, w - 1);
      y = std::clamp(y, 0, h - 1);
      return p[y][x];
    };
    std::vector<std::vector<double>> m(h, std::vector<double>(w));
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const double gx = (at(x + 1, y - 1) + 2 * at(x + 1, y) + at(x + 1, y + 1)) -
                          (at(x - 1, y - 1) + 2 * at(x - 1, y) + at(x - 1, y + 1));
        const double gy = (at(x - 1, y + 1) + 2 * at(x, y + 1) + at(x + 1, y + 1)) -
                          (at(x - 1, y - 1) + 2 * at(x, y - 1) + at(x + 1, y - 1));
        m[y][x] = std::hypot(gx, gy);
      }
    return m;
  };
  auto half = [](const std::vector<std::vector<double>>& p) {
    const int h = static_cast<int>(p.size()) / 2, w = static_cast<int>(p[0].size()) / 2;
    std::vector<std::vector<double>> o(h, std::vector<double>(w));
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        o[y][x] = (p[2 * y][2 * x] + p[2 * y][2 * x + 1] + p[2 * y + 1][2 * x] + p[2 * y + 1][2 * x + 1]) / 4;
    return o;
  };
  double total = 0;
  for (int ch = 0; ch < a.channels(); ++ch) {
    std::vector<std::vector<double>> pa(a.height(), std::vector<double>(a.width())), pb = pa;
    for (int y = 0; y < a.height(); ++y)
      for (int x = 0; x < a.width(); ++x) {
        pa[y][x] = a.at(x, y, ch);
        pb[y][x] = b.at(x, y, ch);
      }
    for (int level = 0; level < 3; ++level) {
      if (level > 0) {
        pa = half(pa);
        pb = half(pb);
      }
      const auto ma = sobel_mag(pa), mb = sobel_mag(pb);
      double sum = 0;
      for (std::size_t y = 0; y < ma.size(); ++y)
        for (std::size_t x = 0; x < ma[y].size(); ++x) sum += std::abs(ma[y][x] - mb[y][x]);
      total += sum / static_cast<double>(ma.size() * ma[0].size());
    }
  }
  return total / (3.0 * a.channels());
}

}  // namespace oracle
