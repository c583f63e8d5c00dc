#include "gamo/metrics.hpp"

#include <cmath>
#include <vector>

#include "gamo/error.hpp"
#include "gamo/simd/kernels.hpp"

namespace gamo {
namespace {

// Single-channel working plane.
struct Plane {
  int w = 0, h = 0;
  std::vector<double> v;
  Plane(int w_, int h_) : w(w_), h(h_), v(static_cast<std::size_t>(w_) * h_, 0.0) {}
  double& at(int x, int y) { return v[static_cast<std::size_t>(y) * w + x]; }
  double at(int x, int y) const { return v[static_cast<std::size_t>(y) * w + x]; }
};

Plane channel(const Image& img, int c) {
  Plane p(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) p.at(x, y) = img.at(x, y, c);
  return p;
}

std::vector<double> gaussian_taps(const SsimParams& prm) {
  std::vector<double> taps(prm.window);
  const int half = prm.window / 2;
  double sum = 0.0;
  for (int i = 0; i < prm.window; ++i) {
    const double d = i - half;
    taps[i] = std::exp(-d * d / (2.0 * prm.sigma * prm.sigma));
    sum += taps[i];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

// Separable correlation with zero padding. The kernel is symmetric, so this
// operator is its own adjoint.
Plane blur(const Plane& in, const std::vector<double>& taps) {
  const int half = static_cast<int>(taps.size()) / 2;
  Plane tmp(in.w, in.h);
  for (int y = 0; y < in.h; ++y) {
    for (int x = 0; x < in.w; ++x) {
      double s = 0.0;
      for (int k = -half; k <= half; ++k) {
        const int xx = x + k;
        if (xx >= 0 && xx < in.w) s += taps[k + half] * in.at(xx, y);
      }
      tmp.at(x, y) = s;
    }
  }
  Plane out(in.w, in.h);
  for (int y = 0; y < in.h; ++y) {
    for (int x = 0; x < in.w; ++x) {
      double s = 0.0;
      for (int k = -half; k <= half; ++k) {
        const int yy = y + k;
        if (yy >= 0 && yy < in.h) s += taps[k + half] * tmp.at(x, yy);
      }
      out.at(x, y) = s;
    }
  }
  return out;
}

Plane multiply(const Plane& a, const Plane& b) {
  Plane out(a.w, a.h);
  for (std::size_t i = 0; i < a.v.size(); ++i) out.v[i] = a.v[i] * b.v[i];
  return out;
}

ValueGrad ssim_impl(const Image& a, const Image& b, const SsimParams& prm, bool want_grad) {
  require_same_shape(a, b, "ssim");
  if (a.empty()) throw ShapeError("ssim: empty image");
  const std::vector<double> taps = gaussian_taps(prm);
  const double n = static_cast<double>(a.size());
  ValueGrad out;
  if (want_grad) out.grad = Image(a.width(), a.height(), a.channels());
  double total = 0.0;
  for (int ch = 0; ch < a.channels(); ++ch) {
    const Plane pa = channel(a, ch), pb = channel(b, ch);
    const Plane mu_a = blur(pa, taps), mu_b = blur(pb, taps);
    const Plane e_aa = blur(multiply(pa, pa), taps);
    const Plane e_bb = blur(multiply(pb, pb), taps);
    const Plane e_ab = blur(multiply(pa, pb), taps);
    Plane g_mu(a.width(), a.height()), g_aa(a.width(), a.height()), g_ab(a.width(), a.height());
    for (std::size_t i = 0; i < pa.v.size(); ++i) {
      const double ma = mu_a.v[i], mb = mu_b.v[i];
      const double var_a = e_aa.v[i] - ma * ma;
      const double var_b = e_bb.v[i] - mb * mb;
      const double cov = e_ab.v[i] - ma * mb;
      const double n1 = 2.0 * ma * mb + prm.c1;
      const double n2 = 2.0 * cov + prm.c2;
      const double d1 = ma * ma + mb * mb + prm.c1;
      const double d2 = var_a + var_b + prm.c2;
      total += (n1 * n2) / (d1 * d2);
      if (!want_grad) continue;
      const double den = d1 * d2;
      // Partials with respect to mu_a, E[a^2] and E[ab].
      g_mu.v[i] = ((2.0 * mb * n2 - 2.0 * mb * n1) * den -
                   n1 * n2 * (2.0 * ma * d2 - 2.0 * ma * d1)) / (den * den);
      g_aa.v[i] = -n1 * n2 / (d1 * d2 * d2);
      g_ab.v[i] = 2.0 * n1 / den;
    }
    if (!want_grad) continue;
    const Plane b_mu = blur(g_mu, taps), b_aa = blur(g_aa, taps), b_ab = blur(g_ab, taps);
    for (int y = 0; y < a.height(); ++y) {
      for (int x = 0; x < a.width(); ++x) {
        out.grad.at(x, y, ch) =
            (b_mu.at(x, y) + 2.0 * pa.at(x, y) * b_aa.at(x, y) + pb.at(x, y) * b_ab.at(x, y)) / n;
      }
    }
  }
  out.value = total / n;
  return out;
}

// ---- gradient-magnitude pyramid ----

Plane downsample2(const Plane& in) {
  Plane out(in.w / 2, in.h / 2);
  for (int y = 0; y < out.h; ++y)
    for (int x = 0; x < out.w; ++x)
      out.at(x, y) = 0.25 * (in.at(2 * x, 2 * y) + in.at(2 * x + 1, 2 * y) +
                             in.at(2 * x, 2 * y + 1) + in.at(2 * x + 1, 2 * y + 1));
  return out;
}

void downsample2_adjoint(const Plane& g_out, Plane& g_in) {
  for (int y = 0; y < g_out.h; ++y)
    for (int x = 0; x < g_out.w; ++x) {
      const double g = 0.25 * g_out.at(x, y);
      g_in.at(2 * x, 2 * y) += g;
      g_in.at(2 * x + 1, 2 * y) += g;
      g_in.at(2 * x, 2 * y + 1) += g;
      g_in.at(2 * x + 1, 2 * y + 1) += g;
    }
}

constexpr int kSobelX[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
constexpr int kSobelY[3][3] = {{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}};

int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

struct Sobel {
  Plane gx, gy, mag;
};

Sobel sobel(const Plane& p) {
  Sobel s{Plane(p.w, p.h), Plane(p.w, p.h), Plane(p.w, p.h)};
  for (int y = 0; y < p.h; ++y) {
    for (int x = 0; x < p.w; ++x) {
      double gx = 0.0, gy = 0.0;
      for (int j = -1; j <= 1; ++j)
        for (int i = -1; i <= 1; ++i) {
          const double v = p.at(clampi(x + i, 0, p.w - 1), clampi(y + j, 0, p.h - 1));
          gx += kSobelX[j + 1][i + 1] * v;
          gy += kSobelY[j + 1][i + 1] * v;
        }
      s.gx.at(x, y) = gx;
      s.gy.at(x, y) = gy;
      s.mag.at(x, y) = std::sqrt(gx * gx + gy * gy);
    }
  }
  return s;
}

void sobel_adjoint(const Sobel& s, const Plane& g_mag, Plane& g_in) {
  const int w = g_in.w, h = g_in.h;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double m = s.mag.at(x, y);
      if (m == 0.0 || g_mag.at(x, y) == 0.0) continue;
      const double ggx = g_mag.at(x, y) * s.gx.at(x, y) / m;
      const double ggy = g_mag.at(x, y) * s.gy.at(x, y) / m;
      for (int j = -1; j <= 1; ++j)
        for (int i = -1; i <= 1; ++i)
          g_in.at(clampi(x + i, 0, w - 1), clampi(y + j, 0, h - 1)) +=
              kSobelX[j + 1][i + 1] * ggx + kSobelY[j + 1][i + 1] * ggy;
    }
  }
}

constexpr int kPyramidLevels = 3;

ValueGrad perceptual_impl(const Image& a, const Image& b, bool want_grad) {
  require_same_shape(a, b, "perceptual_surrogate");
  if (a.width() < 8 || a.height() < 8) {
    throw InvalidArgument("perceptual_surrogate: image smaller than 8x8");
  }
  ValueGrad out;
  if (want_grad) out.grad = Image(a.width(), a.height(), a.channels());
  double total = 0.0;
  for (int ch = 0; ch < a.channels(); ++ch) {
    std::vector<Plane> pa{channel(a, ch)}, pb{channel(b, ch)};
    for (int l = 1; l < kPyramidLevels; ++l) {
      pa.push_back(downsample2(pa.back()));
      pb.push_back(downsample2(pb.back()));
    }
    std::vector<Plane> grads;
    for (int l = 0; l < kPyramidLevels; ++l) {
      const Sobel sa = sobel(pa[l]), sb = sobel(pb[l]);
      const double norm = static_cast<double>(pa[l].v.size()) * a.channels() * kPyramidLevels;
      Plane g_mag(pa[l].w, pa[l].h);
      for (std::size_t i = 0; i < sa.mag.v.size(); ++i) {
        const double d = sa.mag.v[i] - sb.mag.v[i];
        total += std::abs(d) / norm;
        g_mag.v[i] = (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0)) / norm;
      }
      if (!want_grad) continue;
      Plane g_level(pa[l].w, pa[l].h);
      sobel_adjoint(sa, g_mag, g_level);
      grads.push_back(std::move(g_level));
    }
    if (!want_grad) continue;
    // Push coarse-level gradients down the pyramid.
    for (int l = kPyramidLevels - 1; l > 0; --l) downsample2_adjoint(grads[l], grads[l - 1]);
    for (int y = 0; y < a.height(); ++y)
      for (int x = 0; x < a.width(); ++x) out.grad.at(x, y, ch) = grads[0].at(x, y);
  }
  out.value = total;
  return out;
}

}  // namespace

double ssim(const Image& a, const Image& b, const SsimParams& params) {
  return ssim_impl(a, b, params, false).value;
}

ValueGrad ssim_with_grad(const Image& a, const Image& b, const SsimParams& params) {
  return ssim_impl(a, b, params, true);
}

double d_ssim(const Image& a, const Image& b) { return 1.0 - ssim(a, b); }

double psnr(const Image& a, const Image& b) {
  require_same_shape(a, b, "psnr");
  if (a.empty()) throw ShapeError("psnr: empty image");
  const double mse = simd::sum_sq_diff(a.values(), b.values()) / static_cast<double>(a.size());
  if (mse == 0.0) return kPsnrIdentical;
  return 10.0 * std::log10(1.0 / mse);
}

double mean_l1(const Image& a, const Image& b) {
  require_same_shape(a, b, "mean_l1");
  if (a.empty()) throw ShapeError("mean_l1: empty image");
  return simd::sum_abs_diff(a.values(), b.values()) / static_cast<double>(a.size());
}

ValueGrad mean_l1_with_grad(const Image& a, const Image& b) {
  ValueGrad out{mean_l1(a, b), Image(a.width(), a.height(), a.channels())};
  const double n = static_cast<double>(a.size());
  std::span<const double> va = a.values(), vb = b.values();
  std::span<double> g = out.grad.values();
  for (std::size_t i = 0; i < va.size(); ++i) {
    g[i] = (va[i] > vb[i] ? 1.0 : (va[i] < vb[i] ? -1.0 : 0.0)) / n;
  }
  return out;
}

double perceptual_surrogate(const Image& a, const Image& b) {
  return perceptual_impl(a, b, false).value;
}

ValueGrad perceptual_surrogate_with_grad(const Image& a, const Image& b) {
  return perceptual_impl(a, b, true);
}

}  // namespace gamo
