#pragma once

// Image comparison metrics and the differentiable losses built on them.
// Images are W x H x C with values nominally in [0, 1].

#include "gamo/image.hpp"

namespace gamo {

struct SsimParams {
  int window = 11;
  double sigma = 1.5;
  double c1 = 0.01 * 0.01;
  double c2 = 0.03 * 0.03;
};

// A scalar and its gradient with respect to the first argument.
struct ValueGrad {
  double value = 0.0;
  Image grad;
};

// Mean SSIM over pixels and channels. Local statistics use a normalized
// Gaussian window with zero padding ("same" size), as in 3DGS training code.
double ssim(const Image& a, const Image& b, const SsimParams& params = {});
ValueGrad ssim_with_grad(const Image& a, const Image& b, const SsimParams& params = {});

// 1 - SSIM.
double d_ssim(const Image& a, const Image& b);

inline constexpr double kPsnrIdentical = 99.0;

// 10 log10(1 / MSE); identical images report kPsnrIdentical.
double psnr(const Image& a, const Image& b);

double mean_l1(const Image& a, const Image& b);
ValueGrad mean_l1_with_grad(const Image& a, const Image& b);

// Mean L1 between Sobel gradient-magnitude maps, averaged over a 3-level
// pyramid (full, 1/2, 1/4 by 2x2 box averaging). Requires at least 8x8.
double perceptual_surrogate(const Image& a, const Image& b);
ValueGrad perceptual_surrogate_with_grad(const Image& a, const Image& b);

}  // namespace gamo
