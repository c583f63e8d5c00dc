#include "gamo/image.hpp"

#include <algorithm>

#include "gamo/error.hpp"
#include "gamo/simd/kernels.hpp"

namespace gamo {

Image::Image(int width, int height, int channels, double fill)
    : width_(width), height_(height), channels_(channels) {
  if (width < 0 || height < 0 || channels < 0) throw InvalidArgument("Image: negative dimension");
  data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

void Image::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Image Image::clamped(double lo, double hi) const {
  Image out = *this;
  for (double& v : out.data_) v = std::clamp(v, lo, hi);
  return out;
}

void require_same_shape(const Image& a, const Image& b, const std::string& what) {
  if (!a.same_shape(b)) {
    throw ShapeError(what + ": shape mismatch (" + std::to_string(a.width()) + "x" +
                     std::to_string(a.height()) + "x" + std::to_string(a.channels()) + " vs " +
                     std::to_string(b.width()) + "x" + std::to_string(b.height()) + "x" +
                     std::to_string(b.channels()) + ")");
  }
}

double mean_abs_diff(const Image& a, const Image& b) {
  require_same_shape(a, b, "mean_abs_diff");
  if (a.empty()) return 0.0;
  return simd::sum_abs_diff(a.values(), b.values()) / static_cast<double>(a.size());
}

}  // namespace gamo
