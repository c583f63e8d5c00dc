#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace gamo {

// Dense width x height x channels grid of doubles, row-major with interleaved
// channels. Used for images, depth maps, opacity maps and diffusion latents.
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels, double fill = 0.0);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  std::size_t size() const { return data_.size(); }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }
  bool empty() const { return data_.empty(); }

  double& at(int x, int y, int c = 0) { return data_[index(x, y, c)]; }
  double at(int x, int y, int c = 0) const { return data_[index(x, y, c)]; }

  std::size_t index(int x, int y, int c = 0) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  bool same_shape(const Image& other) const {
    return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_;
  }

  void fill(double v);
  Image clamped(double lo, double hi) const;

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

// Pixel-space latent: the autoencoder is the identity, so a latent is an image.
using LatentGrid = Image;

// Throws ShapeError naming `what` when the shapes differ.
void require_same_shape(const Image& a, const Image& b, const std::string& what);

// Mean absolute difference over every value.
double mean_abs_diff(const Image& a, const Image& b);

}  // namespace gamo
