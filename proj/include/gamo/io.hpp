#pragma once

// Binary PPM images and `key = value` configuration files.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "gamo/image.hpp"

namespace gamo {

// 8-bit binary PPM (P6). Values are clamped to [0, 1] and rounded to the
// nearest of 256 levels; reading returns level / 255.
void write_ppm(std::ostream& out, const Image& img);
void save_ppm(const std::string& path, const Image& img);
Image read_ppm(std::istream& in);
Image load_ppm(const std::string& path);

// Single-channel images are written as gray RGB.
Image to_rgb(const Image& img);

// 8-bit quantization used by the PPM writer.
std::uint8_t quantize(double v);

// Ordered key/value settings; later assignments override earlier ones.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::istream& in);
  static KeyValueConfig load(const std::string& path);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;
  const std::string& get(const std::string& key) const;
  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
};

}  // namespace gamo
