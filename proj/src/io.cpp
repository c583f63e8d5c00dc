#include "gamo/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "gamo/error.hpp"

namespace gamo {

std::uint8_t quantize(double v) {
  const double c = std::clamp(std::isnan(v) ? 0.0 : v, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::lround(c * 255.0));
}

Image to_rgb(const Image& img) {
  if (img.channels() == 3) return img;
  if (img.channels() != 1) throw ShapeError("to_rgb: expected 1 or 3 channels");
  Image out(img.width(), img.height(), 3);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = img.at(x, y);
  return out;
}

void write_ppm(std::ostream& out, const Image& img) {
  const Image rgb = to_rgb(img);
  out << "P6\n" << rgb.width() << ' ' << rgb.height() << "\n255\n";
  std::vector<char> bytes(rgb.size());
  std::span<const double> v = rgb.values();
  for (std::size_t i = 0; i < v.size(); ++i) bytes[i] = static_cast<char>(quantize(v[i]));
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

void save_ppm(const std::string& path, const Image& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write image " + path);
  write_ppm(out, img);
}

namespace {

int read_header_int(std::istream& in) {
  // Skip whitespace and comment lines between header fields.
  for (;;) {
    const int ch = in.peek();
    if (ch == '#') {
      std::string ignored;
      std::getline(in, ignored);
    } else if (ch != EOF && std::isspace(ch)) {
      in.get();
    } else {
      break;
    }
  }
  int value = -1;
  if (!(in >> value)) throw ParseError("ppm: malformed header");
  return value;
}

}  // namespace

Image read_ppm(std::istream& in) {
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || magic[1] != '6') throw ParseError("ppm: expected P6 magic");
  const int w = read_header_int(in);
  const int h = read_header_int(in);
  const int maxval = read_header_int(in);
  if (w < 1 || h < 1 || maxval != 255) throw ParseError("ppm: unsupported size or maxval");
  in.get();  // single whitespace before the raster
  std::vector<unsigned char> bytes(static_cast<std::size_t>(w) * h * 3);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
    throw ParseError("ppm: truncated raster");
  }
  Image img(w, h, 3);
  std::span<double> v = img.values();
  for (std::size_t i = 0; i < bytes.size(); ++i) v[i] = bytes[i] / 255.0;
  return img;
}

Image load_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open image " + path);
  return read_ppm(in);
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::istream& in) {
  KeyValueConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError("config: expected 'key = value' on line " + std::to_string(line_no));
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ParseError("config: empty key on line " + std::to_string(line_no));
    cfg.set(key, trim(line.substr(eq + 1)));
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config " + path);
  return parse(in);
}

void KeyValueConfig::set(const std::string& key, const std::string& value) { entries_[key] = value; }

bool KeyValueConfig::has(const std::string& key) const { return entries_.count(key) != 0; }

const std::string& KeyValueConfig::get(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw ParseError("config: missing key " + key);
  return it->second;
}

}  // namespace gamo
