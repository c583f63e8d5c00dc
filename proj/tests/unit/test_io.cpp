#include <sstream>

#include "doctest.h"
#include "gamo/error.hpp"
#include "gamo/io.hpp"
#include "helpers.hpp"

using namespace gamo;

TEST_SUITE("io") {

TEST_CASE("PPM writer emits an exact P6 byte stream") {
  Image img(2, 1, 3);
  img.at(0, 0, 0) = 1.0;
  img.at(0, 0, 1) = 0.5;
  img.at(0, 0, 2) = -0.3;
  img.at(1, 0, 0) = 2.0 / 255.0;
  img.at(1, 0, 1) = 1.4;
  img.at(1, 0, 2) = 0.00196;  // 0.4998 levels
  std::ostringstream out;
  write_ppm(out, img);
  const std::string want = std::string("P6\n2 1\n255\n") + '\xff' + '\x80' + '\x00' + '\x02' + '\xff' + '\x00';
  CHECK(out.str() == want);
}

TEST_CASE("PPM round trip is exact on 8-bit levels") {
  Image img = testing::random_image(7, 5, 3, 1);
  for (double& v : img.values()) v = quantize(v) / 255.0;
  std::stringstream s;
  write_ppm(s, img);
  const Image back = read_ppm(s);
  CHECK(back == img);
  std::stringstream again;
  write_ppm(again, back);
  std::stringstream first;
  write_ppm(first, img);
  CHECK(again.str() == first.str());
}

TEST_CASE("PPM reader handles comments and rejects malformed files") {
  std::istringstream c(std::string("P6\n# made by hand\n1 1\n255\n") + "\x01\x02\x03");
  const Image img = read_ppm(c);
  CHECK(img.at(0, 0, 2) == 3.0 / 255.0);
  std::istringstream p3("P3\n1 1\n255\n1 2 3\n");
  CHECK_THROWS_AS(read_ppm(p3), ParseError);
  std::istringstream trunc(std::string("P6\n2 2\n255\n") + "\x01\x02");
  CHECK_THROWS_AS(read_ppm(trunc), ParseError);
  std::istringstream deep("P6\n1 1\n65535\n123456");
  CHECK_THROWS_AS(read_ppm(deep), ParseError);
}

TEST_CASE("single-channel images become gray") {
  Image g(2, 2, 1, 0.25);
  const Image rgb = to_rgb(g);
  CHECK(rgb.channels() == 3);
  CHECK(rgb.at(1, 1, 2) == 0.25);
  CHECK_THROWS_AS(to_rgb(Image(2, 2, 2)), ShapeError);
}

TEST_CASE("key = value files") {
  std::istringstream in("# comment\n seed = 4 \nname=a b  # trailing\n\nseed = 5\n");
  KeyValueConfig kv = KeyValueConfig::parse(in);
  CHECK(kv.get("seed") == "5");
  CHECK(kv.get("name") == "a b");
  CHECK(kv.entries().size() == 2);
  kv.set("seed", "6");
  CHECK(kv.get("seed") == "6");
  CHECK_FALSE(kv.has("other"));
  CHECK_THROWS_AS(kv.get("other"), ParseError);
  std::istringstream bad("seed 4\n");
  CHECK_THROWS_AS(KeyValueConfig::parse(bad), ParseError);
  std::istringstream empty_key(" = 4\n");
  CHECK_THROWS_AS(KeyValueConfig::parse(empty_key), ParseError);
  CHECK_THROWS_AS(KeyValueConfig::load("/nonexistent/cfg.txt"), ParseError);
}

}
