#include <unistd.h>

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "errors.hpp"
#include "image.hpp"

using namespace miplkit;

namespace {

RgbImage tiny_image() {
  RgbImage img;
  img.width = 2;
  img.height = 2;
  img.pixels = {10, 20, 30, 40, 50, 60, 70, 80, 90, 100, 110, 120};
  return img;
}

RgbImage solid(int r, int g, int b) {
  RgbImage img;
  img.width = 1;
  img.height = 1;
  img.pixels = {static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g),
                static_cast<std::uint8_t>(b)};
  return img;
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    static std::atomic<int> counter{0};
    path = std::filesystem::temp_directory_path() /
           ("miplkit_img_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

}  // namespace

TEST_CASE("ppm save/load round-trip preserves every byte") {
  TempDir tmp;
  RgbImage img = tiny_image();
  std::string p = tmp.file("a.ppm");
  save_ppm(img, p);
  RgbImage back = load_image(p);
  CHECK(back.width == 2);
  CHECK(back.height == 2);
  CHECK(back.pixels == img.pixels);
}

TEST_CASE("rawrgb save/load round-trip preserves every byte") {
  TempDir tmp;
  RgbImage img = tiny_image();
  std::string p = tmp.file("a.raw");
  save_rawrgb(img, p);
  RgbImage back = load_image(p);
  CHECK(back.width == 2);
  CHECK(back.height == 2);
  CHECK(back.pixels == img.pixels);
}

TEST_CASE("ppm comments and whitespace are tolerated in the header") {
  std::string pixels(12, '\x42');
  std::string text = "P6\n# a comment\n 2 # inline\n2\n# more\n255\n" + pixels;
  std::istringstream is(text);
  RgbImage img = load_image(is, "mem");
  CHECK(img.width == 2);
  CHECK(img.height == 2);
  CHECK(img.pixels[0] == 0x42);
}

TEST_CASE("ppm rejects maxval other than 255") {
  std::string text = "P6\n2 2\n65535\n" + std::string(24, 'x');
  std::istringstream is(text);
  try {
    load_image(is, "mem");
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kParse);
    CHECK(std::string(e.what()).find("maxval") != std::string::npos);
  }
}

TEST_CASE("ppm rejects truncated pixel data") {
  std::string text = "P6\n2 2\n255\n" + std::string(11, 'x');  // needs 12
  std::istringstream is(text);
  try {
    load_image(is, "mem");
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kParse);
  }
}

TEST_CASE("rawrgb rejects bad dimensions") {
  std::istringstream is("RAWRGB 0 2\n");
  CHECK_THROWS_AS(load_image(is, "mem"), Error);
}

TEST_CASE("load_image rejects unknown magic") {
  std::istringstream is("P5\n2 2\n255\nxxxx");
  CHECK_THROWS_AS(load_image(is, "mem"), Error);
}

TEST_CASE("load_image missing file is kIo") {
  try {
    load_image("/nonexistent/img.ppm");
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kIo);
  }
}

TEST_CASE("luma and ycbcr follow BT.601 full range") {
  // oracles from Y = .299R+.587G+.114B, Cb = 128-.168736R-.331264G+.5B,
  // Cr = 128+.5R-.418688G-.081312B
  double y = 0.0, cb = 0.0, cr = 0.0;

  ycbcr601(solid(255, 0, 0), 0, 0, y, cb, cr);
  CHECK(y == doctest::Approx(76.24499999999999).epsilon(1e-15));
  CHECK(cb == doctest::Approx(84.97232).epsilon(1e-15));
  CHECK(cr == doctest::Approx(255.5).epsilon(1e-15));

  ycbcr601(solid(128, 128, 128), 0, 0, y, cb, cr);
  CHECK(y == doctest::Approx(128.0).epsilon(1e-14));
  CHECK(cb == doctest::Approx(128.0).epsilon(1e-14));
  CHECK(cr == doctest::Approx(128.0).epsilon(1e-14));

  RgbImage teal = solid(40, 200, 120);
  ycbcr601(teal, 0, 0, y, cb, cr);
  CHECK(y == doctest::Approx(143.04).epsilon(1e-14));
  CHECK(cb == doctest::Approx(114.99776).epsilon(1e-14));
  CHECK(cr == doctest::Approx(54.50496).epsilon(1e-14));

  CHECK(luma601(teal, 0, 0) == y);
}

TEST_CASE("at() addresses pixels row-major with channel last") {
  RgbImage img = tiny_image();
  CHECK(img.at(0, 0, 0) == 10);
  CHECK(img.at(1, 0, 2) == 60);
  CHECK(img.at(0, 1, 1) == 80);
  CHECK(img.at(1, 1, 0) == 100);
}
