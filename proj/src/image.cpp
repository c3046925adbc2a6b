#include "image.hpp"

#include <cctype>
#include <fstream>
#include <limits>

#include "errors.hpp"

namespace miplkit {

double luma601(const RgbImage& img, int x, int y) {
  return 0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) +
         0.114 * img.at(x, y, 2);
}

void ycbcr601(const RgbImage& img, int x, int y, double& y_out, double& cb_out,
              double& cr_out) {
  double r = img.at(x, y, 0);
  double g = img.at(x, y, 1);
  double b = img.at(x, y, 2);
  y_out = 0.299 * r + 0.587 * g + 0.114 * b;
  cb_out = 128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b;
  cr_out = 128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b;
}

namespace {

// next integer in a PPM header, skipping whitespace and '#' comments
int ppm_int(std::istream& in, const std::string& name) {
  int ch = in.get();
  for (;;) {
    if (ch == '#') {
      while (ch != EOF && ch != '\n') ch = in.get();
    } else if (ch != EOF && std::isspace(static_cast<unsigned char>(ch))) {
      ch = in.get();
    } else {
      break;
    }
  }
  if (ch == EOF || !std::isdigit(static_cast<unsigned char>(ch))) {
    fail(ErrorCode::kParse, name + ": malformed PPM header");
  }
  long value = 0;
  while (ch != EOF && std::isdigit(static_cast<unsigned char>(ch))) {
    value = value * 10 + (ch - '0');
    if (value > (1L << 24)) {
      fail(ErrorCode::kParse, name + ": PPM header value too large");
    }
    ch = in.get();
  }
  if (ch != EOF) in.unget();
  return static_cast<int>(value);
}

void read_pixels(std::istream& in, const std::string& name, RgbImage& img) {
  if (img.width < 1 || img.height < 1) {
    fail(ErrorCode::kParse, name + ": image dimensions must be >= 1");
  }
  int sep = in.get();
  if (sep == EOF || !std::isspace(static_cast<unsigned char>(sep))) {
    fail(ErrorCode::kParse, name + ": missing separator before pixel data");
  }
  img.pixels.resize(static_cast<std::size_t>(img.width) *
                    static_cast<std::size_t>(img.height) * 3);
  in.read(reinterpret_cast<char*>(img.pixels.data()),
          static_cast<std::streamsize>(img.pixels.size()));
  if (static_cast<std::size_t>(in.gcount()) != img.pixels.size()) {
    fail(ErrorCode::kParse, name + ": truncated pixel data");
  }
}

}  // namespace

RgbImage load_image(std::istream& in, const std::string& name) {
  std::string magic;
  if (!(in >> magic)) fail(ErrorCode::kParse, name + ": empty image file");
  RgbImage img;
  if (magic == "P6") {
    img.width = ppm_int(in, name);
    img.height = ppm_int(in, name);
    int maxval = ppm_int(in, name);
    if (maxval != 255) {
      fail(ErrorCode::kParse,
           name + ": unsupported PPM maxval " + std::to_string(maxval));
    }
    read_pixels(in, name, img);
  } else if (magic == "RAWRGB") {
    if (!(in >> img.width >> img.height)) {
      fail(ErrorCode::kParse, name + ": malformed RAWRGB header");
    }
    read_pixels(in, name, img);
  } else {
    fail(ErrorCode::kParse, name + ": unrecognized image format");
  }
  return img;
}

RgbImage load_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path);
  return load_image(in, path);
}

void save_ppm(const RgbImage& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot open " + path + " for writing");
  out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
  if (!out) fail(ErrorCode::kIo, "write to " + path + " failed");
}

void save_rawrgb(const RgbImage& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot open " + path + " for writing");
  out << "RAWRGB " << img.width << ' ' << img.height << '\n';
  out.write(reinterpret_cast<const char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
  if (!out) fail(ErrorCode::kIo, "write to " + path + " failed");
}

}  // namespace miplkit
