#ifndef MIPLKIT_IMAGE_HPP
#define MIPLKIT_IMAGE_HPP

// RGB image container plus loaders for the two corpus formats:
//   - binary PPM: "P6", whitespace-separated width/height/maxval (maxval must
//     be 255, '#' comments allowed), one whitespace byte, then w*h*3 bytes
//   - raw dump:   "RAWRGB <w> <h>" header, one whitespace byte, then w*h*3 bytes
// Both store row-major RGB triples, one byte per channel.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace miplkit {

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major, 3 bytes per pixel

  std::uint8_t at(int x, int y, int channel) const {
    return pixels[3 * (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                       static_cast<std::size_t>(x)) +
                  static_cast<std::size_t>(channel)];
  }
};

// ITU-R BT.601 full-range conversion, fixed coefficients:
//   Y  =       0.299    R + 0.587    G + 0.114    B
//   Cb = 128 - 0.168736 R - 0.331264 G + 0.5      B
//   Cr = 128 + 0.5      R - 0.418688 G - 0.081312 B
double luma601(const RgbImage& img, int x, int y);
void ycbcr601(const RgbImage& img, int x, int y, double& y_out, double& cb_out,
              double& cr_out);

// Sniffs the format from the leading magic token. Parse problems raise
// ErrorCode::kParse; an unopenable path raises kIo.
RgbImage load_image(std::istream& in, const std::string& name);
RgbImage load_image(const std::string& path);

void save_ppm(const RgbImage& img, const std::string& path);
void save_rawrgb(const RgbImage& img, const std::string& path);

}  // namespace miplkit

#endif  // MIPLKIT_IMAGE_HPP
