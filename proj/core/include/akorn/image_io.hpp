#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace akorn {

// row-major, channel-interleaved, 8 bits per sample
struct ImageU8 {
  int64_t height = 0, width = 0, channels = 1;
  std::vector<uint8_t> pixels;

  ImageU8() = default;
  ImageU8(int64_t h, int64_t w, int64_t c)
      : height(h), width(w), channels(c),
        pixels(static_cast<size_t>(h * w * c), 0) {}

  uint8_t& at(int64_t y, int64_t x, int64_t c = 0) {
    return pixels[static_cast<size_t>((y * width + x) * channels + c)];
  }
  uint8_t at(int64_t y, int64_t x, int64_t c = 0) const {
    return pixels[static_cast<size_t>((y * width + x) * channels + c)];
  }
  bool operator==(const ImageU8&) const = default;
};

// P5 (binary) or P2 (ascii) grayscale, maxval up to 255
ImageU8 read_pgm(const std::string& path);
void write_pgm(const ImageU8& img, const std::string& path);  // P5
void write_ppm(const ImageU8& img, const std::string& path);  // P6, 3 channels

}  // namespace akorn
