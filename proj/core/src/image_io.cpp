#include "akorn/image_io.hpp"

#include <fstream>
#include <sstream>

#include "akorn/tensor.hpp"

namespace akorn {

namespace {

// next whitespace-delimited token, skipping '#' comment lines
std::string next_token(std::istream& in, const std::string& path) {
  int ch = in.get();
  while (ch != EOF) {
    if (ch == '#') {
      while (ch != EOF && ch != '\n') ch = in.get();
    } else if (std::isspace(ch)) {
      ch = in.get();
    } else {
      break;
    }
  }
  detail::require(ch != EOF, "truncated image header in " + path);
  std::string tok;
  while (ch != EOF && !std::isspace(ch)) {
    tok.push_back(static_cast<char>(ch));
    ch = in.get();
  }
  return tok;
}

int64_t next_int(std::istream& in, const std::string& path) {
  std::string tok = next_token(in, path);
  try {
    size_t used = 0;
    int64_t v = std::stoll(tok, &used);
    detail::require(used == tok.size(), "bad integer in image header");
    return v;
  } catch (const std::invalid_argument&) {
    detail::fail("bad integer '" + tok + "' in image header of " + path);
  }
}

}  // namespace

ImageU8 read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  detail::require(in.good(), "cannot open image " + path);
  std::string magic = next_token(in, path);
  detail::require(magic == "P5" || magic == "P2",
                  "unsupported image format '" + magic + "' in " + path);
  int64_t w = next_int(in, path);
  int64_t h = next_int(in, path);
  int64_t maxval = next_int(in, path);
  detail::require(w > 0 && h > 0, "bad image dimensions in " + path);
  detail::require(maxval > 0 && maxval <= 255, "only 8-bit grayscale supported: " + path);

  ImageU8 img(h, w, 1);
  if (magic == "P5") {
    // the header ends with exactly one whitespace byte before the raster
    for (auto& px : img.pixels) {
      int ch = in.get();
      detail::require(ch != EOF, "truncated pixel data in " + path);
      px = static_cast<uint8_t>(ch);
    }
  } else {
    for (auto& px : img.pixels) {
      int64_t v = next_int(in, path);
      detail::require(v >= 0 && v <= maxval, "pixel out of range in " + path);
      px = static_cast<uint8_t>(v);
    }
  }
  return img;
}

void write_pgm(const ImageU8& img, const std::string& path) {
  detail::require(img.channels == 1, "write_pgm: needs a single-channel image");
  detail::require(img.height > 0 && img.width > 0 &&
                      img.pixels.size() == static_cast<size_t>(img.height * img.width),
                  "write_pgm: inconsistent image");
  std::ofstream out(path, std::ios::binary);
  detail::require(out.good(), "cannot write image " + path);
  out << "P5\n" << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
  detail::require(out.good(), "short write to " + path);
}

void write_ppm(const ImageU8& img, const std::string& path) {
  detail::require(img.channels == 3, "write_ppm: needs a three-channel image");
  detail::require(img.height > 0 && img.width > 0 &&
                      img.pixels.size() == static_cast<size_t>(img.height * img.width * 3),
                  "write_ppm: inconsistent image");
  std::ofstream out(path, std::ios::binary);
  detail::require(out.good(), "cannot write image " + path);
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
  detail::require(out.good(), "short write to " + path);
}

}  // namespace akorn
