#include "akorn/uptile.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace akorn {

Tensor resize_bilinear(const Tensor& img, int64_t out_h, int64_t out_w) {
  const Shape& s = img.shape();
  detail::require(s.size() == 3, "resize_bilinear: expected [C,H,W]");
  detail::require(out_h >= 1 && out_w >= 1, "resize_bilinear: empty output");
  const int64_t c = s[0], in_h = s[1], in_w = s[2];
  detail::require(in_h >= 1 && in_w >= 1, "resize_bilinear: empty input");

  const double sy = static_cast<double>(in_h) / static_cast<double>(out_h);
  const double sx = static_cast<double>(in_w) / static_cast<double>(out_w);

  std::vector<int64_t> x0s(static_cast<size_t>(out_w)), x1s(static_cast<size_t>(out_w));
  std::vector<double> fxs(static_cast<size_t>(out_w));
  for (int64_t x = 0; x < out_w; ++x) {
    double src = std::max(0.0, (static_cast<double>(x) + 0.5) * sx - 0.5);
    int64_t x0 = std::min(static_cast<int64_t>(src), in_w - 1);
    int64_t x1 = std::min(x0 + 1, in_w - 1);
    x0s[static_cast<size_t>(x)] = x0;
    x1s[static_cast<size_t>(x)] = x1;
    fxs[static_cast<size_t>(x)] = x1 == x0 ? 0.0 : src - static_cast<double>(x0);
  }

  Tensor out(Shape{c, out_h, out_w});
  for (int64_t ch = 0; ch < c; ++ch) {
    const int64_t in_base = ch * in_h * in_w;
    for (int64_t y = 0; y < out_h; ++y) {
      double src = std::max(0.0, (static_cast<double>(y) + 0.5) * sy - 0.5);
      int64_t y0 = std::min(static_cast<int64_t>(src), in_h - 1);
      int64_t y1 = std::min(y0 + 1, in_h - 1);
      double fy = y1 == y0 ? 0.0 : src - static_cast<double>(y0);
      const int64_t r0 = in_base + y0 * in_w, r1 = in_base + y1 * in_w;
      const int64_t out_base = (ch * out_h + y) * out_w;
      for (int64_t x = 0; x < out_w; ++x) {
        const int64_t x0 = x0s[static_cast<size_t>(x)], x1 = x1s[static_cast<size_t>(x)];
        const double fx = fxs[static_cast<size_t>(x)];
        double top = (1.0 - fx) * img[r0 + x0] + fx * img[r0 + x1];
        double bot = (1.0 - fx) * img[r1 + x0] + fx * img[r1 + x1];
        out[out_base + x] = (1.0 - fy) * top + fy * bot;
      }
    }
  }
  return out;
}

Tensor up_tile(const PatchModel& model, const Tensor& image, int64_t patch, int64_t s) {
  const Shape& sh = image.shape();
  detail::require(sh.size() == 3, "up_tile: expected [C,H,W]");
  detail::require(patch >= 1 && s >= 1, "up_tile: patch and scale must be positive");
  detail::require(patch % s == 0,
                  "up_tile: scale " + std::to_string(s) + " must divide patch size " +
                      std::to_string(patch));
  const int64_t c = sh[0], h = sh[1], w = sh[2];
  detail::require(h % patch == 0 && w % patch == 0,
                  "up_tile: patch size must divide the image dimensions");
  if (s == 1) return model(image);

  const int64_t stride = patch / s;
  Tensor big = resize_bilinear(image, h + patch - stride, w + patch - stride);
  const int64_t big_w = w + patch - stride;

  Tensor out;
  int64_t k = 0, oh = 0, ow = 0;
  for (int64_t hi = 0; hi < s; ++hi)
    for (int64_t wi = 0; wi < s; ++wi) {
      Tensor crop(Shape{c, h, w});
      const int64_t off_y = hi * stride, off_x = wi * stride;
      for (int64_t ch = 0; ch < c; ++ch)
        for (int64_t y = 0; y < h; ++y) {
          const int64_t src = (ch * (h + patch - stride) + y + off_y) * big_w + off_x;
          const int64_t dst = (ch * h + y) * w;
          for (int64_t x = 0; x < w; ++x) crop[dst + x] = big[src + x];
        }
      Tensor feat = model(crop);
      detail::require(feat.shape().size() == 3, "up_tile: model output must be [K,h,w]");
      if (hi == 0 && wi == 0) {
        k = feat.shape()[0];
        oh = feat.shape()[1];
        ow = feat.shape()[2];
        detail::require(oh == h / patch && ow == w / patch,
                        "up_tile: model must emit one feature per patch");
        out = Tensor(Shape{k, oh * s, ow * s});
      }
      detail::require(feat.shape() == Shape{k, oh, ow}, "up_tile: inconsistent model output");
      for (int64_t kk = 0; kk < k; ++kk)
        for (int64_t i = 0; i < oh; ++i)
          for (int64_t j = 0; j < ow; ++j)
            out[(kk * oh * s + i * s + hi) * ow * s + j * s + wi] =
                feat[(kk * oh + i) * ow + j];
    }
  return out;
}

}  // namespace akorn
