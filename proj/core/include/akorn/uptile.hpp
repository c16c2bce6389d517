#pragma once

#include <cstdint>
#include <functional>

#include "akorn/tensor.hpp"

namespace akorn {

// image [C,H,W] resampled to [C,out_h,out_w]: source coordinate
// (dst+0.5)*in/out - 0.5, clamped at the edges, corners blended bilinearly.
// An exact integer hit copies the sample bit-for-bit, so resizing to the
// same dimensions is the identity.
Tensor resize_bilinear(const Tensor& img, int64_t out_h, int64_t out_w);

// maps [C,H,W] to a per-patch feature map [K, H/patch, W/patch]
using PatchModel = std::function<Tensor(const Tensor&)>;

// Runs the model on s*s shifted crops (stride patch/s) of a bilinearly
// enlarged copy of the image and interleaves the outputs on an s x s
// subgrid, giving [K, s*H/patch, s*W/patch]. s must divide patch; s=1 is
// the plain model output.
Tensor up_tile(const PatchModel& model, const Tensor& image, int64_t patch, int64_t s);

}  // namespace akorn
