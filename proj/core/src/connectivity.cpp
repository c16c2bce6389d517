#include "akorn/connectivity.hpp"

#include <cmath>

namespace akorn {

// ---------------------------------------------------------------------------
// dense

DenseCoupling::DenseCoupling(Kind kind_, int64_t channels_, int64_t n_, Rng& rng)
    : kind(kind_), channels(channels_), n(n_) {
  detail::require(channels >= 1 && n >= 1, "DenseCoupling: bad sizes");
  if (kind == Kind::scalar) {
    weight = Param("dense.weight",
                   rng.gaussian_tensor({channels, channels},
                                       1.0 / std::sqrt(static_cast<double>(channels))));
  } else {
    int64_t d = channels * n;
    weight = Param("dense.weight",
                   rng.gaussian_tensor({d, d}, 1.0 / std::sqrt(static_cast<double>(d))));
  }
}

Var DenseCoupling::operator()(Tape* tape, const Var& x) {
  detail::require(x.shape() == Shape{channels, n},
                  "DenseCoupling: expected state [C,N], got " + shape_str(x.shape()));
  Var w = bind(tape, weight);
  if (kind == Kind::scalar) return matmul(w, x);
  Var flat = reshape(x, {1, channels * n});
  return reshape(matmul_nt(flat, w), {channels, n});
}

// ---------------------------------------------------------------------------
// convolutional

ConvCoupling::ConvCoupling(bool scalar_kernel_, int64_t c_out_, int64_t c_in_,
                           int64_t n_, int64_t kh_, int64_t kw_, Pad pad_, Rng& rng)
    : scalar_kernel(scalar_kernel_), c_out(c_out_), c_in(c_in_), n(n_), kh(kh_),
      kw(kw_), pad(pad_) {
  detail::require(kh >= 1 && kw >= 1 && kh % 2 == 1 && kw % 2 == 1,
                  "ConvCoupling: kernel sides must be odd");
  double fan_in = static_cast<double>(c_in * kh * kw * (scalar_kernel ? 1 : n));
  if (scalar_kernel) {
    weight = Param("conv.weight",
                   rng.gaussian_tensor({c_out, c_in, kh, kw}, 1.0 / std::sqrt(fan_in)));
  } else {
    weight = Param("conv.weight", rng.gaussian_tensor({c_out * n, c_in * kh * kw * n},
                                                      1.0 / std::sqrt(fan_in)));
  }
}

ConvCoupling::ConvCoupling(Tensor k, int64_t n_, Pad pad_)
    : scalar_kernel(true), n(n_), pad(pad_) {
  detail::require(k.ndim() == 4, "ConvCoupling: fixed kernel must be [C_out,C_in,Kh,Kw]");
  c_out = k.dim(0);
  c_in = k.dim(1);
  kh = k.dim(2);
  kw = k.dim(3);
  detail::require(kh % 2 == 1 && kw % 2 == 1, "ConvCoupling: kernel sides must be odd");
  weight = Param("conv.weight", std::move(k));
}

std::shared_ptr<const std::vector<int64_t>> ConvCoupling::patch_index(int64_t h, int64_t w) {
  if (h == cached_h_ && w == cached_w_) return cached_idx_;
  const int64_t ph = kh / 2, pw = kw / 2;
  auto idx = std::make_shared<std::vector<int64_t>>();
  // scalar rows iterate (h,w,n) x (cin,dh,dw); full rows iterate (h,w) x
  // (cin,dh,dw,n). Either way the source element is x[cin, h', w', n].
  const int64_t inner_n = scalar_kernel ? 1 : n;
  const int64_t outer_n = scalar_kernel ? n : 1;
  idx->reserve(static_cast<size_t>(h * w * n * c_in * kh * kw));
  for (int64_t y = 0; y < h; ++y)
    for (int64_t x0 = 0; x0 < w; ++x0)
      for (int64_t no = 0; no < outer_n; ++no)
        for (int64_t ci = 0; ci < c_in; ++ci)
          for (int64_t dh = 0; dh < kh; ++dh)
            for (int64_t dw = 0; dw < kw; ++dw)
              for (int64_t ni = 0; ni < inner_n; ++ni) {
                int64_t sy = y + dh - ph, sx = x0 + dw - pw;
                if (pad == Pad::circular) {
                  sy = (sy % h + h) % h;
                  sx = (sx % w + w) % w;
                } else if (sy < 0 || sy >= h || sx < 0 || sx >= w) {
                  idx->push_back(-1);
                  continue;
                }
                int64_t comp = scalar_kernel ? no : ni;
                idx->push_back(((ci * h + sy) * w + sx) * n + comp);
              }
  cached_h_ = h;
  cached_w_ = w;
  cached_idx_ = idx;
  return cached_idx_;
}

Var ConvCoupling::operator()(Tape* tape, const Var& x) {
  detail::require(x.shape().size() == 4 && x.shape()[0] == c_in && x.shape()[3] == n,
                  "ConvCoupling: expected state [C,H,W,N], got " + shape_str(x.shape()));
  const int64_t h = x.shape()[1], w = x.shape()[2];
  Var wt = bind(tape, weight);
  auto idx = patch_index(h, w);
  if (scalar_kernel) {
    Var patches = take(x, idx, {h * w * n, c_in * kh * kw});
    Var k2 = reshape(wt, {c_out, c_in * kh * kw});
    Var out = matmul_nt(patches, k2);                    // [H*W*N, C_out]
    out = permute(reshape(out, {h, w, n, c_out}), {3, 0, 1, 2});
    return out;
  }
  Var patches = take(x, idx, {h * w, c_in * kh * kw * n});
  Var out = matmul_nt(patches, wt);                      // [H*W, C_out*N]
  out = permute(reshape(out, {h, w, c_out, n}), {2, 0, 1, 3});
  return out;
}

// ---------------------------------------------------------------------------
// attention

AttnCoupling::AttnCoupling(int64_t channels_, int64_t n_, int64_t heads_,
                           int64_t tokens_, Rng& rng)
    : channels(channels_), n(n_), heads(heads_), tokens(tokens_),
      dim(channels_ * n_), head_dim(dim / heads_) {
  detail::require(heads >= 1 && dim % heads == 0,
                  "AttnCoupling: head count must divide C*N");
  double s = 1.0 / std::sqrt(static_cast<double>(dim));
  wq = Param("attn.wq", rng.gaussian_tensor({dim, dim}, s));
  wk = Param("attn.wk", rng.gaussian_tensor({dim, dim}, s));
  wv = Param("attn.wv", rng.gaussian_tensor({dim, dim}, s));
  wo = Param("attn.wo", rng.gaussian_tensor({dim, dim}, s));
  pos = Param("attn.pos", rng.gaussian_tensor({tokens, dim}, 0.02));
  head_idx_.reserve(static_cast<size_t>(heads));
  for (int64_t hd = 0; hd < heads; ++hd) {
    auto idx = std::make_shared<std::vector<int64_t>>();
    idx->reserve(static_cast<size_t>(tokens * head_dim));
    for (int64_t i = 0; i < tokens * head_dim; ++i) idx->push_back(hd * tokens * head_dim + i);
    head_idx_.push_back(std::move(idx));
  }
}

Var AttnCoupling::operator()(Tape* tape, const Var& x) {
  detail::require(x.shape() == Shape{tokens, channels, n},
                  "AttnCoupling: expected state [L,C,N], got " + shape_str(x.shape()));
  Var flat = reshape(x, {tokens, dim});
  Var xp = add(flat, bind(tape, pos));
  Var q = matmul_nt(xp, bind(tape, wq));
  Var k = matmul_nt(xp, bind(tape, wk));
  Var v = matmul_nt(flat, bind(tape, wv));

  auto split = [&](const Var& m) {
    // [L, D] -> [H, L, Dh] so each head is one contiguous block
    return permute(reshape(m, {tokens, heads, head_dim}), {1, 0, 2});
  };
  Var qh = split(q), kh_ = split(k), vh = split(v);

  const double att_scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
  std::vector<Var> ctx;
  ctx.reserve(static_cast<size_t>(heads));
  for (int64_t hd = 0; hd < heads; ++hd) {
    const auto& idx = head_idx_[static_cast<size_t>(hd)];
    Var qs = take(qh, idx, {tokens, head_dim});
    Var ks = take(kh_, idx, {tokens, head_dim});
    Var vs = take(vh, idx, {tokens, head_dim});
    Var att = softmax(scale(matmul_nt(qs, ks), att_scale), -1);
    ctx.push_back(matmul(att, vs));
  }
  Var merged = reshape(concat0(ctx), {heads, tokens, head_dim});
  merged = reshape(permute(merged, {1, 0, 2}), {tokens, dim});
  Var out = matmul_nt(merged, bind(tape, wo));
  return reshape(out, {tokens, channels, n});
}

}  // namespace akorn
