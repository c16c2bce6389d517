#pragma once

#include <memory>
#include <vector>

#include "akorn/ops.hpp"
#include "akorn/rng.hpp"

namespace akorn {

// A coupling maps the oscillator state to its drive (Jx in the update rule).
// Pass a tape to make the weights trainable graph inputs; pass nullptr for
// plain evaluation.
struct Coupling {
  virtual ~Coupling() = default;
  virtual Var operator()(Tape* tape, const Var& x) = 0;
  virtual std::vector<Param*> params() = 0;
};

// All-to-all coupling on states shaped [C,N]. Scalar mode learns one weight
// per channel pair; full mode learns an N x N block per pair.
struct DenseCoupling final : Coupling {
  enum class Kind { scalar, full };

  DenseCoupling(Kind kind, int64_t channels, int64_t n, Rng& rng);

  Var operator()(Tape* tape, const Var& x) override;
  std::vector<Param*> params() override { return {&weight}; }

  Kind kind;
  int64_t channels, n;
  Param weight;  // scalar: [C,C]; full: [C*N, C*N]
};

// Convolutional coupling on grids shaped [C,H,W,N]. Patches are gathered
// into rows (out-of-range taps read zero or wrap) and hit with one matmul.
struct ConvCoupling final : Coupling {
  enum class Pad { zeros, circular };

  // learnable kernel; fan-in scaled gaussian init
  ConvCoupling(bool scalar_kernel, int64_t c_out, int64_t c_in, int64_t n,
               int64_t kh, int64_t kw, Pad pad, Rng& rng);
  // fixed scalar kernel, e.g. a smoothing stencil; k is [C_out, C_in, Kh, Kw]
  ConvCoupling(Tensor k, int64_t n, Pad pad);

  Var operator()(Tape* tape, const Var& x) override;
  std::vector<Param*> params() override { return {&weight}; }

  bool scalar_kernel;
  int64_t c_out, c_in, n, kh, kw;
  Pad pad;
  // scalar: [C_out, C_in, Kh, Kw]
  // full:   [C_out*N, C_in*Kh*Kw*N], row c*N+i holds the i-th output
  //         component of channel c, column ((cin*Kh+dh)*Kw+dw)*N+j reads
  //         component j of the tap at offset (dh,dw)
  Param weight;

 private:
  std::shared_ptr<const std::vector<int64_t>> patch_index(int64_t h, int64_t w);
  int64_t cached_h_ = -1, cached_w_ = -1;
  std::shared_ptr<const std::vector<int64_t>> cached_idx_;
};

// Multi-head self-attention coupling on token sequences shaped [L,C,N],
// treated as L tokens of width D = C*N. A learned positional embedding is
// added to the queries and keys only, so the drive stays a weighted sum of
// value-projected states.
struct AttnCoupling final : Coupling {
  AttnCoupling(int64_t channels, int64_t n, int64_t heads, int64_t tokens, Rng& rng);

  Var operator()(Tape* tape, const Var& x) override;
  std::vector<Param*> params() override { return {&wq, &wk, &wv, &wo, &pos}; }

  int64_t channels, n, heads, tokens, dim, head_dim;
  Param wq, wk, wv, wo;  // [D,D], row o holds the weights producing output o
  Param pos;             // [L,D]

 private:
  std::vector<std::shared_ptr<const std::vector<int64_t>>> head_idx_;
};

}  // namespace akorn
