#pragma once

#include "akorn/ops.hpp"
#include "akorn/rng.hpp"

namespace akorn {

// Phase-invariant feature map: z_k = sum_i U_ki x_i, m_k = |z_k|, optionally
// followed by a small head g. With scalar blocks (U_ki = u_ki I) the
// magnitudes are unchanged by any rotation applied jointly to all
// oscillators; full blocks trade that invariance for expressiveness.
struct Readout {
  enum class UMode { scalar_block, full };
  enum class Head { identity, linear, relu_linear, mlp_residual };

  // k defaults to channels*n when 0. classes is ignored for Head::identity
  // and Head::mlp_residual's hidden width is k.
  Readout(UMode umode, Head head, int64_t channels, int64_t n, int64_t k,
          int64_t classes, Rng& rng);

  // x: [L,C,N] -> [L,K]
  Var magnitudes(Tape* tape, const Var& x);
  // magnitudes followed by g; Head::identity returns them directly
  Var operator()(Tape* tape, const Var& x);

  std::vector<Param*> params();

  UMode umode;
  Head head;
  int64_t channels, n, k, classes;
  Param u;  // scalar_block: [K,C]; full: [K,C,N,N] with z_k = sum_i U[k,i] x_i
  Param w1, b1, w2, b2, w3, b3;
};

// Oscillator initialization policies.
//   random_sphere: every row drawn uniformly on the unit sphere
//   from_stimulus: row c_i/|c_i|, falling back to random when |c_i| is tiny
//   learned: one trainable unit vector per channel, repeated across tokens
//   mixed: from_stimulus where row_mask says so, random elsewhere
enum class InitMode { random_sphere, from_stimulus, learned, mixed };

// c0: [L,C,N]. row_mask (mixed only): [L*C] entries in {0,1}. emb (learned
// only): a [C,N] parameter. Gradients flow into c0/emb where they are used.
Var init_oscillators(InitMode mode, const Var& c0, Rng& rng, Tape* tape,
                     const std::vector<double>* row_mask = nullptr,
                     Param* emb = nullptr, double eps = 1e-9);

}  // namespace akorn
