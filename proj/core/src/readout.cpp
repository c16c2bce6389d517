#include "akorn/readout.hpp"

#include <cmath>

namespace akorn {

Readout::Readout(UMode umode_, Head head_, int64_t channels_, int64_t n_, int64_t k_,
                 int64_t classes_, Rng& rng)
    : umode(umode_), head(head_), channels(channels_), n(n_),
      k(k_ > 0 ? k_ : channels_ * n_), classes(classes_) {
  if (umode == UMode::scalar_block) {
    u = Param("readout.u",
              rng.gaussian_tensor({k, channels}, 1.0 / std::sqrt(static_cast<double>(channels))));
  } else {
    double s = 1.0 / std::sqrt(static_cast<double>(channels * n));
    u = Param("readout.u", rng.gaussian_tensor({k, channels, n, n}, s));
  }
  double sk = 1.0 / std::sqrt(static_cast<double>(k));
  switch (head) {
    case Head::identity:
      break;
    case Head::linear:
    case Head::relu_linear:
      detail::require(classes >= 1, "Readout: head needs a class count");
      w1 = Param("readout.w1", rng.gaussian_tensor({classes, k}, sk));
      b1 = Param("readout.b1", Tensor(Shape{classes}));
      break;
    case Head::mlp_residual:
      detail::require(classes >= 1, "Readout: head needs a class count");
      w1 = Param("readout.w1", rng.gaussian_tensor({k, k}, sk));
      b1 = Param("readout.b1", Tensor(Shape{k}));
      w2 = Param("readout.w2", rng.gaussian_tensor({k, k}, sk));
      b2 = Param("readout.b2", Tensor(Shape{k}));
      w3 = Param("readout.w3", rng.gaussian_tensor({classes, k}, sk));
      b3 = Param("readout.b3", Tensor(Shape{classes}));
      break;
  }
}

Var Readout::magnitudes(Tape* tape, const Var& x) {
  detail::require(x.shape().size() == 3 && x.shape()[1] == channels && x.shape()[2] == n,
                  "Readout: expected state [L,C,N], got " + shape_str(x.shape()));
  const int64_t tokens = x.shape()[0];
  Var uu = bind(tape, u);
  Var z;
  if (umode == UMode::scalar_block) {
    // z[l,k,:] = sum_c u[k,c] x[l,c,:]
    Var xr = reshape(permute(x, {1, 0, 2}), {channels, tokens * n});
    z = permute(reshape(matmul(uu, xr), {k, tokens, n}), {1, 0, 2});
  } else {
    Var umat = reshape(permute(uu, {0, 2, 1, 3}), {k * n, channels * n});
    Var flat = reshape(x, {tokens, channels * n});
    z = reshape(matmul_nt(flat, umat), {tokens, k, n});
  }
  return rows_norm(z, 1e-12);
}

Var Readout::operator()(Tape* tape, const Var& x) {
  Var m = magnitudes(tape, x);
  switch (head) {
    case Head::identity:
      return m;
    case Head::linear:
      return add_rowvec(matmul_nt(m, bind(tape, w1)), bind(tape, b1));
    case Head::relu_linear:
      return add_rowvec(matmul_nt(relu(m), bind(tape, w1)), bind(tape, b1));
    case Head::mlp_residual: {
      Var h = relu(add_rowvec(matmul_nt(m, bind(tape, w1)), bind(tape, b1)));
      h = add(h, relu(add_rowvec(matmul_nt(h, bind(tape, w2)), bind(tape, b2))));
      return add_rowvec(matmul_nt(h, bind(tape, w3)), bind(tape, b3));
    }
  }
  detail::fail("Readout: unknown head");
}

std::vector<Param*> Readout::params() {
  switch (head) {
    case Head::identity:
      return {&u};
    case Head::linear:
    case Head::relu_linear:
      return {&u, &w1, &b1};
    case Head::mlp_residual:
      return {&u, &w1, &b1, &w2, &b2, &w3, &b3};
  }
  detail::fail("Readout: unknown head");
}

Var init_oscillators(InitMode mode, const Var& c0, Rng& rng, Tape* tape,
                     const std::vector<double>* row_mask, Param* emb, double eps) {
  const Shape& s = c0.shape();
  detail::require(s.size() == 3, "init_oscillators: stimulus must be [L,C,N]");
  const int64_t tokens = s[0], channels = s[1], nn = s[2];
  const int64_t rows = tokens * channels;

  if (mode == InitMode::random_sphere) return Var(rng.sphere_tensor(s));

  if (mode == InitMode::learned) {
    detail::require(emb != nullptr && emb->value.shape() == Shape{channels, nn},
                    "init_oscillators: learned mode needs a [C,N] parameter");
    auto idx = std::make_shared<std::vector<int64_t>>();
    idx->reserve(static_cast<size_t>(rows * nn));
    for (int64_t l = 0; l < tokens; ++l)
      for (int64_t i = 0; i < channels * nn; ++i) idx->push_back(i);
    return normalize(take(bind(tape, *emb), idx, s), eps);
  }

  // from_stimulus / mixed: per-row blend of the normalized stimulus and a
  // random direction. Rows whose stimulus is numerically zero always fall
  // back to the random side.
  Tensor use_stim(Shape{tokens, channels});
  const Tensor& cv = c0.value();
  for (int64_t r = 0; r < rows; ++r) {
    double ss = 0.0;
    for (int64_t j = 0; j < nn; ++j) ss += cv[r * nn + j] * cv[r * nn + j];
    double want = 1.0;
    if (mode == InitMode::mixed) {
      detail::require(row_mask && static_cast<int64_t>(row_mask->size()) == rows,
                      "init_oscillators: mixed mode needs a [L*C] row mask");
      want = (*row_mask)[static_cast<size_t>(r)];
      detail::require(want == 0.0 || want == 1.0, "init_oscillators: mask entries must be 0/1");
    }
    use_stim[r] = (std::sqrt(ss) >= eps) ? want : 0.0;
  }
  Tensor use_rand(Shape{tokens, channels});
  for (int64_t r = 0; r < rows; ++r) use_rand[r] = 1.0 - use_stim[r];

  Var stim_part = rows_scale(normalize(c0, eps), Var(use_stim));
  Var rand_part = rows_scale(Var(rng.sphere_tensor(s)), Var(use_rand));
  return add(stim_part, rand_part);
}

}  // namespace akorn
