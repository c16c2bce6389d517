#include "akorn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace akorn {

namespace {

Tape* tape_of(const Var& a) {
  detail::require(a.defined(), "op on an undefined Var");
  return a.on_tape() ? a.tape() : nullptr;
}

Tape* joint_tape(const Var& a, const Var& b) {
  Tape* ta = tape_of(a);
  Tape* tb = tape_of(b);
  if (ta && tb) detail::require(ta == tb, "operands live on different tapes");
  return ta ? ta : tb;
}

void require_same_shape(const Var& a, const Var& b, const char* op) {
  detail::require(a.shape() == b.shape(),
                  std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                      " vs " + shape_str(b.shape()));
}

int64_t row_count(const Tensor& t) {
  detail::require(t.ndim() >= 1, "trailing-axis op needs rank >= 1");
  return t.numel() / t.dim(-1);
}

Shape drop_last(const Shape& s) { return Shape(s.begin(), s.end() - 1); }

}  // namespace

Var add(const Var& a, const Var& b) {
  require_same_shape(a, b, "add");
  Tape* t = joint_tape(a, b);
  Tensor out(a.shape());
  const double* pa = a.value().data();
  const double* pb = b.value().data();
  double* po = out.data();
  for (int64_t i = 0; i < out.numel(); ++i) po[i] = pa[i] + pb[i];
  if (!t) return Var(std::move(out));
  return t->emit(std::move(out), [a, b](Tape& tp, const Tensor& g) {
    tp.accumulate(a, g);
    tp.accumulate(b, g);
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a, b, "sub");
  Tape* t = joint_tape(a, b);
  Tensor out(a.shape());
  const double* pa = a.value().data();
  const double* pb = b.value().data();
  double* po = out.data();
  for (int64_t i = 0; i < out.numel(); ++i) po[i] = pa[i] - pb[i];
  if (!t) return Var(std::move(out));
  return t->emit(std::move(out), [a, b](Tape& tp, const Tensor& g) {
    tp.accumulate(a, g);
    Tensor gb(g.shape());
    for (int64_t i = 0; i < g.numel(); ++i) gb[i] = -g[i];
    tp.accumulate(b, gb);
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape(a, b, "mul");
  Tape* t = joint_tape(a, b);
  Tensor out(a.shape());
  const double* pa = a.value().data();
  const double* pb = b.value().data();
  double* po = out.data();
  for (int64_t i = 0; i < out.numel(); ++i) po[i] = pa[i] * pb[i];
  if (!t) return Var(std::move(out));
  return t->emit(std::move(out), [a, b](Tape& tp, const Tensor& g) {
    if (a.on_tape()) {
      Tensor ga(g.shape());
      const double* pb2 = b.value().data();
      for (int64_t i = 0; i < g.numel(); ++i) ga[i] = g[i] * pb2[i];
      tp.accumulate(a, ga);
    }
    if (b.on_tape()) {
      Tensor gb(g.shape());
      const double* pa2 = a.value().data();
      for (int64_t i = 0; i < g.numel(); ++i) gb[i] = g[i] * pa2[i];
      tp.accumulate(b, gb);
    }
  });
}

Var scale(const Var& a, double c) {
  Tape* t = tape_of(a);
  Tensor out(a.shape());
  const double* pa = a.value().data();
  double* po = out.data();
  for (int64_t i = 0; i < out.numel(); ++i) po[i] = c * pa[i];
  if (!t) return Var(std::move(out));
  return t->emit(std::move(out), [a, c](Tape& tp, const Tensor& g) {
    Tensor ga(g.shape());
    for (int64_t i = 0; i < g.numel(); ++i) ga[i] = c * g[i];
    tp.accumulate(a, ga);
  });
}

Var scalar_mul(const Var& s, const Var& a) {
  detail::require(s.value().numel() == 1, "scalar_mul: s must have one element");
  Tape* t = joint_tape(s, a);
  double sv = s.value()[0];
  Tensor out(a.shape());
  const double* pa = a.value().data();
  double* po = out.data();
  for (int64_t i = 0; i < out.numel(); ++i) po[i] = sv * pa[i];
  if (!t) return Var(std::move(out));
  return t->emit(std::move(out), [s, a, sv](Tape& tp, const Tensor& g) {
    if (s.on_tape()) {
      double acc = 0.0;
      const double* pa2 = a.value().data();
      for (int64_t i = 0; i < g.numel(); ++i) acc += g[i] * pa2[i];
      Tensor gs(s.shape());
      gs[0] = acc;
      tp.accumulate(s, gs);
    }
    if (a.on_tape()) {
      Tensor ga(g.shape());
      for (int64_t i = 0; i < g.numel(); ++i) ga[i] = sv * g[i];
      tp.accumulate(a, ga);
    }
  });
}

Var relu(const Var& a) {
  Tape* t = tape_of(a);
  Tensor out(a.shape());
  const double* pa = a.value().data();
  double* po = out.data();
  for (int64_t i = 0; i < out.numel(); ++i) po[i] = pa[i] > 0.0 ? pa[i] : 0.0;
  if (!t) return Var(std::move(out));
  return t->emit(std::move(out), [a](Tape& tp, const Tensor& g) {
    Tensor ga(g.shape());
    const double* pa2 = a.value().data();
    for (int64_t i = 0; i < g.numel(); ++i) ga[i] = pa2[i] > 0.0 ? g[i] : 0.0;
    tp.accumulate(a, ga);
  });
}

Var softplus(const Var& a) {
  Tape* t = tape_of(a);
  Tensor out(a.shape());
  const double* pa = a.value().data();
  double* po = out.data();
  for (int64_t i = 0; i < out.numel(); ++i) {
    double x = pa[i];
    po[i] = x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
  }
  if (!t) return Var(std::move(out));
  return t->emit(std::move(out), [a](Tape& tp, const Tensor& g) {
    Tensor ga(g.shape());
    const double* pa2 = a.value().data();
    for (int64_t i = 0; i < g.numel(); ++i) ga[i] = g[i] / (1.0 + std::exp(-pa2[i]));
    tp.accumulate(a, ga);
  });
}

Var reshape(const Var& a, Shape s) {
  Tape* t = tape_of(a);
  Tensor out = a.value().reshaped(std::move(s));
  if (!t) return Var(std::move(out));
  Shape orig = a.shape();
  return t->emit(std::move(out), [a, orig](Tape& tp, const Tensor& g) {
    tp.accumulate(a, g.reshaped(orig));
  });
}

Tensor permute_tensor(const Tensor& t, const std::vector<int64_t>& axes) {
  int64_t nd = t.ndim();
  detail::require(static_cast<int64_t>(axes.size()) == nd, "permute: axes rank mismatch");
  std::vector<bool> seen(static_cast<size_t>(nd), false);
  for (int64_t ax : axes) {
    detail::require(ax >= 0 && ax < nd && !seen[static_cast<size_t>(ax)],
                    "permute: invalid axes");
    seen[static_cast<size_t>(ax)] = true;
  }
  Shape out_shape(static_cast<size_t>(nd));
  for (int64_t j = 0; j < nd; ++j) out_shape[j] = t.shape()[axes[j]];
  Tensor out(out_shape);
  if (t.numel() == 0) return out;
  if (nd == 0) {
    out[0] = t[0];
    return out;
  }
  std::vector<int64_t> istr(static_cast<size_t>(nd), 1);
  for (int64_t i = nd - 2; i >= 0; --i) istr[i] = istr[i + 1] * t.shape()[i + 1];
  std::vector<int64_t> step(static_cast<size_t>(nd));
  for (int64_t j = 0; j < nd; ++j) step[j] = istr[axes[j]];
  std::vector<int64_t> idx(static_cast<size_t>(nd), 0);
  const double* src = t.data();
  double* dst = out.data();
  int64_t iflat = 0;
  for (int64_t o = 0; o < t.numel(); ++o) {
    dst[o] = src[iflat];
    for (int64_t j = nd - 1; j >= 0; --j) {
      ++idx[j];
      iflat += step[j];
      if (idx[j] < out_shape[j]) break;
      idx[j] = 0;
      iflat -= step[j] * out_shape[j];
    }
  }
  return out;
}

Var permute(const Var& a, std::vector<int64_t> axes) {
  Tape* t = tape_of(a);
  Tensor out = permute_tensor(a.value(), axes);
  if (!t) return Var(std::move(out));
  std::vector<int64_t> inv(axes.size());
  for (size_t j = 0; j < axes.size(); ++j) inv[static_cast<size_t>(axes[j])] = static_cast<int64_t>(j);
  return t->emit(std::move(out), [a, inv](Tape& tp, const Tensor& g) {
    tp.accumulate(a, permute_tensor(g, inv));
  });
}

Var transpose(const Var& a) {
  detail::require(a.value().ndim() == 2, "transpose: needs a 2-D tensor");
  return permute(a, {1, 0});
}

Var take(const Var& a, std::shared_ptr<const std::vector<int64_t>> idx, Shape out_shape) {
  Tape* t = tape_of(a);
  detail::require(idx != nullptr, "take: null index");
  detail::require(static_cast<int64_t>(idx->size()) == shape_numel(out_shape),
                  "take: index count does not match output shape");
  Tensor out(std::move(out_shape));
  const double* pa = a.value().data();
  int64_t limit = a.value().numel();
  double* po = out.data();
  const auto& ix = *idx;
  for (int64_t i = 0; i < out.numel(); ++i) {
    int64_t j = ix[static_cast<size_t>(i)];
    detail::require(j < limit, "take: index out of range");
    po[i] = j < 0 ? 0.0 : pa[j];
  }
  if (!t) return Var(std::move(out));
  return t->emit(std::move(out), [a, idx](Tape& tp, const Tensor& g) {
    Tensor ga(a.shape());
    double* pg = ga.data();
    const auto& ix2 = *idx;
    for (int64_t i = 0; i < g.numel(); ++i) {
      int64_t j = ix2[static_cast<size_t>(i)];
      if (j >= 0) pg[j] += g[i];
    }
    tp.accumulate(a, ga);
  });
}

Var concat0(const std::vector<Var>& parts) {
  detail::require(!parts.empty(), "concat0: no inputs");
  Shape rest(parts[0].shape().begin() + 1, parts[0].shape().end());
  int64_t d0 = 0;
  Tape* t = nullptr;
  for (const auto& p : parts) {
    detail::require(p.value().ndim() >= 1, "concat0: rank >= 1 required");
    Shape r(p.shape().begin() + 1, p.shape().end());
    detail::require(r == rest, "concat0: trailing dims differ");
    d0 += p.shape()[0];
    Tape* pt = tape_of(p);
    if (pt) {
      detail::require(!t || t == pt, "concat0: operands live on different tapes");
      t = pt;
    }
  }
  Shape out_shape;
  out_shape.push_back(d0);
  out_shape.insert(out_shape.end(), rest.begin(), rest.end());
  Tensor out(std::move(out_shape));
  double* po = out.data();
  for (const auto& p : parts) {
    std::memcpy(po, p.value().data(), sizeof(double) * static_cast<size_t>(p.value().numel()));
    po += p.value().numel();
  }
  if (!t) return Var(std::move(out));
  std::vector<Var> saved = parts;
  return t->emit(std::move(out), [saved](Tape& tp, const Tensor& g) {
    int64_t off = 0;
    for (const auto& p : saved) {
      int64_t n = p.value().numel();
      if (p.on_tape()) {
        Tensor gp(p.shape());
        std::memcpy(gp.data(), g.data() + off, sizeof(double) * static_cast<size_t>(n));
        tp.accumulate(p, gp);
      }
      off += n;
    }
  });
}

Var add_rowvec(const Var& x, const Var& b) {
  detail::require(b.value().ndim() == 1, "add_rowvec: b must be rank 1");
  int64_t o = b.value().dim(0);
  detail::require(x.value().ndim() >= 1 && x.value().dim(-1) == o,
                  "add_rowvec: trailing dim of x must match b " + shape_str(x.shape()) +
                      " vs " + shape_str(b.shape()));
  Tape* t = joint_tape(x, b);
  Tensor out(x.shape());
  int64_t rows = row_count(x.value());
  const double* px = x.value().data();
  const double* pb = b.value().data();
  double* po = out.data();
  for (int64_t r = 0; r < rows; ++r)
    for (int64_t j = 0; j < o; ++j) po[r * o + j] = px[r * o + j] + pb[j];
  if (!t) return Var(std::move(out));
  return t->emit(std::move(out), [x, b, rows, o](Tape& tp, const Tensor& g) {
    tp.accumulate(x, g);
    if (b.on_tape()) {
      Tensor gb(b.shape());
      for (int64_t r = 0; r < rows; ++r)
        for (int64_t j = 0; j < o; ++j) gb[j] += g[r * o + j];
      tp.accumulate(b, gb);
    }
  });
}

// ---------------------------------------------------------------------------
// matmul

#if defined(AKORN_USE_BLAS)
extern "C" void dgemm_(const char* transa, const char* transb, const int* m,
                       const int* n, const int* k, const double* alpha,
                       const double* a, const int* lda, const double* b,
                       const int* ldb, const double* beta, double* c,
                       const int* ldc);
#endif

namespace detail {

void gemm(bool ta, bool tb, int64_t m, int64_t n, int64_t k, double alpha,
          const double* A, int64_t lda, const double* B, int64_t ldb,
          double beta, double* C, int64_t ldc) {
  if (m == 0 || n == 0) return;
  if (k == 0) {
    for (int64_t i = 0; i < m; ++i)
      for (int64_t j = 0; j < n; ++j) C[i * ldc + j] *= beta;
    return;
  }
#if defined(AKORN_USE_BLAS)
  // row-major via the column-major identity C^T = op(B)^T op(A)^T
  char tac = ta ? 'T' : 'N';
  char tbc = tb ? 'T' : 'N';
  int mi = static_cast<int>(n), ni = static_cast<int>(m), ki = static_cast<int>(k);
  int ldai = static_cast<int>(ldb), ldbi = static_cast<int>(lda), ldci = static_cast<int>(ldc);
  dgemm_(&tbc, &tac, &mi, &ni, &ki, &alpha, B, &ldai, A, &ldbi, &beta, C, &ldci);
#else
  for (int64_t i = 0; i < m; ++i)
    for (int64_t j = 0; j < n; ++j) C[i * ldc + j] *= beta;
  if (!ta && !tb) {
    for (int64_t i = 0; i < m; ++i)
      for (int64_t p = 0; p < k; ++p) {
        double av = alpha * A[i * lda + p];
        const double* brow = B + p * ldb;
        double* crow = C + i * ldc;
        for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
  } else {
    for (int64_t i = 0; i < m; ++i)
      for (int64_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (int64_t p = 0; p < k; ++p) {
          double av = ta ? A[p * lda + i] : A[i * lda + p];
          double bv = tb ? B[j * ldb + p] : B[p * ldb + j];
          acc += av * bv;
        }
        C[i * ldc + j] += alpha * acc;
      }
  }
#endif
}

}  // namespace detail

Var matmul(const Var& a, const Var& b) {
  detail::require(a.value().ndim() == 2 && b.value().ndim() == 2,
                  "matmul: needs 2-D operands");
  int64_t m = a.value().dim(0), k = a.value().dim(1);
  int64_t k2 = b.value().dim(0), n = b.value().dim(1);
  detail::require(k == k2, "matmul: inner dims differ " + shape_str(a.shape()) +
                               " x " + shape_str(b.shape()));
  Tape* t = joint_tape(a, b);
  Tensor out(Shape{m, n});
  detail::gemm(false, false, m, n, k, 1.0, a.value().data(), k, b.value().data(), n,
               0.0, out.data(), n);
  if (!t) return Var(std::move(out));
  return t->emit(std::move(out), [a, b, m, n, k](Tape& tp, const Tensor& g) {
    if (a.on_tape()) {
      Tensor ga(Shape{m, k});
      detail::gemm(false, true, m, k, n, 1.0, g.data(), n, b.value().data(), n, 0.0,
                   ga.data(), k);
      tp.accumulate(a, ga);
    }
    if (b.on_tape()) {
      Tensor gb(Shape{k, n});
      detail::gemm(true, false, k, n, m, 1.0, a.value().data(), k, g.data(), n, 0.0,
                   gb.data(), n);
      tp.accumulate(b, gb);
    }
  });
}

Var matmul_nt(const Var& a, const Var& b) {
  detail::require(a.value().ndim() == 2 && b.value().ndim() == 2,
                  "matmul_nt: needs 2-D operands");
  int64_t m = a.value().dim(0), k = a.value().dim(1);
  int64_t n = b.value().dim(0), k2 = b.value().dim(1);
  detail::require(k == k2, "matmul_nt: inner dims differ " + shape_str(a.shape()) +
                               " x " + shape_str(b.shape()) + "^T");
  Tape* t = joint_tape(a, b);
  Tensor out(Shape{m, n});
  detail::gemm(false, true, m, n, k, 1.0, a.value().data(), k, b.value().data(), k,
               0.0, out.data(), n);
  if (!t) return Var(std::move(out));
  return t->emit(std::move(out), [a, b, m, n, k](Tape& tp, const Tensor& g) {
    if (a.on_tape()) {
      Tensor ga(Shape{m, k});
      detail::gemm(false, false, m, k, n, 1.0, g.data(), n, b.value().data(), k, 0.0,
                   ga.data(), k);
      tp.accumulate(a, ga);
    }
    if (b.on_tape()) {
      Tensor gb(Shape{n, k});
      detail::gemm(true, false, n, k, m, 1.0, g.data(), n, a.value().data(), k, 0.0,
                   gb.data(), k);
      tp.accumulate(b, gb);
    }
  });
}

Var channel_matvec(const Var& m, const Var& x) {
  const Tensor& mv = m.value();
  const Tensor& xv = x.value();
  detail::require(mv.ndim() == 3 && mv.dim(1) == mv.dim(2),
                  "channel_matvec: m must be [C,N,N]");
  int64_t C = mv.dim(0), N = mv.dim(1);
  detail::require(xv.ndim() >= 2 && xv.dim(-2) == C && xv.dim(-1) == N,
                  "channel_matvec: x must be [...,C,N], got " + shape_str(xv.shape()));
  int64_t lead = xv.numel() / (C * N);
  Tape* t = joint_tape(m, x);
  Tensor out(xv.shape());
  const double* pm = mv.data();
  const double* px = xv.data();
  double* po = out.data();
  for (int64_t l = 0; l < lead; ++l)
    for (int64_t c = 0; c < C; ++c) {
      const double* M = pm + c * N * N;
      const double* v = px + (l * C + c) * N;
      double* y = po + (l * C + c) * N;
      for (int64_t i = 0; i < N; ++i) {
        double acc = 0.0;
        for (int64_t j = 0; j < N; ++j) acc += M[i * N + j] * v[j];
        y[i] = acc;
      }
    }
  if (!t) return Var(std::move(out));
  return t->emit(std::move(out), [m, x, lead, C, N](Tape& tp, const Tensor& g) {
    const double* pm2 = m.value().data();
    const double* px2 = x.value().data();
    if (x.on_tape()) {
      Tensor gx(x.shape());
      double* pgx = gx.data();
      for (int64_t l = 0; l < lead; ++l)
        for (int64_t c = 0; c < C; ++c) {
          const double* M = pm2 + c * N * N;
          const double* gv = g.data() + (l * C + c) * N;
          double* dst = pgx + (l * C + c) * N;
          for (int64_t j = 0; j < N; ++j) {
            double acc = 0.0;
            for (int64_t i = 0; i < N; ++i) acc += M[i * N + j] * gv[i];
            dst[j] = acc;
          }
        }
      tp.accumulate(x, gx);
    }
    if (m.on_tape()) {
      Tensor gm(m.shape());
      double* pgm = gm.data();
      for (int64_t l = 0; l < lead; ++l)
        for (int64_t c = 0; c < C; ++c) {
          const double* gv = g.data() + (l * C + c) * N;
          const double* v = px2 + (l * C + c) * N;
          double* M = pgm + c * N * N;
          for (int64_t i = 0; i < N; ++i)
            for (int64_t j = 0; j < N; ++j) M[i * N + j] += gv[i] * v[j];
        }
      tp.accumulate(m, gm);
    }
  });
}

// ---------------------------------------------------------------------------
// trailing-axis ops

Var rows_dot(const Var& a, const Var& b) {
  require_same_shape(a, b, "rows_dot");
  int64_t n = a.value().dim(-1);
  int64_t rows = row_count(a.value());
  Tape* t = joint_tape(a, b);
  Tensor out(drop_last(a.shape()));
  const double* pa = a.value().data();
  const double* pb = b.value().data();
  for (int64_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (int64_t j = 0; j < n; ++j) acc += pa[r * n + j] * pb[r * n + j];
    out[r] = acc;
  }
  if (!t) return Var(std::move(out));
  return t->emit(std::move(out), [a, b, rows, n](Tape& tp, const Tensor& g) {
    if (a.on_tape()) {
      Tensor ga(a.shape());
      const double* pb2 = b.value().data();
      for (int64_t r = 0; r < rows; ++r)
        for (int64_t j = 0; j < n; ++j) ga[r * n + j] = g[r] * pb2[r * n + j];
      tp.accumulate(a, ga);
    }
    if (b.on_tape()) {
      Tensor gb(b.shape());
      const double* pa2 = a.value().data();
      for (int64_t r = 0; r < rows; ++r)
        for (int64_t j = 0; j < n; ++j) gb[r * n + j] = g[r] * pa2[r * n + j];
      tp.accumulate(b, gb);
    }
  });
}

Var rows_scale(const Var& a, const Var& s) {
  detail::require(s.shape() == drop_last(a.shape()),
                  "rows_scale: s must be a's shape without the last axis, got " +
                      shape_str(s.shape()) + " for " + shape_str(a.shape()));
  int64_t n = a.value().dim(-1);
  int64_t rows = row_count(a.value());
  Tape* t = joint_tape(a, s);
  Tensor out(a.shape());
  const double* pa = a.value().data();
  const double* ps = s.value().data();
  double* po = out.data();
  for (int64_t r = 0; r < rows; ++r)
    for (int64_t j = 0; j < n; ++j) po[r * n + j] = ps[r] * pa[r * n + j];
  if (!t) return Var(std::move(out));
  return t->emit(std::move(out), [a, s, rows, n](Tape& tp, const Tensor& g) {
    if (a.on_tape()) {
      Tensor ga(a.shape());
      const double* ps2 = s.value().data();
      for (int64_t r = 0; r < rows; ++r)
        for (int64_t j = 0; j < n; ++j) ga[r * n + j] = ps2[r] * g[r * n + j];
      tp.accumulate(a, ga);
    }
    if (s.on_tape()) {
      Tensor gs(s.shape());
      const double* pa2 = a.value().data();
      for (int64_t r = 0; r < rows; ++r) {
        double acc = 0.0;
        for (int64_t j = 0; j < n; ++j) acc += g[r * n + j] * pa2[r * n + j];
        gs[r] = acc;
      }
      tp.accumulate(s, gs);
    }
  });
}

Var rows_norm(const Var& a, double eps) {
  detail::require(eps > 0.0, "rows_norm: eps must be positive");
  int64_t n = a.value().dim(-1);
  int64_t rows = row_count(a.value());
  Tape* t = tape_of(a);
  Tensor out(drop_last(a.shape()));
  const double* pa = a.value().data();
  for (int64_t r = 0; r < rows; ++r) {
    double ss = 0.0;
    for (int64_t j = 0; j < n; ++j) ss += pa[r * n + j] * pa[r * n + j];
    out[r] = std::sqrt(ss);
  }
  if (!t) return Var(std::move(out));
  Tensor norms = out;  // shares the buffer, kept alive by the closure
  return t->emit(std::move(out), [a, norms, rows, n, eps](Tape& tp, const Tensor& g) {
    Tensor ga(a.shape());
    const double* pa2 = a.value().data();
    for (int64_t r = 0; r < rows; ++r) {
      double inv = g[r] / std::max(norms[r], eps);
      for (int64_t j = 0; j < n; ++j) ga[r * n + j] = inv * pa2[r * n + j];
    }
    tp.accumulate(a, ga);
  });
}

Var normalize(const Var& a, double eps) {
  detail::require(eps > 0.0, "normalize: eps must be positive");
  int64_t n = a.value().dim(-1);
  int64_t rows = row_count(a.value());
  Tape* t = tape_of(a);
  Tensor out(a.shape());
  std::vector<double> norms(static_cast<size_t>(rows));
  const double* pa = a.value().data();
  double* po = out.data();
  for (int64_t r = 0; r < rows; ++r) {
    double ss = 0.0;
    for (int64_t j = 0; j < n; ++j) ss += pa[r * n + j] * pa[r * n + j];
    double nk = std::sqrt(ss);
    norms[static_cast<size_t>(r)] = nk;
    double inv = 1.0 / std::max(nk, eps);
    for (int64_t j = 0; j < n; ++j) po[r * n + j] = inv * pa[r * n + j];
  }
  if (!t) return Var(std::move(out));
  Tensor unit = out;  // shares the buffer
  return t->emit(std::move(out),
                 [a, unit, norms = std::move(norms), rows, n, eps](Tape& tp, const Tensor& g) {
                   Tensor ga(a.shape());
                   for (int64_t r = 0; r < rows; ++r) {
                     double nk = norms[static_cast<size_t>(r)];
                     if (nk > eps) {
                       double gd = 0.0;
                       for (int64_t j = 0; j < n; ++j) gd += g[r * n + j] * unit[r * n + j];
                       double inv = 1.0 / nk;
                       for (int64_t j = 0; j < n; ++j)
                         ga[r * n + j] = (g[r * n + j] - gd * unit[r * n + j]) * inv;
                     } else {
                       double inv = 1.0 / eps;
                       for (int64_t j = 0; j < n; ++j) ga[r * n + j] = g[r * n + j] * inv;
                     }
                   }
                   tp.accumulate(a, ga);
                 });
}

// ---------------------------------------------------------------------------
// reductions, softmax, losses

Var sum(const Var& a) {
  Tape* t = tape_of(a);
  double acc = 0.0;
  const double* pa = a.value().data();
  for (int64_t i = 0; i < a.value().numel(); ++i) acc += pa[i];
  Tensor out = Tensor::scalar(acc);
  if (!t) return Var(std::move(out));
  return t->emit(std::move(out), [a](Tape& tp, const Tensor& g) {
    tp.accumulate(a, Tensor::full(a.shape(), g[0]));
  });
}

Var mean(const Var& a) {
  detail::require(a.value().numel() > 0, "mean of an empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.value().numel()));
}

Var dot(const Var& a, const Var& b) {
  require_same_shape(a, b, "dot");
  Tape* t = joint_tape(a, b);
  double acc = 0.0;
  const double* pa = a.value().data();
  const double* pb = b.value().data();
  for (int64_t i = 0; i < a.value().numel(); ++i) acc += pa[i] * pb[i];
  Tensor out = Tensor::scalar(acc);
  if (!t) return Var(std::move(out));
  return t->emit(std::move(out), [a, b](Tape& tp, const Tensor& g) {
    if (a.on_tape()) {
      Tensor ga(a.shape());
      const double* pb2 = b.value().data();
      for (int64_t i = 0; i < ga.numel(); ++i) ga[i] = g[0] * pb2[i];
      tp.accumulate(a, ga);
    }
    if (b.on_tape()) {
      Tensor gb(b.shape());
      const double* pa2 = a.value().data();
      for (int64_t i = 0; i < gb.numel(); ++i) gb[i] = g[0] * pa2[i];
      tp.accumulate(b, gb);
    }
  });
}

namespace {

Var softmax_last(const Var& a) {
  int64_t n = a.value().dim(-1);
  int64_t rows = row_count(a.value());
  Tape* t = tape_of(a);
  Tensor out(a.shape());
  const double* pa = a.value().data();
  double* po = out.data();
  for (int64_t r = 0; r < rows; ++r) {
    double m = pa[r * n];
    for (int64_t j = 1; j < n; ++j) m = std::max(m, pa[r * n + j]);
    double s = 0.0;
    for (int64_t j = 0; j < n; ++j) {
      double e = std::exp(pa[r * n + j] - m);
      po[r * n + j] = e;
      s += e;
    }
    double inv = 1.0 / s;
    for (int64_t j = 0; j < n; ++j) po[r * n + j] *= inv;
  }
  if (!t) return Var(std::move(out));
  Tensor y = out;  // shares the buffer
  return t->emit(std::move(out), [a, y, rows, n](Tape& tp, const Tensor& g) {
    Tensor ga(a.shape());
    for (int64_t r = 0; r < rows; ++r) {
      double gd = 0.0;
      for (int64_t j = 0; j < n; ++j) gd += g[r * n + j] * y[r * n + j];
      for (int64_t j = 0; j < n; ++j)
        ga[r * n + j] = y[r * n + j] * (g[r * n + j] - gd);
    }
    tp.accumulate(a, ga);
  });
}

}  // namespace

Var softmax(const Var& a, int64_t axis) {
  int64_t nd = a.value().ndim();
  detail::require(nd >= 1, "softmax: needs rank >= 1");
  if (axis < 0) axis += nd;
  detail::require(axis >= 0 && axis < nd, "softmax: axis out of range");
  if (axis == nd - 1) return softmax_last(a);
  std::vector<int64_t> perm;
  for (int64_t j = 0; j < nd; ++j)
    if (j != axis) perm.push_back(j);
  perm.push_back(axis);
  std::vector<int64_t> inv(static_cast<size_t>(nd));
  for (size_t j = 0; j < perm.size(); ++j) inv[static_cast<size_t>(perm[j])] = static_cast<int64_t>(j);
  return permute(softmax_last(permute(a, perm)), inv);
}

Var cross_entropy_logits(const Var& logits, std::vector<int> targets) {
  const Tensor& lv = logits.value();
  detail::require(lv.ndim() == 2, "cross_entropy_logits: logits must be [rows, classes]");
  int64_t rows = lv.dim(0), k = lv.dim(1);
  detail::require(static_cast<int64_t>(targets.size()) == rows,
                  "cross_entropy_logits: target count mismatch");
  for (int tr : targets)
    detail::require(tr >= 0 && tr < k, "cross_entropy_logits: target out of range");
  Tape* t = tape_of(logits);
  Tensor probs(Shape{rows, k});
  const double* pl = lv.data();
  double* pp = probs.data();
  double loss = 0.0;
  for (int64_t r = 0; r < rows; ++r) {
    double m = pl[r * k];
    for (int64_t j = 1; j < k; ++j) m = std::max(m, pl[r * k + j]);
    double s = 0.0;
    for (int64_t j = 0; j < k; ++j) {
      double e = std::exp(pl[r * k + j] - m);
      pp[r * k + j] = e;
      s += e;
    }
    double inv = 1.0 / s;
    for (int64_t j = 0; j < k; ++j) pp[r * k + j] *= inv;
    loss += m + std::log(s) - pl[r * k + targets[static_cast<size_t>(r)]];
  }
  loss /= static_cast<double>(rows);
  Tensor out = Tensor::scalar(loss);
  if (!t) return Var(std::move(out));
  return t->emit(std::move(out),
                 [logits, probs, targets = std::move(targets), rows, k](Tape& tp, const Tensor& g) {
                   Tensor gl(logits.shape());
                   double w = g[0] / static_cast<double>(rows);
                   for (int64_t r = 0; r < rows; ++r) {
                     int tr = targets[static_cast<size_t>(r)];
                     for (int64_t j = 0; j < k; ++j) {
                       double p = probs[r * k + j];
                       gl[r * k + j] = w * (p - (j == tr ? 1.0 : 0.0));
                     }
                   }
                   tp.accumulate(logits, gl);
                 });
}

Var group_norm(const Var& x, int64_t channels, int64_t groups, double eps,
               const Var& gain, const Var& bias) {
  const Tensor& xv = x.value();
  detail::require(channels > 0 && xv.numel() % channels == 0,
                  "group_norm: numel not divisible by channel count");
  detail::require(groups > 0 && channels % groups == 0,
                  "group_norm: channels not divisible by groups");
  detail::require(gain.value().numel() == channels && bias.value().numel() == channels,
                  "group_norm: affine params must have one entry per channel");
  int64_t s = xv.numel() / channels;   // spatial extent per channel
  int64_t gc = channels / groups;      // channels per group
  int64_t m = gc * s;                  // elements per group
  Tape* tx = tape_of(x);
  Tape* tg = tape_of(gain);
  Tape* tb = tape_of(bias);
  Tape* tape = tx ? tx : (tg ? tg : tb);
  if (tx && tg) detail::require(tx == tg, "group_norm: operands on different tapes");
  if (tx && tb) detail::require(tx == tb, "group_norm: operands on different tapes");
  if (tg && tb) detail::require(tg == tb, "group_norm: operands on different tapes");

  Tensor xhat(xv.shape());
  std::vector<double> invstd(static_cast<size_t>(groups));
  const double* px = xv.data();
  double* ph = xhat.data();
  const double* pg = gain.value().data();
  const double* pb = bias.value().data();
  Tensor out(xv.shape());
  double* po = out.data();
  for (int64_t grp = 0; grp < groups; ++grp) {
    const double* blk = px + grp * m;
    double mu = 0.0;
    for (int64_t i = 0; i < m; ++i) mu += blk[i];
    mu /= static_cast<double>(m);
    double var = 0.0;
    for (int64_t i = 0; i < m; ++i) {
      double d = blk[i] - mu;
      var += d * d;
    }
    var /= static_cast<double>(m);
    double is = 1.0 / std::sqrt(var + eps);
    invstd[static_cast<size_t>(grp)] = is;
    for (int64_t i = 0; i < m; ++i) ph[grp * m + i] = (blk[i] - mu) * is;
  }
  for (int64_t c = 0; c < channels; ++c)
    for (int64_t i = 0; i < s; ++i)
      po[c * s + i] = pg[c] * ph[c * s + i] + pb[c];
  if (!tape) return Var(std::move(out));
  return tape->emit(
      std::move(out),
      [x, gain, bias, xhat, invstd = std::move(invstd), channels, groups, s, gc,
       m](Tape& tp, const Tensor& g) {
        const double* pg2 = gain.value().data();
        if (x.on_tape()) {
          Tensor gx(x.shape());
          std::vector<double> dxhat(static_cast<size_t>(m));
          for (int64_t grp = 0; grp < groups; ++grp) {
            double s1 = 0.0, s2 = 0.0;
            for (int64_t j = 0; j < gc; ++j) {
              int64_t c = grp * gc + j;
              for (int64_t i = 0; i < s; ++i) {
                double d = g[c * s + i] * pg2[c];
                dxhat[static_cast<size_t>(j * s + i)] = d;
                s1 += d;
                s2 += d * xhat[c * s + i];
              }
            }
            double is = invstd[static_cast<size_t>(grp)];
            double inv_m = 1.0 / static_cast<double>(m);
            for (int64_t j = 0; j < gc; ++j) {
              int64_t c = grp * gc + j;
              for (int64_t i = 0; i < s; ++i) {
                double d = dxhat[static_cast<size_t>(j * s + i)];
                gx[c * s + i] = is * (d - inv_m * (s1 + xhat[c * s + i] * s2));
              }
            }
          }
          tp.accumulate(x, gx);
        }
        if (gain.on_tape()) {
          Tensor gg(gain.shape());
          for (int64_t c = 0; c < channels; ++c) {
            double acc = 0.0;
            for (int64_t i = 0; i < s; ++i) acc += g[c * s + i] * xhat[c * s + i];
            gg[c] = acc;
          }
          tp.accumulate(gain, gg);
        }
        if (bias.on_tape()) {
          Tensor gb(bias.shape());
          for (int64_t c = 0; c < channels; ++c) {
            double acc = 0.0;
            for (int64_t i = 0; i < s; ++i) acc += g[c * s + i];
            gb[c] = acc;
          }
          tp.accumulate(bias, gb);
        }
      });
}

}  // namespace akorn
