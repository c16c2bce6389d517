#pragma once

#include <memory>
#include <vector>

#include "akorn/tape.hpp"

namespace akorn {

// Ops compute forward values immediately. When an input lives on a tape the
// result joins that tape with a registered backward rule; ops on constants
// record nothing. Shapes are validated and mismatches throw.

// elementwise, identical shapes
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double c);
Var scalar_mul(const Var& s, const Var& a);  // s is a single-element tensor
Var relu(const Var& a);
Var softplus(const Var& a);

// structure
Var reshape(const Var& a, Shape s);
Var permute(const Var& a, std::vector<int64_t> axes);
Var transpose(const Var& a);  // 2-D
// out[i] = idx[i] < 0 ? 0 : a.flat[idx[i]]; gradient scatter-adds back
Var take(const Var& a, std::shared_ptr<const std::vector<int64_t>> idx, Shape out_shape);
Var concat0(const std::vector<Var>& parts);
Var add_rowvec(const Var& x, const Var& b);  // x[...,O] + b[O]

// linear algebra
Var matmul(const Var& a, const Var& b);     // [m,k] x [k,n]
Var matmul_nt(const Var& a, const Var& b);  // [m,k] x [n,k]^T -> [m,n]
// y[...,c,:] = m[c] * x[...,c,:] with m: [C,N,N]
Var channel_matvec(const Var& m, const Var& x);

// trailing-axis ops (a "row" is one slice over the last axis)
Var rows_dot(const Var& a, const Var& b);        // [...,N],[...,N] -> [...]
Var rows_scale(const Var& a, const Var& s);      // [...,N],[...]   -> [...,N]
Var rows_norm(const Var& a, double eps);         // [...,N]         -> [...]
// rows divided by max(norm, eps); backward applies the exact Jacobian
// (I - v v^T)/|x| on each row (1/eps in the clamped regime)
Var normalize(const Var& a, double eps = 1e-12);

// reductions, activations with reductions, losses
Var sum(const Var& a);
Var mean(const Var& a);
Var dot(const Var& a, const Var& b);
Var softmax(const Var& a, int64_t axis = -1);
// mean over rows of (logsumexp(row) - row[target]); max-subtracted
Var cross_entropy_logits(const Var& logits, std::vector<int> targets);
// x viewed as [channels, spatial]; normalizes each of `groups` contiguous
// channel groups to zero mean / unit variance, then per-channel affine
Var group_norm(const Var& x, int64_t channels, int64_t groups, double eps,
               const Var& gain, const Var& bias);

// tensor-level helpers shared by op kernels and plain evaluation code
Tensor permute_tensor(const Tensor& t, const std::vector<int64_t>& axes);

namespace detail {
// row-major C[m,n] = alpha*op(A)op(B) + beta*C
void gemm(bool ta, bool tb, int64_t m, int64_t n, int64_t k, double alpha,
          const double* A, int64_t lda, const double* B, int64_t ldb,
          double beta, double* C, int64_t ldc);
}  // namespace detail

}  // namespace akorn
