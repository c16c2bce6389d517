#include <doctest.h>

#include <akorn/kuramoto.hpp>
#include <akorn/readout.hpp>

#include <cmath>
#include <vector>

#include "grad_check.hpp"

using namespace akorn;

namespace {

double det_small(const Tensor& m) {
  int64_t n = m.dim(0);
  if (n == 1) return m[0];
  double acc = 0.0;
  for (int64_t c = 0, sign = 1; c < n; ++c, sign = -sign) {
    Tensor minor(Shape{n - 1, n - 1});
    for (int64_t r = 1; r < n; ++r)
      for (int64_t cc = 0, k = 0; cc < n; ++cc) {
        if (cc == c) continue;
        minor[(r - 1) * (n - 1) + k++] = m[r * n + cc];
      }
    acc += sign * m[c] * det_small(minor);
  }
  return acc;
}

// Gram-Schmidt on a Gaussian matrix, then a column flip if needed so the
// result lands in SO(n)
Tensor random_rotation(Rng& rng, int64_t n) {
  Tensor r = rng.gaussian_tensor({n, n}, 1.0);
  for (int64_t c = 0; c < n; ++c) {
    for (int64_t p = 0; p < c; ++p) {
      double d = 0.0;
      for (int64_t i = 0; i < n; ++i) d += r[i * n + c] * r[i * n + p];
      for (int64_t i = 0; i < n; ++i) r[i * n + c] -= d * r[i * n + p];
    }
    double nn = 0.0;
    for (int64_t i = 0; i < n; ++i) nn += r[i * n + c] * r[i * n + c];
    nn = std::sqrt(nn);
    REQUIRE(nn > 1e-8);
    for (int64_t i = 0; i < n; ++i) r[i * n + c] /= nn;
  }
  if (det_small(r) < 0.0)
    for (int64_t i = 0; i < n; ++i) r[i * n + 0] = -r[i * n + 0];
  return r;
}

// x[l,c,:] -> R x[l,c,:]
Tensor rotate_rows(const Tensor& x, const Tensor& r) {
  int64_t n = r.dim(0);
  Var flat = reshape(Var(x), {x.numel() / n, n});
  return reshape(matmul_nt(flat, Var(r)), Shape(x.shape())).value();
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  REQUIRE(a.shape() == b.shape());
  double m = 0.0;
  for (int64_t i = 0; i < a.numel(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_SUITE("readout") {

TEST_CASE("one-hot scalar blocks read unit magnitudes off unit states") {
  Rng rng(1);
  const int64_t c = 6, n = 4;
  Readout r(Readout::UMode::scalar_block, Readout::Head::identity, c, n, c, 0, rng);
  r.u.value.fill(0.0);
  for (int64_t i = 0; i < c; ++i) r.u.value[i * c + i] = 1.0;
  Tensor x = rng.sphere_tensor({3, c, n});
  Tensor m = r(nullptr, Var(x)).value();
  REQUIRE(m.shape() == Shape{3, c});
  for (int64_t i = 0; i < m.numel(); ++i) CHECK(m[i] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("full blocks match the naive per-pair sum") {
  Rng rng(2);
  const int64_t L = 2, c = 3, n = 2, k = 4;
  Readout r(Readout::UMode::full, Readout::Head::identity, c, n, k, 0, rng);
  Tensor x = rng.sphere_tensor({L, c, n});
  Tensor m = r(nullptr, Var(x)).value();
  const Tensor& u = r.u.value;  // [K,C,N,N]
  for (int64_t l = 0; l < L; ++l)
    for (int64_t kk = 0; kk < k; ++kk) {
      double ss = 0.0;
      for (int64_t a = 0; a < n; ++a) {
        double za = 0.0;
        for (int64_t i = 0; i < c; ++i)
          for (int64_t b = 0; b < n; ++b)
            za += u[((kk * c + i) * n + a) * n + b] * x[(l * c + i) * n + b];
        ss += za * za;
      }
      CHECK(m[l * k + kk] == doctest::Approx(std::sqrt(ss)).epsilon(1e-12));
    }
}

TEST_CASE("magnitudes are nonnegative") {
  Rng rng(3);
  Readout r(Readout::UMode::full, Readout::Head::identity, 4, 3, 0, 0, rng);
  Tensor m = r(nullptr, Var(urand(rng, {5, 4, 3}))).value();
  for (int64_t i = 0; i < m.numel(); ++i) CHECK(m[i] >= 0.0);
}

TEST_CASE("scalar blocks are blind to a shared rotation of all oscillators") {
  Rng rng(4);
  const int64_t c = 8, n = 4;
  Readout r(Readout::UMode::scalar_block, Readout::Head::identity, c, n, 2 * c, 0, rng);
  Tensor x = rng.sphere_tensor({5, c, n});
  Tensor base = r(nullptr, Var(x)).value();
  for (int rep = 0; rep < 10; ++rep) {
    Tensor rot = random_rotation(rng, n);
    Tensor m = r(nullptr, Var(rotate_rows(x, rot))).value();
    CHECK(max_abs_diff(m, base) < 1e-12);
  }
}

TEST_CASE("full blocks do react to a shared rotation") {
  Rng rng(5);
  const int64_t c = 4, n = 4;
  Readout r(Readout::UMode::full, Readout::Head::identity, c, n, c * n, 0, rng);
  Tensor x = rng.sphere_tensor({3, c, n});
  Tensor base = r(nullptr, Var(x)).value();
  Tensor rot = random_rotation(rng, n);
  Tensor m = r(nullptr, Var(rotate_rows(x, rot))).value();
  CHECK(max_abs_diff(m, base) > 1e-3);
}

TEST_CASE("heads produce the right shapes") {
  Rng rng(6);
  const int64_t L = 3, c = 4, n = 2;
  Tensor x = rng.sphere_tensor({L, c, n});
  Readout lin(Readout::UMode::scalar_block, Readout::Head::linear, c, n, 0, 7, rng);
  CHECK(lin(nullptr, Var(x)).shape() == Shape{L, 7});
  Readout rl(Readout::UMode::full, Readout::Head::relu_linear, c, n, 0, 9, rng);
  CHECK(rl(nullptr, Var(x)).shape() == Shape{L, 9});
  Readout mlp(Readout::UMode::full, Readout::Head::mlp_residual, c, n, 0, 5, rng);
  CHECK(mlp(nullptr, Var(x)).shape() == Shape{L, 5});
  CHECK(mlp.params().size() == 7);
}

TEST_CASE("parameter gradients agree with finite differences") {
  Rng rng(7);
  const int64_t L = 2, c = 3, n = 2;
  Tensor x = rng.sphere_tensor({L, c, n});
  for (auto head : {Readout::Head::linear, Readout::Head::relu_linear,
                    Readout::Head::mlp_residual}) {
    Readout r(Readout::UMode::full, head, c, n, 4, 3, rng);
    Tensor wl = urand(rng, {L, 3});
    auto loss = [&](Tape* t) { return sum(mul(r(t, Var(x)), Var(wl))); };
    CHECK(param_grad_err(loss, r.params()) < 1e-7);
  }
  Readout rs(Readout::UMode::scalar_block, Readout::Head::identity, c, n, 5, 0, rng);
  Tensor wl = urand(rng, {L, 5});
  auto loss = [&](Tape* t) { return sum(mul(rs(t, Var(x)), Var(wl))); };
  CHECK(param_grad_err(loss, rs.params()) < 1e-7);
}

TEST_CASE("state gradients flow through the magnitudes") {
  Rng rng(8);
  const int64_t L = 2, c = 3, n = 2;
  Readout r(Readout::UMode::full, Readout::Head::relu_linear, c, n, 4, 3, rng);
  Tensor wl = urand(rng, {L, 3});
  auto f = [&](const std::vector<Var>& v) {
    return sum(mul(r(v[0].tape(), v[0]), Var(wl)));
  };
  CHECK(grad_check_max_err({rng.sphere_tensor({L, c, n})}, f) < 1e-7);
}

TEST_CASE("wrong state rank is rejected") {
  Rng rng(9);
  Readout r(Readout::UMode::scalar_block, Readout::Head::identity, 4, 3, 0, 0, rng);
  CHECK_THROWS_AS(r(nullptr, Var(Tensor(Shape{4, 3}))), std::invalid_argument);
}

TEST_CASE("random-sphere init emits unit rows with no mean direction") {
  Rng rng(10);
  Tensor c0(Shape{50, 4, 4});
  Var x = init_oscillators(InitMode::random_sphere, Var(c0), rng, nullptr);
  CHECK(max_unit_norm_deviation(x.value()) < 1e-12);
  // Monte Carlo symmetry: the mean of many sphere draws stays near zero
  double mean[4] = {0, 0, 0, 0};
  const int64_t rows = 50 * 4;
  Tensor big = rng.sphere_tensor({10000 / rows * rows, 4});
  for (int64_t r = 0; r < big.dim(0); ++r)
    for (int64_t j = 0; j < 4; ++j) mean[j] += big[r * 4 + j];
  double nn = 0.0;
  for (double v : mean) nn += (v / big.dim(0)) * (v / big.dim(0));
  CHECK(std::sqrt(nn) < 0.05);
}

TEST_CASE("mixed init follows the stimulus exactly where the mask says so") {
  Rng rng(11);
  const int64_t L = 4, c = 3, n = 4;
  Tensor c0 = urand(rng, {L, c, n}, -1.0, 1.0);
  std::vector<double> mask(static_cast<size_t>(L * c));
  for (size_t i = 0; i < mask.size(); ++i) mask[i] = static_cast<double>(i % 2);
  Var x = init_oscillators(InitMode::mixed, Var(c0), rng, nullptr, &mask);
  CHECK(max_unit_norm_deviation(x.value()) < 1e-12);
  const Tensor& xv = x.value();
  for (int64_t r = 0; r < L * c; ++r) {
    double ss = 0.0, dp = 0.0;
    for (int64_t j = 0; j < n; ++j) ss += c0[r * n + j] * c0[r * n + j];
    for (int64_t j = 0; j < n; ++j) dp += xv[r * n + j] * c0[r * n + j] / std::sqrt(ss);
    if (mask[static_cast<size_t>(r)] == 1.0)
      CHECK(dp == doctest::Approx(1.0).epsilon(1e-9));  // aligned with c/|c|
    else
      CHECK(std::fabs(dp) < 0.999);  // a random direction, almost surely not aligned
  }
}

TEST_CASE("all-given mixed init is the row-normalized stimulus") {
  Rng rng(12);
  const int64_t L = 3, c = 2, n = 3;
  Tensor c0 = urand(rng, {L, c, n}, 0.5, 2.0);
  std::vector<double> mask(static_cast<size_t>(L * c), 1.0);
  Tensor x = init_oscillators(InitMode::mixed, Var(c0), rng, nullptr, &mask).value();
  Tensor want = normalize(Var(c0)).value();
  for (int64_t i = 0; i < x.numel(); ++i)
    CHECK(x[i] == doctest::Approx(want[i]).epsilon(1e-12));
}

TEST_CASE("from-stimulus init falls back to random on zero rows") {
  Rng rng(13);
  const int64_t L = 2, c = 2, n = 3;
  Tensor c0 = urand(rng, {L, c, n}, 0.5, 1.0);
  for (int64_t j = 0; j < n; ++j) c0[0 * n + j] = 0.0;  // kill row 0
  Tensor x = init_oscillators(InitMode::from_stimulus, Var(c0), rng, nullptr).value();
  CHECK(max_unit_norm_deviation(x) < 1e-12);
  double dp = 0.0, ss = 0.0;
  for (int64_t j = 0; j < n; ++j) {
    dp += x[1 * n + j] * c0[1 * n + j];
    ss += c0[1 * n + j] * c0[1 * n + j];
  }
  CHECK(dp / std::sqrt(ss) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("learned init repeats one unit vector per channel across tokens") {
  Rng rng(14);
  const int64_t L = 3, c = 2, n = 4;
  Param emb("init.emb", rng.sphere_tensor({c, n}));
  Tensor c0(Shape{L, c, n});
  Tensor x = init_oscillators(InitMode::learned, Var(c0), rng, nullptr, nullptr, &emb).value();
  CHECK(max_unit_norm_deviation(x) < 1e-12);
  for (int64_t l = 0; l < L; ++l)
    for (int64_t i = 0; i < c * n; ++i)
      CHECK(x[l * c * n + i] == doctest::Approx(emb.value[i]).epsilon(1e-12));
}

TEST_CASE("gradients flow through the stimulus side of mixed init") {
  Rng rng(15);
  const int64_t L = 2, c = 2, n = 3;
  std::vector<double> mask = {1.0, 0.0, 1.0, 1.0};
  Tensor wl = urand(rng, {L, c, n});
  auto f = [&](const std::vector<Var>& v) {
    Rng local(99);
    Var x = init_oscillators(InitMode::mixed, v[0], local, v[0].tape(), &mask);
    return sum(mul(x, Var(wl)));
  };
  CHECK(grad_check_max_err({urand(rng, {L, c, n}, 0.5, 2.0)}, f) < 1e-7);
}

}  // TEST_SUITE
