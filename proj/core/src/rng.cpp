#include "akorn/rng.hpp"

#include <cmath>

namespace akorn {

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

namespace {
inline uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
}  // namespace

Rng::Rng(uint64_t seed) : seed_(seed) {
  uint64_t sm = seed;
  for (auto& s : s_) {
    sm += 0x9e3779b97f4a7c15ull;
    s = splitmix64(sm);
  }
}

uint64_t Rng::next_u64() {
  uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
  uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

int64_t Rng::uniform_int(int64_t n) {
  detail::require(n > 0, "uniform_int requires n > 0");
  // rejection sampling to avoid modulo bias
  uint64_t un = static_cast<uint64_t>(n);
  uint64_t limit = UINT64_MAX - UINT64_MAX % un;
  uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return static_cast<int64_t>(x % un);
}

double Rng::gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1, u2;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double a = 2.0 * M_PI * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

Rng Rng::child(uint64_t a, uint64_t b, uint64_t c) const {
  uint64_t h = splitmix64(seed_ ^ 0x5851f42d4c957f2dull);
  h = splitmix64(h ^ a);
  h = splitmix64(h ^ b);
  h = splitmix64(h ^ c);
  return Rng(h);
}

Tensor Rng::gaussian_tensor(Shape shape, double stddev) {
  Tensor t(std::move(shape));
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = stddev * gaussian();
  return t;
}

Tensor Rng::sphere_tensor(Shape shape) {
  Tensor t = gaussian_tensor(std::move(shape));
  detail::require(t.ndim() >= 1, "sphere_tensor requires rank >= 1");
  int64_t n = t.dim(-1);
  int64_t rows = t.numel() / n;
  for (int64_t r = 0; r < rows; ++r) {
    double* p = t.data() + r * n;
    double ss = 0.0;
    for (int64_t k = 0; k < n; ++k) ss += p[k] * p[k];
    if (ss == 0.0) {
      p[0] = 1.0;  // degenerate draw, pick a fixed direction
      continue;
    }
    double inv = 1.0 / std::sqrt(ss);
    for (int64_t k = 0; k < n; ++k) p[k] *= inv;
  }
  return t;
}

}  // namespace akorn
