#pragma once

#include <cstdint>

#include "akorn/tensor.hpp"

namespace akorn {

// xoshiro256++ with splitmix64 seeding. Self-contained so that seeded runs
// are bit-reproducible independent of the standard library in use.
class Rng {
 public:
  explicit Rng(uint64_t seed);

  uint64_t next_u64();
  double uniform();                    // [0, 1)
  double uniform(double lo, double hi);
  int64_t uniform_int(int64_t n);      // [0, n)
  double gaussian();                   // standard normal, Box-Muller

  // independent stream derived from this rng's seed and the given tags;
  // does not advance this rng
  Rng child(uint64_t a, uint64_t b = 0, uint64_t c = 0) const;

  Tensor gaussian_tensor(Shape shape, double stddev = 1.0);
  // rows of unit L2 norm over the trailing axis
  Tensor sphere_tensor(Shape shape);

 private:
  uint64_t s_[4];
  uint64_t seed_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

uint64_t splitmix64(uint64_t x);

}  // namespace akorn
