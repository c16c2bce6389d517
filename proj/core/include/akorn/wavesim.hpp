#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "akorn/image_io.hpp"
#include "akorn/tensor.hpp"

namespace akorn {

struct LatticeConfig {
  int64_t height = 64, width = 64;
  int64_t n = 4;
  std::string kernel = "gaussian";  // gaussian | random | file
  double sigma = 2.0;
  uint64_t kernel_seed = 0;
  std::string kernel_file;
  int64_t ksize = 9;
  double gamma = 0.1;
  int64_t steps = 200;
  int64_t frame_stride = 0;  // 0: no frames; k: steps k, 2k, ... plus the last
  std::string mask_path;     // PGM stimulus mask; empty: no stimulus
};

struct CoherenceTrace {
  // one entry per visited state, steps+1 of each
  std::vector<double> energy;
  std::vector<double> coherence;  // always in [0,1]
};

struct WaveResult {
  Tensor stimulus;     // [1,H,W,N]
  Tensor final_state;  // [1,H,W,N]
  CoherenceTrace trace;
  std::vector<std::pair<int64_t, ImageU8>> frames;  // (step, rendered state)
};

Tensor gaussian_kernel(int64_t ksize, double sigma);    // unit sum
Tensor random_kernel(int64_t ksize, uint64_t seed);     // unit L1 mass
Tensor load_kernel(const std::string& path);            // text: kh kw then kh*kw values
Tensor kernel_for(const LatticeConfig& cfg);            // all [1,1,Kh,Kw]

// foreground pixels (>= 128) point their stimulus at the first axis
Tensor stimulus_from_mask(const ImageU8& mask, int64_t n);

// ‖mean over lattice sites of x_i‖₂
double lattice_coherence(const Tensor& x);

// hue from atan2(x1, x0), value from x2 when present, full saturation
ImageU8 orientation_colormap(const Tensor& state);

// toroidal convolutional Kuramoto rollout from a seeded random state
WaveResult simulate(const LatticeConfig& cfg, uint64_t seed);

// "step,energy,coherence" header plus one row per state
std::string trace_csv(const CoherenceTrace& t);

}  // namespace akorn
