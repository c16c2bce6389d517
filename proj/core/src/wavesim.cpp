#include "akorn/wavesim.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "akorn/connectivity.hpp"
#include "akorn/kuramoto.hpp"
#include "akorn/rng.hpp"

namespace akorn {

Tensor gaussian_kernel(int64_t ksize, double sigma) {
  detail::require(ksize >= 1 && ksize % 2 == 1, "gaussian_kernel: size must be odd");
  detail::require(sigma > 0.0, "gaussian_kernel: sigma must be positive");
  Tensor k(Shape{1, 1, ksize, ksize});
  const int64_t r = ksize / 2;
  double total = 0.0;
  for (int64_t dy = -r; dy <= r; ++dy)
    for (int64_t dx = -r; dx <= r; ++dx) {
      double w = std::exp(-static_cast<double>(dy * dy + dx * dx) / (2.0 * sigma * sigma));
      k[(dy + r) * ksize + (dx + r)] = w;
      total += w;
    }
  for (int64_t i = 0; i < k.numel(); ++i) k[i] /= total;
  return k;
}

Tensor random_kernel(int64_t ksize, uint64_t seed) {
  detail::require(ksize >= 1 && ksize % 2 == 1, "random_kernel: size must be odd");
  Tensor k = Rng(seed).gaussian_tensor({1, 1, ksize, ksize});
  double mass = 0.0;
  for (int64_t i = 0; i < k.numel(); ++i) mass += std::fabs(k[i]);
  detail::require(mass > 0.0, "random_kernel: degenerate draw");
  for (int64_t i = 0; i < k.numel(); ++i) k[i] /= mass;
  return k;
}

Tensor load_kernel(const std::string& path) {
  std::ifstream in(path);
  detail::require(in.good(), "cannot open kernel file " + path);
  int64_t kh = 0, kw = 0;
  detail::require(static_cast<bool>(in >> kh >> kw), "kernel file " + path +
                                                         ": expected 'kh kw' then kh*kw values");
  detail::require(kh >= 1 && kw >= 1 && kh % 2 == 1 && kw % 2 == 1,
                  "kernel file " + path + ": sides must be odd and positive");
  Tensor k(Shape{1, 1, kh, kw});
  for (int64_t i = 0; i < kh * kw; ++i)
    detail::require(static_cast<bool>(in >> k[i]),
                    "kernel file " + path + ": too few values");
  return k;
}

Tensor kernel_for(const LatticeConfig& cfg) {
  if (cfg.kernel == "gaussian") return gaussian_kernel(cfg.ksize, cfg.sigma);
  if (cfg.kernel == "random") return random_kernel(cfg.ksize, cfg.kernel_seed);
  if (cfg.kernel == "file") return load_kernel(cfg.kernel_file);
  detail::fail("unknown kernel kind '" + cfg.kernel + "' (gaussian | random | file)");
}

Tensor stimulus_from_mask(const ImageU8& mask, int64_t n) {
  detail::require(mask.channels == 1, "stimulus_from_mask: mask must be grayscale");
  detail::require(n >= 1, "stimulus_from_mask: bad oscillator dimension");
  Tensor c(Shape{1, mask.height, mask.width, n});
  for (int64_t y = 0; y < mask.height; ++y)
    for (int64_t x = 0; x < mask.width; ++x)
      if (mask.at(y, x) >= 128) c[(y * mask.width + x) * n] = 1.0;
  return c;
}

double lattice_coherence(const Tensor& x) {
  const Shape& s = x.shape();
  detail::require(s.size() >= 1, "lattice_coherence: scalar state");
  const auto n = s[s.size() - 1];
  const int64_t rows = x.numel() / n;
  double ss = 0.0;
  for (int64_t j = 0; j < n; ++j) {
    double m = 0.0;
    for (int64_t r = 0; r < rows; ++r) m += x[r * n + j];
    m /= static_cast<double>(rows);
    ss += m * m;
  }
  return std::sqrt(ss);
}

namespace {

void hsv_to_rgb(double h6, double s, double v, uint8_t* rgb) {
  // h6 in [0,6)
  int sector = static_cast<int>(h6);
  double f = h6 - sector;
  double p = v * (1.0 - s);
  double q = v * (1.0 - s * f);
  double t = v * (1.0 - s * (1.0 - f));
  double r = 0, g = 0, b = 0;
  switch (sector % 6) {
    case 0: r = v; g = t; b = p; break;
    case 1: r = q; g = v; b = p; break;
    case 2: r = p; g = v; b = t; break;
    case 3: r = p; g = q; b = v; break;
    case 4: r = t; g = p; b = v; break;
    default: r = v; g = p; b = q; break;
  }
  rgb[0] = static_cast<uint8_t>(std::lround(255.0 * r));
  rgb[1] = static_cast<uint8_t>(std::lround(255.0 * g));
  rgb[2] = static_cast<uint8_t>(std::lround(255.0 * b));
}

}  // namespace

ImageU8 orientation_colormap(const Tensor& state) {
  const Shape& s = state.shape();
  detail::require(s.size() == 4, "orientation_colormap: expected [C,H,W,N]");
  const int64_t h = s[1], w = s[2], n = s[3];
  detail::require(n >= 2, "orientation_colormap: needs at least two components");
  ImageU8 img(h, w, 3);
  const double two_pi = 2.0 * std::numbers::pi;
  for (int64_t y = 0; y < h; ++y)
    for (int64_t x = 0; x < w; ++x) {
      const int64_t base = (y * w + x) * n;  // channel 0
      double x0 = state[base], x1 = state[base + 1];
      double ang = std::atan2(x1, x0);
      if (ang < 0) ang += two_pi;
      double v = n >= 3 ? 0.5 + 0.5 * state[base + 2] : 1.0;
      v = std::min(1.0, std::max(0.0, v));
      double h6 = std::min(ang / two_pi * 6.0, 6.0 - 1e-12);
      hsv_to_rgb(h6, 1.0, v, &img.at(y, x, 0));
    }
  return img;
}

WaveResult simulate(const LatticeConfig& cfg, uint64_t seed) {
  detail::require(cfg.height >= 1 && cfg.width >= 1, "simulate: empty lattice");
  detail::require(cfg.n >= 2, "simulate: oscillator dimension must be at least 2");
  detail::require(cfg.gamma > 0.0, "simulate: step size must be positive");
  detail::require(cfg.steps >= 0, "simulate: negative step count");
  detail::require(cfg.frame_stride >= 0, "simulate: negative frame stride");

  ConvCoupling conv(kernel_for(cfg), cfg.n, ConvCoupling::Pad::circular);

  Tensor stim(Shape{1, cfg.height, cfg.width, cfg.n});
  if (!cfg.mask_path.empty()) {
    ImageU8 mask = read_pgm(cfg.mask_path);
    detail::require(mask.height == cfg.height && mask.width == cfg.width,
                    "simulate: mask is " + std::to_string(mask.width) + "x" +
                        std::to_string(mask.height) + ", lattice is " +
                        std::to_string(cfg.width) + "x" + std::to_string(cfg.height));
    stim = stimulus_from_mask(mask, cfg.n);
  }

  Var x0(Rng(seed).sphere_tensor({1, cfg.height, cfg.width, cfg.n}));
  auto couple = [&](const Var& x) { return conv(nullptr, x); };
  RolloutResult ro = rollout(x0, couple, Var(stim), Omega{}, Var(Tensor::scalar(cfg.gamma)),
                             cfg.steps, true);

  WaveResult out;
  out.stimulus = stim;
  out.final_state = ro.states.back().value();
  out.trace.energy = ro.energies;
  out.trace.energy.push_back(
      energy_value(out.final_state, couple(ro.states.back()).value(), stim));
  out.trace.coherence.reserve(ro.states.size());
  for (const Var& st : ro.states) out.trace.coherence.push_back(lattice_coherence(st.value()));

  if (cfg.frame_stride > 0) {
    // one frame per sampled completed step, and always the trailing state
    for (int64_t t = cfg.frame_stride; t <= cfg.steps; t += cfg.frame_stride)
      out.frames.emplace_back(t, orientation_colormap(ro.states[static_cast<size_t>(t)].value()));
    if (out.frames.empty() || out.frames.back().first != cfg.steps)
      out.frames.emplace_back(cfg.steps, orientation_colormap(out.final_state));
  }
  return out;
}

std::string trace_csv(const CoherenceTrace& t) {
  detail::require(t.energy.size() == t.coherence.size(), "trace_csv: ragged trace");
  std::string out = "step,energy,coherence\n";
  char buf[96];
  for (size_t i = 0; i < t.energy.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g\n", i, t.energy[i], t.coherence[i]);
    out += buf;
  }
  return out;
}

}  // namespace akorn
