#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "akorn/ops.hpp"
#include "akorn/rng.hpp"

namespace akorn {

// Proj_x(y) = y - <y,x> x on each trailing-axis slice (x rows are unit norm)
Var project(const Var& x, const Var& y);

// Natural-frequency rotation. Shared: one antisymmetric [N,N] applied to all
// rows. Per-channel: [C,N,N] applied to states shaped [...,C,N], matrix c to
// every row with channel index c.
struct Omega {
  Var mat;
  bool per_channel = false;

  Omega() = default;
  Omega(Var m, bool per_ch) : mat(std::move(m)), per_channel(per_ch) {}
  bool has() const { return mat.defined(); }
  Var apply(const Var& x) const;
};

// One discrete update x <- Pi[x + gamma * (Omega x + Proj_x(drive))].
// `drive` is the full conditioned input (coupling output plus stimulus).
Var kuramoto_step(const Var& x, const Var& drive, const Omega& omega, const Var& gamma);
Var kuramoto_step(const Var& x, const Var& drive, const Omega& omega, double gamma);

// E = -1/2 sum_i <x_i, (Jx)_i> - sum_i <c_i, x_i>
Var energy(const Var& x, const Var& coupling_drive, const Var& stimulus);
double energy_value(const Tensor& x, const Tensor& coupling_drive, const Tensor& stimulus);

struct RolloutResult {
  std::vector<Var> states;       // x_0 .. x_T
  std::vector<double> energies;  // E(x_t), t = 0..T-1, empty unless recorded
  const Var& final_state() const { return states.back(); }
};

// Unrolls T steps, re-evaluating `coupling` on the current state each step.
// Energies share that evaluation, so recording them costs nothing extra.
RolloutResult rollout(const Var& x0, const std::function<Var(const Var&)>& coupling,
                      const Var& stimulus, const Omega& omega, const Var& gamma,
                      int64_t steps, bool record_energy = false);

// Euler update of the classical phase model:
// theta_i' = theta_i + gamma * (omega_i + sum_j J[i,j] sin(theta_j - theta_i))
std::vector<double> scalar_kuramoto_step(const std::vector<double>& theta,
                                         const Tensor& coupling,
                                         const std::vector<double>& omega, double gamma);

// max over rows of | ||x_r|| - 1 |
double max_unit_norm_deviation(const Tensor& x);

// ---------------------------------------------------------------------------
// energy-descent harness

struct LyapunovConfig {
  enum class Case {
    symmetric_shared,   // scalar symmetric coupling, one shared Omega, Omega c = 0
    commuting_blocks,   // coupling k (x) I with Omega I (x) B: commutator vanishes
    asymmetric_control  // asymmetric coupling: no descent guarantee, report only
  };
  Case kind = Case::symmetric_shared;
  int64_t oscillators = 12;
  int64_t n = 4;
  int64_t steps = 200;
  int64_t seeds = 20;
  double gamma = 0.01;
  double tolerance = 1e-8;  // allowed per-step energy increase
  uint64_t seed0 = 0;
};

struct LyapunovReport {
  bool monotone = false;       // every per-step delta <= tolerance
  double max_increase = 0.0;   // max over seeds and steps of E_{t+1} - E_t
  double commutator_fro = 0.0;     // |J Omega - Omega J|_F of the dense block forms
  double commutator_min_eig = 0.0;  // smallest eigenvalue of the (symmetric) commutator
  int64_t violations = 0;
};

LyapunovReport lyapunov_check(const LyapunovConfig& cfg);

}  // namespace akorn
