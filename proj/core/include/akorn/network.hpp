#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "akorn/connectivity.hpp"
#include "akorn/kuramoto.hpp"
#include "akorn/readout.hpp"

namespace akorn {

// One oscillator layer: T update steps driven by a learned coupling, a
// learned antisymmetric natural-frequency term, and a learned step size,
// followed by the phase-invariant readout that produces the next stimulus.
struct AKOrNBlock {
  AKOrNBlock(std::unique_ptr<Coupling> coupling, int64_t channels, int64_t n,
             int64_t steps, bool per_channel_omega, Readout::UMode umode, Rng& rng,
             double gamma0 = 1.0);

  struct Result {
    Var c_next;  // [L,C,N]
    Var x_final;
    std::vector<double> energies;  // pre-step energies, length = steps taken
  };

  // steps_override > 0 runs that many steps instead of the trained count
  Result forward(Tape* tape, const Var& c_prev, const Var& x_prev,
                 int64_t steps_override = 0, bool record_energy = false);

  Var gamma(Tape* tape);    // softplus of the raw step-size parameter
  Omega omega(Tape* tape);  // antisymmetrized on the fly

  std::vector<Param*> params();

  std::unique_ptr<Coupling> coupling;
  int64_t channels, n, steps;
  bool per_channel_omega;
  Param omega_raw;  // [C,N,N] or [N,N]; used as raw - raw^T
  Param rho;        // scalar, gamma = softplus(rho)
  Readout readout;  // identity head: the next stimulus is the magnitude map
};

// Encoder -> blocks -> head. The stimulus between blocks is group-normalized
// per token (except after the last block), and each block starts from the
// previous block's final oscillators.
struct Network {
  struct Config {
    int64_t channels = 64;
    int64_t n = 4;
    int64_t tokens = 81;
    int64_t steps = 16;
    int64_t blocks = 1;
    int64_t heads = 8;
    int64_t classes = 9;
    int64_t vocab = 10;  // 0 disables the token-embedding encoder
    int64_t norm_groups = 4;
    bool per_channel_omega = true;
    Readout::UMode umode = Readout::UMode::full;
    InitMode init = InitMode::mixed;
    double gamma0 = 1.0;
  };

  Network(const Config& cfg, Rng& rng);

  struct Result {
    Var logits;  // [L,classes]
    Var c_final;
    std::vector<std::vector<double>> energies;  // per block
  };

  // tokens -> stimulus via the embedding table
  Var encode(Tape* tape, const std::vector<int>& tokens_in);
  // row_mask: see init_oscillators (mixed mode)
  Var init_state(Tape* tape, const Var& c0, Rng& rng,
                 const std::vector<double>* row_mask = nullptr);
  Result forward(Tape* tape, const Var& c0, const Var& x0,
                 int64_t steps_override = 0, bool record_energy = false);

  std::vector<Param*> params();

  Config cfg;
  std::optional<Param> embedding;  // [vocab, C*N]
  std::vector<std::unique_ptr<AKOrNBlock>> blocks;
  std::vector<Param> norm_gain, norm_bias;  // per inter-block normalization, [C]
  Param head_w, head_b;                     // [classes, C*N], [classes]
  std::optional<Param> init_emb;            // learned init mode, [C,N]
};

}  // namespace akorn
