#include "akorn/network.hpp"

#include <cmath>

namespace akorn {

namespace {

double softplus_inverse(double y) {
  detail::require(y > 0.0, "step size must be positive");
  return std::log(std::expm1(y));
}

}  // namespace

AKOrNBlock::AKOrNBlock(std::unique_ptr<Coupling> coupling_, int64_t channels_,
                       int64_t n_, int64_t steps_, bool per_channel_omega_,
                       Readout::UMode umode, Rng& rng, double gamma0)
    : coupling(std::move(coupling_)), channels(channels_), n(n_), steps(steps_),
      per_channel_omega(per_channel_omega_),
      readout(umode, Readout::Head::identity, channels_, n_, channels_ * n_, 0, rng) {
  detail::require(steps >= 1, "AKOrNBlock: step count must be at least 1");
  double s = 1.0 / std::sqrt(static_cast<double>(n));
  if (per_channel_omega)
    omega_raw = Param("block.omega", rng.gaussian_tensor({channels, n, n}, s));
  else
    omega_raw = Param("block.omega", rng.gaussian_tensor({n, n}, s));
  rho = Param("block.rho", Tensor::scalar(softplus_inverse(gamma0)));
}

Var AKOrNBlock::gamma(Tape* tape) { return softplus(bind(tape, rho)); }

Omega AKOrNBlock::omega(Tape* tape) {
  Var raw = bind(tape, omega_raw);
  Var anti = per_channel_omega ? sub(raw, permute(raw, {0, 2, 1}))
                               : sub(raw, transpose(raw));
  return Omega(anti, per_channel_omega);
}

AKOrNBlock::Result AKOrNBlock::forward(Tape* tape, const Var& c_prev, const Var& x_prev,
                                       int64_t steps_override, bool record_energy) {
  const int64_t t_run = steps_override > 0 ? steps_override : steps;
  auto drive = [&](const Var& x) { return (*coupling)(tape, x); };
  RolloutResult r =
      rollout(x_prev, drive, c_prev, omega(tape), gamma(tape), t_run, record_energy);
  Var m = readout.magnitudes(tape, r.final_state());
  const int64_t tokens = x_prev.shape()[0];
  Result out;
  out.c_next = reshape(m, {tokens, channels, n});
  out.x_final = r.final_state();
  out.energies = std::move(r.energies);
  return out;
}

std::vector<Param*> AKOrNBlock::params() {
  std::vector<Param*> ps = coupling->params();
  ps.push_back(&omega_raw);
  ps.push_back(&rho);
  for (Param* p : readout.params()) ps.push_back(p);
  return ps;
}

Network::Network(const Config& cfg_, Rng& rng) : cfg(cfg_) {
  detail::require(cfg.blocks >= 1, "Network: need at least one block");
  const int64_t d = cfg.channels * cfg.n;
  if (cfg.vocab > 0)
    embedding = Param("embedding", rng.gaussian_tensor({cfg.vocab, d},
                                                       1.0 / std::sqrt(static_cast<double>(cfg.n))));
  for (int64_t l = 0; l < cfg.blocks; ++l) {
    auto attn = std::make_unique<AttnCoupling>(cfg.channels, cfg.n, cfg.heads,
                                               cfg.tokens, rng);
    blocks.push_back(std::make_unique<AKOrNBlock>(std::move(attn), cfg.channels, cfg.n,
                                                  cfg.steps, cfg.per_channel_omega,
                                                  cfg.umode, rng, cfg.gamma0));
  }
  for (int64_t l = 0; l + 1 < cfg.blocks; ++l) {
    Tensor g(Shape{cfg.channels});
    g.fill(1.0);
    norm_gain.emplace_back("norm.gain." + std::to_string(l), std::move(g));
    norm_bias.emplace_back("norm.bias." + std::to_string(l), Tensor(Shape{cfg.channels}));
  }
  head_w = Param("head.w", rng.gaussian_tensor({cfg.classes, d},
                                               1.0 / std::sqrt(static_cast<double>(d))));
  head_b = Param("head.b", Tensor(Shape{cfg.classes}));
  if (cfg.init == InitMode::learned)
    init_emb = Param("init.emb", rng.sphere_tensor({cfg.channels, cfg.n}));
}

Var Network::encode(Tape* tape, const std::vector<int>& tokens_in) {
  detail::require(embedding.has_value(), "Network: no embedding encoder configured");
  detail::require(static_cast<int64_t>(tokens_in.size()) == cfg.tokens,
                  "Network: expected " + std::to_string(cfg.tokens) + " tokens");
  const int64_t d = cfg.channels * cfg.n;
  auto idx = std::make_shared<std::vector<int64_t>>();
  idx->reserve(static_cast<size_t>(cfg.tokens * d));
  for (int tok : tokens_in) {
    detail::require(tok >= 0 && tok < cfg.vocab, "Network: token out of range");
    for (int64_t e = 0; e < d; ++e) idx->push_back(static_cast<int64_t>(tok) * d + e);
  }
  return reshape(take(bind(tape, *embedding), idx, {cfg.tokens, d}),
                 {cfg.tokens, cfg.channels, cfg.n});
}

Var Network::init_state(Tape* tape, const Var& c0, Rng& rng,
                        const std::vector<double>* row_mask) {
  return init_oscillators(cfg.init, c0, rng, tape, row_mask,
                          init_emb ? &*init_emb : nullptr);
}

Network::Result Network::forward(Tape* tape, const Var& c0, const Var& x0,
                                 int64_t steps_override, bool record_energy) {
  Var c = c0, x = x0;
  Result out;
  for (size_t l = 0; l < blocks.size(); ++l) {
    AKOrNBlock::Result br =
        blocks[l]->forward(tape, c, x, steps_override, record_energy);
    c = br.c_next;
    x = br.x_final;
    out.energies.push_back(std::move(br.energies));
    if (l + 1 < blocks.size()) {
      // per-token group normalization of the stimulus
      auto gidx = std::make_shared<std::vector<int64_t>>();
      gidx->reserve(static_cast<size_t>(cfg.tokens * cfg.channels));
      for (int64_t t = 0; t < cfg.tokens; ++t)
        for (int64_t ch = 0; ch < cfg.channels; ++ch) gidx->push_back(ch);
      Var gain = take(bind(tape, norm_gain[l]), gidx, {cfg.tokens * cfg.channels});
      Var bias = take(bind(tape, norm_bias[l]), gidx, {cfg.tokens * cfg.channels});
      Var flat = reshape(c, {cfg.tokens * cfg.channels, cfg.n});
      flat = group_norm(flat, cfg.tokens * cfg.channels, cfg.tokens * cfg.norm_groups,
                        1e-6, gain, bias);
      c = reshape(flat, {cfg.tokens, cfg.channels, cfg.n});
    }
  }
  Var flat = reshape(c, {cfg.tokens, cfg.channels * cfg.n});
  out.logits = add_rowvec(matmul_nt(relu(flat), bind(tape, head_w)), bind(tape, head_b));
  out.c_final = c;
  return out;
}

std::vector<Param*> Network::params() {
  std::vector<Param*> ps;
  if (embedding) ps.push_back(&*embedding);
  if (init_emb) ps.push_back(&*init_emb);
  for (auto& b : blocks)
    for (Param* p : b->params()) ps.push_back(p);
  for (auto& p : norm_gain) ps.push_back(&p);
  for (auto& p : norm_bias) ps.push_back(&p);
  ps.push_back(&head_w);
  ps.push_back(&head_b);
  return ps;
}

}  // namespace akorn
