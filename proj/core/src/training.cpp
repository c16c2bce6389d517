#include "akorn/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "akorn/parallel.hpp"

namespace akorn {

Adam::Adam(std::vector<Param*> ps, AdamConfig cfg_) : params(std::move(ps)), cfg(cfg_) {
  detail::require(cfg.lr >= 0.0 && cfg.eps > 0.0, "Adam: bad config");
  detail::require(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0 && cfg.beta2 >= 0.0 && cfg.beta2 < 1.0,
                  "Adam: betas must lie in [0,1)");
  m.reserve(params.size());
  v.reserve(params.size());
  for (Param* p : params) {
    m.emplace_back(p->value.shape());
    v.emplace_back(p->value.shape());
  }
}

void Adam::step() {
  ++t;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  for (size_t i = 0; i < params.size(); ++i) {
    Param* p = params[i];
    if (!p->grad.all_finite())
      detail::fail("Adam: non-finite gradient for parameter '" + p->name + "' at step " +
                   std::to_string(t));
    double* pm = m[i].data();
    double* pv = v[i].data();
    double* pw = p->value.data();
    const double* pg = p->grad.data();
    for (int64_t e = 0; e < p->value.numel(); ++e) {
      pm[e] = cfg.beta1 * pm[e] + (1.0 - cfg.beta1) * pg[e];
      pv[e] = cfg.beta2 * pv[e] + (1.0 - cfg.beta2) * pg[e] * pg[e];
      double mhat = pm[e] / bc1;
      double vhat = pv[e] / bc2;
      pw[e] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

void Adam::zero_grad() {
  for (Param* p : params) p->zero_grad();
}

double clip_global_norm(const std::vector<Param*>& ps, double max_norm) {
  detail::require(max_norm > 0.0, "clip_global_norm: max_norm must be positive");
  double ss = 0.0;
  for (Param* p : ps)
    for (int64_t e = 0; e < p->grad.numel(); ++e) ss += p->grad[e] * p->grad[e];
  double norm = std::sqrt(ss);
  if (norm > max_norm) {
    double s = max_norm / norm;
    for (Param* p : ps)
      for (int64_t e = 0; e < p->grad.numel(); ++e) p->grad[e] *= s;
  }
  return norm;
}

namespace {

void add_into(Tensor& dst, const Tensor& src) {
  double* pd = dst.data();
  const double* ps = src.data();
  for (int64_t e = 0; e < dst.numel(); ++e) pd[e] += ps[e];
}

}  // namespace

TrainResult train(const std::vector<Param*>& params, int64_t n_examples,
                  const ExampleLoss& example_loss, const TrainConfig& cfg,
                  const EpochHook& on_epoch) {
  detail::require(n_examples > 0, "train: no examples");
  detail::require(cfg.batch >= 1, "train: batch size must be positive");
  detail::require(cfg.epochs >= 0, "train: negative epoch count");
  detail::require(!params.empty(), "train: no parameters");

  Adam opt(params, AdamConfig{cfg.lr, 0.9, 0.999, 1e-8});
  std::vector<int64_t> order(static_cast<size_t>(n_examples));
  std::iota(order.begin(), order.end(), 0);

  TrainResult out;
  int64_t step = 0;
  bool stop = false;
  for (int64_t epoch = 0; epoch < cfg.epochs && !stop; ++epoch) {
    Rng shuffle_rng = Rng(cfg.seed).child(0x50c1a1ull, static_cast<uint64_t>(epoch));
    for (int64_t i = n_examples - 1; i > 0; --i)
      std::swap(order[static_cast<size_t>(i)],
                order[static_cast<size_t>(shuffle_rng.uniform_int(i + 1))]);

    double epoch_loss = 0.0;
    int64_t epoch_batches = 0;
    for (int64_t start = 0; start < n_examples && !stop; start += cfg.batch) {
      const int64_t bsz = std::min(cfg.batch, n_examples - start);
      // fixed chunk grid: the gradient sum order never depends on threads
      const int64_t n_chunks = std::min<int64_t>(bsz, 16);
      std::vector<GradSink> sinks(static_cast<size_t>(n_chunks));
      std::vector<double> losses(static_cast<size_t>(bsz));
      parallel_for(n_chunks, cfg.threads, [&](int64_t c) {
        const int64_t lo = bsz * c / n_chunks, hi = bsz * (c + 1) / n_chunks;
        for (int64_t b = lo; b < hi; ++b) {
          const int64_t ex = order[static_cast<size_t>(start + b)];
          Rng ex_rng = Rng(cfg.seed).child(0xe7a3ull, static_cast<uint64_t>(epoch),
                                           static_cast<uint64_t>(ex));
          Tape tape;
          Var l = example_loss(tape, ex, ex_rng);
          losses[static_cast<size_t>(b)] = l.value().item();
          tape.backward(l, &sinks[static_cast<size_t>(c)]);
        }
      });

      double mean_loss = 0.0;
      for (double l : losses) mean_loss += l;
      mean_loss /= static_cast<double>(bsz);
      ++step;
      if (!std::isfinite(mean_loss))
        detail::fail("training diverged: loss is not finite at step " + std::to_string(step));

      opt.zero_grad();
      for (const GradSink& sink : sinks)
        for (Param* p : params) {
          auto it = sink.find(p);
          if (it != sink.end()) add_into(p->grad, it->second);
        }
      const double inv_b = 1.0 / static_cast<double>(bsz);
      for (Param* p : params)
        for (int64_t e = 0; e < p->grad.numel(); ++e) p->grad[e] *= inv_b;
      if (cfg.grad_clip > 0.0) clip_global_norm(params, cfg.grad_clip);
      opt.step();

      out.loss_curve.emplace_back(step, mean_loss);
      epoch_loss += mean_loss;
      ++epoch_batches;
      if (cfg.target_loss > 0.0 && mean_loss < cfg.target_loss) {
        out.reached_target = true;
        stop = true;
      }
      if (cfg.max_steps > 0 && step >= cfg.max_steps) stop = true;
    }
    if (!stop && on_epoch) on_epoch(epoch, epoch_loss / static_cast<double>(epoch_batches));
  }
  out.steps = step;
  return out;
}

}  // namespace akorn
