#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "akorn/rng.hpp"
#include "akorn/tape.hpp"

namespace akorn {

struct AdamConfig {
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction and no weight decay. step() consumes
// Param::grad and throws if any gradient is not finite.
struct Adam {
  explicit Adam(std::vector<Param*> ps, AdamConfig cfg = {});

  void step();
  void zero_grad();

  std::vector<Param*> params;
  AdamConfig cfg;
  int64_t t = 0;
  std::vector<Tensor> m, v;
};

// Scales every gradient by the same factor so their joint L2 norm is at
// most max_norm. Returns the pre-clip norm.
double clip_global_norm(const std::vector<Param*>& ps, double max_norm);

struct TrainConfig {
  double lr = 5e-4;
  int64_t batch = 100;
  int64_t epochs = 30;
  uint64_t seed = 0;
  double grad_clip = 0.0;   // 0 disables clipping
  int64_t threads = 1;
  double target_loss = 0.0;  // >0: stop once a batch loss drops below this
  int64_t max_steps = 0;     // >0: hard cap on optimizer steps
};

struct TrainResult {
  std::vector<std::pair<int64_t, double>> loss_curve;  // (step, batch mean loss)
  int64_t steps = 0;
  bool reached_target = false;
};

// Builds one example's scalar loss on the given tape. The rng passed in is
// derived from (seed, epoch, example index), so per-example randomness never
// depends on batch composition or worker count.
using ExampleLoss = std::function<Var(Tape&, int64_t example, Rng&)>;
using EpochHook = std::function<void(int64_t epoch, double mean_loss)>;

// Mini-batch training over examples [0, n_examples): shuffled each epoch
// with a seeded rng, per-example graphs, gradients averaged over the batch.
// Per-example gradients are summed over a fixed chunk grid in index order,
// so the result is bit-identical for any thread count. A non-finite loss or
// gradient aborts with std::runtime_error naming the failing step; callers
// keep whatever checkpoint they last saved.
TrainResult train(const std::vector<Param*>& params, int64_t n_examples,
                  const ExampleLoss& example_loss, const TrainConfig& cfg,
                  const EpochHook& on_epoch = {});

}  // namespace akorn
