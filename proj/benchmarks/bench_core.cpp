#include <benchmark/benchmark.h>

#include <akorn/connectivity.hpp>
#include <akorn/kuramoto.hpp>
#include <akorn/network.hpp>
#include <akorn/ops.hpp>
#include <akorn/rng.hpp>
#include <akorn/sudoku.hpp>

using namespace akorn;

namespace {

void bm_matmul(benchmark::State& state) {
  int64_t n = state.range(0);
  Rng rng(1);
  Tensor a = rng.gaussian_tensor({n, n});
  Tensor b = rng.gaussian_tensor({n, n});
  for (auto _ : state) {
    Tensor c = matmul(Var(a), Var(b)).value();
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * 2 * n * n * n);
}

void bm_kuramoto_step(benchmark::State& state) {
  int64_t rows = state.range(0);
  int64_t n = 4;
  Rng rng(2);
  Tensor x = rng.sphere_tensor({rows, n});
  Tensor drive = rng.gaussian_tensor({rows, n});
  Omega omega(Var(rng.gaussian_tensor({n, n})), false);
  for (auto _ : state) {
    Tensor next = kuramoto_step(Var(x), Var(drive), omega, 0.1).value();
    benchmark::DoNotOptimize(next.data());
  }
  state.SetItemsProcessed(state.iterations() * rows);
}

void bm_attention_drive(benchmark::State& state) {
  int64_t channels = state.range(0);
  int64_t tokens = 81, n = 4;
  Rng rng(3);
  AttnCoupling attn(channels, n, 4, tokens, rng);
  Tensor x = rng.sphere_tensor({tokens, channels, n});
  for (auto _ : state) {
    Tensor d = attn(nullptr, Var(x)).value();
    benchmark::DoNotOptimize(d.data());
  }
  state.SetItemsProcessed(state.iterations() * tokens * channels);
}

void bm_board_forward(benchmark::State& state) {
  Network::Config cfg;
  cfg.channels = state.range(0);
  cfg.steps = 16;
  Rng rng(4);
  SudokuModel model(cfg, rng);
  Board b = generate_boards(1, 30, 40, 5)[0];
  int64_t i = 0;
  for (auto _ : state) {
    Rng restart = restart_rng(6, 0, i++);
    SudokuModel::Prediction p = model.predict(b, restart);
    benchmark::DoNotOptimize(p.digits.data());
  }
}

void bm_board_loss_backward(benchmark::State& state) {
  Network::Config cfg;
  cfg.channels = state.range(0);
  cfg.steps = 16;
  Rng rng(7);
  SudokuModel model(cfg, rng);
  Board b = generate_boards(1, 30, 40, 5)[0];
  std::vector<Param*> params = model.net.params();
  int64_t i = 0;
  for (auto _ : state) {
    Tape tape;
    for (Param* p : params) tape.use(*p);
    Rng draw = restart_rng(8, 0, i++);
    Var loss = model.loss(tape, b, draw);
    GradSink sink;
    tape.backward(loss, &sink);
    benchmark::DoNotOptimize(sink.size());
  }
}

}  // namespace

BENCHMARK(bm_matmul)->Arg(64)->Arg(256)->Unit(benchmark::kMicrosecond);
BENCHMARK(bm_kuramoto_step)->Arg(1024)->Arg(16384)->Unit(benchmark::kMicrosecond);
BENCHMARK(bm_attention_drive)->Arg(16)->Arg(64)->Unit(benchmark::kMicrosecond);
BENCHMARK(bm_board_forward)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_board_loss_backward)->Arg(16)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
