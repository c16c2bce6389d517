#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include <akorn/checkpoint.hpp>
#include <akorn/kuramoto.hpp>
#include <akorn/sudoku.hpp>
#include <akorn/training.hpp>
#include <akorn/wavesim.hpp>

namespace {

using namespace akorn;

int64_t resolve_threads(int64_t requested) {
  if (requested > 0) return requested;
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int64_t>(hw);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  detail::require(f.good(), "cannot write " + path);
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  detail::require(f.good(), "short write to " + path);
}

struct SimulateArgs {
  int64_t size = 64;
  int64_t n = 4;
  std::string kernel = "gaussian";
  double sigma = 2.0;
  std::string kernel_file;
  int64_t ksize = 9;
  uint64_t kernel_seed = 0;
  std::string mask;
  int64_t steps = 200;
  double gamma = 0.1;
  int64_t frame_stride = 1;
  std::string out_dir;
  uint64_t seed = 0;
};

int cmd_simulate(const SimulateArgs& a) {
  LatticeConfig cfg;
  cfg.height = a.size;
  cfg.width = a.size;
  cfg.n = a.n;
  cfg.kernel = a.kernel;
  cfg.sigma = a.sigma;
  cfg.kernel_file = a.kernel_file;
  cfg.ksize = a.ksize;
  cfg.kernel_seed = a.kernel_seed;
  cfg.mask_path = a.mask;
  cfg.steps = a.steps;
  cfg.gamma = a.gamma;
  cfg.frame_stride = a.frame_stride;

  WaveResult res = simulate(cfg, a.seed);

  std::filesystem::create_directories(a.out_dir);
  write_text((std::filesystem::path(a.out_dir) / "trace.csv").string(),
             trace_csv(res.trace));
  for (const auto& [step, img] : res.frames) {
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%06" PRId64 ".ppm", step);
    write_ppm(img, (std::filesystem::path(a.out_dir) / name).string());
  }
  std::printf("wrote %zu frames and trace.csv to %s\n", res.frames.size(),
              a.out_dir.c_str());
  std::printf("final coherence %.17g\n", res.trace.coherence.back());
  std::printf("final energy %.17g\n", res.trace.energy.back());
  return 0;
}

struct TrainArgs {
  int64_t n_train = 1000;
  int64_t channels = 64;
  int64_t n_rot = 4;
  int64_t t_steps = 16;
  int64_t blocks = 1;
  int64_t heads = 8;
  int64_t norm_groups = 4;
  int64_t epochs = 30;
  double lr = 5e-4;
  int64_t batch = 100;
  uint64_t seed = 0;
  std::string out;
  std::string boards_path;
  std::string loss_csv;
  double grad_clip = 0.0;
  int64_t threads = 0;
  double target_loss = 0.0;
  int64_t max_steps = 0;
  bool n_train_given = false;
};

int cmd_train_sudoku(const TrainArgs& a) {
  Network::Config cfg;
  cfg.channels = a.channels;
  cfg.n = a.n_rot;
  cfg.steps = a.t_steps;
  cfg.blocks = a.blocks;
  cfg.heads = a.heads;
  cfg.norm_groups = a.norm_groups;

  std::vector<Board> boards;
  if (a.boards_path.empty()) {
    uint64_t boards_seed = Rng(a.seed).child(0xb0a7d5ull).next_u64();
    boards = generate_boards(a.n_train, 31, 42, boards_seed);
    std::printf("generated %zu boards (31..42 givens)\n", boards.size());
  } else {
    boards = load_boards(a.boards_path);
    if (a.n_train_given) {
      detail::require(static_cast<int64_t>(boards.size()) >= a.n_train,
                      "boards file holds " + std::to_string(boards.size()) +
                          " boards, --n-train asks for " + std::to_string(a.n_train));
      boards.resize(static_cast<size_t>(a.n_train));
    }
    std::printf("loaded %zu boards from %s\n", boards.size(), a.boards_path.c_str());
  }

  Rng init_rng(a.seed);
  SudokuModel model(cfg, init_rng);
  save_sudoku_model(model, a.out, a.seed, 0);

  int64_t steps_per_epoch = (static_cast<int64_t>(boards.size()) + a.batch - 1) / a.batch;
  TrainConfig tc;
  tc.lr = a.lr;
  tc.batch = a.batch;
  tc.epochs = a.epochs;
  tc.seed = a.seed;
  tc.grad_clip = a.grad_clip;
  tc.threads = resolve_threads(a.threads);
  tc.target_loss = a.target_loss;
  tc.max_steps = a.max_steps;

  TrainResult result = train(
      model.net.params(), static_cast<int64_t>(boards.size()),
      [&](Tape& tape, int64_t ex, Rng& rng) {
        return model.loss(tape, boards[static_cast<size_t>(ex)], rng);
      },
      tc,
      [&](int64_t epoch, double mean_loss) {
        std::printf("epoch %" PRId64 " mean loss %.17g\n", epoch, mean_loss);
        std::fflush(stdout);
        save_sudoku_model(model, a.out, a.seed, (epoch + 1) * steps_per_epoch);
      });

  save_sudoku_model(model, a.out, a.seed, result.steps);

  std::string csv_path = a.loss_csv.empty() ? a.out + ".loss.csv" : a.loss_csv;
  std::string csv = "step,loss\n";
  for (const auto& [step, loss] : result.loss_curve) {
    char row[64];
    std::snprintf(row, sizeof(row), "%" PRId64 ",%.17g\n", step, loss);
    csv += row;
  }
  write_text(csv_path, csv);

  std::printf("trained %" PRId64 " steps%s\n", result.steps,
              result.reached_target ? " (target loss reached)" : "");
  if (!result.loss_curve.empty())
    std::printf("final loss %.17g\n", result.loss_curve.back().second);
  std::printf("checkpoint %s\n", a.out.c_str());
  std::printf("loss csv %s\n", csv_path.c_str());
  return 0;
}

struct EvalArgs {
  std::string ckpt;
  std::string boards_path;
  int64_t n_boards = 100;
  int64_t givens_lo = 17;
  int64_t givens_hi = 25;
  uint64_t boards_seed = 1;
  int64_t k_votes = 1;
  int64_t t_eval = 0;
  uint64_t seed = 0;
  std::string json_out;
  int64_t threads = 0;
};

int cmd_eval_sudoku(const EvalArgs& a) {
  LoadedSudoku loaded = load_sudoku_model(a.ckpt);

  std::vector<Board> boards;
  if (a.boards_path.empty()) {
    boards = generate_boards(a.n_boards, static_cast<int>(a.givens_lo),
                             static_cast<int>(a.givens_hi), a.boards_seed);
  } else {
    boards = load_boards(a.boards_path);
  }

  EvalReport rep = evaluate(loaded.model, boards, a.k_votes, a.t_eval, a.seed,
                            resolve_threads(a.threads));
  std::string json = rep.to_json();
  std::printf("%s\n", json.c_str());
  if (!a.json_out.empty()) write_text(a.json_out, json + "\n");
  return 0;
}

struct LyapunovArgs {
  std::string kind = "a";
  int64_t oscillators = 12;
  int64_t n = 4;
  int64_t steps = 200;
  int64_t seeds = 20;
  double gamma = 0.01;
  double tolerance = 1e-8;
  uint64_t seed = 0;
};

int cmd_lyapunov(const LyapunovArgs& a) {
  LyapunovConfig cfg;
  cfg.kind = a.kind == "a"   ? LyapunovConfig::Case::symmetric_shared
             : a.kind == "b" ? LyapunovConfig::Case::commuting_blocks
                             : LyapunovConfig::Case::asymmetric_control;
  cfg.oscillators = a.oscillators;
  cfg.n = a.n;
  cfg.steps = a.steps;
  cfg.seeds = a.seeds;
  cfg.gamma = a.gamma;
  cfg.tolerance = a.tolerance;
  cfg.seed0 = a.seed;

  LyapunovReport rep = lyapunov_check(cfg);
  std::printf("case %s: %" PRId64 " oscillators, n=%" PRId64 ", %" PRId64
              " steps x %" PRId64 " seeds, gamma %.17g\n",
              a.kind.c_str(), cfg.oscillators, cfg.n, cfg.steps, cfg.seeds, cfg.gamma);
  std::printf("max energy increase %.17g\n", rep.max_increase);
  std::printf("violations %" PRId64 "\n", rep.violations);
  std::printf("commutator frobenius norm %.17g\n", rep.commutator_fro);
  std::printf("commutator min eigenvalue %.17g\n", rep.commutator_min_eig);
  if (!rep.monotone) {
    std::fflush(stdout);
    std::fprintf(stderr, "error: energy increased by %.17g, tolerance %.17g\n",
                 rep.max_increase, cfg.tolerance);
    return 2;
  }
  std::printf("energy descent holds within tolerance %.17g\n", cfg.tolerance);
  return 0;
}

struct GenBoardsArgs {
  int64_t n = 0;
  int64_t givens_lo = 31;
  int64_t givens_hi = 42;
  uint64_t seed = 0;
  std::string out;
};

int cmd_gen_boards(const GenBoardsArgs& a) {
  std::vector<Board> boards = generate_boards(a.n, static_cast<int>(a.givens_lo),
                                              static_cast<int>(a.givens_hi), a.seed);
  save_boards(boards, a.out);
  std::printf("wrote %zu boards to %s\n", boards.size(), a.out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"oscillator network toolkit: lattice simulation, board-completion "
               "training and evaluation, energy-descent diagnostics"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value file; flags given on the command line win");
  app.set_version_flag("--version", "akorn 1.0.0");
  int rc = 0;

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "roll a 2d oscillator lattice and render it");
  s->add_option("--size", sim.size, "lattice side length")->capture_default_str();
  s->add_option("--n", sim.n, "rotating dimensions per site")->capture_default_str();
  s->add_option("--kernel", sim.kernel, "coupling kernel kind")
      ->check(CLI::IsMember({"gaussian", "random", "file"}))
      ->capture_default_str();
  s->add_option("--sigma", sim.sigma, "gaussian kernel width")->capture_default_str();
  s->add_option("--kernel-file", sim.kernel_file, "kernel text file for --kernel file");
  s->add_option("--ksize", sim.ksize, "kernel side length")->capture_default_str();
  s->add_option("--kernel-seed", sim.kernel_seed, "seed for --kernel random")
      ->capture_default_str();
  s->add_option("--mask", sim.mask, "PGM stimulus mask (pixels >= 128 are foreground)");
  s->add_option("--steps", sim.steps, "update steps")->capture_default_str();
  s->add_option("--gamma", sim.gamma, "step size")->capture_default_str();
  s->add_option("--frame-stride", sim.frame_stride, "render every k-th step (0: none)")
      ->capture_default_str();
  s->add_option("--out-dir", sim.out_dir, "directory for frames and trace.csv")
      ->required();
  s->add_option("--seed", sim.seed, "initial state seed")->capture_default_str();
  s->callback([&] { rc = cmd_simulate(sim); });

  TrainArgs tr;
  auto* t = app.add_subcommand("train-sudoku", "train a board-completion network");
  t->add_option("--n-train", tr.n_train, "training boards (generated when --boards is absent)")
      ->capture_default_str();
  t->add_option("--channels", tr.channels, "oscillators per cell")->capture_default_str();
  t->add_option("--n-rot", tr.n_rot, "rotating dimensions per oscillator")
      ->capture_default_str();
  t->add_option("--t-steps", tr.t_steps, "update steps per block at train time")
      ->capture_default_str();
  t->add_option("--blocks", tr.blocks, "network blocks")->capture_default_str();
  t->add_option("--heads", tr.heads, "attention heads")->capture_default_str();
  t->add_option("--norm-groups", tr.norm_groups, "group-norm groups")
      ->capture_default_str();
  t->add_option("--epochs", tr.epochs, "passes over the training boards")
      ->capture_default_str();
  t->add_option("--lr", tr.lr, "Adam learning rate")->capture_default_str();
  t->add_option("--batch", tr.batch, "boards per optimizer step")->capture_default_str();
  t->add_option("--seed", tr.seed, "master seed (init, shuffling, oscillator draws)")
      ->capture_default_str();
  t->add_option("--out", tr.out, "checkpoint path, rewritten every epoch")->required();
  t->add_option("--boards", tr.boards_path, "boards file instead of generated boards");
  t->add_option("--loss-csv", tr.loss_csv, "loss curve path (default: <out>.loss.csv)");
  t->add_option("--grad-clip", tr.grad_clip, "global gradient-norm cap (0: off)")
      ->capture_default_str();
  t->add_option("--threads", tr.threads, "gradient workers (0: hardware)")
      ->capture_default_str();
  t->add_option("--target-loss", tr.target_loss, "stop once batch loss drops below")
      ->capture_default_str();
  t->add_option("--max-steps", tr.max_steps, "hard cap on optimizer steps (0: none)")
      ->capture_default_str();
  t->callback([&] {
    tr.n_train_given = t->count("--n-train") > 0;
    rc = cmd_train_sudoku(tr);
  });

  EvalArgs ev;
  auto* e = app.add_subcommand("eval-sudoku", "evaluate a checkpoint on held-out boards");
  e->add_option("--ckpt", ev.ckpt, "checkpoint to evaluate")->required();
  e->add_option("--boards", ev.boards_path, "boards file (default: generated)");
  e->add_option("--n-boards", ev.n_boards, "boards to generate when --boards is absent")
      ->capture_default_str();
  e->add_option("--givens-lo", ev.givens_lo, "min givens for generated boards")
      ->capture_default_str();
  e->add_option("--givens-hi", ev.givens_hi, "max givens for generated boards")
      ->capture_default_str();
  e->add_option("--boards-seed", ev.boards_seed, "seed for generated boards")
      ->capture_default_str();
  e->add_option("--k-votes", ev.k_votes, "restarts per board, ranked by energy")
      ->capture_default_str();
  e->add_option("--t-eval", ev.t_eval, "update steps at eval time (0: trained count)")
      ->capture_default_str();
  e->add_option("--seed", ev.seed, "seed for restart draws")->capture_default_str();
  e->add_option("--json-out", ev.json_out, "also write the report here");
  e->add_option("--threads", ev.threads, "board workers (0: hardware)")
      ->capture_default_str();
  e->callback([&] { rc = cmd_eval_sudoku(ev); });

  LyapunovArgs ly;
  auto* l = app.add_subcommand("lyapunov-check",
                               "verify energy descent of the update rule");
  l->add_option("--case", ly.kind,
                "a: symmetric coupling, shared rotation; b: commuting block forms; "
                "control: asymmetric coupling, expected to fail")
      ->check(CLI::IsMember({"a", "b", "control"}))
      ->capture_default_str();
  l->add_option("--oscillators", ly.oscillators, "oscillators per trial")
      ->capture_default_str();
  l->add_option("--n", ly.n, "rotating dimensions")->capture_default_str();
  l->add_option("--steps", ly.steps, "update steps per trial")->capture_default_str();
  l->add_option("--seeds", ly.seeds, "independent trials")->capture_default_str();
  l->add_option("--gamma", ly.gamma, "step size")->capture_default_str();
  l->add_option("--tolerance", ly.tolerance, "allowed per-step energy increase")
      ->capture_default_str();
  l->add_option("--seed", ly.seed, "base seed")->capture_default_str();
  l->callback([&] { rc = cmd_lyapunov(ly); });

  GenBoardsArgs gb;
  auto* g = app.add_subcommand("gen-boards", "write unique-solution puzzle boards");
  g->add_option("--n", gb.n, "boards to generate")->required();
  g->add_option("--givens-lo", gb.givens_lo, "min givens")->capture_default_str();
  g->add_option("--givens-hi", gb.givens_hi, "max givens")->capture_default_str();
  g->add_option("--seed", gb.seed, "generator seed")->capture_default_str();
  g->add_option("--out", gb.out, "boards file to write")->required();
  g->callback([&] { rc = cmd_gen_boards(gb); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    int code = app.exit(err);
    return code == 0 ? 0 : 1;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return 2;
  }
  return rc;
}
