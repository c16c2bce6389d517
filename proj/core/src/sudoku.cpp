#include "akorn/sudoku.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "akorn/ops.hpp"
#include "akorn/parallel.hpp"

namespace akorn {

namespace {

constexpr uint16_t kAllDigits = 0x1FF;

int box_of(int r, int c) { return (r / 3) * 3 + c / 3; }

struct CountSolver {
  uint16_t rows[9] = {}, cols[9] = {}, boxes[9] = {};
  std::array<int, 81> grid{};
  int limit = 2;
  int64_t budget = 0;
  int found = 0;
  bool exhausted = false;

  bool place_givens(const std::array<int, 81>& givens) {
    grid = givens;
    for (int i = 0; i < 81; ++i) {
      int d = grid[i];
      if (d == 0) continue;
      detail::require(d >= 1 && d <= 9, "count_solutions: digit out of range");
      int r = i / 9, c = i % 9, b = box_of(r, c);
      auto bit = static_cast<uint16_t>(1u << (d - 1));
      if ((rows[r] | cols[c] | boxes[b]) & bit) return false;
      rows[r] |= bit;
      cols[c] |= bit;
      boxes[b] |= bit;
    }
    return true;
  }

  void search() {
    if (--budget < 0) {
      exhausted = true;
      return;
    }
    // most-constrained blank first
    int best = -1, best_n = 10;
    uint16_t best_free = 0;
    for (int i = 0; i < 81; ++i) {
      if (grid[i]) continue;
      int r = i / 9, c = i % 9, b = box_of(r, c);
      auto free = static_cast<uint16_t>(~(rows[r] | cols[c] | boxes[b]) & kAllDigits);
      int nf = std::popcount(free);
      if (nf < best_n) {
        best = i;
        best_n = nf;
        best_free = free;
        if (nf <= 1) break;
      }
    }
    if (best == -1) {
      ++found;
      return;
    }
    if (best_n == 0) return;
    int r = best / 9, c = best % 9, b = box_of(r, c);
    for (int d = 0; d < 9; ++d) {
      auto bit = static_cast<uint16_t>(1u << d);
      if (!(best_free & bit)) continue;
      grid[best] = d + 1;
      rows[r] |= bit;
      cols[c] |= bit;
      boxes[b] |= bit;
      search();
      grid[best] = 0;
      rows[r] &= static_cast<uint16_t>(~bit);
      cols[c] &= static_cast<uint16_t>(~bit);
      boxes[b] &= static_cast<uint16_t>(~bit);
      if (exhausted || found >= limit) return;
    }
  }
};

bool fill_from(std::array<int, 81>& grid, uint16_t* rows, uint16_t* cols, uint16_t* boxes,
               int i, Rng& rng) {
  if (i == 81) return true;
  int r = i / 9, c = i % 9, b = box_of(r, c);
  auto free = static_cast<uint16_t>(~(rows[r] | cols[c] | boxes[b]) & kAllDigits);
  int digits[9];
  int nd = 0;
  for (int d = 0; d < 9; ++d)
    if (free & (1u << d)) digits[nd++] = d;
  for (int j = nd - 1; j > 0; --j)
    std::swap(digits[j], digits[rng.uniform_int(j + 1)]);
  for (int j = 0; j < nd; ++j) {
    int d = digits[j];
    auto bit = static_cast<uint16_t>(1u << d);
    grid[i] = d + 1;
    rows[r] |= bit;
    cols[c] |= bit;
    boxes[b] |= bit;
    if (fill_from(grid, rows, cols, boxes, i + 1, rng)) return true;
    grid[i] = 0;
    rows[r] &= static_cast<uint16_t>(~bit);
    cols[c] &= static_cast<uint16_t>(~bit);
    boxes[b] &= static_cast<uint16_t>(~bit);
  }
  return false;
}

std::array<int, 81> random_full_grid(Rng& rng) {
  std::array<int, 81> grid{};
  uint16_t rows[9] = {}, cols[9] = {}, boxes[9] = {};
  bool ok = fill_from(grid, rows, cols, boxes, 0, rng);
  detail::require(ok, "generate_boards: grid fill failed");
  return grid;
}

void append_digits(std::string& out, const std::array<int, 81>& grid) {
  for (int d : grid) out.push_back(static_cast<char>('0' + d));
}

[[noreturn]] void line_fail(const std::string& path, int64_t line, const std::string& what) {
  detail::fail("boards file " + path + " line " + std::to_string(line) + ": " + what);
}

}  // namespace

int given_count(const Board& b) {
  int n = 0;
  for (int d : b.givens) n += d != 0;
  return n;
}

int grid_violations(const std::array<int, 81>& grid) {
  int bad = 0;
  auto unit_ok = [&](int base, int step_small, int step_big) {
    uint16_t seen = 0;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        int d = grid[base + a * step_big + b * step_small];
        if (d < 1 || d > 9) return false;
        seen |= static_cast<uint16_t>(1u << (d - 1));
      }
    return seen == kAllDigits;
  };
  for (int r = 0; r < 9; ++r) bad += !unit_ok(r * 9, 1, 3);
  for (int c = 0; c < 9; ++c) bad += !unit_ok(c, 9, 27);
  for (int b = 0; b < 9; ++b) bad += !unit_ok((b / 3) * 27 + (b % 3) * 3, 1, 9);
  return bad;
}

bool board_valid(const Board& b) {
  if (grid_violations(b.solution) != 0) return false;
  for (int i = 0; i < 81; ++i) {
    if (b.givens[i] < 0 || b.givens[i] > 9) return false;
    if (b.givens[i] != 0 && b.givens[i] != b.solution[i]) return false;
  }
  return true;
}

int count_solutions(const std::array<int, 81>& givens, int limit, int64_t node_budget) {
  detail::require(limit >= 1, "count_solutions: limit must be positive");
  detail::require(node_budget > 0, "count_solutions: node budget must be positive");
  CountSolver s;
  s.limit = limit;
  s.budget = node_budget;
  if (!s.place_givens(givens)) return 0;
  s.search();
  if (s.exhausted) return -1;
  return s.found;
}

std::vector<Board> generate_boards(int64_t n, int lo_givens, int hi_givens, uint64_t seed) {
  detail::require(n >= 0, "generate_boards: negative count");
  detail::require(1 <= lo_givens && lo_givens <= hi_givens && hi_givens <= 81,
                  "generate_boards: given-count range must satisfy 1 <= lo <= hi <= 81");
  std::vector<Board> out;
  out.reserve(static_cast<size_t>(n));
  for (int64_t b = 0; b < n; ++b) {
    for (uint64_t attempt = 0;; ++attempt) {
      Rng rng = Rng(seed).child(0xb0a2d5ull, static_cast<uint64_t>(b), attempt);
      Board board;
      board.solution = random_full_grid(rng);
      board.givens = board.solution;
      int count = 81;
      const int target =
          lo_givens + static_cast<int>(rng.uniform_int(hi_givens - lo_givens + 1));

      std::array<int, 81> order{};
      for (int i = 0; i < 81; ++i) order[static_cast<size_t>(i)] = i;
      for (int i = 80; i > 0; --i)
        std::swap(order[static_cast<size_t>(i)],
                  order[static_cast<size_t>(rng.uniform_int(i + 1))]);

      for (int idx : order) {
        if (count == target) break;
        int kept = board.givens[idx];
        board.givens[idx] = 0;
        if (count_solutions(board.givens, 2) == 1) {
          --count;
        } else {
          board.givens[idx] = kept;
        }
      }
      if (count <= hi_givens) {
        out.push_back(board);
        break;
      }
    }
  }
  return out;
}

std::vector<Board> load_boards(const std::string& path) {
  std::ifstream in(path);
  detail::require(in.good(), "cannot open boards file " + path);
  std::vector<Board> out;
  std::string line;
  int64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.size() != 163) line_fail(path, lineno, "expected 81 digits, ',', 81 digits");
    if (line[81] != ',') line_fail(path, lineno, "missing ',' after the givens");
    Board b;
    for (int i = 0; i < 81; ++i) {
      char g = line[static_cast<size_t>(i)];
      char s = line[static_cast<size_t>(82 + i)];
      if (g < '0' || g > '9') line_fail(path, lineno, "given digits must be 0..9");
      if (s < '1' || s > '9') line_fail(path, lineno, "solution digits must be 1..9");
      b.givens[i] = g - '0';
      b.solution[i] = s - '0';
    }
    if (grid_violations(b.solution) != 0)
      line_fail(path, lineno, "solution breaks a row, column, or box");
    if (!board_valid(b)) line_fail(path, lineno, "givens contradict the solution");
    out.push_back(b);
  }
  return out;
}

void save_boards(const std::vector<Board>& boards, const std::string& path) {
  for (size_t i = 0; i < boards.size(); ++i)
    detail::require(board_valid(boards[i]),
                    "save_boards: board " + std::to_string(i) + " is invalid");
  std::ofstream out(path);
  detail::require(out.good(), "cannot write boards file " + path);
  std::string buf;
  buf.reserve(boards.size() * 164);
  for (const Board& b : boards) {
    append_digits(buf, b.givens);
    buf.push_back(',');
    append_digits(buf, b.solution);
    buf.push_back('\n');
  }
  out << buf;
  detail::require(out.good(), "short write to boards file " + path);
}

SudokuModel::SudokuModel(const Network::Config& cfg, Rng& rng) : net(cfg, rng) {
  detail::require(cfg.tokens == 81 && cfg.classes == 9 && cfg.vocab == 10,
                  "SudokuModel: needs 81 tokens, 9 classes, vocabulary 10");
}

std::vector<double> SudokuModel::given_row_mask(const Board& b) const {
  std::vector<double> mask(static_cast<size_t>(81 * net.cfg.channels), 0.0);
  for (int i = 0; i < 81; ++i)
    if (b.givens[i] != 0)
      for (int64_t c = 0; c < net.cfg.channels; ++c)
        mask[static_cast<size_t>(i * net.cfg.channels + c)] = 1.0;
  return mask;
}

Var SudokuModel::loss(Tape& tape, const Board& b, Rng& rng) {
  std::vector<int> tokens(b.givens.begin(), b.givens.end());
  Var c0 = net.encode(&tape, tokens);
  std::vector<double> mask = given_row_mask(b);
  Var x0 = net.init_state(&tape, c0, rng, &mask);
  Var logits = net.forward(&tape, c0, x0).logits;
  std::vector<int> targets(81);
  for (int i = 0; i < 81; ++i) {
    detail::require(b.solution[i] >= 1 && b.solution[i] <= 9,
                    "SudokuModel: solution digit out of range");
    targets[static_cast<size_t>(i)] = b.solution[i] - 1;
  }
  return cross_entropy_logits(logits, targets);
}

SudokuModel::Prediction SudokuModel::predict(const Board& b, Rng& rng, int64_t t_eval) {
  std::vector<int> tokens(b.givens.begin(), b.givens.end());
  Var c0 = net.encode(nullptr, tokens);
  std::vector<double> mask = given_row_mask(b);
  Var x0 = net.init_state(nullptr, c0, rng, &mask);
  Network::Result res = net.forward(nullptr, c0, x0, t_eval, true);

  Prediction pred;
  const Tensor& logits = res.logits.value();
  for (int i = 0; i < 81; ++i) {
    int best = 0;
    double best_v = logits[i * 9];
    for (int d = 1; d < 9; ++d) {
      double v = logits[i * 9 + d];
      if (v > best_v) {
        best = d;
        best_v = v;
      }
    }
    pred.digits[i] = best + 1;
  }
  for (const std::vector<double>& block : res.energies)
    for (double e : block) pred.total_energy += e;
  if (!res.energies.empty()) pred.energies = res.energies.front();
  return pred;
}

Rng restart_rng(uint64_t seed, int64_t board_idx, int64_t restart) {
  return Rng(seed).child(static_cast<uint64_t>(board_idx), static_cast<uint64_t>(restart));
}

VoteResult energy_vote(SudokuModel& model, const Board& b, int64_t k, int64_t t_eval,
                       uint64_t seed, int64_t board_idx) {
  detail::require(k >= 1, "energy_vote: needs at least one restart");
  VoteResult out;
  out.candidates.reserve(static_cast<size_t>(k));
  out.energies.reserve(static_cast<size_t>(k));
  for (int64_t r = 0; r < k; ++r) {
    Rng rng = restart_rng(seed, board_idx, r);
    SudokuModel::Prediction pred = model.predict(b, rng, t_eval);
    out.candidates.push_back(pred.digits);
    out.energies.push_back(pred.total_energy);
  }
  out.best = 0;
  for (int64_t r = 1; r < k; ++r)
    if (out.energies[static_cast<size_t>(r)] < out.energies[static_cast<size_t>(out.best)])
      out.best = r;
  out.vote = out.candidates[static_cast<size_t>(out.best)];
  for (int i = 0; i < 81; ++i) {
    int votes[10] = {};
    for (const auto& cand : out.candidates) ++votes[cand[i]];
    int best_d = 1;
    for (int d = 2; d <= 9; ++d)
      if (votes[d] > votes[best_d]) best_d = d;
    out.majority[i] = best_d;
  }
  return out;
}

double binomial_one_sided_p(int64_t x, int64_t n) {
  detail::require(n >= 0 && x <= n, "binomial_one_sided_p: needs 0 <= x <= n");
  if (x <= 0) return 1.0;
  double p = 0.0;
  const double log_half = std::log(0.5);
  for (int64_t j = x; j <= n; ++j) {
    double log_c = std::lgamma(static_cast<double>(n) + 1.0) -
                   std::lgamma(static_cast<double>(j) + 1.0) -
                   std::lgamma(static_cast<double>(n - j) + 1.0);
    p += std::exp(log_c + static_cast<double>(n) * log_half);
  }
  return std::min(1.0, p);
}

std::string EvalReport::to_json() const {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["n"] = n;
  j["board_acc"] = board_acc;
  j["cell_acc"] = cell_acc;
  j["violations"] = violations;
  j["K"] = k;
  j["T_eval"] = t_eval;
  j["seed"] = seed;
  j["extras"] = {
      {"board_acc_single", board_acc_single},
      {"cell_acc_single", cell_acc_single},
      {"board_acc_majority", board_acc_majority},
      {"sign_test",
       {{"boards", sign_boards}, {"correct_lower", sign_lower}, {"p_value", sign_p}}},
  };
  return j.dump(2);
}

EvalReport evaluate(SudokuModel& model, const std::vector<Board>& boards, int64_t k,
                    int64_t t_eval, uint64_t seed, int64_t threads) {
  detail::require(!boards.empty(), "evaluate: no boards");
  detail::require(k >= 1, "evaluate: needs at least one restart");
  const auto n = static_cast<int64_t>(boards.size());

  std::vector<VoteResult> results(boards.size());
  parallel_for(n, threads, [&](int64_t i) {
    results[static_cast<size_t>(i)] =
        energy_vote(model, boards[static_cast<size_t>(i)], k, t_eval, seed, i);
  });

  EvalReport rep;
  rep.n = n;
  rep.k = k;
  rep.t_eval = t_eval > 0 ? t_eval : model.net.cfg.steps;
  rep.seed = seed;

  int64_t boards_ok = 0, cells_ok = 0, single_ok = 0, single_cells_ok = 0, majority_ok = 0;
  for (int64_t i = 0; i < n; ++i) {
    const Board& b = boards[static_cast<size_t>(i)];
    const VoteResult& r = results[static_cast<size_t>(i)];
    int64_t correct = 0;
    for (int c = 0; c < 81; ++c) correct += r.vote[c] == b.solution[c];
    cells_ok += correct;
    boards_ok += correct == 81;
    rep.violations += grid_violations(r.vote);

    int64_t first_correct = 0;
    for (int c = 0; c < 81; ++c) first_correct += r.candidates[0][c] == b.solution[c];
    single_cells_ok += first_correct;
    single_ok += first_correct == 81;
    majority_ok += r.majority == b.solution;

    double sum_c = 0.0, sum_w = 0.0;
    int64_t n_c = 0, n_w = 0;
    for (size_t cand = 0; cand < r.candidates.size(); ++cand) {
      if (r.candidates[cand] == b.solution) {
        sum_c += r.energies[cand];
        ++n_c;
      } else {
        sum_w += r.energies[cand];
        ++n_w;
      }
    }
    if (n_c > 0 && n_w > 0) {
      ++rep.sign_boards;
      rep.sign_lower += sum_c / static_cast<double>(n_c) < sum_w / static_cast<double>(n_w);
    }
  }
  rep.board_acc = static_cast<double>(boards_ok) / static_cast<double>(n);
  rep.cell_acc = static_cast<double>(cells_ok) / static_cast<double>(81 * n);
  rep.board_acc_single = static_cast<double>(single_ok) / static_cast<double>(n);
  rep.cell_acc_single = static_cast<double>(single_cells_ok) / static_cast<double>(81 * n);
  rep.board_acc_majority = static_cast<double>(majority_ok) / static_cast<double>(n);
  rep.sign_p = binomial_one_sided_p(rep.sign_lower, rep.sign_boards);
  return rep;
}

}  // namespace akorn
