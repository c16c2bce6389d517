#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "akorn/network.hpp"
#include "akorn/rng.hpp"

namespace akorn {

// givens: 0..9 with 0 marking a blank; solution: the completed grid, 1..9
struct Board {
  std::array<int, 81> givens{};
  std::array<int, 81> solution{};
};

int given_count(const Board& b);

// how many of the 27 row/column/box constraints the grid breaks
int grid_violations(const std::array<int, 81>& grid);

// solution satisfies every constraint and every given agrees with it
bool board_valid(const Board& b);

// completions of `givens`, counted up to `limit`; -1 if the search hits
// node_budget first. A direct digit clash among the givens counts as 0.
int count_solutions(const std::array<int, 81>& givens, int limit = 2,
                    int64_t node_budget = 2'000'000);

// puzzles with a unique solution and given counts inside [lo_givens, hi_givens]:
// a random full grid, then greedy removal toward a sampled target count with a
// uniqueness check per removal; grids that plateau above hi_givens are redrawn
std::vector<Board> generate_boards(int64_t n, int lo_givens, int hi_givens, uint64_t seed);

// one board per line: 81 given digits, a comma, 81 solution digits
std::vector<Board> load_boards(const std::string& path);
void save_boards(const std::vector<Board>& boards, const std::string& path);

// digit classifier over the oscillator network: each cell is one token (the
// given digit, 0 for blanks) and each logit row scores digits 1..9
struct SudokuModel {
  Network net;

  SudokuModel(const Network::Config& cfg, Rng& rng);

  // oscillator rows of given cells start at the stimulus, blanks at random
  std::vector<double> given_row_mask(const Board& b) const;

  // mean cross-entropy of the 81 cells against the solution digits
  Var loss(Tape& tape, const Board& b, Rng& rng);

  struct Prediction {
    std::array<int, 81> digits{};  // row argmax, ties to the lowest digit
    double total_energy = 0.0;     // summed over every recorded step and block
    std::vector<double> energies;  // first block's per-step trace
  };
  // t_eval > 0 rolls the dynamics for that many steps instead of the
  // trained count
  Prediction predict(const Board& b, Rng& rng, int64_t t_eval = 0);
};

// restart r of board i draws its initial oscillators from Rng(seed).child(i, r)
Rng restart_rng(uint64_t seed, int64_t board_idx, int64_t restart);

struct VoteResult {
  std::vector<std::array<int, 81>> candidates;  // one per restart
  std::vector<double> energies;                 // total trajectory energy per restart
  int64_t best = 0;                             // argmin energy, ties to the lowest index
  std::array<int, 81> vote{};                   // the argmin candidate
  std::array<int, 81> majority{};               // per-cell mode, ties to the lowest digit
};

// k restarts with fresh initial oscillators, ranked by trajectory energy
VoteResult energy_vote(SudokuModel& model, const Board& b, int64_t k, int64_t t_eval,
                       uint64_t seed, int64_t board_idx);

// P[X >= x] for X ~ Binomial(n, 1/2)
double binomial_one_sided_p(int64_t x, int64_t n);

struct EvalReport {
  int64_t n = 0;
  double board_acc = 0.0;  // energy-ranked candidate completes the board
  double cell_acc = 0.0;   // mean per-cell accuracy of that candidate
  int64_t violations = 0;  // broken constraints summed over ranked candidates
  int64_t k = 1;
  int64_t t_eval = 0;
  uint64_t seed = 0;
  double board_acc_single = 0.0;    // restart 0 alone
  double cell_acc_single = 0.0;
  double board_acc_majority = 0.0;  // per-cell majority over restarts
  int64_t sign_boards = 0;  // boards holding both correct and incorrect candidates
  int64_t sign_lower = 0;   // of those, where correct candidates average lower energy
  double sign_p = 1.0;      // one-sided binomial p-value for sign_lower

  std::string to_json() const;
};

// threads only split the boards; the numbers are identical for any count
EvalReport evaluate(SudokuModel& model, const std::vector<Board>& boards, int64_t k,
                    int64_t t_eval, uint64_t seed, int64_t threads = 1);

}  // namespace akorn
