#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "akorn/sudoku.hpp"
#include "akorn/tensor.hpp"

namespace akorn {

// Binary parameter container. Layout, all little-endian:
//   "AKRN", u32 version, u64 metadata length, metadata (JSON text),
//   u64 tensor count, then per tensor: u32 name length, name,
//   u32 rank, u64 dims, raw f64 payload.
// Values survive a save/load cycle bit-for-bit.
struct Checkpoint {
  uint32_t version = 1;
  std::string metadata;  // JSON text
  std::vector<std::pair<std::string, Tensor>> tensors;
};

void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

std::string network_config_json(const Network::Config& cfg);
Network::Config network_config_from_json(const std::string& text);

// metadata: {"kind": "sudoku", "config": ..., "seed": ..., "step": ...}
void save_sudoku_model(SudokuModel& model, const std::string& path, uint64_t seed,
                       int64_t step);

struct LoadedSudoku {
  SudokuModel model;
  uint64_t seed = 0;
  int64_t step = 0;
};

// rebuilds the architecture from the stored config, then restores every
// parameter by position (names and shapes are cross-checked)
LoadedSudoku load_sudoku_model(const std::string& path);

}  // namespace akorn
