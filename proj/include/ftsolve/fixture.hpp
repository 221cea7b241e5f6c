#pragma once

#include <utility>

#include "ftsolve/graph.hpp"
#include "ftsolve/linalg.hpp"

namespace ftsolve {

struct Fixture {
  PartitionedSystem system;
  Network graph;
};

/// Four agents, each holding two of the eight equations of a 8x12 system,
/// wired as the path 1-2-3-4.
///
/// Each A_i is stored as printed in transposed form (12 rows of 2), so row r
/// of the table is column r of A_i.
inline Fixture fixture_paper_4agent() {
  static constexpr double at[4][12][2] = {
      {{0.63, 0.04}, {0.58, 0.60}, {0.65, 0.50}, {0.33, 0.81}, {0.68, 0.01}, {0.22, 0.51},
       {0.49, 0.23}, {0.21, 0.29}, {0.62, 0.25}, {0.57, 0.21}, {0.71, 0.66}, {0.28, 0.90}},
      {{0.80, 0.99}, {0.25, 0.65}, {0.53, 0.38}, {0.79, 0.12}, {0.13, 0.76}, {0.79, 0.52},
       {0.34, 0.55}, {0.45, 0.24}, {0.10, 0.55}, {0.94, 0.51}, {0.78, 0.58}, {0.70, 0.85}},
      {{0.44, 0.34}, {0.06, 0.94}, {0.77, 0.28}, {0.16, 0.41}, {0.84, 0.75}, {0.62, 0.56},
       {0.74, 0.41}, {0.26, 0.89}, {0.44, 0.69}, {0.28, 0.23}, {0.50, 0.88}, {0.38, 0.63}},
      {{0.05, 0.23}, {0.09, 0.33}, {0.65, 0.92}, {0.69, 0.66}, {0.94, 0.92}, {0.73, 0.06},
       {0.51, 0.13}, {0.59, 0.94}, {0.76, 0.40}, {0.95, 0.69}, {0.39, 0.24}, {0.03, 0.92}},
  };
  static constexpr double b[4][2] = {{0.47, 0.52}, {0.77, 0.34}, {0.63, 0.33}, {0.31, 0.65}};

  std::vector<Block> blocks;
  for (int i = 0; i < 4; ++i) {
    Block blk{Matrix(2, 12), Vector(2)};
    for (int c = 0; c < 12; ++c)
      for (int r = 0; r < 2; ++r) blk.a(r, c) = at[i][c][r];
    blk.b << b[i][0], b[i][1];
    blocks.push_back(std::move(blk));
  }
  return {PartitionedSystem(std::move(blocks)), Network::path(4)};
}

} // namespace ftsolve
