#pragma once

#include <cstdint>
#include <vector>

#include "treecode/common.hpp"

namespace treecode {

// Sparse codes on a spatial grid, CSR over locations in row-major order.
struct SparseFeatureGrid {
  int n_f = 0;
  int width = 0;
  int height = 0;
  std::vector<uint64_t> offsets;  // width*height + 1
  std::vector<int> indices;
  std::vector<float> values;

  uint64_t nonzeros() const { return indices.size(); }
  void validate() const;
};

// Pooled pyramid length: n_f * (1 + 4 + 16).
inline int pyramid_length(int n_f) { return n_f * 21; }

// Max pooling over 4x4, then 2x2, then 1x1 regions, the coarser levels pooled
// hierarchically from the 4x4 result. The maximum is over the entries present
// in a region; a region with no entries pools to 0. Output blocks are ordered
// [1x1 | 2x2 | 4x4], each block feature-major with cells row-major inside.
// op_counter, when given, accumulates the number of cell updates, which is
// O(nonzeros + n_f * 21).
Vec pool(const SparseFeatureGrid& grid, long long* op_counter = nullptr);

// Region spans: dim split into 4 near-equal pieces (sizes differ by at most
// one; pieces can be empty below 4). Returns the cell index per coordinate.
std::vector<int> pyramid_cell_map(int dim);

}  // namespace treecode
