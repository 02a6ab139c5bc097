#include "treecode/pyramid.hpp"

#include <algorithm>
#include <limits>

namespace treecode {

namespace {
constexpr double kEmpty = -std::numeric_limits<double>::infinity();
}

void SparseFeatureGrid::validate() const {
  require(n_f >= 1, "grid needs at least one feature");
  require(width >= 1 && height >= 1, "empty grid");
  require(offsets.size() == static_cast<size_t>(width) * height + 1, "offset table size mismatch");
  require(offsets.back() == indices.size() && indices.size() == values.size(),
          "index/value length mismatch");
}

std::vector<int> pyramid_cell_map(int dim) {
  std::vector<int> map(dim);
  for (int c = 0; c < 4; ++c) {
    const int start = (c * dim) / 4;
    const int end = ((c + 1) * dim) / 4;
    for (int i = start; i < end; ++i) map[i] = c;
  }
  return map;
}

Vec pool(const SparseFeatureGrid& grid, long long* op_counter) {
  grid.validate();
  const int nf = grid.n_f;
  long long ops = 0;

  const auto cy = pyramid_cell_map(grid.height);
  const auto cx = pyramid_cell_map(grid.width);

  // 4x4 level in one sweep over the nonzeros; empty cells stay at -inf so
  // the hierarchical levels see presence, not a fabricated zero.
  std::vector<double> u4(static_cast<size_t>(nf) * 16, kEmpty);
  ops += nf * 16;
  for (int y = 0; y < grid.height; ++y) {
    for (int x = 0; x < grid.width; ++x) {
      const int cell = cy[y] * 4 + cx[x];
      const size_t loc = static_cast<size_t>(y) * grid.width + x;
      for (uint64_t e = grid.offsets[loc]; e < grid.offsets[loc + 1]; ++e) {
        const int f = grid.indices[e];
        double& slot = u4[static_cast<size_t>(f) * 16 + cell];
        slot = std::max(slot, static_cast<double>(grid.values[e]));
        ++ops;
      }
    }
  }

  std::vector<double> u2(static_cast<size_t>(nf) * 4, kEmpty);
  for (int f = 0; f < nf; ++f) {
    for (int c = 0; c < 16; ++c) {
      const int cell2 = (c / 4 / 2) * 2 + (c % 4) / 2;
      double& slot = u2[static_cast<size_t>(f) * 4 + cell2];
      slot = std::max(slot, u4[static_cast<size_t>(f) * 16 + c]);
      ++ops;
    }
  }
  std::vector<double> u1(nf, kEmpty);
  for (int f = 0; f < nf; ++f) {
    for (int c = 0; c < 4; ++c) {
      u1[f] = std::max(u1[f], u2[static_cast<size_t>(f) * 4 + c]);
      ++ops;
    }
  }

  Vec out(pyramid_length(nf));
  const auto emit = [](double v) { return v == kEmpty ? 0.0 : v; };
  for (int f = 0; f < nf; ++f) out[f] = emit(u1[f]);
  for (int f = 0; f < nf; ++f) {
    for (int c = 0; c < 4; ++c) out[nf + f * 4 + c] = emit(u2[static_cast<size_t>(f) * 4 + c]);
  }
  for (int f = 0; f < nf; ++f) {
    for (int c = 0; c < 16; ++c) {
      out[nf * 5 + f * 16 + c] = emit(u4[static_cast<size_t>(f) * 16 + c]);
    }
  }
  ops += nf * 21;
  if (op_counter) *op_counter += ops;
  return out;
}

}  // namespace treecode
