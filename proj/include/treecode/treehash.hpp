#pragma once

#include <vector>

#include "treecode/group_learn.hpp"

namespace treecode {

// Internal decision node. Children >= 0 index another node; a negative child
// c encodes leaf ~c.
struct TreeNode {
  Vec direction;     // (c1 - c2) normalized; zero for a degenerate cell
  double threshold;  // median of the training projections
  int left = -1;
  int right = -1;
};

struct TreeBuildParams {
  int max_depth = 0;
  double stop_radius = 0.0;  // stop when max distance to the cell mean is within this
  uint64_t seed = 0;
  int lloyd_iters = 10;  // 2-means refinement steps after farthest insertion
};

// Binary median-split 2-means tree. Routing is a pure function of the node
// table; the float mirrors serve the 32-bit inference path and are rebuilt
// by compile() after construction or load.
struct HashTree {
  int dim = 0;
  std::vector<TreeNode> nodes;
  int leaf_count = 0;

  // 32-bit mirrors, one row per node.
  RowMatF directions_f;
  VecF thresholds_f;

  void compile();

  // Walks x down the tree; ties (projection equal to the threshold) go left.
  // depth_out, when given, receives the number of decisions taken.
  int route(const float* x, int* depth_out = nullptr) const;
  int route(const Vec& x, int* depth_out = nullptr) const;
};

// Recursive median splits: 2-means with farthest insertion picks the centers,
// points are ordered by their projection onto c1 - c2, and the cell divides
// at the median with the left child taking ceil(n/2). The tree depends only
// on the multiset of columns and the seed, not their order.
HashTree build_tree(const Mat& X, const TreeBuildParams& params);

// Per-leaf record: allowed atoms and the cached decoder
// (W^T W + eps I)^{-1} W^T restricted to them.
struct LeafEntry {
  std::vector<int> active_set;
  Mat decoder;       // |active_set| x d
  RowMatF decoder_f; // 32-bit mirror for inference
};

struct HashedModel {
  HashTree tree;
  Dictionary dict;
  std::vector<int> leaf_to_group;  // identity unless leaves were glued
  std::vector<LeafEntry> entries;  // one per group

  void compile();  // rebuilds every float mirror
  const LeafEntry& entry_for_leaf(int leaf) const { return entries[leaf_to_group[leaf]]; }
};

// Buckets X by the tree's leaves and trains the dictionary and per-leaf atom
// sets jointly (one group per leaf), then caches the decoders. energy_out,
// when given, receives the per-iteration training energy.
HashedModel train_hashed(const Mat& X, GroupLearnConfig cfg, HashTree tree,
                         std::vector<double>* energy_out = nullptr);

// Rebuilds every entry's decoder from the dictionary and active sets.
void refresh_decoders(HashedModel& model);

struct OpCounts {
  long long multiplies = 0;
};

// Fast path: routes x (length model.tree.dim) and writes the decoder product
// into z_out (capacity >= the leaf's active set size). Returns the leaf.
int encode_into(const HashedModel& model, const float* x, float* z_out);

// Convenience wrapper producing a SparseCode. reconstruction_error is left
// unset: the contract for this path is exactly depth*d + |active|*d
// multiplications, which the counted overload tallies from the actual
// traversal.
SparseCode encode(const HashedModel& model, const float* x);
SparseCode encode(const HashedModel& model, const Vec& x);
SparseCode encode_counted(const HashedModel& model, const float* x, OpCounts& counts);

}  // namespace treecode
