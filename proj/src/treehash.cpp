#include "treecode/treehash.hpp"

#include <algorithm>
#include <cassert>
#include <numeric>

#include "treecode/parallel.hpp"

namespace treecode {

void HashTree::compile() {
  const int n = static_cast<int>(nodes.size());
  directions_f.resize(n, dim);
  thresholds_f.resize(n);
  for (int i = 0; i < n; ++i) {
    directions_f.row(i) = nodes[i].direction.cast<float>();
    thresholds_f[i] = static_cast<float>(nodes[i].threshold);
  }
}

int HashTree::route(const float* x, int* depth_out) const {
  int depth = 0;
  int idx = nodes.empty() ? -1 : 0;
  while (idx >= 0) {
    const float t = directions_f.row(idx).dot(Eigen::Map<const VecF>(x, dim));
    idx = t <= thresholds_f[idx] ? nodes[idx].left : nodes[idx].right;
    ++depth;
  }
  if (depth_out) *depth_out = depth;
  return ~idx;
}

int HashTree::route(const Vec& x, int* depth_out) const {
  VecF xf = x.cast<float>();
  return route(xf.data(), depth_out);
}

namespace {

// Lexicographic comparison of two columns.
bool col_less(const Mat& X, int a, int b) {
  for (int i = 0; i < X.rows(); ++i) {
    if (X(i, a) != X(i, b)) return X(i, a) < X(i, b);
  }
  return false;
}

struct TreeBuilder {
  const Mat& X;
  const TreeBuildParams& params;
  Rng rng;
  std::vector<TreeNode> nodes;
  int leaf_count = 0;

  TreeBuilder(const Mat& x, const TreeBuildParams& p) : X(x), params(p), rng(p.seed) {}

  // cell holds canonically ordered column indices. Returns a node index or
  // an encoded leaf (~leaf_id).
  int build(std::vector<int>& cell, int depth) {
    if (static_cast<int>(cell.size()) < 2 || depth >= params.max_depth || within_radius(cell)) {
      return ~(leaf_count++);
    }

    const Vec dir = split_direction(cell);
    std::vector<double> proj(cell.size());
    for (size_t j = 0; j < cell.size(); ++j) proj[j] = dir.dot(X.col(cell[j]));

    std::vector<int> order(cell.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return proj[a] < proj[b]; });

    const size_t n = cell.size();
    const size_t left_n = (n + 1) / 2;  // left child takes ceil(n/2)
    // Threshold midway between the two projections straddling the median cut,
    // so training points keep a routing margin in 32-bit arithmetic.
    const double threshold = 0.5 * (proj[order[left_n - 1]] + proj[order[left_n]]);

    std::vector<int> left_cell(left_n), right_cell(n - left_n);
    for (size_t j = 0; j < n; ++j) {
      if (j < left_n) {
        left_cell[j] = cell[order[j]];
      } else {
        right_cell[j - left_n] = cell[order[j]];
      }
    }
    cell.clear();
    cell.shrink_to_fit();

    const int me = static_cast<int>(nodes.size());
    nodes.push_back({dir, threshold, -1, -1});
    nodes[me].left = build(left_cell, depth + 1);
    nodes[me].right = build(right_cell, depth + 1);
    return me;
  }

  bool within_radius(const std::vector<int>& cell) const {
    Vec mean = Vec::Zero(X.rows());
    for (int c : cell) mean += X.col(c);
    mean /= static_cast<double>(cell.size());
    double max_dist = 0.0;
    for (int c : cell) max_dist = std::max(max_dist, (X.col(c) - mean).norm());
    return max_dist <= params.stop_radius;
  }

  // 2-means with farthest insertion: one random point, the point farthest
  // from it, then a few Lloyd rounds. Returns (c1 - c2) normalized.
  Vec split_direction(const std::vector<int>& cell) {
    const int n = static_cast<int>(cell.size());
    const int first = cell[rng.uniform_int(n)];
    int second = cell[0];
    double best = -1.0;
    for (int c : cell) {
      const double dist = (X.col(c) - X.col(first)).squaredNorm();
      if (dist > best) {
        best = dist;
        second = c;
      }
    }
    Vec c1 = X.col(first), c2 = X.col(second);

    std::vector<char> in_first(n, 0);
    for (int it = 0; it < params.lloyd_iters; ++it) {
      bool changed = false;
      Vec sum1 = Vec::Zero(X.rows()), sum2 = Vec::Zero(X.rows());
      int n1 = 0, n2 = 0;
      for (int j = 0; j < n; ++j) {
        const Vec& x = X.col(cell[j]);
        const char f = (x - c1).squaredNorm() <= (x - c2).squaredNorm() ? 1 : 0;
        changed |= (f != in_first[j]);
        in_first[j] = f;
        if (f) {
          sum1 += x;
          ++n1;
        } else {
          sum2 += x;
          ++n2;
        }
      }
      if (n1 == 0 || n2 == 0) break;  // keep the previous centers
      c1 = sum1 / n1;
      c2 = sum2 / n2;
      if (!changed && it > 0) break;
    }

    Vec dir = c1 - c2;
    const double norm = dir.norm();
    if (norm < 1e-12) return Vec::Zero(X.rows());  // duplicate-point cell
    return dir / norm;
  }
};

}  // namespace

HashTree build_tree(const Mat& X, const TreeBuildParams& params) {
  require(X.cols() >= 1, "build_tree needs data");
  require(params.max_depth >= 0, "max_depth must be nonnegative");
  if (!X.allFinite()) throw NumericError("build_tree input contains non-finite entries");

  // Canonical column order makes every later choice (center picks, stable
  // sorts, mean sums) a function of the data multiset and seed only.
  std::vector<int> cell(X.cols());
  std::iota(cell.begin(), cell.end(), 0);
  std::sort(cell.begin(), cell.end(), [&](int a, int b) { return col_less(X, a, b); });

  TreeBuilder builder(X, params);
  const int root = builder.build(cell, 0);

  HashTree tree;
  tree.dim = static_cast<int>(X.rows());
  tree.nodes = std::move(builder.nodes);
  tree.leaf_count = builder.leaf_count;
  if (root >= 0) {
    assert(root == 0);
  }
  tree.compile();
  return tree;
}

void HashedModel::compile() {
  tree.compile();
  for (auto& e : entries) {
    e.decoder_f = e.decoder.cast<float>();
  }
}

void refresh_decoders(HashedModel& model) {
  for (auto& e : model.entries) {
    e.decoder = pseudoinverse_on_support(model.dict, e.active_set);
  }
  model.compile();
}

HashedModel train_hashed(const Mat& X, GroupLearnConfig cfg, HashTree tree,
                         std::vector<double>* energy_out) {
  require(tree.dim == X.rows(), "tree dimension mismatch");

  const int N = static_cast<int>(X.cols());
  std::vector<int> bucket_of(N);
  parallel_for(N, cfg.threads, [&](long long lo, long long hi) {
    for (long long n = lo; n < hi; ++n) {
      bucket_of[n] = tree.route(Vec(X.col(static_cast<int>(n))));
    }
  });

  cfg.L = tree.leaf_count;
  auto learned = train(X, cfg, &bucket_of);
  if (energy_out) *energy_out = learned.energy;

  HashedModel model;
  model.tree = std::move(tree);
  model.dict = std::move(learned.dict);
  // A bucket may have glued onto another bucket's group during training; the
  // leaf table records the group each bucket finally chose.
  model.leaf_to_group.resize(model.tree.leaf_count);
  std::iota(model.leaf_to_group.begin(), model.leaf_to_group.end(), 0);
  for (int n = 0; n < N; ++n) {
    model.leaf_to_group[bucket_of[n]] = learned.assignment.group_of[n];
  }
  model.entries.resize(learned.groups.size());
  for (int g = 0; g < learned.groups.size(); ++g) {
    model.entries[g].active_set = learned.groups.groups[g];
  }
  refresh_decoders(model);
  return model;
}

int encode_into(const HashedModel& model, const float* x, float* z_out) {
  const int leaf = model.tree.route(x);
  const auto& entry = model.entries[model.leaf_to_group[leaf]];
  Eigen::Map<VecF>(z_out, entry.decoder_f.rows()).noalias() =
      entry.decoder_f * Eigen::Map<const VecF>(x, model.tree.dim);
  return leaf;
}

SparseCode encode(const HashedModel& model, const float* x) {
  const int leaf = model.tree.route(x);
  const auto& entry = model.entries[model.leaf_to_group[leaf]];
  SparseCode code;
  code.support = entry.active_set;
  code.values =
      (entry.decoder_f * Eigen::Map<const VecF>(x, model.tree.dim)).cast<double>();
  return code;
}

SparseCode encode(const HashedModel& model, const Vec& x) {
  VecF xf = x.cast<float>();
  return encode(model, xf.data());
}

SparseCode encode_counted(const HashedModel& model, const float* x, OpCounts& counts) {
  int depth = 0;
  const int leaf = model.tree.route(x, &depth);
  const auto& entry = model.entries[model.leaf_to_group[leaf]];
  SparseCode code;
  code.support = entry.active_set;
  code.values =
      (entry.decoder_f * Eigen::Map<const VecF>(x, model.tree.dim)).cast<double>();
  counts.multiplies +=
      static_cast<long long>(depth + entry.decoder_f.rows()) * model.tree.dim;
  return code;
}

}  // namespace treecode
