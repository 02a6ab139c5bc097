#pragma once

#include <functional>
#include <string>
#include <vector>

#include "treecode/treehash.hpp"

namespace treecode {
namespace bench {

// Per-descriptor multiplications of the tree coding path: depth dot products
// plus the cached decoder product.
inline long long tree_encode_multiplies(int d, int depth, int q) {
  return static_cast<long long>(d) * (depth + q);
}

// Accounting baseline for exact OMP on the same input: one full correlation
// sweep against all K atoms plus d-length updates for the remaining q - 1
// selections. For d=128, K=2048, q=5 this is the 128 x (2048 + 4) figure the
// tree path is compared against.
inline long long omp_lower_bound_multiplies(int d, int K, int q) {
  return static_cast<long long>(d) * (K + q - 1);
}

// Median wall time of reps runs of fn, in seconds. fn runs once untimed to
// warm caches.
double median_seconds(int reps, const std::function<void()>& fn);

struct EncodeBenchResult {
  double hashed_seconds = 0.0;  // median batch time over the vector set
  double omp_seconds = 0.0;
  double speedup = 0.0;  // omp_seconds / hashed_seconds
  int vectors = 0;
};

// Times hashed encode against the pursuit module's own OMP on identical data
// (columns of X, converted to 32-bit for the hashed path only).
EncodeBenchResult run_encode_bench(const HashedModel& model, const Dictionary& omp_dict, int q,
                                   const Mat& X, int reps, int threads);

struct PipelineTiming {
  double sift_s = 0.0;
  double coding_s = 0.0;
  double pooling_s = 0.0;
  double total_s = 0.0;  // one full pass, timed as a whole
  double fps = 0.0;
  int images = 0;
};

}  // namespace bench
}  // namespace treecode
