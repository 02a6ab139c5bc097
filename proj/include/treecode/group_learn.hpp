#pragma once

#include <vector>

#include "treecode/grouped.hpp"

namespace treecode {

enum class UpdateRule { least_squares, ksvd };

struct GroupLearnConfig {
  int K = 0;      // atom count
  int q = 0;      // atoms per group
  int L = 1;      // group count
  int iters = 1;  // outer iterations
  UpdateRule update_rule = UpdateRule::least_squares;
  uint64_t seed = 0;
  int threads = 1;

  void validate(int d, int N) const;
};

struct GroupLearnResult {
  Dictionary dict;
  GroupTable groups;
  Assignment assignment;
  std::vector<double> energy;  // end-of-iteration sum ||W z - x||^2
};

// Mutable snapshot of a training run, exposed so dead-group repair can be
// exercised and tested on its own.
struct TrainState {
  Dictionary dict;
  GroupTable groups;
  Assignment assignment;
  std::vector<SparseCode> codes;
};

// Repairs the two kinds of deadness: a group no column chose is rebuilt from
// the SOMP output of a randomly chosen bucket (or column sample), and an atom
// no group uses is replaced by the top principal direction of the current
// residual (power iteration, 50 steps, tolerance 1e-8), renormalized. When
// the residual is identically zero the atom is re-drawn as a random unit
// vector.
void regenerate_dead_groups(const Mat& X, TrainState& state, int q, Rng& rng,
                            const std::vector<int>* bucket_of = nullptr, int bucket_count = 0);

// Joint group and dictionary learning. Each outer iteration assigns every
// column (or every bucket, when bucket_of is given) to its best group,
// repairs dead groups and atoms, re-selects each group's atoms by SOMP over
// its member columns, re-solves the coefficients, and updates the dictionary
// per cfg.update_rule. Deterministic for a fixed seed.
GroupLearnResult train(const Mat& X, const GroupLearnConfig& cfg,
                       const std::vector<int>* bucket_of = nullptr);

// K data columns chosen by farthest-point sampling, normalized; columns
// beyond the data count are random unit vectors.
Dictionary farthest_point_init(const Mat& X, int K, Rng& rng);

// Top principal direction of the columns of R by power iteration.
Vec top_residual_direction(const Mat& R, Rng& rng);

}  // namespace treecode
