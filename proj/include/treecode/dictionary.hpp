#pragma once

#include <optional>
#include <vector>

#include "treecode/common.hpp"
#include "treecode/rng.hpp"

namespace treecode {

// d x K matrix of unit-norm atoms, one atom per column.
struct Dictionary {
  Mat atoms;

  Dictionary() = default;
  explicit Dictionary(Mat m) : atoms(std::move(m)) {}

  int dim() const { return static_cast<int>(atoms.rows()); }
  int size() const { return static_cast<int>(atoms.cols()); }

  // Checks finiteness and unit column norms (tolerance 1e-6).
  void validate() const;

  // Scales every nonzero column to unit norm.
  void normalize_columns();

  static Dictionary random_unit(int d, int K, Rng& rng);
};

// Support indices plus least-squares coefficient values for one input.
// reconstruction_error holds ||W_omega z - x||^2 when the producing solver
// computed it; the fast tree encode path leaves it empty to keep its
// multiplication count exact.
struct SparseCode {
  std::vector<int> support;
  Vec values;
  std::optional<double> reconstruction_error;
};

}  // namespace treecode
