#pragma once

#include <span>
#include <vector>

#include "treecode/dictionary.hpp"

namespace treecode {

// Pursuit stops once the residual norm drops below this (a zero-residual
// continuation would select arbitrary atoms).
inline constexpr double kPursuitResidualEps = 1e-12;

// Every Gram solve adds eps = kGramRidgeScale * trace(G) / |omega| to the
// diagonal, which keeps rank-deficient supports total without rank tests.
inline constexpr double kGramRidgeScale = 1e-10;

// Regularized least-squares coefficients of the columns of X on the atoms
// listed in support. Returns a |support| x N matrix.
Mat solve_on_support(const Mat& X, const Dictionary& dict, std::span<const int> support);

// Cached decoder (W^T W + eps I)^{-1} W^T restricted to support, |support| x d.
Mat pseudoinverse_on_support(const Dictionary& dict, std::span<const int> support);

// Greedy orthogonal matching pursuit for a single vector: repeatedly adds the
// atom with the largest absolute residual correlation (ties to the smallest
// index) and re-solves least squares on the grown support. Stops after q
// atoms, on a near-zero residual, or when every correlation vanishes.
// residual_trace, when given, receives the residual norm before the first
// selection and after each iteration.
SparseCode omp(const Vec& x, const Dictionary& dict, int q,
               std::vector<double>* residual_trace = nullptr);

struct SompResult {
  std::vector<int> active;  // shared support, in selection order
  Mat coeffs;               // |active| x N
  double residual_norm;     // Frobenius norm of X - W_active * coeffs
};

// Simultaneous OMP: all columns of X select each atom jointly by the summed
// absolute correlations of their residuals.
SompResult somp(const Mat& X, const Dictionary& dict, int q,
                std::vector<double>* residual_trace = nullptr);

// Least-squares dictionary update with the codes fixed: every atom used by at
// least one code is re-solved from the normal equations, unused atoms are left
// alone, and updated columns are renormalized with the code values rescaled so
// the product W * Z is preserved. codes is modified in place by the rescale.
Dictionary dictionary_update(const Mat& X, std::vector<SparseCode>& codes, const Dictionary& dict);

// K-SVD sweep: each used atom and its coefficient row are replaced by the
// rank-1 approximation of the residual restricted to the columns using it.
Dictionary ksvd_update(const Mat& X, std::vector<SparseCode>& codes, const Dictionary& dict);

// Sum over columns of ||W z - x||^2.
double coding_energy(const Mat& X, const Dictionary& dict, const std::vector<SparseCode>& codes);

Vec reconstruct(const Dictionary& dict, const SparseCode& code);

}  // namespace treecode
