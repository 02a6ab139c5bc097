#include "treecode/pursuit.hpp"

#include <cassert>
#include <cmath>
#include <unordered_map>

namespace treecode {

void Dictionary::validate() const {
  require(atoms.rows() >= 1 && atoms.cols() >= 1, "dictionary must be at least 1x1");
  if (!atoms.allFinite()) throw NumericError("dictionary contains non-finite entries");
  for (int k = 0; k < atoms.cols(); ++k) {
    const double n = atoms.col(k).norm();
    require(std::abs(n - 1.0) <= 1e-6, "dictionary column is not unit norm");
  }
}

void Dictionary::normalize_columns() {
  for (int k = 0; k < atoms.cols(); ++k) {
    const double n = atoms.col(k).norm();
    if (n > 0.0) atoms.col(k) /= n;
  }
}

Dictionary Dictionary::random_unit(int d, int K, Rng& rng) {
  Mat m(d, K);
  for (int k = 0; k < K; ++k) m.col(k) = rng.unit_vector(d);
  return Dictionary(std::move(m));
}

Vec reconstruct(const Dictionary& dict, const SparseCode& code) {
  Vec y = Vec::Zero(dict.dim());
  for (size_t j = 0; j < code.support.size(); ++j) {
    y += code.values[static_cast<int>(j)] * dict.atoms.col(code.support[j]);
  }
  return y;
}

namespace {

Mat gather_atoms(const Dictionary& dict, std::span<const int> support) {
  Mat W(dict.dim(), static_cast<int>(support.size()));
  for (size_t j = 0; j < support.size(); ++j) {
    require(support[j] >= 0 && support[j] < dict.size(), "atom index out of range");
    W.col(static_cast<int>(j)) = dict.atoms.col(support[j]);
  }
  return W;
}

Eigen::LDLT<Mat> ridge_gram_ldlt(const Mat& W) {
  Mat G = W.transpose() * W;
  const int m = static_cast<int>(G.rows());
  const double eps = kGramRidgeScale * G.trace() / m;
  G.diagonal().array() += eps;
  return G.ldlt();
}

}  // namespace

Mat solve_on_support(const Mat& X, const Dictionary& dict, std::span<const int> support) {
  require(!support.empty(), "support must be nonempty");
  require(static_cast<int>(support.size()) <= dict.dim(), "support larger than ambient dimension");
  const Mat W = gather_atoms(dict, support);
  return ridge_gram_ldlt(W).solve(W.transpose() * X);
}

Mat pseudoinverse_on_support(const Dictionary& dict, std::span<const int> support) {
  require(!support.empty(), "support must be nonempty");
  const Mat W = gather_atoms(dict, support);
  return ridge_gram_ldlt(W).solve(W.transpose());
}

SparseCode omp(const Vec& x, const Dictionary& dict, int q, std::vector<double>* residual_trace) {
  require(q >= 0 && q <= std::min(dict.dim(), dict.size()), "sparsity budget exceeds min(d, K)");
  require(x.size() == dict.dim(), "input dimension mismatch");
  if (!x.allFinite()) throw NumericError("omp input contains non-finite entries");

  SparseCode code;
  Vec r = x;
  double rnorm = r.norm();
  if (residual_trace) residual_trace->push_back(rnorm);

  std::vector<char> selected(dict.size(), 0);
  while (static_cast<int>(code.support.size()) < q && rnorm >= kPursuitResidualEps) {
    // Per-column dots rather than a gemv so the group-constrained variant,
    // which scans candidate subsets, selects bit-identically.
    int j = -1;
    double best = 0.0;
    for (int i = 0; i < dict.size(); ++i) {
      if (selected[i]) continue;
      const double c = std::abs(dict.atoms.col(i).dot(r));
      if (c > best) {
        best = c;
        j = i;
      }
    }
    if (j < 0) break;  // all correlations zero
    selected[j] = 1;

    code.support.push_back(j);
    code.values = solve_on_support(x, dict, code.support);
    r = x - reconstruct(dict, code);
    const double next = r.norm();
    assert(next <= rnorm * (1.0 + 1e-9) + 1e-12);
    rnorm = next;
    if (residual_trace) residual_trace->push_back(rnorm);
  }
  if (code.support.empty()) code.values = Vec(0);
  code.reconstruction_error = rnorm * rnorm;
  return code;
}

SompResult somp(const Mat& X, const Dictionary& dict, int q, std::vector<double>* residual_trace) {
  require(X.cols() >= 1, "somp needs at least one column");
  require(X.rows() == dict.dim(), "input dimension mismatch");
  require(q >= 0 && q <= std::min(dict.dim(), dict.size()), "sparsity budget exceeds min(d, K)");
  if (!X.allFinite()) throw NumericError("somp input contains non-finite entries");

  SompResult out;
  out.coeffs = Mat::Zero(0, X.cols());
  Mat R = X;
  double rnorm = R.norm();
  if (residual_trace) residual_trace->push_back(rnorm);

  std::vector<char> selected(dict.size(), 0);
  while (static_cast<int>(out.active.size()) < q && rnorm >= kPursuitResidualEps) {
    // j = argmax_i sum_s |W_i^T R_s|
    const Vec score = (dict.atoms.transpose() * R).cwiseAbs().rowwise().sum();
    int j = -1;
    double best = 0.0;
    for (int i = 0; i < score.size(); ++i) {
      if (!selected[i] && score[i] > best) {
        best = score[i];
        j = i;
      }
    }
    if (j < 0) break;
    selected[j] = 1;

    out.active.push_back(j);
    const Mat W = gather_atoms(dict, out.active);
    out.coeffs = ridge_gram_ldlt(W).solve(W.transpose() * X);
    R = X - W * out.coeffs;
    const double next = R.norm();
    assert(next <= rnorm * (1.0 + 1e-9) + 1e-12);
    rnorm = next;
    if (residual_trace) residual_trace->push_back(rnorm);
  }
  out.residual_norm = rnorm;
  return out;
}

double coding_energy(const Mat& X, const Dictionary& dict, const std::vector<SparseCode>& codes) {
  require(static_cast<int>(codes.size()) == X.cols(), "one code per column required");
  double total = 0.0;
  for (int n = 0; n < X.cols(); ++n) {
    total += (X.col(n) - reconstruct(dict, codes[n])).squaredNorm();
  }
  return total;
}

Dictionary dictionary_update(const Mat& X, std::vector<SparseCode>& codes, const Dictionary& dict) {
  require(static_cast<int>(codes.size()) == X.cols(), "one code per column required");
  const int K = dict.size();
  const int d = dict.dim();

  std::vector<int> used;
  std::vector<int> slot(K, -1);
  for (const auto& code : codes) {
    for (int a : code.support) {
      require(a >= 0 && a < K, "code support index out of range");
      if (slot[a] < 0) {
        slot[a] = static_cast<int>(used.size());
        used.push_back(a);
      }
    }
  }
  if (used.empty()) return dict;
  const int U = static_cast<int>(used.size());

  // Normal equations accumulated over the sparse codes:
  //   A = sum_n z_n z_n^T   (restricted to used atoms),  B = sum_n x_n z_n^T.
  Mat A = Mat::Zero(U, U);
  Mat B = Mat::Zero(d, U);
  for (int n = 0; n < X.cols(); ++n) {
    const auto& code = codes[n];
    const int m = static_cast<int>(code.support.size());
    for (int i = 0; i < m; ++i) {
      const int ui = slot[code.support[i]];
      const double zi = code.values[i];
      B.col(ui) += zi * X.col(n);
      for (int j = 0; j < m; ++j) {
        A(ui, slot[code.support[j]]) += zi * code.values[j];
      }
    }
  }
  const double eps = kGramRidgeScale * A.trace() / U;
  A.diagonal().array() += eps;

  // W_used = B A^{-1}, solved as A W^T = B^T.
  const Mat Wt = A.ldlt().solve(B.transpose());

  Dictionary out = dict;
  std::vector<double> scale(K, 1.0);
  for (int u = 0; u < U; ++u) {
    Vec atom = Wt.row(u).transpose();
    const double n = atom.norm();
    if (n < 1e-12) continue;  // degenerate solve, keep the old atom
    out.atoms.col(used[u]) = atom / n;
    scale[used[u]] = n;
  }
  // Rescale the codes so W * Z is unchanged by the renormalization.
  for (auto& code : codes) {
    for (size_t j = 0; j < code.support.size(); ++j) {
      code.values[static_cast<int>(j)] *= scale[code.support[j]];
    }
  }
  return out;
}

Dictionary ksvd_update(const Mat& X, std::vector<SparseCode>& codes, const Dictionary& dict) {
  require(static_cast<int>(codes.size()) == X.cols(), "one code per column required");
  const int K = dict.size();
  Dictionary out = dict;

  // Columns using each atom, with the position of the atom inside the code.
  std::vector<std::vector<std::pair<int, int>>> users(K);
  for (int n = 0; n < X.cols(); ++n) {
    const auto& s = codes[n].support;
    for (size_t j = 0; j < s.size(); ++j) users[s[j]].push_back({n, static_cast<int>(j)});
  }

  for (int k = 0; k < K; ++k) {
    if (users[k].empty()) continue;
    const int m = static_cast<int>(users[k].size());
    Mat E(dict.dim(), m);
    for (int c = 0; c < m; ++c) {
      const auto [n, pos] = users[k][c];
      E.col(c) = X.col(n) - reconstruct(out, codes[n]) + codes[n].values[pos] * out.atoms.col(k);
    }
    // Top singular pair by power iteration on E E^T, warm-started from the
    // current atom.
    Mat S = E * E.transpose();
    Vec u = out.atoms.col(k);
    for (int it = 0; it < 50; ++it) {
      Vec next = S * u;
      const double n = next.norm();
      if (n < 1e-300) break;
      next /= n;
      const double delta = (next - u).norm();
      u = next;
      if (delta < 1e-8) break;
    }
    const Vec coeff = E.transpose() * u;
    out.atoms.col(k) = u;
    for (int c = 0; c < m; ++c) {
      const auto [n, pos] = users[k][c];
      codes[n].values[pos] = coeff[c];
    }
  }
  return out;
}

}  // namespace treecode
