#include "treecode/grouped.hpp"

#include <algorithm>
#include <cassert>

#include "treecode/parallel.hpp"

namespace treecode {

void GroupTable::validate(int K) const {
  require(!groups.empty(), "group table must contain at least one group");
  for (const auto& g : groups) {
    for (int a : g) require(a >= 0 && a < K, "group atom index out of range");
  }
}

GroupIndex::GroupIndex(const GroupTable& table, int K) : table_(&table), atom_groups_(K) {
  for (int gi = 0; gi < table.size(); ++gi) {
    for (int a : table.groups[gi]) atom_groups_[a].push_back(gi);
  }
}

std::vector<int> GroupIndex::candidate_atoms(std::span<const int> omega) const {
  std::vector<int> group_ids;
  if (omega.empty()) {
    group_ids.resize(table_->size());
    for (int gi = 0; gi < table_->size(); ++gi) group_ids[gi] = gi;
  } else {
    // Intersect the membership lists, starting from the rarest atom.
    size_t start = 0;
    for (size_t j = 1; j < omega.size(); ++j) {
      if (atom_groups_[omega[j]].size() < atom_groups_[omega[start]].size()) start = j;
    }
    group_ids = atom_groups_[omega[start]];
    for (size_t j = 0; j < omega.size() && !group_ids.empty(); ++j) {
      if (j == start) continue;
      const auto& other = atom_groups_[omega[j]];
      std::vector<int> kept;
      kept.reserve(group_ids.size());
      std::set_intersection(group_ids.begin(), group_ids.end(), other.begin(), other.end(),
                            std::back_inserter(kept));
      group_ids = std::move(kept);
    }
  }
  std::vector<int> atoms;
  for (int gi : group_ids) {
    atoms.insert(atoms.end(), table_->groups[gi].begin(), table_->groups[gi].end());
  }
  std::sort(atoms.begin(), atoms.end());
  atoms.erase(std::unique(atoms.begin(), atoms.end()), atoms.end());
  return atoms;
}

namespace {

struct GroupSolver {
  Mat W;                  // d x |G|
  Eigen::LDLT<Mat> ldlt;  // ridge Gram factor, shared by every column
};

std::vector<GroupSolver> build_group_solvers(const Dictionary& dict, const GroupTable& table) {
  std::vector<GroupSolver> solvers(table.size());
  for (int gi = 0; gi < table.size(); ++gi) {
    const auto& g = table.groups[gi];
    require(!g.empty(), "empty group");
    Mat W(dict.dim(), static_cast<int>(g.size()));
    for (size_t j = 0; j < g.size(); ++j) W.col(static_cast<int>(j)) = dict.atoms.col(g[j]);
    Mat G = W.transpose() * W;
    G.diagonal().array() += kGramRidgeScale * G.trace() / static_cast<double>(g.size());
    solvers[gi] = {std::move(W), G.ldlt()};
  }
  return solvers;
}

}  // namespace

Assignment assign_groups(const Mat& X, const Dictionary& dict, const GroupTable& table,
                         int threads) {
  table.validate(dict.size());
  if (!X.allFinite()) throw NumericError("assign_groups input contains non-finite entries");
  const auto solvers = build_group_solvers(dict, table);

  const int N = static_cast<int>(X.cols());
  Assignment out;
  out.group_of.assign(N, 0);
  out.projection_error.assign(N, 0.0);

  parallel_for(N, threads, [&](long long lo, long long hi) {
    for (long long n = lo; n < hi; ++n) {
      const Vec x = X.col(static_cast<int>(n));
      int best = 0;
      double best_err = std::numeric_limits<double>::infinity();
      for (int gi = 0; gi < table.size(); ++gi) {
        const Vec z = solvers[gi].ldlt.solve(solvers[gi].W.transpose() * x);
        const double err = (x - solvers[gi].W * z).squaredNorm();
        if (err < best_err) {
          best_err = err;
          best = gi;
        }
      }
      out.group_of[n] = best;
      out.projection_error[n] = best_err;
    }
  });
  return out;
}

SparseCode greedy_group_omp(const Vec& x, const Dictionary& dict, const GroupTable& table,
                            const GroupIndex& index, int q) {
  table.validate(dict.size());
  require(q >= 1, "budget must be positive");
  if (!x.allFinite()) throw NumericError("greedy_group_omp input contains non-finite entries");

  SparseCode code;
  Vec r = x;
  double rnorm = r.norm();

  while (static_cast<int>(code.support.size()) < q && rnorm >= kPursuitResidualEps) {
    const std::vector<int> candidates = index.candidate_atoms(code.support);
    assert(!candidates.empty());

    int j = -1;
    double best = 0.0;
    for (int a : candidates) {
      if (std::find(code.support.begin(), code.support.end(), a) != code.support.end()) continue;
      const double c = std::abs(dict.atoms.col(a).dot(r));
      if (c > best) {
        best = c;
        j = a;
      }
    }
    if (j < 0) break;  // support already covers its groups, or zero correlations

    code.support.push_back(j);
    code.values = solve_on_support(x, dict, code.support);
    r = x - reconstruct(dict, code);
    rnorm = r.norm();
  }
  if (code.support.empty()) code.values = Vec(0);
  code.reconstruction_error = rnorm * rnorm;
  return code;
}

SparseCode greedy_group_omp(const Vec& x, const Dictionary& dict, const GroupTable& table, int q) {
  return greedy_group_omp(x, dict, table, GroupIndex(table, dict.size()), q);
}

std::vector<SparseCode> codes_for_assignment(const Mat& X, const Dictionary& dict,
                                             const GroupTable& table,
                                             const Assignment& assignment) {
  std::vector<SparseCode> codes(X.cols());
  for (int n = 0; n < X.cols(); ++n) {
    const int gi = assignment.group_of[n];
    codes[n].support = table.groups[gi];
    codes[n].values = solve_on_support(X.col(n), dict, table.groups[gi]);
    codes[n].reconstruction_error = (X.col(n) - reconstruct(dict, codes[n])).squaredNorm();
  }
  return codes;
}

LloydResult lloyd_train(const Mat& X, Dictionary dict, const GroupTable& table, int iters,
                        int threads) {
  require(iters >= 1, "iters must be at least 1");
  LloydResult out;
  out.energy.reserve(iters);
  for (int it = 0; it < iters; ++it) {
    out.assignment = assign_groups(X, dict, table, threads);
    auto codes = codes_for_assignment(X, dict, table, out.assignment);
    double energy = 0.0;
    for (const auto& c : codes) energy += *c.reconstruction_error;
    out.energy.push_back(energy);
    dict = dictionary_update(X, codes, dict);
  }
  out.dict = std::move(dict);
  return out;
}

}  // namespace treecode
