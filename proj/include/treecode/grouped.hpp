#pragma once

#include <span>
#include <vector>

#include "treecode/pursuit.hpp"

namespace treecode {

// List of allowed active sets over the atoms. Groups may overlap.
struct GroupTable {
  std::vector<std::vector<int>> groups;

  int size() const { return static_cast<int>(groups.size()); }
  void validate(int K) const;
};

// Per-column group choice with the projection error that produced it.
struct Assignment {
  std::vector<int> group_of;
  std::vector<double> projection_error;
};

// Inverted atom -> groups index. Rebuild whenever the table changes.
class GroupIndex {
 public:
  GroupIndex(const GroupTable& table, int K);

  // Union of the members of every group containing omega. For an empty omega
  // this is the union of all groups. Sorted, duplicates removed.
  std::vector<int> candidate_atoms(std::span<const int> omega) const;

  const std::vector<int>& groups_of_atom(int atom) const { return atom_groups_[atom]; }

 private:
  const GroupTable* table_;
  std::vector<std::vector<int>> atom_groups_;
};

// Maps each column of X to the group whose span projects it with the smallest
// error, ties to the smallest group index. Errors come from the same ridge
// least-squares solve as solve_on_support.
Assignment assign_groups(const Mat& X, const Dictionary& dict, const GroupTable& table,
                         int threads = 1);

// Greedy alternative for large group counts: at each pursuit step the
// candidate atoms are the union of all groups containing the current support,
// so the final support is a subset of at least one group. Forfeits the exact
// argmin guarantee of assign_groups.
SparseCode greedy_group_omp(const Vec& x, const Dictionary& dict, const GroupTable& table,
                            const GroupIndex& index, int q);
SparseCode greedy_group_omp(const Vec& x, const Dictionary& dict, const GroupTable& table, int q);

struct LloydResult {
  Dictionary dict;
  Assignment assignment;
  std::vector<double> energy;  // sum ||W z - x||^2 per iteration
};

// Alternates exact assignment, coefficient solve on the assigned group, and
// the least-squares dictionary update. The energy trace is nonincreasing.
LloydResult lloyd_train(const Mat& X, Dictionary dict, const GroupTable& table, int iters,
                        int threads = 1);

// Codes for each column on its assigned group's full atom set.
std::vector<SparseCode> codes_for_assignment(const Mat& X, const Dictionary& dict,
                                             const GroupTable& table, const Assignment& assignment);

}  // namespace treecode
