#include "treecode/group_learn.hpp"

#include <algorithm>
#include <cassert>
#include <limits>

#include "treecode/parallel.hpp"

namespace treecode {

void GroupLearnConfig::validate(int d, int N) const {
  require(N >= 1, "training data is empty");
  require(K >= 1 && L >= 1 && iters >= 1, "K, L and iters must be positive");
  require(q >= 1 && q <= std::min(d, K), "q must satisfy 1 <= q <= min(d, K)");
}

Dictionary farthest_point_init(const Mat& X, int K, Rng& rng) {
  const int N = static_cast<int>(X.cols());
  const int d = static_cast<int>(X.rows());
  Mat atoms(d, K);

  std::vector<int> chosen;
  Vec min_dist = Vec::Constant(N, std::numeric_limits<double>::infinity());
  // Seed with the largest-norm column, then repeatedly take the column
  // farthest from everything chosen so far.
  int first = 0;
  for (int n = 1; n < N; ++n) {
    if (X.col(n).squaredNorm() > X.col(first).squaredNorm()) first = n;
  }
  chosen.push_back(first);
  for (int k = 1; k < std::min(K, N); ++k) {
    const Vec& last = X.col(chosen.back());
    int best = -1;
    double best_dist = -1.0;
    for (int n = 0; n < N; ++n) {
      min_dist[n] = std::min(min_dist[n], (X.col(n) - last).squaredNorm());
      if (min_dist[n] > best_dist) {
        best_dist = min_dist[n];
        best = n;
      }
    }
    chosen.push_back(best);
  }
  for (int k = 0; k < K; ++k) {
    if (k < static_cast<int>(chosen.size())) {
      const Vec c = X.col(chosen[k]);
      const double n = c.norm();
      atoms.col(k) = n > 1e-12 ? Vec(c / n) : rng.unit_vector(d);
    } else {
      atoms.col(k) = rng.unit_vector(d);
    }
  }
  return Dictionary(std::move(atoms));
}

Vec top_residual_direction(const Mat& R, Rng& rng) {
  const int d = static_cast<int>(R.rows());
  if (R.norm() < 1e-12) return rng.unit_vector(d);
  const Mat S = R * R.transpose();
  Vec u = rng.unit_vector(d);
  for (int it = 0; it < 50; ++it) {
    Vec next = S * u;
    const double n = next.norm();
    if (n < 1e-300) return rng.unit_vector(d);
    next /= n;
    const double delta = (next - u).norm();
    u = next;
    if (delta < 1e-8) break;
  }
  return u;
}

namespace {

// Sorted column sample standing in for a hash bucket when none is given.
std::vector<int> random_column_bucket(int N, int L, int q, Rng& rng) {
  const int want = std::min<long long>(N, std::max<long long>(2LL * q, (N + L - 1) / L));
  auto cols = rng.sample_without_replacement(N, static_cast<int>(want));
  std::sort(cols.begin(), cols.end());
  return cols;
}

std::vector<int> group_from_bucket(const Mat& X, const Dictionary& dict,
                                   const std::vector<int>& cols, int q, Rng& rng) {
  Mat Xb(X.rows(), static_cast<int>(cols.size()));
  for (size_t j = 0; j < cols.size(); ++j) Xb.col(static_cast<int>(j)) = X.col(cols[j]);
  auto atoms = somp(Xb, dict, q).active;
  if (atoms.empty()) atoms.push_back(rng.uniform_int(dict.size()));  // all-zero bucket
  return atoms;
}

// Per-column projection errors under every group: errors(g, n).
Mat all_group_errors(const Mat& X, const Dictionary& dict, const GroupTable& table, int threads) {
  const int L = table.size();
  Mat errors(L, X.cols());
  parallel_for(L, threads, [&](long long lo, long long hi) {
    for (long long g = lo; g < hi; ++g) {
      const auto& atoms = table.groups[static_cast<int>(g)];
      const Mat Z = solve_on_support(X, dict, atoms);
      Mat R = X;
      for (size_t j = 0; j < atoms.size(); ++j) {
        R.noalias() -= dict.atoms.col(atoms[j]) * Z.row(static_cast<int>(j));
      }
      errors.row(static_cast<int>(g)) = R.colwise().squaredNorm();
    }
  });
  return errors;
}

}  // namespace

void regenerate_dead_groups(const Mat& X, TrainState& state, int q, Rng& rng,
                            const std::vector<int>* bucket_of, int bucket_count) {
  const int N = static_cast<int>(X.cols());
  const int L = state.groups.size();

  std::vector<int> members(L, 0);
  for (int g : state.assignment.group_of) ++members[g];

  // Atoms first: a dead group rebuilt afterwards can then select the fresh
  // residual directions instead of recycling the same saturated atoms.
  std::vector<bool> used(state.dict.size(), false);
  for (const auto& grp : state.groups.groups) {
    for (int a : grp) used[a] = true;
  }
  bool have_dead_atom = false;
  for (bool u : used) have_dead_atom |= !u;
  if (have_dead_atom) {
    Mat R = X;
    if (!state.codes.empty()) {
      for (int n = 0; n < N; ++n) R.col(n) -= reconstruct(state.dict, state.codes[n]);
    }
    for (int k = 0; k < state.dict.size(); ++k) {
      if (used[k]) continue;
      const Vec u = top_residual_direction(R, rng);
      state.dict.atoms.col(k) = u;
      // Deflate so several dead atoms do not collapse onto the same direction.
      R -= u * (u.transpose() * R);
    }
  }

  for (int g = 0; g < L; ++g) {
    if (members[g] > 0) continue;
    std::vector<int> cols;
    if (bucket_of) {
      const int b = rng.uniform_int(bucket_count);
      for (int n = 0; n < N; ++n) {
        if ((*bucket_of)[n] == b) cols.push_back(n);
      }
    }
    if (cols.empty()) cols = random_column_bucket(N, L, q, rng);
    state.groups.groups[g] = group_from_bucket(X, state.dict, cols, q, rng);
  }
}

GroupLearnResult train(const Mat& X, const GroupLearnConfig& cfg,
                       const std::vector<int>* bucket_of) {
  const int N = static_cast<int>(X.cols());
  const int d = static_cast<int>(X.rows());
  cfg.validate(d, N);
  if (!X.allFinite()) throw NumericError("training data contains non-finite entries");

  int bucket_count = 0;
  if (bucket_of) {
    require(static_cast<int>(bucket_of->size()) == N, "bucket_of length mismatch");
    for (int b : *bucket_of) {
      require(b >= 0, "negative bucket index");
      bucket_count = std::max(bucket_count, b + 1);
    }
  }

  Rng rng(cfg.seed);
  TrainState state;
  state.dict = farthest_point_init(X, cfg.K, rng);
  state.groups.groups.resize(cfg.L);
  if (bucket_of) {
    auto order = rng.sample_without_replacement(bucket_count, std::min(cfg.L, bucket_count));
    for (int g = 0; g < cfg.L; ++g) {
      const int b = g < static_cast<int>(order.size()) ? order[g] : rng.uniform_int(bucket_count);
      std::vector<int> cols;
      for (int n = 0; n < N; ++n) {
        if ((*bucket_of)[n] == b) cols.push_back(n);
      }
      if (cols.empty()) cols = random_column_bucket(N, cfg.L, cfg.q, rng);
      state.groups.groups[g] = group_from_bucket(X, state.dict, cols, cfg.q, rng);
    }
  } else {
    for (int g = 0; g < cfg.L; ++g) {
      state.groups.groups[g] =
          group_from_bucket(X, state.dict, random_column_bucket(N, cfg.L, cfg.q, rng), cfg.q, rng);
    }
  }

  GroupLearnResult out;
  out.energy.reserve(cfg.iters);

  for (int it = 0; it < cfg.iters; ++it) {
    // Step 1: group choice, per column or forced per bucket.
    if (bucket_of) {
      const Mat errors = all_group_errors(X, state.dict, state.groups, cfg.threads);
      Mat bucket_err = Mat::Zero(state.groups.size(), bucket_count);
      for (int n = 0; n < N; ++n) bucket_err.col((*bucket_of)[n]) += errors.col(n);
      std::vector<int> bucket_group(bucket_count, 0);
      for (int b = 0; b < bucket_count; ++b) {
        int best = 0;
        for (int g = 1; g < state.groups.size(); ++g) {
          if (bucket_err(g, b) < bucket_err(best, b)) best = g;
        }
        bucket_group[b] = best;
      }
      state.assignment.group_of.resize(N);
      state.assignment.projection_error.resize(N);
      for (int n = 0; n < N; ++n) {
        const int g = bucket_group[(*bucket_of)[n]];
        state.assignment.group_of[n] = g;
        state.assignment.projection_error[n] = errors(g, n);
      }
    } else {
      state.assignment = assign_groups(X, state.dict, state.groups, cfg.threads);
    }

    regenerate_dead_groups(X, state, cfg.q, rng, bucket_of, bucket_count);

    // Step 2: each live group re-selects its atoms by SOMP over its members.
    std::vector<std::vector<int>> group_cols(state.groups.size());
    for (int n = 0; n < N; ++n) group_cols[state.assignment.group_of[n]].push_back(n);
    std::vector<double> somp_err2(state.groups.size(), -1.0);
    parallel_for(state.groups.size(), cfg.threads, [&](long long lo, long long hi) {
      for (long long g = lo; g < hi; ++g) {
        const auto& cols = group_cols[static_cast<int>(g)];
        if (cols.empty()) continue;
        Mat Xg(d, static_cast<int>(cols.size()));
        for (size_t j = 0; j < cols.size(); ++j) Xg.col(static_cast<int>(j)) = X.col(cols[j]);
        auto res = somp(Xg, state.dict, cfg.q);
        if (!res.active.empty()) {
          state.groups.groups[static_cast<int>(g)] = res.active;
          somp_err2[static_cast<int>(g)] = res.residual_norm * res.residual_norm;
        }
      }
    });

    state.codes = codes_for_assignment(X, state.dict, state.groups, state.assignment);

#ifndef NDEBUG
    // The per-column re-solve reproduces the SOMP-internal solve.
    for (int g = 0; g < state.groups.size(); ++g) {
      if (somp_err2[g] < 0.0) continue;
      double resolved = 0.0;
      for (int n : group_cols[g]) resolved += *state.codes[n].reconstruction_error;
      assert(resolved <= somp_err2[g] + 1e-9 * (1.0 + somp_err2[g]));
    }
#endif

    state.dict = cfg.update_rule == UpdateRule::ksvd ? ksvd_update(X, state.codes, state.dict)
                                                     : dictionary_update(X, state.codes, state.dict);
    out.energy.push_back(coding_energy(X, state.dict, state.codes));
  }

  out.dict = std::move(state.dict);
  out.groups = std::move(state.groups);
  out.assignment = std::move(state.assignment);
  return out;
}

}  // namespace treecode
