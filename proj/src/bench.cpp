#include "treecode/bench.hpp"

#include <algorithm>
#include <chrono>

#include "treecode/parallel.hpp"
#include "treecode/pursuit.hpp"

namespace treecode {
namespace bench {

namespace {

double now_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

}  // namespace

double median_seconds(int reps, const std::function<void()>& fn) {
  fn();  // warm run
  std::vector<double> times(reps);
  for (int r = 0; r < reps; ++r) {
    const double t0 = now_seconds();
    fn();
    times[r] = now_seconds() - t0;
  }
  std::sort(times.begin(), times.end());
  return times[reps / 2];
}

EncodeBenchResult run_encode_bench(const HashedModel& model, const Dictionary& omp_dict, int q,
                                   const Mat& X, int reps, int threads) {
  const int N = static_cast<int>(X.cols());
  const int d = static_cast<int>(X.rows());

  RowMatF Xf(N, d);
  for (int n = 0; n < N; ++n) Xf.row(n) = X.col(n).cast<float>().transpose();

  int max_support = 1;
  for (const auto& e : model.entries) {
    max_support = std::max(max_support, static_cast<int>(e.active_set.size()));
  }
  std::vector<float> sink(static_cast<size_t>(N) * max_support);

  EncodeBenchResult out;
  out.vectors = N;
  out.hashed_seconds = median_seconds(reps, [&] {
    parallel_for(N, threads, [&](long long lo, long long hi) {
      for (long long n = lo; n < hi; ++n) {
        encode_into(model, Xf.row(static_cast<int>(n)).data(), sink.data() + n * max_support);
      }
    });
  });

  std::vector<double> omp_sink(N);
  out.omp_seconds = median_seconds(reps, [&] {
    parallel_for(N, threads, [&](long long lo, long long hi) {
      for (long long n = lo; n < hi; ++n) {
        const auto code = omp(X.col(static_cast<int>(n)), omp_dict, q);
        omp_sink[n] = code.values.size() > 0 ? code.values[0] : 0.0;
      }
    });
  });
  out.speedup = out.omp_seconds / out.hashed_seconds;
  return out;
}

}  // namespace bench
}  // namespace treecode
