#include "treecode/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>

#include "treecode/parallel.hpp"

namespace fs = std::filesystem;

namespace treecode {
namespace pipeline {

std::vector<std::string> list_pgm_files(const std::string& dir) {
  if (!fs::is_directory(dir)) throw IoError(dir + ": not a directory");
  std::vector<std::string> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".pgm") {
      out.push_back(entry.path().string());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::string> list_pgm_files_recursive(const std::string& dir) {
  if (!fs::is_directory(dir)) throw IoError(dir + ": not a directory");
  std::vector<std::string> out;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".pgm") {
      out.push_back(entry.path().string());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

SparseFeatureGrid encode_grid(const HashedModel& model, const FeatureMap& descriptors,
                              int threads) {
  require(descriptors.channels == model.tree.dim, "descriptor dimension does not match the model");
  const int locations = descriptors.height * descriptors.width;

  std::vector<std::vector<std::pair<int, float>>> per_loc(locations);
  parallel_for(locations, threads, [&](long long lo, long long hi) {
    std::vector<float> x(model.tree.dim);
    std::vector<float> z(model.dict.size());
    for (long long loc = lo; loc < hi; ++loc) {
      const double* src = descriptors.data.data() + loc * descriptors.channels;
      for (int c = 0; c < descriptors.channels; ++c) x[c] = static_cast<float>(src[c]);
      const int leaf = encode_into(model, x.data(), z.data());
      const auto& active = model.entry_for_leaf(leaf).active_set;
      auto& slot = per_loc[loc];
      slot.reserve(active.size());
      for (size_t j = 0; j < active.size(); ++j) slot.push_back({active[j], z[j]});
    }
  });

  SparseFeatureGrid grid;
  grid.n_f = model.dict.size();
  grid.height = descriptors.height;
  grid.width = descriptors.width;
  grid.offsets.resize(locations + 1);
  grid.offsets[0] = 0;
  for (int loc = 0; loc < locations; ++loc) {
    grid.offsets[loc + 1] = grid.offsets[loc] + per_loc[loc].size();
  }
  grid.indices.resize(grid.offsets.back());
  grid.values.resize(grid.offsets.back());
  for (int loc = 0; loc < locations; ++loc) {
    uint64_t at = grid.offsets[loc];
    for (const auto& [idx, val] : per_loc[loc]) {
      grid.indices[at] = idx;
      grid.values[at] = val;
      ++at;
    }
  }
  return grid;
}

Vec encode_image(const HashedModel& model, const GrayImage& img, int threads,
                 SparseFeatureGrid* grid_out) {
  const FeatureMap descriptors = dense_sift(img, threads);
  SparseFeatureGrid grid = encode_grid(model, descriptors, threads);
  Vec pooled = pool(grid);
  if (grid_out) *grid_out = std::move(grid);
  return pooled;
}

Mat collect_descriptors(const std::vector<std::string>& image_paths, long long max_vectors,
                        uint64_t seed, int threads) {
  if (image_paths.empty()) throw IoError("no inputs: empty image list");

  std::vector<FeatureMap> maps(image_paths.size());
  for (size_t i = 0; i < image_paths.size(); ++i) {
    maps[i] = dense_sift(read_pgm(image_paths[i]), threads);
  }
  long long total = 0;
  for (const auto& m : maps) total += static_cast<long long>(m.height) * m.width;
  if (total == 0) throw IoError("no inputs: images produced no descriptors");

  std::vector<long long> keep;
  if (max_vectors > 0 && total > max_vectors) {
    Rng rng(seed);
    // Uniform sample over all descriptor slots, kept in spatial order.
    std::vector<int> sample = rng.sample_without_replacement(
        static_cast<int>(std::min<long long>(total, 1LL << 31)), static_cast<int>(max_vectors));
    keep.assign(sample.begin(), sample.end());
    std::sort(keep.begin(), keep.end());
  } else {
    keep.resize(total);
    for (long long i = 0; i < total; ++i) keep[i] = i;
  }

  Mat X(128, static_cast<int>(keep.size()));
  long long base = 0;
  size_t cursor = 0;
  for (const auto& m : maps) {
    const long long count = static_cast<long long>(m.height) * m.width;
    while (cursor < keep.size() && keep[cursor] < base + count) {
      const long long loc = keep[cursor] - base;
      const double* src = m.data.data() + loc * m.channels;
      for (int c = 0; c < 128; ++c) X(c, static_cast<int>(cursor)) = src[c];
      ++cursor;
    }
    base += count;
  }
  return X;
}

std::string ClassifyReport::csv() const {
  std::ostringstream out;
  out << "split,balanced_accuracy\n";
  out.precision(6);
  out << std::fixed;
  for (size_t s = 0; s < split_accuracy.size(); ++s) {
    out << s << "," << split_accuracy[s] << "\n";
  }
  out << "mean," << mean << "\n";
  out << "std," << stddev << "\n";
  return out.str();
}

namespace {

struct Corpus {
  std::vector<std::string> class_names;
  // feature row + label per image, train images first per class
  Mat features;             // N x D
  std::vector<int> labels;  // 0-based class ids
  std::vector<int> is_train;
};

std::vector<std::string> class_dirs(const std::string& dir) {
  if (!fs::is_directory(dir)) throw IoError(dir + ": not a directory");
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_directory()) names.push_back(entry.path().filename().string());
  }
  std::sort(names.begin(), names.end());
  if (names.empty()) throw IoError(dir + ": no class subdirectories");
  return names;
}

}  // namespace

ClassifyReport classify_dirs(const HashedModel& model, const std::string& train_dir,
                             const std::string& test_dir, int splits, uint64_t seed, double lambda,
                             int threads) {
  require(splits >= 1, "splits must be at least 1");
  const auto classes = class_dirs(train_dir);
  {
    const auto test_classes = class_dirs(test_dir);
    require(classes == test_classes, "train and test class sets differ");
  }

  // Unique image list per class; duplicates (train dir == test dir) collapse.
  struct ClassData {
    std::vector<std::string> paths;
    std::vector<int> row;  // feature row per path
    std::vector<char> from_train;
    std::vector<char> from_test;
    int train_count = 0;
  };
  std::vector<ClassData> data(classes.size());
  std::vector<std::string> all_paths;
  for (size_t c = 0; c < classes.size(); ++c) {
    auto train_paths = list_pgm_files((fs::path(train_dir) / classes[c]).string());
    auto test_paths = list_pgm_files((fs::path(test_dir) / classes[c]).string());
    if (train_paths.empty()) {
      throw IoError("class '" + classes[c] + "' has zero training images");
    }
    data[c].train_count = static_cast<int>(train_paths.size());
    std::set<std::string> seen;
    for (const auto* paths : {&train_paths, &test_paths}) {
      for (const auto& p : *paths) {
        if (seen.insert(p).second) {
          data[c].paths.push_back(p);
          data[c].row.push_back(static_cast<int>(all_paths.size()));
          data[c].from_train.push_back(0);
          data[c].from_test.push_back(0);
          all_paths.push_back(p);
        }
      }
    }
    seen.clear();
    size_t k = 0;
    for (const auto& p : data[c].paths) {
      data[c].from_train[k] =
          std::find(train_paths.begin(), train_paths.end(), p) != train_paths.end();
      data[c].from_test[k] = std::find(test_paths.begin(), test_paths.end(), p) != test_paths.end();
      ++k;
    }
  }

  // Encode every image once.
  const int D = pyramid_length(model.dict.size());
  Mat features(static_cast<int>(all_paths.size()), D);
  for (size_t i = 0; i < all_paths.size(); ++i) {
    features.row(static_cast<int>(i)) = encode_image(model, read_pgm(all_paths[i]), threads).transpose();
  }

  ClassifyReport report;
  for (int s = 0; s < splits; ++s) {
    std::vector<int> train_rows, test_rows, train_labels, test_labels;
    for (size_t c = 0; c < classes.size(); ++c) {
      const int n = static_cast<int>(data[c].paths.size());
      if (splits == 1) {
        for (int i = 0; i < n; ++i) {
          if (data[c].from_train[i]) {
            train_rows.push_back(data[c].row[i]);
            train_labels.push_back(static_cast<int>(c));
          }
          if (data[c].from_test[i]) {
            test_rows.push_back(data[c].row[i]);
            test_labels.push_back(static_cast<int>(c));
          }
        }
      } else {
        Rng rng(seed + 0x9e3779b97f4a7c15ULL * (s + 1) + c);
        auto order = rng.sample_without_replacement(n, n);
        const int take = std::min(data[c].train_count, n);
        for (int i = 0; i < n; ++i) {
          if (i < take) {
            train_rows.push_back(data[c].row[order[i]]);
            train_labels.push_back(static_cast<int>(c));
          } else {
            test_rows.push_back(data[c].row[order[i]]);
            test_labels.push_back(static_cast<int>(c));
          }
        }
      }
    }
    require(!test_rows.empty(),
            "split has no held-out images (train and test directories hold the same files)");

    Mat train_X(static_cast<int>(train_rows.size()), D);
    for (size_t i = 0; i < train_rows.size(); ++i) train_X.row(static_cast<int>(i)) = features.row(train_rows[i]);
    Mat test_X(static_cast<int>(test_rows.size()), D);
    for (size_t i = 0; i < test_rows.size(); ++i) test_X.row(static_cast<int>(i)) = features.row(test_rows[i]);

    FitOptions opts;
    opts.lambda = lambda;
    const LinearModel clf = fit(train_X, train_labels, opts);
    const auto preds = predict(clf, test_X);
    report.split_accuracy.push_back(balanced_accuracy(preds.label, test_labels));
  }

  double sum = 0.0;
  for (double a : report.split_accuracy) sum += a;
  report.mean = sum / report.split_accuracy.size();
  if (report.split_accuracy.size() > 1) {
    double ss = 0.0;
    for (double a : report.split_accuracy) ss += (a - report.mean) * (a - report.mean);
    report.stddev = std::sqrt(ss / (report.split_accuracy.size() - 1));
  }
  return report;
}

namespace {

double now_s() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

}  // namespace

bench::PipelineTiming time_pipeline(const HashedModel& model,
                                    const std::vector<GrayImage>& images, int reps, int threads) {
  require(!images.empty(), "no images to time");
  require(reps >= 1, "reps must be at least 1");

  // Stages are timed inside the one composed pass, so their sum accounts for
  // the total up to loop glue.
  for (const auto& img : images) encode_image(model, img, threads);  // warm run

  std::vector<double> sift_t(reps), code_t(reps), pool_t(reps), total_t(reps);
  for (int r = 0; r < reps; ++r) {
    double sift_acc = 0.0, code_acc = 0.0, pool_acc = 0.0;
    const double t_begin = now_s();
    for (const auto& img : images) {
      const double t0 = now_s();
      const FeatureMap desc = dense_sift(img, threads);
      const double t1 = now_s();
      const SparseFeatureGrid grid = encode_grid(model, desc, threads);
      const double t2 = now_s();
      const Vec pooled = pool(grid);
      const double t3 = now_s();
      (void)pooled;
      sift_acc += t1 - t0;
      code_acc += t2 - t1;
      pool_acc += t3 - t2;
    }
    total_t[r] = now_s() - t_begin;
    sift_t[r] = sift_acc;
    code_t[r] = code_acc;
    pool_t[r] = pool_acc;
  }
  auto median = [](std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
  };

  bench::PipelineTiming t;
  t.images = static_cast<int>(images.size());
  t.sift_s = median(sift_t);
  t.coding_s = median(code_t);
  t.pooling_s = median(pool_t);
  t.total_s = median(total_t);
  t.fps = images.size() / t.total_s;
  return t;
}

}  // namespace pipeline
}  // namespace treecode
