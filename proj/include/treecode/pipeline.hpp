#pragma once

#include <string>
#include <vector>

#include "treecode/bench.hpp"
#include "treecode/image_io.hpp"
#include "treecode/pyramid.hpp"
#include "treecode/serialize.hpp"

namespace treecode {
namespace pipeline {

// Sorted .pgm paths directly inside dir.
std::vector<std::string> list_pgm_files(const std::string& dir);

// Sorted .pgm paths anywhere under dir, so a labeled corpus root (with class
// subdirectories) works directly as a training set.
std::vector<std::string> list_pgm_files_recursive(const std::string& dir);

// Codes every location of a 128-channel descriptor map through the tree.
SparseFeatureGrid encode_grid(const HashedModel& model, const FeatureMap& descriptors,
                              int threads = 1);

// dense_sift -> encode_grid -> pool. grid_out, when given, receives the
// intermediate sparse grid.
Vec encode_image(const HashedModel& model, const GrayImage& img, int threads = 1,
                 SparseFeatureGrid* grid_out = nullptr);

// Descriptor sample for dictionary training: every image's dense SIFT grid,
// flattened to columns and subsampled to at most max_vectors with the seed.
Mat collect_descriptors(const std::vector<std::string>& image_paths, long long max_vectors,
                        uint64_t seed, int threads = 1);

struct ClassifyReport {
  std::vector<double> split_accuracy;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation over splits
  std::string csv() const;
};

// Labeled corpus layout: dir/<class-name>/*.pgm, class names sorted. With
// splits == 1 the directories are used as given; with more, each split
// redraws train/test from the pooled images per class, keeping the train
// count of the original directory.
ClassifyReport classify_dirs(const HashedModel& model, const std::string& train_dir,
                             const std::string& test_dir, int splits, uint64_t seed, double lambda,
                             int threads = 1);

// Per-stage timing over an image set: each stage is median-timed over reps
// passes, plus a composed full pass for the total.
bench::PipelineTiming time_pipeline(const HashedModel& model,
                                    const std::vector<GrayImage>& images, int reps, int threads);

}  // namespace pipeline

namespace cli {

// Entry point behind the treecode binary. Exit codes: 0 ok, 1 usage, 2 I/O,
// 3 config, 4 numeric failure.
int run(int argc, char** argv);
int run(const std::vector<std::string>& args);  // args without argv[0]

}  // namespace cli
}  // namespace treecode
