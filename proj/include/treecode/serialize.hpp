#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "treecode/classify.hpp"
#include "treecode/pyramid.hpp"
#include "treecode/treehash.hpp"

namespace treecode {

// Dimension-prefixed matrix block: u64 rows, u64 cols, then row-major f64
// little-endian payload. The same layout serves standalone vector/tensor
// files and every matrix inside a model file.
void write_matrix(std::ostream& out, const Mat& m);
Mat read_matrix(std::istream& in);

void write_matrix_file(const std::string& path, const Mat& m);
Mat read_matrix_file(const std::string& path);

// Hash tree + leaf table, the part of a HashedModel beyond the dictionary.
struct TreeSection {
  HashTree tree;
  std::vector<int> leaf_to_group;
  std::vector<LeafEntry> entries;
};

// On-disk model: magic "TSSC", u32 version, section table, sections. Matrices
// are stored as 64-bit floats, so save/load round-trips are byte-exact.
struct ModelFile {
  static constexpr uint32_t kVersion = 1;

  std::string config_echo;
  std::optional<Dictionary> dict;
  std::optional<GroupTable> groups;
  std::optional<TreeSection> tree;
  std::optional<LinearModel> classifier;

  void save(const std::string& path) const;
  static ModelFile load(const std::string& path);

  // Assembles the compiled inference model; requires dict and tree sections.
  HashedModel hashed() const;
  static ModelFile from_hashed(const HashedModel& model, const GroupTable& groups,
                               std::string config_echo);
};

// Sparse grid file: u64 n_f, height, width, nnz, then offsets (u64), indices
// (u32) and values (f32).
void write_grid_file(const std::string& path, const SparseFeatureGrid& grid);
SparseFeatureGrid read_grid_file(const std::string& path);

}  // namespace treecode
