#include "treecode/serialize.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; big-endian hosts need byte swaps");

namespace treecode {

namespace {

template <typename T>
void write_pod(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw IoError("unexpected end of file");
  return v;
}

void write_i32_vector(std::ostream& out, const std::vector<int>& v) {
  write_pod<uint64_t>(out, v.size());
  for (int x : v) write_pod<int32_t>(out, x);
}

std::vector<int> read_i32_vector(std::istream& in) {
  std::vector<int> v(read_pod<uint64_t>(in));
  for (auto& x : v) x = read_pod<int32_t>(in);
  return v;
}

}  // namespace

void write_matrix(std::ostream& out, const Mat& m) {
  write_pod<uint64_t>(out, static_cast<uint64_t>(m.rows()));
  write_pod<uint64_t>(out, static_cast<uint64_t>(m.cols()));
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) write_pod<double>(out, m(r, c));
  }
}

Mat read_matrix(std::istream& in) {
  const auto rows = read_pod<uint64_t>(in);
  const auto cols = read_pod<uint64_t>(in);
  if (rows > (1ULL << 32) || cols > (1ULL << 32)) throw IoError("implausible matrix dimensions");
  Mat m(static_cast<int>(rows), static_cast<int>(cols));
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) m(r, c) = read_pod<double>(in);
  }
  return m;
}

void write_matrix_file(const std::string& path, const Mat& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path + ": cannot open for writing");
  write_matrix(out, m);
  if (!out) throw IoError(path + ": write failed");
}

Mat read_matrix_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open");
  return read_matrix(in);
}

namespace {

constexpr char kMagic[4] = {'T', 'S', 'S', 'C'};

struct SectionEntry {
  char tag[4];
  uint64_t offset;
  uint64_t size;
};

void write_tree_section(std::ostream& out, const TreeSection& t) {
  write_pod<uint64_t>(out, static_cast<uint64_t>(t.tree.dim));
  write_pod<uint64_t>(out, static_cast<uint64_t>(t.tree.leaf_count));
  write_pod<uint64_t>(out, t.tree.nodes.size());
  for (const auto& node : t.tree.nodes) {
    write_pod<double>(out, node.threshold);
    write_pod<int32_t>(out, node.left);
    write_pod<int32_t>(out, node.right);
    for (int i = 0; i < t.tree.dim; ++i) write_pod<double>(out, node.direction[i]);
  }
  write_i32_vector(out, t.leaf_to_group);
  write_pod<uint64_t>(out, t.entries.size());
  for (const auto& e : t.entries) {
    write_i32_vector(out, e.active_set);
    write_matrix(out, e.decoder);
  }
}

TreeSection read_tree_section(std::istream& in) {
  TreeSection t;
  t.tree.dim = static_cast<int>(read_pod<uint64_t>(in));
  t.tree.leaf_count = static_cast<int>(read_pod<uint64_t>(in));
  t.tree.nodes.resize(read_pod<uint64_t>(in));
  for (auto& node : t.tree.nodes) {
    node.threshold = read_pod<double>(in);
    node.left = read_pod<int32_t>(in);
    node.right = read_pod<int32_t>(in);
    node.direction.resize(t.tree.dim);
    for (int i = 0; i < t.tree.dim; ++i) node.direction[i] = read_pod<double>(in);
  }
  t.leaf_to_group = read_i32_vector(in);
  t.entries.resize(read_pod<uint64_t>(in));
  for (auto& e : t.entries) {
    e.active_set = read_i32_vector(in);
    e.decoder = read_matrix(in);
  }
  return t;
}

}  // namespace

void ModelFile::save(const std::string& path) const {
  // Serialize each present section to its own buffer first, then lay out the
  // table with real offsets.
  std::vector<std::pair<std::string, std::string>> sections;

  if (!config_echo.empty()) sections.push_back({"CONF", config_echo});
  if (dict) {
    std::ostringstream buf(std::ios::binary);
    write_matrix(buf, dict->atoms);
    sections.push_back({"DICT", buf.str()});
  }
  if (groups) {
    std::ostringstream buf(std::ios::binary);
    write_pod<uint64_t>(buf, groups->groups.size());
    for (const auto& g : groups->groups) write_i32_vector(buf, g);
    sections.push_back({"GRPS", buf.str()});
  }
  if (tree) {
    std::ostringstream buf(std::ios::binary);
    write_tree_section(buf, *tree);
    sections.push_back({"TREE", buf.str()});
  }
  if (classifier) {
    std::ostringstream buf(std::ios::binary);
    write_matrix(buf, classifier->weights);
    write_matrix(buf, classifier->bias);
    sections.push_back({"LINM", buf.str()});
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path + ": cannot open for writing");
  out.write(kMagic, 4);
  write_pod<uint32_t>(out, kVersion);
  write_pod<uint32_t>(out, static_cast<uint32_t>(sections.size()));
  uint64_t offset = 4 + 4 + 4 + sections.size() * (4 + 8 + 8);
  for (const auto& [tag, payload] : sections) {
    out.write(tag.data(), 4);
    write_pod<uint64_t>(out, offset);
    write_pod<uint64_t>(out, payload.size());
    offset += payload.size();
  }
  for (const auto& [tag, payload] : sections) {
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  }
  if (!out) throw IoError(path + ": write failed");
}

ModelFile ModelFile::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open");

  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw IoError(path + ": not a TSSC model file (bad magic)");
  }
  const auto version = read_pod<uint32_t>(in);
  if (version != kVersion) {
    throw IoError(path + ": unsupported model version " + std::to_string(version));
  }
  const auto count = read_pod<uint32_t>(in);
  std::vector<SectionEntry> table(count);
  for (auto& e : table) {
    in.read(e.tag, 4);
    e.offset = read_pod<uint64_t>(in);
    e.size = read_pod<uint64_t>(in);
  }
  if (!in) throw IoError(path + ": truncated section table");

  ModelFile mf;
  for (const auto& e : table) {
    in.seekg(static_cast<std::streamoff>(e.offset));
    const std::string tag(e.tag, 4);
    if (tag == "CONF") {
      std::string text(e.size, '\0');
      in.read(text.data(), static_cast<std::streamsize>(e.size));
      mf.config_echo = std::move(text);
    } else if (tag == "DICT") {
      mf.dict = Dictionary(read_matrix(in));
    } else if (tag == "GRPS") {
      GroupTable t;
      t.groups.resize(read_pod<uint64_t>(in));
      for (auto& g : t.groups) g = read_i32_vector(in);
      mf.groups = std::move(t);
    } else if (tag == "TREE") {
      mf.tree = read_tree_section(in);
    } else if (tag == "LINM") {
      LinearModel m;
      m.weights = read_matrix(in);
      m.bias = read_matrix(in);
      mf.classifier = std::move(m);
    } else {
      throw IoError(path + ": unknown section tag '" + tag + "'");
    }
    if (!in) throw IoError(path + ": truncated section " + tag);
  }
  return mf;
}

HashedModel ModelFile::hashed() const {
  require(dict.has_value() && tree.has_value(), "model file lacks dictionary or tree sections");
  HashedModel m;
  m.tree = tree->tree;
  m.dict = *dict;
  m.leaf_to_group = tree->leaf_to_group;
  m.entries = tree->entries;
  m.compile();
  return m;
}

ModelFile ModelFile::from_hashed(const HashedModel& model, const GroupTable& groups,
                                 std::string config_echo) {
  ModelFile mf;
  mf.config_echo = std::move(config_echo);
  mf.dict = model.dict;
  mf.groups = groups;
  mf.tree = TreeSection{model.tree, model.leaf_to_group, model.entries};
  return mf;
}

void write_grid_file(const std::string& path, const SparseFeatureGrid& grid) {
  grid.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path + ": cannot open for writing");
  write_pod<uint64_t>(out, static_cast<uint64_t>(grid.n_f));
  write_pod<uint64_t>(out, static_cast<uint64_t>(grid.height));
  write_pod<uint64_t>(out, static_cast<uint64_t>(grid.width));
  write_pod<uint64_t>(out, grid.nonzeros());
  for (uint64_t o : grid.offsets) write_pod<uint64_t>(out, o);
  for (int i : grid.indices) write_pod<uint32_t>(out, static_cast<uint32_t>(i));
  for (float v : grid.values) write_pod<float>(out, v);
  if (!out) throw IoError(path + ": write failed");
}

SparseFeatureGrid read_grid_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open");
  SparseFeatureGrid grid;
  grid.n_f = static_cast<int>(read_pod<uint64_t>(in));
  grid.height = static_cast<int>(read_pod<uint64_t>(in));
  grid.width = static_cast<int>(read_pod<uint64_t>(in));
  const auto nnz = read_pod<uint64_t>(in);
  grid.offsets.resize(static_cast<size_t>(grid.height) * grid.width + 1);
  for (auto& o : grid.offsets) o = read_pod<uint64_t>(in);
  grid.indices.resize(nnz);
  for (auto& i : grid.indices) i = static_cast<int>(read_pod<uint32_t>(in));
  grid.values.resize(nnz);
  for (auto& v : grid.values) v = read_pod<float>(in);
  grid.validate();
  return grid;
}

}  // namespace treecode
