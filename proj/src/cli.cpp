#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>

#include "treecode/parallel.hpp"
#include "treecode/pipeline.hpp"
#include "treecode/run_config.hpp"

namespace treecode {
namespace cli {

namespace {

// Flags mirror config keys; a flag the user passed overrides the file.
struct ConfigCapture {
  std::string config_path;
  std::vector<std::pair<std::string, std::string*>> overrides;

  void add(CLI::App* cmd, const std::string& key, const std::string& flag,
           const std::string& help) {
    auto* storage = new std::string();  // owned by the capture for the parse lifetime
    owned.push_back(std::unique_ptr<std::string>(storage));
    overrides.push_back({key, storage});
    cmd->add_option(flag, *storage, help);
  }

  RunConfig resolve() const {
    RunConfig cfg = config_path.empty() ? RunConfig() : RunConfig::parse_file(config_path);
    for (const auto& [key, value] : overrides) {
      if (!value->empty()) cfg.set(key, *value);
    }
    return cfg;
  }

  std::vector<std::unique_ptr<std::string>> owned;
};

Mat load_training_matrix(const RunConfig& cfg, int threads) {
  if (cfg.has("vectors")) {
    const Mat rows = read_matrix_file(cfg.get_string("vectors"));
    if (rows.rows() == 0) throw IoError("no inputs: vector file is empty");
    return rows.transpose();  // columns are vectors internally
  }
  if (cfg.has("image_dir")) {
    const auto paths = pipeline::list_pgm_files_recursive(cfg.get_string("image_dir"));
    if (paths.empty()) throw IoError("no inputs: no .pgm files in " + cfg.get_string("image_dir"));
    return pipeline::collect_descriptors(paths, cfg.get_int("max_vectors"), cfg.get_int("seed"),
                                         threads);
  }
  throw ConfigError("train-dict needs either vectors= or image_dir=");
}

GroupTable groups_from_entries(const HashedModel& model) {
  GroupTable t;
  t.groups.reserve(model.entries.size());
  for (const auto& e : model.entries) t.groups.push_back(e.active_set);
  return t;
}

int tree_max_depth(const HashTree& tree) {
  // Depth of the deepest leaf.
  int max_depth = 0;
  std::vector<std::pair<int, int>> stack;
  if (tree.nodes.empty()) return 0;
  stack.push_back({0, 1});
  while (!stack.empty()) {
    auto [idx, depth] = stack.back();
    stack.pop_back();
    for (int child : {tree.nodes[idx].left, tree.nodes[idx].right}) {
      if (child >= 0) {
        stack.push_back({child, depth + 1});
      } else {
        max_depth = std::max(max_depth, depth);
      }
    }
  }
  return max_depth;
}

int cmd_train_dict(const RunConfig& cfg) {
  const int threads = resolve_thread_count(static_cast<int>(cfg.get_int("threads")));
  if (!cfg.has("model_out")) throw ConfigError("train-dict needs model_out=");

  const Mat X = load_training_matrix(cfg, threads);
  std::printf("training data: %lld vectors of dim %lld\n",
              static_cast<long long>(X.cols()), static_cast<long long>(X.rows()));

  TreeBuildParams tp;
  tp.max_depth = static_cast<int>(cfg.get_int("depth"));
  tp.stop_radius = cfg.get_double("stop_radius");
  tp.seed = static_cast<uint64_t>(cfg.get_int("seed"));
  tp.lloyd_iters = static_cast<int>(cfg.get_int("lloyd_iters"));
  HashTree tree = build_tree(X, tp);
  std::printf("tree: %d leaves (depth limit %d)\n", tree.leaf_count, tp.max_depth);

  GroupLearnConfig gc;
  gc.K = static_cast<int>(cfg.get_int("K"));
  gc.q = static_cast<int>(cfg.get_int("q"));
  gc.iters = static_cast<int>(cfg.get_int("iters"));
  gc.seed = static_cast<uint64_t>(cfg.get_int("seed"));
  gc.threads = threads;
  const std::string rule = cfg.get_string("update_rule");
  if (rule == "least_squares") {
    gc.update_rule = UpdateRule::least_squares;
  } else if (rule == "ksvd") {
    gc.update_rule = UpdateRule::ksvd;
  } else {
    throw ConfigError("update_rule must be least_squares or ksvd");
  }

  std::vector<double> energy;
  HashedModel model = train_hashed(X, gc, std::move(tree), &energy);
  std::printf("energy trace:");
  for (double e : energy) std::printf(" %.6g", e);
  std::printf("\n");

  ModelFile mf = ModelFile::from_hashed(model, groups_from_entries(model), cfg.echo());
  mf.save(cfg.get_string("model_out"));
  std::printf("model written to %s\n", cfg.get_string("model_out").c_str());
  return 0;
}

int cmd_encode(const RunConfig& cfg, const std::string& image_path, const std::string& grid_out,
               const std::string& pyramid_out) {
  const int threads = resolve_thread_count(static_cast<int>(cfg.get_int("threads")));
  if (!cfg.has("model")) throw ConfigError("encode needs model=");
  const HashedModel model = ModelFile::load(cfg.get_string("model")).hashed();

  SparseFeatureGrid grid;
  const Vec pooled = pipeline::encode_image(model, read_pgm(image_path), threads, &grid);

  if (!grid_out.empty()) write_grid_file(grid_out, grid);
  if (!pyramid_out.empty()) write_matrix_file(pyramid_out, pooled.transpose());
  std::printf("grid %dx%d, %llu nonzeros; pyramid length %lld\n", grid.height, grid.width,
              static_cast<unsigned long long>(grid.nonzeros()),
              static_cast<long long>(pooled.size()));
  return 0;
}

int cmd_classify(const RunConfig& cfg, const std::string& train_dir, const std::string& test_dir,
                 const std::string& report_out) {
  const int threads = resolve_thread_count(static_cast<int>(cfg.get_int("threads")));
  if (!cfg.has("model")) throw ConfigError("classify needs model=");
  const HashedModel model = ModelFile::load(cfg.get_string("model")).hashed();

  const auto report = pipeline::classify_dirs(model, train_dir, test_dir,
                                              static_cast<int>(cfg.get_int("splits")),
                                              static_cast<uint64_t>(cfg.get_int("seed")),
                                              cfg.get_double("lambda"), threads);
  const std::string csv = report.csv();
  if (report_out.empty()) {
    std::fputs(csv.c_str(), stdout);
  } else {
    std::ofstream out(report_out);
    if (!out) throw IoError(report_out + ": cannot open for writing");
    out << csv;
    std::printf("report written to %s (mean %.4f, std %.4f)\n", report_out.c_str(), report.mean,
                report.stddev);
  }
  return 0;
}

int cmd_bench(const RunConfig& cfg, int reps) {
  const int threads = resolve_thread_count(static_cast<int>(cfg.get_int("threads")));
  if (!cfg.has("model")) throw ConfigError("bench needs model=");
  const HashedModel model = ModelFile::load(cfg.get_string("model")).hashed();

  const int d = model.tree.dim;
  const int K = model.dict.size();
  const int depth = tree_max_depth(model.tree);
  int q = 1;
  for (const auto& e : model.entries) q = std::max(q, static_cast<int>(e.active_set.size()));

  const long long tree_mults = bench::tree_encode_multiplies(d, depth, q);
  const long long omp_mults = bench::omp_lower_bound_multiplies(d, K, q);
  std::printf("analytic multiplies per descriptor: tree %lld = %d x %d, omp %lld = %d x %d\n",
              tree_mults, d, depth + q, omp_mults, d, K + q - 1);
  std::printf("analytic ratio: %.3f\n", static_cast<double>(omp_mults) / tree_mults);

  Mat X;
  if (cfg.has("vectors")) {
    X = read_matrix_file(cfg.get_string("vectors")).transpose();
  } else if (cfg.has("image_dir")) {
    const auto paths = pipeline::list_pgm_files_recursive(cfg.get_string("image_dir"));
    if (paths.empty()) throw IoError("no inputs: no .pgm files in " + cfg.get_string("image_dir"));
    X = pipeline::collect_descriptors(paths, cfg.get_int("max_vectors"), cfg.get_int("seed"),
                                      threads);
  } else {
    throw ConfigError("bench needs vectors= or image_dir=");
  }
  require(X.rows() == d, "bench vectors do not match the model dimension");

  const auto enc = bench::run_encode_bench(model, model.dict, q, X, reps, threads);
  std::printf("measured over %d vectors (median of %d, %d threads):\n", enc.vectors, reps, threads);
  std::printf("  hashed encode: %.6f s (%.0f vec/s)\n", enc.hashed_seconds,
              enc.vectors / enc.hashed_seconds);
  std::printf("  own omp:       %.6f s (%.0f vec/s)\n", enc.omp_seconds,
              enc.vectors / enc.omp_seconds);
  std::printf("  measured speedup: %.1fx\n", enc.speedup);

  if (cfg.has("image_dir")) {
    const auto paths = pipeline::list_pgm_files_recursive(cfg.get_string("image_dir"));
    std::vector<GrayImage> images;
    images.reserve(paths.size());
    for (const auto& p : paths) images.push_back(read_pgm(p));
    const auto t = pipeline::time_pipeline(model, images, reps, threads);
    const double staged = t.sift_s + t.coding_s + t.pooling_s;
    std::printf("stage timing over %d images (median of %d):\n", t.images, reps);
    std::printf("  sift %.6f s, coding %.6f s, pooling %.6f s (sum %.6f s)\n", t.sift_s,
                t.coding_s, t.pooling_s, staged);
    std::printf("  total %.6f s, %.2f fps\n", t.total_s, t.fps);
  }
  return 0;
}

int cmd_inspect(const std::string& model_path) {
  const ModelFile mf = ModelFile::load(model_path);
  std::printf("model: %s\n", model_path.c_str());
  std::printf("sections:%s%s%s%s%s\n", mf.config_echo.empty() ? "" : " CONF",
              mf.dict ? " DICT" : "", mf.groups ? " GRPS" : "", mf.tree ? " TREE" : "",
              mf.classifier ? " LINM" : "");
  if (mf.dict) std::printf("dictionary: d=%d K=%d\n", mf.dict->dim(), mf.dict->size());
  if (mf.tree) {
    std::printf("tree: %zu nodes, %d leaves, max depth %d\n", mf.tree->tree.nodes.size(),
                mf.tree->tree.leaf_count, tree_max_depth(mf.tree->tree));
  }
  if (mf.groups && mf.dict) {
    const auto& groups = mf.groups->groups;
    std::vector<int> popularity(mf.dict->size(), 0);
    for (const auto& g : groups) {
      for (int a : g) ++popularity[a];
    }
    std::vector<int> sorted = popularity;
    std::sort(sorted.begin(), sorted.end());
    const int median = sorted[sorted.size() / 2];
    int exactly_one = 0, over_30 = 0, unused = 0;
    for (int p : popularity) {
      exactly_one += p == 1;
      over_30 += p > 30;
      unused += p == 0;
    }
    std::printf("groups: L=%zu\n", groups.size());
    std::printf("atom popularity (groups containing each atom): median %d, exactly 1: %d, "
                ">30: %d, unused: %d\n",
                median, exactly_one, over_30, unused);
    std::map<int, int> hist;
    for (int p : popularity) ++hist[p];
    for (const auto& [pop, count] : hist) {
      std::printf("  popularity %d: %d atoms\n", pop, count);
    }
  }
  if (!mf.config_echo.empty()) {
    std::printf("config echo:\n");
    std::istringstream in(mf.config_echo);
    std::string line;
    while (std::getline(in, line)) std::printf("  %s\n", line.c_str());
  }
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"treecode: tree-structured sparse coding and image classification"};
  app.require_subcommand(1);

  // train-dict
  auto* train = app.add_subcommand("train-dict", "learn tree, dictionary and per-leaf atom sets");
  ConfigCapture train_cfg;
  train->add_option("--config", train_cfg.config_path, "key=value config file");
  train_cfg.add(train, "vectors", "--vectors", "training vector file (matrix, one row per vector)");
  train_cfg.add(train, "image_dir", "--image-dir", "directory of PGM training images");
  train_cfg.add(train, "model_out", "--out", "output model path");
  train_cfg.add(train, "K", "-K,--atoms", "dictionary size");
  train_cfg.add(train, "q", "-q,--sparsity", "atoms per group");
  train_cfg.add(train, "depth", "--depth", "tree depth");
  train_cfg.add(train, "iters", "--iters", "training iterations");
  train_cfg.add(train, "lloyd_iters", "--lloyd-iters", "2-means refinement steps per split");
  train_cfg.add(train, "stop_radius", "--stop-radius", "tree recursion radius stop");
  train_cfg.add(train, "seed", "--seed", "RNG seed");
  train_cfg.add(train, "threads", "--threads", "worker threads (0 = cores)");
  train_cfg.add(train, "update_rule", "--update-rule", "least_squares or ksvd");
  train_cfg.add(train, "max_vectors", "--max-vectors", "descriptor sample cap");

  // encode
  auto* encode = app.add_subcommand("encode", "image -> sparse grid + pyramid vector");
  ConfigCapture encode_cfg;
  std::string encode_image_path, grid_out, pyramid_out;
  encode->add_option("--config", encode_cfg.config_path, "key=value config file");
  encode_cfg.add(encode, "model", "--model", "trained model file");
  encode_cfg.add(encode, "threads", "--threads", "worker threads (0 = cores)");
  encode->add_option("--image", encode_image_path, "input PGM image")->required();
  encode->add_option("--grid-out", grid_out, "sparse grid output file");
  encode->add_option("--pyramid-out", pyramid_out, "pyramid vector output file");

  // classify
  auto* classify = app.add_subcommand("classify", "train/test directories -> accuracy report");
  ConfigCapture classify_cfg;
  std::string train_dir, test_dir, report_out;
  classify->add_option("--config", classify_cfg.config_path, "key=value config file");
  classify_cfg.add(classify, "model", "--model", "trained model file");
  classify_cfg.add(classify, "splits", "--splits", "random splits to evaluate");
  classify_cfg.add(classify, "lambda", "--lambda", "classifier L2 strength");
  classify_cfg.add(classify, "seed", "--seed", "RNG seed");
  classify_cfg.add(classify, "threads", "--threads", "worker threads (0 = cores)");
  classify->add_option("--train-dir", train_dir, "directory of class subdirectories")->required();
  classify->add_option("--test-dir", test_dir, "directory of class subdirectories")->required();
  classify->add_option("--report", report_out, "CSV report path (default stdout)");

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "timing and multiply-count report");
  ConfigCapture bench_cfg;
  int reps = 5;
  bench_cmd->add_option("--config", bench_cfg.config_path, "key=value config file");
  bench_cfg.add(bench_cmd, "model", "--model", "trained model file");
  bench_cfg.add(bench_cmd, "vectors", "--vectors", "vector file to encode");
  bench_cfg.add(bench_cmd, "image_dir", "--image-dir", "directory of PGM images");
  bench_cfg.add(bench_cmd, "threads", "--threads", "worker threads (0 = cores)");
  bench_cfg.add(bench_cmd, "max_vectors", "--max-vectors", "descriptor sample cap");
  bench_cfg.add(bench_cmd, "seed", "--seed", "RNG seed");
  bench_cmd->add_option("--reps", reps, "timing repetitions (median reported)");

  // inspect
  auto* inspect = app.add_subcommand("inspect", "dump model statistics");
  std::string inspect_model;
  inspect->add_option("model", inspect_model, "model file")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (train->parsed()) return cmd_train_dict(train_cfg.resolve());
    if (encode->parsed()) {
      return cmd_encode(encode_cfg.resolve(), encode_image_path, grid_out, pyramid_out);
    }
    if (classify->parsed()) {
      return cmd_classify(classify_cfg.resolve(), train_dir, test_dir, report_out);
    }
    if (bench_cmd->parsed()) {
      if (reps < 1) throw ConfigError("reps must be at least 1");
      return cmd_bench(bench_cfg.resolve(), reps);
    }
    if (inspect->parsed()) return cmd_inspect(inspect_model);
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return 4;
  }
  return 1;
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.push_back(argv[i]);
  return run(args);
}

}  // namespace cli
}  // namespace treecode
