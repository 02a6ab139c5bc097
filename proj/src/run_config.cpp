#include "treecode/run_config.hpp"

#include <fstream>
#include <sstream>

#include "treecode/common.hpp"

namespace treecode {

const std::map<std::string, std::string>& RunConfig::defaults() {
  static const std::map<std::string, std::string> d = {
      {"vectors", ""},       // training vector file (matrix, one row per vector)
      {"image_dir", ""},     // or a directory of PGM images
      {"model", ""},         // input model path
      {"model_out", ""},     // output model path
      {"K", "256"},          // atom count
      {"q", "5"},            // atoms per group / sparsity budget
      {"depth", "6"},        // tree depth p
      {"L", "0"},            // group count for non-tree training (0 = use leaves)
      {"iters", "10"},       // outer training iterations
      {"lloyd_iters", "10"}, // 2-means refinement steps per tree split
      {"stop_radius", "0"},  // tree recursion radius stop
      {"seed", "0"},
      {"threads", "0"},      // 0 = hardware concurrency; TREECODE_THREADS overrides
      {"lambda", "0.0001"},  // classifier L2 strength
      {"splits", "10"},      // classification splits
      {"update_rule", "least_squares"},
      {"max_vectors", "200000"},  // cap on sampled training descriptors
  };
  return d;
}

bool RunConfig::is_known_key(const std::string& key) { return defaults().count(key) > 0; }

RunConfig RunConfig::parse_text(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    line = line.substr(first, last - first + 1);

    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
    }
    auto strip = [](std::string s) {
      const auto a = s.find_first_not_of(" \t");
      if (a == std::string::npos) return std::string();
      const auto b = s.find_last_not_of(" \t");
      return s.substr(a, b - a + 1);
    };
    cfg.set(strip(line.substr(0, eq)), strip(line.substr(eq + 1)));
  }
  return cfg;
}

RunConfig RunConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path + ": cannot open config");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_text(buf.str());
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (!is_known_key(key)) throw ConfigError("unknown config key '" + key + "'");
  values_[key] = value;
}

bool RunConfig::has(const std::string& key) const {
  if (values_.count(key)) return !values_.at(key).empty();
  return !defaults().at(key).empty();
}

std::string RunConfig::get_string(const std::string& key) const {
  if (values_.count(key)) return values_.at(key);
  auto it = defaults().find(key);
  if (it == defaults().end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

long long RunConfig::get_int(const std::string& key) const {
  const std::string s = get_string(key);
  try {
    size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos != s.size()) throw ConfigError("");
    return v;
  } catch (...) {
    throw ConfigError("config key '" + key + "' expects an integer, got '" + s + "'");
  }
}

double RunConfig::get_double(const std::string& key) const {
  const std::string s = get_string(key);
  try {
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw ConfigError("");
    return v;
  } catch (...) {
    throw ConfigError("config key '" + key + "' expects a number, got '" + s + "'");
  }
}

std::string RunConfig::echo() const {
  std::ostringstream out;
  for (const auto& [key, def] : defaults()) {
    // The echo records what determines the artifact. The destination path
    // does not, and results are thread-count invariant by contract, so
    // neither key may break byte-identity between equivalent runs.
    if (key == "model_out" || key == "threads") continue;
    const std::string v = values_.count(key) ? values_.at(key) : def;
    out << key << "=" << v << "\n";
  }
  return out.str();
}

}  // namespace treecode
