#pragma once

#include <map>
#include <string>

namespace treecode {

// key=value text configuration. '#' starts a comment; unknown keys are
// rejected. Every consumed value is echoed into the model file for
// provenance.
class RunConfig {
 public:
  static const std::map<std::string, std::string>& defaults();
  static bool is_known_key(const std::string& key);

  static RunConfig parse_text(const std::string& text);
  static RunConfig parse_file(const std::string& path);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;

  std::string get_string(const std::string& key) const;
  long long get_int(const std::string& key) const;
  double get_double(const std::string& key) const;

  // Canonical key=value lines, sorted by key; only keys explicitly set or
  // defaulted-and-consumed appear.
  std::string echo() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace treecode
