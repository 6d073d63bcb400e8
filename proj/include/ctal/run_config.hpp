#pragma once

#include <map>
#include <string>
#include <vector>

namespace ctal {

struct ConfigKey {
  std::string name;
  std::string default_value;
  std::string doc;
};

// Flat key=value run configuration. Every key has a registered default;
// setting an unknown key is an error. Files use one "key=value" per line
// with '#' comments; flag overrides win over file values.
class RunConfig {
public:
  RunConfig();  // all defaults

  static const std::vector<ConfigKey>& registry();

  void load_file(const std::string& path);
  void set(const std::string& key, const std::string& value);
  void set_kv(const std::string& assignment);  // "key=value"

  bool was_set(const std::string& key) const { return explicit_.count(key) > 0; }

  std::string str(const std::string& key) const;
  long integer(const std::string& key) const;
  double real(const std::string& key) const;
  bool boolean(const std::string& key) const;

  // Sorted "key=value" lines; stable across runs for byte-identical echoes.
  std::string dump() const;

private:
  std::map<std::string, std::string> values_;
  std::map<std::string, bool> explicit_;
};

}  // namespace ctal
