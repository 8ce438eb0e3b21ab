#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace opkit::cli {

// Flat key=value run configuration. Every key has a registered default;
// parsing rejects keys outside the registry so typos fail loudly instead
// of silently running with a default.
class RunConfig {
 public:
  RunConfig();

  static RunConfig parse_file(const std::string& path);
  static RunConfig parse_text(const std::string& text);

  void set(const std::string& key, const std::string& value);
  const std::string& get(const std::string& key) const;

  std::int64_t get_i64(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  /// Comma-separated integers; an empty value gives an empty list.
  std::vector<std::int64_t> get_i64_list(const std::string& key) const;

  /// Every registered key with its final value, in registry order, as
  /// key=value lines. Feeding the result back reproduces this config.
  std::string resolved() const;
  void write_resolved(const std::string& path) const;

  const std::vector<std::string>& keys() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace opkit::cli
