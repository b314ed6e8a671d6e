#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace keat {

struct ConfigKey {
  std::string name;
  std::string default_value;
  std::string doc;
};

/// Flat `key=value` configuration with dotted keys. Every key must appear in
/// schema(); anything else is rejected with ConfigError naming the key.
class Config {
 public:
  Config();

  [[nodiscard]] static auto schema() -> const std::vector<ConfigKey>&;

  void set(const std::string& key, const std::string& value);
  /// Parses one `key=value` override.
  void apply(const std::string& assignment);
  /// Reads a file of `key=value` lines; blank lines and `#` comments are skipped.
  void load_file(const std::filesystem::path& path);

  [[nodiscard]] auto has(const std::string& key) const -> bool;
  [[nodiscard]] auto get(const std::string& key) const -> const std::string&;
  [[nodiscard]] auto get_double(const std::string& key) const -> double;
  [[nodiscard]] auto get_size(const std::string& key) const -> std::size_t;
  [[nodiscard]] auto get_u64(const std::string& key) const -> std::uint64_t;
  [[nodiscard]] auto get_list(const std::string& key) const -> std::vector<std::string>;

  [[nodiscard]] auto values() const -> const std::map<std::string, std::string>& { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace keat
