#pragma once

// key = value configuration files with [section] headers. Shared by the
// router config files and the experiment spec format.

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hera {

struct SpecError : std::runtime_error {
  int line = 0;
  SpecError(int line_, const std::string& msg)
      : std::runtime_error("line " + std::to_string(line_) + ": " + msg), line(line_) {}
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class KvConfig {
 public:
  static KvConfig parse_text(const std::string& text);
  static KvConfig parse_file(const std::string& path);  // IoError when missing

  bool has_section(const std::string& section) const;
  std::optional<std::string> get(const std::string& section, const std::string& key) const;

  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  int get_int(const std::string& section, const std::string& key, int fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& section, const std::string& key,
                                  std::vector<double> fallback) const;

  const std::map<std::string, std::map<std::string, std::string>>& sections() const {
    return sections_;
  }

 private:
  int line_of(const std::string& section, const std::string& key) const;

  std::map<std::string, std::map<std::string, std::string>> sections_;
  std::map<std::string, int> lines_;  // "section.key" -> line number
};

}  // namespace hera
