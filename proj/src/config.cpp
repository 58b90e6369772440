#include "hera/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace hera {

namespace {

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

}  // namespace

KvConfig KvConfig::parse_text(const std::string& text) {
  KvConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw SpecError(lineno, "unterminated section header");
      section = trim(t.substr(1, t.size() - 2));
      if (section.empty()) throw SpecError(lineno, "empty section name");
      cfg.sections_[section];
      continue;
    }
    size_t eq = t.find('=');
    if (eq == std::string::npos) throw SpecError(lineno, "expected key = value");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty()) throw SpecError(lineno, "empty key");
    cfg.sections_[section][key] = value;
    cfg.lines_[section + "." + key] = lineno;
  }
  return cfg;
}

KvConfig KvConfig::parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open spec file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_text(buf.str());
}

bool KvConfig::has_section(const std::string& section) const {
  return sections_.count(section) > 0;
}

std::optional<std::string> KvConfig::get(const std::string& section,
                                         const std::string& key) const {
  auto sit = sections_.find(section);
  if (sit == sections_.end()) return std::nullopt;
  auto kit = sit->second.find(key);
  if (kit == sit->second.end()) return std::nullopt;
  return kit->second;
}

int KvConfig::line_of(const std::string& section, const std::string& key) const {
  auto it = lines_.find(section + "." + key);
  return it == lines_.end() ? 0 : it->second;
}

std::string KvConfig::get_string(const std::string& section, const std::string& key,
                                 const std::string& fallback) const {
  auto v = get(section, key);
  return v ? *v : fallback;
}

double KvConfig::get_double(const std::string& section, const std::string& key,
                            double fallback) const {
  auto v = get(section, key);
  if (!v) return fallback;
  try {
    size_t pos = 0;
    double d = std::stod(*v, &pos);
    if (pos != v->size()) throw std::invalid_argument("trailing characters");
    return d;
  } catch (const std::exception&) {
    throw SpecError(line_of(section, key), "expected a number for " + section + "." + key);
  }
}

int KvConfig::get_int(const std::string& section, const std::string& key, int fallback) const {
  auto v = get(section, key);
  if (!v) return fallback;
  try {
    size_t pos = 0;
    int i = std::stoi(*v, &pos);
    if (pos != v->size()) throw std::invalid_argument("trailing characters");
    return i;
  } catch (const std::exception&) {
    throw SpecError(line_of(section, key), "expected an integer for " + section + "." + key);
  }
}

bool KvConfig::get_bool(const std::string& section, const std::string& key,
                        bool fallback) const {
  auto v = get(section, key);
  if (!v) return fallback;
  if (*v == "on" || *v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "off" || *v == "false" || *v == "0" || *v == "no") return false;
  throw SpecError(line_of(section, key), "expected on/off for " + section + "." + key);
}

std::vector<double> KvConfig::get_doubles(const std::string& section, const std::string& key,
                                          std::vector<double> fallback) const {
  auto v = get(section, key);
  if (!v) return fallback;
  std::vector<double> out;
  std::istringstream in(*v);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::string t = trim(item);
    if (t.empty()) continue;
    try {
      out.push_back(std::stod(t));
    } catch (const std::exception&) {
      throw SpecError(line_of(section, key), "expected a number list for " + section + "." + key);
    }
  }
  if (out.empty())
    throw SpecError(line_of(section, key), "empty list for " + section + "." + key);
  return out;
}

}  // namespace hera
