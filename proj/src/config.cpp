#include "opkit/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace opkit::cli {

namespace {

const std::vector<std::pair<std::string, std::string>>& registry() {
  static const std::vector<std::pair<std::string, std::string>> entries = {
      {"seed", "0"},
      {"output_dir", "run"},
      {"data.kind", "darcy"},
      {"data.path", ""},
      {"data.train_count", "0"},
      {"data.val_count", "0"},
      {"data.resolutions", ""},
      {"model.kind", "fno"},
      {"model.hidden_channels", "32"},
      {"model.n_layers", "4"},
      {"model.modes", "8,8"},
      {"model.padding_fraction", "0"},
      {"model.factorization", "none"},
      {"model.rank_fraction", "1"},
      {"model.positional_embedding", "true"},
      {"train.epochs", "10"},
      {"train.batch_size", "8"},
      {"train.lr", "0.001"},
      {"train.lr_gamma", "1"},
      {"train.lr_step", "1"},
      {"train.loss", "l2"},
      {"train.loss_p", "2"},
      {"train.modes_start", ""},
      {"train.modes_increment", "0"},
      {"train.modes_step", "1"},
  };
  return entries;
}

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const char* want) {
  throw std::invalid_argument("config key " + key + " holds \"" + value +
                              "\", expected " + want);
}

}  // namespace

RunConfig::RunConfig() {
  for (const auto& [key, value] : registry()) values_[key] = value;
}

RunConfig RunConfig::parse_text(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  " is not key=value: " + t);
    cfg.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return cfg;
}

RunConfig RunConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_text(buf.str());
}

void RunConfig::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end())
    throw std::invalid_argument("unknown config key: " + key);
  it->second = value;
}

const std::string& RunConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end())
    throw std::invalid_argument("unknown config key: " + key);
  return it->second;
}

std::int64_t RunConfig::get_i64(const std::string& key) const {
  const std::string& v = get(key);
  char* end = nullptr;
  const long long x = std::strtoll(v.c_str(), &end, 10);
  if (v.empty() || end != v.c_str() + v.size())
    bad_value(key, v, "an integer");
  return static_cast<std::int64_t>(x);
}

std::uint64_t RunConfig::get_u64(const std::string& key) const {
  const std::string& v = get(key);
  char* end = nullptr;
  const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
  if (v.empty() || v[0] == '-' || end != v.c_str() + v.size())
    bad_value(key, v, "a non-negative integer");
  return static_cast<std::uint64_t>(x);
}

double RunConfig::get_double(const std::string& key) const {
  const std::string& v = get(key);
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size()) bad_value(key, v, "a number");
  return x;
}

bool RunConfig::get_bool(const std::string& key) const {
  const std::string& v = get(key);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad_value(key, v, "true or false");
}

std::vector<std::int64_t> RunConfig::get_i64_list(
    const std::string& key) const {
  const std::string& v = get(key);
  std::vector<std::int64_t> out;
  if (trim(v).empty()) return out;
  std::istringstream in(v);
  std::string item;
  while (std::getline(in, item, ',')) {
    const std::string t = trim(item);
    char* end = nullptr;
    const long long x = std::strtoll(t.c_str(), &end, 10);
    if (t.empty() || end != t.c_str() + t.size())
      bad_value(key, v, "comma-separated integers");
    out.push_back(static_cast<std::int64_t>(x));
  }
  return out;
}

std::string RunConfig::resolved() const {
  std::string out;
  for (const auto& [key, unused] : registry())
    out += key + "=" + values_.at(key) + "\n";
  return out;
}

void RunConfig::write_resolved(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << resolved();
  if (!out) throw std::runtime_error("failed writing " + path);
}

const std::vector<std::string>& RunConfig::keys() const {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [key, unused] : registry()) out.push_back(key);
    return out;
  }();
  return names;
}

}  // namespace opkit::cli
