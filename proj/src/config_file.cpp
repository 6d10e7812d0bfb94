#include "loopnest/config_file.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "loopnest/errors.hpp"

namespace loopnest {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string_view strip_comment(std::string_view s) {
  const auto h = s.find('#');
  return h == std::string_view::npos ? s : s.substr(0, h);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::uint64_t parse_uint(std::string_view s, const std::string& what) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ConfigError("bad " + what + " '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

std::uint64_t parse_byte_size(std::string_view text) {
  auto s = trim(text);
  std::size_t digits = 0;
  while (digits < s.size() && s[digits] >= '0' && s[digits] <= '9') ++digits;
  if (digits == 0) throw ConfigError("bad size '" + std::string(text) + "'");
  const auto value = parse_uint(s.substr(0, digits), "size");
  std::string suffix(trim(s.substr(digits)));
  std::transform(suffix.begin(), suffix.end(), suffix.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (suffix.empty() || suffix == "b") return value;
  if (suffix == "k" || suffix == "kb" || suffix == "kib") return value * 1024;
  if (suffix == "m" || suffix == "mb" || suffix == "mib") return value * 1024 * 1024;
  throw ConfigError("bad size suffix '" + suffix + "'");
}

CacheConfig parse_cache_config(std::string_view text, std::uint64_t default_seed) {
  CacheConfig c;
  c.levels.clear();
  LevelConfig* level = nullptr;
  std::vector<bool> seeded;
  std::istringstream in{std::string(text)};
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto line = trim(strip_comment(raw));
    if (line.empty()) continue;
    const auto where = [&] { return "line " + std::to_string(lineno) + ": "; };
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where() + "unterminated section header");
      auto body = trim(line.substr(1, line.size() - 2));
      if (body.substr(0, 5) != "level") throw ConfigError(where() + "expected [level NAME]");
      auto name = trim(body.substr(5));
      c.levels.push_back({});
      seeded.push_back(false);
      level = &c.levels.back();
      level->name = name.empty() ? "L" + std::to_string(c.levels.size()) : std::string(name);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where() + "expected key = value");
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    try {
      if (!level) {
        if (key == "id" || key == "name") c.id = value;
        else if (key == "memory_latency") c.memory_latency = static_cast<std::uint32_t>(parse_uint(value, key));
        else throw ConfigError("unknown key '" + key + "'");
      } else {
        if (key == "size") level->size_bytes = parse_byte_size(value);
        else if (key == "block") level->block_bytes = static_cast<std::uint32_t>(parse_byte_size(value));
        else if (key == "assoc" || key == "associativity") level->associativity = static_cast<std::uint32_t>(parse_uint(value, key));
        else if (key == "latency") level->latency = static_cast<std::uint32_t>(parse_uint(value, key));
        else if (key == "policy") level->policy = replacement_from_name(value);
        else if (key == "seed") {
          level->seed = parse_uint(value, key);
          seeded.back() = true;
        }
        else throw ConfigError("unknown key '" + key + "'");
      }
    } catch (const ConfigError& e) {
      throw ConfigError(where() + e.what());
    }
  }
  for (std::size_t k = 0; k < c.levels.size(); ++k) {
    if (!seeded[k]) c.levels[k].seed = splitmix64(default_seed + k);
  }
  c.validate();
  return c;
}

CacheConfig load_cache_config(const std::string& path, std::uint64_t default_seed) {
  return parse_cache_config(read_file(path), default_seed);
}

std::string format_cache_config(const CacheConfig& config) {
  std::ostringstream os;
  os << "id = " << config.id << "\nmemory_latency = " << config.memory_latency << "\n";
  for (const auto& l : config.levels) {
    os << "\n[level " << l.name << "]\nsize = " << l.size_bytes << "\nblock = " << l.block_bytes
       << "\nassoc = " << l.associativity << "\nlatency = " << l.latency
       << "\npolicy = " << replacement_name(l.policy) << "\nseed = " << l.seed << "\n";
  }
  return os.str();
}

std::vector<NamedLayer> parse_layer_list(std::string_view text) {
  std::vector<NamedLayer> out;
  std::istringstream in{std::string(text)};
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto line = trim(strip_comment(raw));
    if (line.empty()) continue;
    std::istringstream fields{std::string(line)};
    NamedLayer nl;
    std::uint32_t v[6];
    if (!(fields >> nl.name >> v[0] >> v[1] >> v[2] >> v[3] >> v[4] >> v[5])) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'name out in w h kw kh'");
    }
    nl.params = {v[0], v[1], v[2], v[3], v[4], v[5]};
    try {
      nl.params.validate();
    } catch (const DomainError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    }
    out.push_back(std::move(nl));
  }
  if (out.empty()) throw ConfigError("layer list is empty");
  return out;
}

std::vector<NamedLayer> load_layer_list(const std::string& path) { return parse_layer_list(read_file(path)); }

std::vector<std::string> cache_preset_names() {
  return {"loki", "l1-16k-l2-128k", "l1-32k-l2-512k", "l1-64k-l2-960k"};
}

CacheConfig resolve_cache_config(const std::string& name_or_path, std::uint64_t seed) {
  if (name_or_path == "loki") return CacheConfig::loki(seed);
  if (name_or_path == "l1-16k-l2-128k") return CacheConfig::loki_sized(16 * 1024, 128 * 1024, seed);
  if (name_or_path == "l1-32k-l2-512k") return CacheConfig::loki_sized(32 * 1024, 512 * 1024, seed);
  if (name_or_path == "l1-64k-l2-960k") return CacheConfig::loki_sized(64 * 1024, 960 * 1024, seed);
  if (!std::filesystem::exists(name_or_path)) {
    throw UsageError("unknown cache config '" + name_or_path + "' (not a preset or a file)");
  }
  return load_cache_config(name_or_path, seed);
}

}  // namespace loopnest
