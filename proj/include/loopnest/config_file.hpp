#pragma once

// Small declarative text formats.
//
// Cache hierarchy:
//
//   id = loki
//   memory_latency = 30
//   [level L1]
//   size = 64K          # bytes; K/KB/KiB and M/MB/MiB suffixes accepted
//   block = 32
//   assoc = 1
//   latency = 3
//   policy = lru        # lru | random | opt
//   seed = 7            # optional, random policy only
//
// Layer list, one per line:
//
//   # name  out in w h kw kh
//   initial-conf 256 32 28 28 3 3

#include <string>
#include <string_view>
#include <vector>

#include "loopnest/cachesim.hpp"
#include "loopnest/conv_model.hpp"

namespace loopnest {

/// Throws ConfigError with the offending line number. Levels without an explicit seed get
/// splitmix64(default_seed + level index), matching CacheConfig::with_seed.
CacheConfig parse_cache_config(std::string_view text, std::uint64_t default_seed = 1);
CacheConfig load_cache_config(const std::string& path, std::uint64_t default_seed = 1);
std::string format_cache_config(const CacheConfig& config);

std::vector<NamedLayer> parse_layer_list(std::string_view text);
std::vector<NamedLayer> load_layer_list(const std::string& path);

/// Built-in hierarchies: "loki", "l1-16k-l2-128k", "l1-32k-l2-512k", "l1-64k-l2-960k".
/// Any other name is read as a file path. Random levels are reseeded from `seed`.
CacheConfig resolve_cache_config(const std::string& name_or_path, std::uint64_t seed);
std::vector<std::string> cache_preset_names();

std::uint64_t parse_byte_size(std::string_view text);

}  // namespace loopnest
