#pragma once

// Trace-driven multi-level cache model with an additive cycle estimate:
//   cycles = non-memory instructions + sum over levels of hits * latency,
// where main memory is the last level and its "hits" are the misses of the level above.
// Inclusive allocate-on-miss fill, write-allocate, no writeback traffic, one set of
// caches shared by every logical thread.

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "loopnest/rng.hpp"
#include "loopnest/tracegen.hpp"

namespace loopnest {

enum class Replacement { Random, LRU, OPT };

std::string replacement_name(Replacement r);
Replacement replacement_from_name(const std::string& name);

struct LevelConfig {
  std::string name;
  std::uint64_t size_bytes = 0;
  std::uint32_t block_bytes = 32;
  std::uint32_t associativity = 1;
  std::uint32_t latency = 1;
  Replacement policy = Replacement::LRU;
  std::uint64_t seed = 1;  // Random policy only

  std::uint64_t num_sets() const { return size_bytes / (std::uint64_t{block_bytes} * associativity); }
};

struct CacheConfig {
  std::string id = "custom";
  std::vector<LevelConfig> levels;
  std::uint32_t memory_latency = 30;

  /// Throws ConfigError: sizes must divide into block*assoc sets, blocks a power of two.
  void validate() const;
  bool uses_opt() const;

  /// Copy with every Random level reseeded from `seed` (level k gets splitmix64(seed + k)).
  CacheConfig with_seed(std::uint64_t seed) const;
  CacheConfig with_policy(Replacement policy) const;

  /// L1 3 cycles / 64 KiB / 32 B / direct-mapped; L2 10 cycles / 512 KiB / 32 B / 8-way random;
  /// memory 30 cycles.
  static CacheConfig loki(std::uint64_t seed = 1);
  /// Same latencies and geometry with different capacities.
  static CacheConfig loki_sized(std::uint64_t l1_bytes, std::uint64_t l2_bytes, std::uint64_t seed = 1);
};

struct LevelStats {
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
  friend bool operator==(const LevelStats&, const LevelStats&) = default;
};

struct IpcPoint {
  std::uint64_t window_end = 0;  // instruction count at the end of the window
  double recent_ipc = 0.0;
  friend bool operator==(const IpcPoint&, const IpcPoint&) = default;
};

struct CacheStats {
  std::vector<LevelStats> levels;
  std::uint64_t memory_accesses = 0;
  std::uint64_t nonmem_ticks = 0;
  std::uint64_t refs = 0;
  std::uint64_t cycles = 0;
  /// Cycles charged to each logical thread; they sum to `cycles`.
  std::vector<std::uint64_t> thread_cycles;
  std::vector<IpcPoint> ipc_series;

  std::uint64_t instructions() const { return refs + nonmem_ticks; }
  /// Slowest thread's cycles: the execution-time estimate of a parallel run.
  std::uint64_t makespan() const;
  /// Hit/miss chains are consistent: L1 hits+misses = refs, level k+1 lookups = level k misses,
  /// memory accesses = last-level misses.
  bool conserved() const;
  /// nonmem + sum hits*latency recomputed from the components.
  std::uint64_t recompute_cycles(const CacheConfig& config) const;

  friend bool operator==(const CacheStats&, const CacheStats&) = default;
};

/// One level of set-associative cache over block numbers.
class CacheLevel {
 public:
  static constexpr std::uint64_t kNever = std::numeric_limits<std::uint64_t>::max();

  explicit CacheLevel(const LevelConfig& config);

  /// Looks up `block`, filling it on a miss. `next_use` is the position of the block's next
  /// access in this level's stream (kNever if none); only OPT reads it.
  bool access(std::uint64_t block, std::uint64_t next_use = kNever);

  const LevelConfig& config() const { return config_; }

 private:
  std::uint32_t victim(std::size_t set_base);

  LevelConfig config_;
  std::uint64_t sets_ = 0;
  std::uint64_t set_mask_ = 0;
  bool pow2_ = false;  // set count is a power of two: index with set_mask_
  std::uint32_t ways_ = 1;
  std::vector<std::uint64_t> tags_;   // kNever marks an invalid way
  std::vector<std::uint64_t> stamp_;  // LRU: last access time; OPT: next use
  std::vector<std::uint32_t> fill_;   // valid ways per set
  std::uint64_t clock_ = 0;
  XorShift64Star rng_;
};

/// Served-by level of one reference: 0..levels-1, or levels for main memory.
using ServedLevel = std::uint8_t;

struct SimOptions {
  /// Instruction window for the recent-IPC series; 0 disables it.
  std::uint64_t ipc_window = 0;
};

/// Streaming simulator for non-OPT hierarchies.
class Simulator {
 public:
  explicit Simulator(const CacheConfig& config, SimOptions opts = {});

  /// Returns the level that served the reference.
  ServedLevel access(std::uint64_t address, std::uint32_t thread);
  void tick(std::uint32_t thread, std::uint64_t count);
  void consume(std::span<const Event> events);
  CacheStats finish();

 private:
  friend CacheStats simulate_opt(std::span<const Event>, const CacheConfig&, SimOptions);
  ServedLevel lookup(std::uint64_t address);
  void charge(std::uint32_t thread, std::uint64_t cycles, std::uint64_t instructions);
  void window_charge(std::uint64_t cycles, std::uint64_t instructions);

  CacheConfig config_;
  SimOptions opts_;
  std::vector<CacheLevel> levels_;
  std::vector<std::uint32_t> block_shift_;
  std::vector<std::uint64_t> latency_;  // per served level, memory last
  CacheStats stats_;
  std::uint64_t window_instr_ = 0;
  std::uint64_t window_cycles_ = 0;
  std::uint64_t total_instr_ = 0;
};

/// Runs a generator to completion. Throws ConfigError if any level uses OPT, which needs the
/// whole future of the trace.
CacheStats simulate(TraceGenerator& trace, const CacheConfig& config, SimOptions opts = {});
CacheStats simulate(std::span<const Event> trace, const CacheConfig& config, SimOptions opts = {});

/// Buffered simulation supporting OPT at any level: levels are resolved one at a time over
/// the stream of references that reach them, using forward distances for OPT.
CacheStats simulate_opt(std::span<const Event> trace, const CacheConfig& config, SimOptions opts = {});

/// Served level for every reference of a buffered trace (non-ref events skipped).
std::vector<ServedLevel> served_levels(std::span<const Event> trace, const CacheConfig& config);

/// Recent IPC over consecutive windows of `window` instructions; the last window may be short.
std::vector<IpcPoint> windowed_ipc(TraceGenerator& trace, const CacheConfig& config, std::uint64_t window);
std::vector<IpcPoint> windowed_ipc(std::span<const Event> trace, const CacheConfig& config, std::uint64_t window);

}  // namespace loopnest
