#pragma once

// Sweeps over layers x loop orders x cache hierarchies x thread counts. Every point runs
// tracegen -> cachesim on a worker pool; results are persisted as a key-sorted CSV with a
// JSON sidecar that describes (and hash-stamps) the design space.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "loopnest/cachesim.hpp"
#include "loopnest/conv_model.hpp"
#include "loopnest/tracegen.hpp"

namespace loopnest {

struct PermSelection {
  enum class Kind { All, Explicit, Sample };
  Kind kind = Kind::All;
  std::vector<std::uint16_t> lex;  // Explicit
  std::size_t sample_size = 0;     // Sample
  std::uint64_t seed = 1;          // Sample

  /// Sorted lex indices.
  std::vector<std::uint16_t> resolve() const;

  static PermSelection all() { return {}; }
  static PermSelection explicit_list(std::vector<std::uint16_t> lex);
  static PermSelection sample(std::size_t n, std::uint64_t seed);
};

struct DesignSpace {
  std::vector<NamedLayer> layers;
  PermSelection perms;
  std::vector<CacheConfig> configs;
  std::vector<std::uint32_t> thread_counts = {1};
  std::optional<std::uint64_t> instr_limit;
  /// partial_sums, body_ticks and sparsity are taken from here; threads and the limit
  /// come from the axes above.
  TraceOptions trace;

  /// Throws ConfigError for empty axes, duplicate ids, or an OPT hierarchy whose trace
  /// would exceed the buffering bound.
  void validate() const;
  std::size_t total_runs() const;
  /// Canonical JSON description of the space.
  std::string describe() const;
  /// FNV-1a 64 of describe(), hex.
  std::string hash() const;
};

/// Largest trace (in references) buffered for OPT replacement.
inline constexpr std::uint64_t kMaxBufferedRefs = 32'000'000;

struct SweepResult {
  std::string layer_id;
  LayerParams layer;
  std::uint16_t perm_lex = 0;
  std::uint16_t perm_ham = 0;
  std::string config_id;
  std::uint32_t threads = 1;
  /// Execution-time estimate: the slowest thread's cycles (equals total_cycles for 1 thread).
  std::uint64_t cycles = 0;
  /// Sum over all threads: non-memory instructions + sum hits * latency.
  std::uint64_t total_cycles = 0;
  std::uint64_t l1_misses = 0;
  std::uint64_t l2_misses = 0;
  std::uint64_t refs = 0;
  std::uint64_t ticks = 0;

  friend bool operator==(const SweepResult&, const SweepResult&) = default;
};

/// Ordering key: (layer_id, config_id, threads, perm_lex).
bool key_less(const SweepResult& a, const SweepResult& b);
bool same_key(const SweepResult& a, const SweepResult& b);

SweepResult make_result(const NamedLayer& layer, const Permutation& perm, const CacheConfig& config,
                        std::uint32_t threads, const CacheStats& stats);

/// One point: streams the trace into the simulator, or buffers it when a level uses OPT.
CacheStats simulate_point(const LayerParams& layer, const Permutation& perm,
                          const CacheConfig& config, const TraceOptions& opts);

std::string results_csv_header();
std::string format_result_row(const SweepResult& r);
SweepResult parse_result_row(const std::string& line);
void write_results_csv(const std::string& path, const std::vector<SweepResult>& rows);
std::vector<SweepResult> read_results_csv(const std::string& path);

/// Worker count: explicit value, else LOOPNEST_WORKERS, else hardware concurrency.
unsigned resolve_workers(std::optional<unsigned> requested);

struct SweepOptions {
  std::optional<unsigned> workers;
  /// Called after each completed point with (done, total).
  std::function<void(std::size_t, std::size_t)> progress;
};

/// All points, sorted by key regardless of completion order.
std::vector<SweepResult> run_sweep(const DesignSpace& space, const SweepOptions& opts = {});

struct SweepSummary {
  std::size_t total = 0;
  std::size_t computed = 0;
  std::size_t reused = 0;
};

/// Runs the space into `path` (CSV) and `path + ".json"` (sidecar). Rows already present in
/// `path` or in the `path + ".partial"` journal of an interrupted run are reused, provided
/// the sidecar/journal hash matches the space. Completed rows are appended to the journal as
/// they finish; the sorted file replaces it at the end. If writing fails the journal is left
/// behind as the partial-file marker.
SweepSummary run_sweep_to_file(const DesignSpace& space, const std::string& path,
                               const SweepOptions& opts = {});

// ---------------------------------------------------------------------------
// Presets

/// "squeezenet" (8 layers), "synthetic-216", "synthetic-36". Throws UsageError otherwise.
DesignSpace preset_space(const std::string& name);
std::vector<NamedLayer> synthetic_layers(const std::vector<std::uint32_t>& channels,
                                         const std::vector<std::uint32_t>& images,
                                         const std::vector<std::uint32_t>& kernels);
std::vector<NamedLayer> synthetic_216_layers();
std::vector<NamedLayer> synthetic_36_layers();

// ---------------------------------------------------------------------------
// Compute tiles vs L2 tiles

struct TileConfig {
  std::uint32_t compute_tiles = 1;
  std::uint32_t l2_tiles = 1;
  std::uint32_t total_tiles = 16;
  bool full_utilization() const { return compute_tiles + l2_tiles == total_tiles; }
  bool valid() const { return compute_tiles + l2_tiles <= total_tiles; }
};

struct TileResult {
  TileConfig tiles;
  std::uint32_t threads = 0;
  std::uint64_t l2_bytes = 0;
  CacheStats stats;
};

struct TileSweepOptions {
  std::uint32_t total_tiles = 16;
  std::uint32_t l2_kb_per_tile = 64;  // 8 banks x 8 KiB
  std::uint32_t cores_per_tile = 8;
  CacheConfig base = CacheConfig::loki();  // L2 (level index 1) is resized per split
  TraceOptions trace;
  std::optional<unsigned> workers;
};

/// Every full-utilisation split c + l = total with c, l >= 1: threads = cores_per_tile * c,
/// L2 = l * l2_kb_per_tile KiB.
std::vector<TileResult> tile_sweep(const LayerParams& layer, const Permutation& perm,
                                   const TileSweepOptions& opts);

struct TileTradeoff {
  /// Compute-tile count of the split with the best mean normalised performance.
  std::uint32_t best_overall = 0;
  struct PerLayer {
    std::uint32_t best_split = 0;
    /// cycles(best_overall) / cycles(best_split) - 1.
    double gain = 0.0;
  };
  std::vector<PerLayer> layers;
  double mean_gain = 0.0;
  double max_gain = 0.0;
};

/// Per-layer optimum vs the single best-on-average split, by makespan.
TileTradeoff tile_tradeoff(const std::vector<std::vector<TileResult>>& per_layer);

}  // namespace loopnest
