#pragma once

// Offline analyses over sweep results. A "column" is one (layer, config, threads) instance;
// speedup of a permutation on a column is best metric / its metric, so 1.0 marks the optimum.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "loopnest/explorer.hpp"
#include "loopnest/tracegen.hpp"

namespace loopnest {

enum class Metric { Cycles, L2Misses };
std::string metric_name(Metric m);
Metric metric_from_name(const std::string& name);
std::uint64_t metric_value(const SweepResult& r, Metric m);

struct Column {
  std::string layer_id;
  std::string config_id;
  std::uint32_t threads = 1;
  std::string label() const;
};

struct SpeedupTable {
  Metric metric = Metric::Cycles;
  std::vector<Column> columns;
  std::vector<std::uint16_t> perms;             // lex indices, ascending
  std::vector<std::vector<double>> speedup;     // [perm position][column]
  std::vector<double> mean, min;                // per perm position
  std::vector<std::uint16_t> best_perm;         // per column; lowest lex on ties
  std::vector<std::uint64_t> best_metric, worst_metric;  // per column

  std::size_t position_of(std::uint16_t lex) const;
  /// Worst / best metric of a column (the "N times" figure).
  double spread(std::size_t column) const;
};

/// Builds the table. Every column must hold exactly one row per permutation of `perms`
/// (default: the union of permutations seen). Throws CoverageError naming missing keys.
SpeedupTable speedup_table(const std::vector<SweepResult>& rows, Metric metric,
                           std::optional<std::vector<std::uint16_t>> perms = std::nullopt);

struct RankEntry {
  std::uint16_t lex = 0;
  std::uint16_t ham = 0;
  double mean = 0.0;
  double min = 0.0;
};

/// Mean speedup descending, then min descending, then lex ascending.
std::vector<RankEntry> rank_permutations(const SpeedupTable& table);

struct Combination {
  std::vector<std::uint16_t> members;  // lex, ascending
  double mean = 0.0;
  double min = 0.0;
};

struct BestOfKOptions {
  /// Beam width for k > 2: the beam is seeded with the best pairs and grown one member at a
  /// time, keeping this many candidates per step.
  std::size_t beam_width = 64;
  /// Number of ranked combinations returned (0 = all that were scored).
  std::size_t top = 0;
};

/// Per column a combination scores the best speedup among its members; ranked like
/// rank_permutations (ties by member list). k <= 2 is exhaustive.
std::vector<Combination> best_of_k(const SpeedupTable& table, std::size_t k,
                                   const BestOfKOptions& opts = {});

/// Smallest m with 1 - (1 - g)^m >= confidence; nullopt when g == 0.
std::optional<std::uint64_t> sample_size_for(double g, double confidence);

struct SamplingResult {
  /// Fewest good permutations on any column, and that column.
  std::size_t good_count = 0;
  std::size_t worst_column = 0;
  std::size_t universe = 0;
  double g = 0.0;
  std::optional<std::uint64_t> m;
  /// 1 - (1 - g)^m at the returned m.
  double achieved = 0.0;
};

SamplingResult random_sampling_requirement(const SpeedupTable& table, double good_threshold,
                                           double confidence);

/// Average-rank Spearman correlation.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

/// Permutations whose mean speedup lies below the largest gap in the sorted means.
std::vector<std::uint16_t> degraded_group(const SpeedupTable& table);

enum class StabilityAxis { Config, Threads };
StabilityAxis stability_axis_from_name(const std::string& name);

struct StabilityReport {
  std::vector<std::string> groups;           // axis values in ascending order
  std::vector<std::uint16_t> perms;
  std::vector<std::vector<double>> mean;     // [group][perm position]
  std::vector<double> adjacent_spearman;     // groups[g] vs groups[g+1]
  /// Largest drop in mean speedup, first group -> each group, over the first group's top
  /// decile.
  std::vector<double> top_decile_drop;
  std::vector<std::vector<std::uint16_t>> degraded;  // per group
};

/// Groups rows by the axis, builds one table per group (columns = the remaining keys) and
/// requires identical permutation coverage across groups.
StabilityReport stability_export(const std::vector<SweepResult>& rows, StabilityAxis axis, Metric metric);

struct ReuseMap {
  std::vector<std::uint32_t> address_rank;  // first-touch rank per reference
  std::vector<std::uint32_t> block_rank;    // same after dropping offset bits
  std::uint64_t distinct_addresses = 0;
  std::uint64_t distinct_blocks = 0;
  std::uint64_t window = 0;
  std::uint64_t max_working_set = 0;   // distinct blocks in any full window
  double mean_working_set = 0.0;       // over all window positions
};

inline constexpr std::uint64_t kDefaultWorkingSetWindow = 1'000'000;

/// Reads and writes only; tick events are skipped.
ReuseMap reuse_map(std::span<const Event> trace, unsigned block_offset_bits,
                   std::uint64_t window = kDefaultWorkingSetWindow);

// ---------------------------------------------------------------------------
// Plot-ready CSV text

/// Per column: metric of every permutation along the Hamiltonian axis.
std::string export_signatures(const std::vector<SweepResult>& rows);
/// Long format: column, lex, ham, speedup.
std::string export_speedups(const SpeedupTable& table);
std::string export_ranking(const std::vector<RankEntry>& ranking);
std::string export_stability(const StabilityReport& report);
/// group_a, group_b, spearman, then per group the degraded-group size.
std::string export_stability_summary(const StabilityReport& report);
std::string export_combinations(const std::vector<Combination>& combos);
/// Per column, speedups sorted descending (one curve per column).
std::string export_sorted_curves(const SpeedupTable& table);
/// seq, address_rank, block_rank; every `stride`-th reference.
std::string export_reuse(const ReuseMap& map, std::size_t stride = 1);
std::string export_ipc(const std::vector<IpcPoint>& series);

/// Minimal matplotlib script for one of the exports above ("f4_2", "f4_7", "f5_1", "f5_3",
/// "f5_4", "f3_3", "ipc").
std::string plot_script(const std::string& family, const std::string& csv_path);

}  // namespace loopnest
