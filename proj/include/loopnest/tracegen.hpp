#pragma once

// Exact memory-reference stream of the generated convolution code for a given
// (layer, loop order, options), produced lazily so that multi-gigabyte traces
// never have to be materialised.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "loopnest/conv_model.hpp"

namespace loopnest {

enum class RefKind : std::uint8_t { Read = 0, Write = 1, Tick = 2 };

/// One trace event. Reads and writes carry a byte address; a Tick event stands for
/// `count` consecutive non-memory instructions of one thread.
struct Event {
  std::uint64_t address = 0;
  std::uint32_t thread = 0;
  std::uint16_t count = 1;
  RefKind kind = RefKind::Read;

  bool is_ref() const { return kind != RefKind::Tick; }
  /// Instructions this event accounts for.
  std::uint64_t instructions() const { return kind == RefKind::Tick ? count : 1; }

  static Event read(std::uint64_t a, std::uint32_t t) { return {a, t, 1, RefKind::Read}; }
  static Event write(std::uint64_t a, std::uint32_t t) { return {a, t, 1, RefKind::Write}; }
  static Event ticks(std::uint32_t t, std::uint16_t n) { return {0, t, n, RefKind::Tick}; }

  friend bool operator==(const Event&, const Event&) = default;
};

struct Sparsity {
  double weight_density = 1.0;
  double activation_density = 1.0;
  std::uint64_t seed = 1;
};

struct TraceOptions {
  bool partial_sums = true;
  std::uint32_t threads = 1;
  /// Stop after the iteration during which the emitted instruction count reaches this.
  std::optional<std::uint64_t> instr_limit;
  std::optional<Sparsity> sparsity;
  /// Non-memory instructions per innermost iteration (multiply, add, increment, branch).
  std::uint16_t body_ticks = 4;

  void validate() const;
};

/// Contiguous static-schedule chunk [begin, end) of the outermost loop owned by `thread`.
/// The first (extent % threads) threads receive one extra iteration.
struct Chunk {
  std::uint32_t begin = 0;
  std::uint32_t end = 0;
  bool empty() const { return begin == end; }
};
Chunk static_chunk(std::uint32_t extent, std::uint32_t threads, std::uint32_t thread);

/// True when threads > 1 and the parallel (outermost) loop does not partition the out array,
/// so every out update needs an atomic.
bool needs_atomic(const Permutation& perm, std::uint32_t threads);

/// Seeded Bernoulli zero masks over the weight and (padded) input elements.
struct SparsityMasks {
  std::vector<bool> weight_nonzero;
  std::vector<bool> input_nonzero;
  static SparsityMasks make(const LayerParams& layer, const Sparsity& s);
};

/// Pull-style generator. Events come out in chunks of whole innermost iterations; threads
/// take turns one iteration at a time (round robin over threads with work left).
class TraceGenerator {
 public:
  TraceGenerator(const LayerParams& layer, const Permutation& perm, const ArrayLayout& layout,
                 const TraceOptions& opts);
  TraceGenerator(const LayerParams& layer, const Permutation& perm, const TraceOptions& opts);

  /// Next batch of events; empty when the trace has ended.
  std::span<const Event> next_chunk();

  /// Convenience for small traces and tests.
  std::vector<Event> collect();

  const ArrayLayout& layout() const { return layout_; }
  const TraceOptions& options() const { return opts_; }
  std::uint32_t threads() const { return opts_.threads; }
  std::uint64_t instructions_emitted() const { return emitted_; }
  std::uint64_t iterations_emitted() const { return iterations_; }

 private:
  struct ThreadState {
    std::array<std::uint32_t, kNumDims> idx{};
    std::uint64_t in_addr = 0;
    std::uint64_t w_addr = 0;
    std::uint64_t out_addr = 0;
    std::uint32_t end = 0;  // exclusive bound of the outermost loop for this thread
    bool active = false;
  };

  void emit_iteration(ThreadState& t, std::uint32_t tid);

  LayerParams layer_;
  Permutation perm_;
  ArrayLayout layout_;
  TraceOptions opts_;

  std::array<std::uint32_t, kNumDims> extent_{};
  std::array<std::uint64_t, kNumDims> in_step_{}, w_step_{}, out_step_{};
  int flush_pos_ = kNumDims - 1;
  bool dense_ = true;
  bool atomic_ = false;
  std::optional<SparsityMasks> masks_;

  std::vector<ThreadState> threads_;
  std::vector<std::uint32_t> active_;  // thread ids still running, in turn order
  std::size_t turn_ = 0;

  std::vector<Event> buffer_;  // fixed size; the current chunk is buffer_[0, used_)
  std::size_t used_ = 0;
  std::uint64_t emitted_ = 0;
  std::uint64_t iterations_ = 0;
  bool done_ = false;
};

struct RefCounts {
  std::uint64_t reads = 0;
  std::uint64_t writes = 0;
  std::uint64_t ticks = 0;
  std::uint64_t refs() const { return reads + writes; }
  std::uint64_t instructions() const { return reads + writes + ticks; }
  friend bool operator==(const RefCounts&, const RefCounts&) = default;
};

/// Closed-form tallies of a complete (unlimited) trace. Throws ConfigError when an
/// instruction limit is set, since the cut point depends on the interleaving.
RefCounts ref_count(const LayerParams& layer, const Permutation& perm, const TraceOptions& opts);

/// Number of out-array write-backs: the product of the extents of the loops from the
/// outermost down to the deepest out-indexing loop (every iteration without partial sums).
std::uint64_t output_write_count(const LayerParams& layer, const Permutation& perm,
                                 bool partial_sums);

}  // namespace loopnest
