#include "loopnest/cachesim.hpp"

#include <algorithm>
#include <bit>
#include <unordered_map>

#include "loopnest/errors.hpp"

namespace loopnest {

std::string replacement_name(Replacement r) {
  switch (r) {
    case Replacement::Random: return "random";
    case Replacement::LRU: return "lru";
    case Replacement::OPT: return "opt";
  }
  return "?";
}

Replacement replacement_from_name(const std::string& name) {
  if (name == "random") return Replacement::Random;
  if (name == "lru") return Replacement::LRU;
  if (name == "opt" || name == "belady") return Replacement::OPT;
  throw ConfigError("unknown replacement policy '" + name + "'");
}

// ---------------------------------------------------------------------------
// CacheConfig

void CacheConfig::validate() const {
  if (levels.empty()) throw ConfigError("cache hierarchy '" + id + "' has no levels");
  for (const auto& l : levels) {
    const auto where = "level " + l.name + " of '" + id + "'";
    if (l.block_bytes == 0 || !std::has_single_bit(l.block_bytes)) {
      throw ConfigError(where + ": block size must be a power of two");
    }
    if (l.associativity == 0) throw ConfigError(where + ": associativity must be >= 1");
    const std::uint64_t set_bytes = std::uint64_t{l.block_bytes} * l.associativity;
    if (l.size_bytes == 0 || l.size_bytes % set_bytes != 0) {
      throw ConfigError(where + ": size must be a positive multiple of block*associativity");
    }
  }
}

bool CacheConfig::uses_opt() const {
  return std::any_of(levels.begin(), levels.end(),
                     [](const LevelConfig& l) { return l.policy == Replacement::OPT; });
}

CacheConfig CacheConfig::with_seed(std::uint64_t seed) const {
  CacheConfig c = *this;
  for (std::size_t k = 0; k < c.levels.size(); ++k) c.levels[k].seed = splitmix64(seed + k);
  return c;
}

CacheConfig CacheConfig::with_policy(Replacement policy) const {
  CacheConfig c = *this;
  for (auto& l : c.levels) l.policy = policy;
  return c;
}

CacheConfig CacheConfig::loki(std::uint64_t seed) {
  CacheConfig c = loki_sized(64 * 1024, 512 * 1024, seed);
  c.id = "loki";
  return c;
}

CacheConfig CacheConfig::loki_sized(std::uint64_t l1_bytes, std::uint64_t l2_bytes,
                                    std::uint64_t seed) {
  CacheConfig c;
  c.id = "l1-" + std::to_string(l1_bytes / 1024) + "k-l2-" + std::to_string(l2_bytes / 1024) + "k";
  c.levels = {
      {"L1", l1_bytes, 32, 1, 3, Replacement::LRU, 0},
      {"L2", l2_bytes, 32, 8, 10, Replacement::Random, 0},
  };
  c.memory_latency = 30;
  return c.with_seed(seed);
}

// ---------------------------------------------------------------------------
// CacheStats

std::uint64_t CacheStats::makespan() const {
  return thread_cycles.empty() ? cycles : *std::max_element(thread_cycles.begin(), thread_cycles.end());
}

bool CacheStats::conserved() const {
  if (levels.empty()) return false;
  if (levels[0].hits + levels[0].misses != refs) return false;
  for (std::size_t k = 1; k < levels.size(); ++k) {
    if (levels[k].hits + levels[k].misses != levels[k - 1].misses) return false;
  }
  return memory_accesses == levels.back().misses;
}

std::uint64_t CacheStats::recompute_cycles(const CacheConfig& config) const {
  std::uint64_t c = nonmem_ticks;
  for (std::size_t k = 0; k < levels.size() && k < config.levels.size(); ++k) {
    c += levels[k].hits * config.levels[k].latency;
  }
  return c + memory_accesses * config.memory_latency;
}

// ---------------------------------------------------------------------------
// CacheLevel

CacheLevel::CacheLevel(const LevelConfig& config)
    : config_(config),
      sets_(config.num_sets()),
      ways_(config.associativity),
      tags_(sets_ * config.associativity, kNever),
      stamp_(sets_ * config.associativity, 0),
      fill_(sets_, 0),
      rng_(config.seed) {
  pow2_ = std::has_single_bit(sets_);
  if (pow2_) set_mask_ = sets_ - 1;
}

std::uint32_t CacheLevel::victim(std::size_t base) {
  switch (config_.policy) {
    case Replacement::Random: return static_cast<std::uint32_t>(rng_.below(ways_));
    case Replacement::LRU: {
      std::uint32_t v = 0;
      for (std::uint32_t w = 1; w < ways_; ++w) {
        if (stamp_[base + w] < stamp_[base + v]) v = w;
      }
      return v;
    }
    case Replacement::OPT: {
      // Farthest next use; never-used-again (kNever) wins; ties go to the lowest way.
      std::uint32_t v = 0;
      for (std::uint32_t w = 1; w < ways_; ++w) {
        if (stamp_[base + w] > stamp_[base + v]) v = w;
      }
      return v;
    }
  }
  return 0;
}

bool CacheLevel::access(std::uint64_t block, std::uint64_t next_use) {
  const std::uint64_t set = pow2_ ? (block & set_mask_) : block % sets_;
  const std::size_t base = static_cast<std::size_t>(set) * ways_;
  const auto policy = config_.policy;

  if (ways_ == 1) {
    if (policy == Replacement::OPT) stamp_[base] = next_use;
    if (tags_[base] == block) return true;
    tags_[base] = block;
    return false;
  }

  // Nothing is ever invalidated, so the valid ways of a set are always a prefix.
  auto& filled = fill_[set];
  for (std::uint32_t w = 0; w < filled; ++w) {
    if (tags_[base + w] == block) {
      if (policy == Replacement::LRU) stamp_[base + w] = ++clock_;
      else if (policy == Replacement::OPT) stamp_[base + w] = next_use;
      return true;
    }
  }
  const std::uint32_t way = filled < ways_ ? filled++ : victim(base);
  tags_[base + way] = block;
  if (policy == Replacement::LRU) stamp_[base + way] = ++clock_;
  else if (policy == Replacement::OPT) stamp_[base + way] = next_use;
  return false;
}

// ---------------------------------------------------------------------------
// Simulator

Simulator::Simulator(const CacheConfig& config, SimOptions opts) : config_(config), opts_(opts) {
  config_.validate();
  for (const auto& l : config_.levels) {
    levels_.emplace_back(l);
    block_shift_.push_back(static_cast<std::uint32_t>(std::countr_zero(l.block_bytes)));
    latency_.push_back(l.latency);
  }
  latency_.push_back(config_.memory_latency);
  stats_.levels.resize(levels_.size());
}

void Simulator::charge(std::uint32_t thread, std::uint64_t cycles, std::uint64_t instructions) {
  if (thread >= stats_.thread_cycles.size()) stats_.thread_cycles.resize(thread + 1, 0);
  stats_.thread_cycles[thread] += cycles;
  stats_.cycles += cycles;
  if (opts_.ipc_window != 0) window_charge(cycles, instructions);
}

void Simulator::window_charge(std::uint64_t cycles, std::uint64_t instructions) {
  total_instr_ += instructions;
  window_instr_ += instructions;
  window_cycles_ += cycles;
  if (window_instr_ >= opts_.ipc_window) {
    stats_.ipc_series.push_back(
        {total_instr_, static_cast<double>(window_instr_) / static_cast<double>(window_cycles_)});
    window_instr_ = 0;
    window_cycles_ = 0;
  }
}

ServedLevel Simulator::lookup(std::uint64_t address) {
  ++stats_.refs;
  const auto n = levels_.size();
  std::size_t k = 0;
  for (; k < n; ++k) {
    if (levels_[k].access(address >> block_shift_[k])) {
      ++stats_.levels[k].hits;
      return static_cast<ServedLevel>(k);
    }
    ++stats_.levels[k].misses;
  }
  ++stats_.memory_accesses;
  return static_cast<ServedLevel>(n);
}

ServedLevel Simulator::access(std::uint64_t address, std::uint32_t thread) {
  const auto k = lookup(address);
  charge(thread, latency_[k], 1);
  return k;
}

void Simulator::tick(std::uint32_t thread, std::uint64_t count) {
  stats_.nonmem_ticks += count;
  if (opts_.ipc_window == 0) {
    charge(thread, count, count);
    return;
  }
  // A run of ticks may straddle window boundaries.
  while (count > 0) {
    const auto take = std::min(count, opts_.ipc_window - window_instr_);
    charge(thread, take, take);
    count -= take;
  }
}

void Simulator::consume(std::span<const Event> events) {
  if (opts_.ipc_window != 0) {
    for (const auto& e : events) {
      if (e.kind == RefKind::Tick) {
        tick(e.thread, e.count);
      } else {
        access(e.address, e.thread);
      }
    }
    return;
  }
  auto& per_thread = stats_.thread_cycles;
  std::uint64_t ticks = 0, cycles = 0;
  for (const auto& e : events) {
    if (e.thread >= per_thread.size()) per_thread.resize(e.thread + 1, 0);
    std::uint64_t cost;
    if (e.kind == RefKind::Tick) {
      cost = e.count;
      ticks += cost;
    } else {
      cost = latency_[lookup(e.address)];
    }
    per_thread[e.thread] += cost;
    cycles += cost;
  }
  stats_.nonmem_ticks += ticks;
  stats_.cycles += cycles;
}

CacheStats Simulator::finish() {
  if (opts_.ipc_window != 0 && window_instr_ > 0) {
    stats_.ipc_series.push_back(
        {total_instr_, static_cast<double>(window_instr_) / static_cast<double>(window_cycles_)});
    window_instr_ = 0;
    window_cycles_ = 0;
  }
  return stats_;
}

CacheStats simulate(TraceGenerator& trace, const CacheConfig& config, SimOptions opts) {
  if (config.uses_opt()) {
    throw ConfigError("OPT replacement needs a buffered trace; use simulate_opt");
  }
  Simulator sim(config, opts);
  for (auto chunk = trace.next_chunk(); !chunk.empty(); chunk = trace.next_chunk()) {
    sim.consume(chunk);
  }
  return sim.finish();
}

CacheStats simulate(std::span<const Event> trace, const CacheConfig& config, SimOptions opts) {
  if (config.uses_opt()) {
    throw ConfigError("OPT replacement needs a buffered trace; use simulate_opt");
  }
  Simulator sim(config, opts);
  sim.consume(trace);
  return sim.finish();
}

std::vector<ServedLevel> served_levels(std::span<const Event> trace, const CacheConfig& config) {
  config.validate();
  std::vector<std::uint64_t> stream;  // addresses reaching the current level
  std::vector<std::uint32_t> origin;  // ref ordinal of each stream entry
  for (const auto& e : trace) {
    if (!e.is_ref()) continue;
    origin.push_back(static_cast<std::uint32_t>(stream.size()));
    stream.push_back(e.address);
  }
  const auto nlevels = config.levels.size();
  std::vector<ServedLevel> served(stream.size(), static_cast<ServedLevel>(nlevels));

  std::vector<std::uint64_t> next_use;
  for (std::size_t k = 0; k < nlevels; ++k) {
    const auto& lc = config.levels[k];
    const auto shift = std::countr_zero(lc.block_bytes);
    next_use.assign(stream.size(), CacheLevel::kNever);
    if (lc.policy == Replacement::OPT) {
      std::unordered_map<std::uint64_t, std::uint64_t> seen;
      seen.reserve(stream.size() / 4 + 16);
      for (std::size_t p = stream.size(); p-- > 0;) {
        const auto block = stream[p] >> shift;
        auto [it, inserted] = seen.try_emplace(block, p);
        if (!inserted) {
          next_use[p] = it->second;
          it->second = p;
        }
      }
    }
    CacheLevel level(lc);
    std::vector<std::uint64_t> next_stream;
    std::vector<std::uint32_t> next_origin;
    for (std::size_t p = 0; p < stream.size(); ++p) {
      if (level.access(stream[p] >> shift, next_use[p])) {
        served[origin[p]] = static_cast<ServedLevel>(k);
      } else {
        next_stream.push_back(stream[p]);
        next_origin.push_back(origin[p]);
      }
    }
    stream = std::move(next_stream);
    origin = std::move(next_origin);
  }
  return served;
}

CacheStats simulate_opt(std::span<const Event> trace, const CacheConfig& config, SimOptions opts) {
  const auto served = served_levels(trace, config);
  Simulator acct(config, opts);
  const auto nlevels = config.levels.size();
  std::size_t r = 0;
  for (const auto& e : trace) {
    if (e.kind == RefKind::Tick) {
      acct.tick(e.thread, e.count);
      continue;
    }
    const auto k = served[r++];
    ++acct.stats_.refs;
    for (std::size_t q = 0; q < k && q < nlevels; ++q) ++acct.stats_.levels[q].misses;
    std::uint64_t latency;
    if (k == nlevels) {
      ++acct.stats_.memory_accesses;
      latency = config.memory_latency;
    } else {
      ++acct.stats_.levels[k].hits;
      latency = config.levels[k].latency;
    }
    acct.charge(e.thread, latency, 1);
  }
  return acct.finish();
}

std::vector<IpcPoint> windowed_ipc(TraceGenerator& trace, const CacheConfig& config,
                                   std::uint64_t window) {
  if (window == 0) throw ConfigError("IPC window must be >= 1 instruction");
  return simulate(trace, config, SimOptions{window}).ipc_series;
}

std::vector<IpcPoint> windowed_ipc(std::span<const Event> trace, const CacheConfig& config,
                                   std::uint64_t window) {
  if (window == 0) throw ConfigError("IPC window must be >= 1 instruction");
  const SimOptions opts{window};
  return (config.uses_opt() ? simulate_opt(trace, config, opts) : simulate(trace, config, opts))
      .ipc_series;
}

}  // namespace loopnest
