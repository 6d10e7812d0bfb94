#pragma once

#include <random>
#include <vector>

#include "loopnest/cachesim.hpp"
#include "oracles/naive_cache.hpp"

namespace oracle {

/// Reads/writes over a few hot regions plus a cold tail, interleaved with tick runs.
inline std::vector<loopnest::Event> random_trace(std::uint64_t seed, std::size_t refs, std::uint32_t threads = 1) {
  std::mt19937_64 gen(seed);
  std::uniform_int_distribution<int> pick(0, 99);
  std::uniform_int_distribution<std::uint64_t> hot(0, 1023), warm(0, 16383), cold(0, (1u << 20) - 1);
  std::uniform_int_distribution<std::uint32_t> tid(0, threads - 1);
  std::vector<loopnest::Event> ev;
  std::uint64_t stride_pos = 0;
  while (ev.size() < refs) {
    const auto r = pick(gen);
    const auto t = tid(gen);
    std::uint64_t addr;
    if (r < 40) addr = 0x10000 + hot(gen) * 4;
    else if (r < 70) addr = 0x40000 + warm(gen) * 4;
    else if (r < 85) addr = 0x80000 + (stride_pos += 36) % (1u << 18);
    else addr = cold(gen) * 4;
    ev.push_back(pick(gen) < 20 ? loopnest::Event::write(addr, t) : loopnest::Event::read(addr, t));
    if (pick(gen) < 50) ev.push_back(loopnest::Event::ticks(t, static_cast<std::uint16_t>(1 + pick(gen) % 5)));
  }
  return ev;
}

inline Policy to_oracle(loopnest::Replacement r) {
  switch (r) {
    case loopnest::Replacement::LRU: return Policy::Lru;
    case loopnest::Replacement::Random: return Policy::Random;
    case loopnest::Replacement::OPT: return Policy::Opt;
  }
  return Policy::Lru;
}

inline std::vector<Level> to_oracle(const loopnest::CacheConfig& c) {
  std::vector<Level> out;
  for (const auto& l : c.levels) {
    out.push_back({l.size_bytes, l.block_bytes, l.associativity, l.latency, to_oracle(l.policy), l.seed});
  }
  return out;
}

inline std::vector<std::uint64_t> addresses(const std::vector<loopnest::Event>& ev) {
  std::vector<std::uint64_t> a;
  for (const auto& e : ev) {
    if (e.is_ref()) a.push_back(e.address);
  }
  return a;
}

}  // namespace oracle
