#pragma once

// Reference computations that avoid the library's loop machinery.

#include <array>
#include <cstdint>
#include <set>
#include <vector>

#include "loopnest/conv_model.hpp"

namespace oracle {

/// out[o][y][x] computed element by element from the defining sum.
inline std::vector<std::int64_t> brute_convolve(const loopnest::LayerParams& L, const std::vector<std::int64_t>& in,
                                                const std::vector<std::int64_t>& w) {
  const std::size_t HP = L.img_h + L.ker_h - 1, WP = L.img_w + L.ker_w - 1;
  std::vector<std::int64_t> out(std::size_t{L.out_channels} * L.img_h * L.img_w, 0);
  for (std::size_t o = 0; o < L.out_channels; ++o)
    for (std::size_t y = 0; y < L.img_h; ++y)
      for (std::size_t x = 0; x < L.img_w; ++x) {
        std::int64_t acc = 0;
        for (std::size_t i = 0; i < L.in_channels; ++i)
          for (std::size_t ky = 0; ky < L.ker_h; ++ky)
            for (std::size_t kx = 0; kx < L.ker_w; ++kx)
              acc += in[(i * HP + y + ky) * WP + x + kx] * w[((o * L.in_channels + i) * L.ker_h + ky) * L.ker_w + kx];
        out[(o * L.img_h + y) * L.img_w + x] = acc;
      }
  return out;
}

/// Canonical dimension ordinals: o=0, i=1, y=2, x=3, ky=4, kx=5.
inline std::array<std::uint32_t, 6> extents_of(const loopnest::LayerParams& L) {
  return {L.out_channels, L.in_channels, L.img_h, L.img_w, L.ker_h, L.ker_w};
}

/// Out-array write-backs, by walking every iteration in loop order. With partial sums a
/// write happens whenever the loop state of the deepest out-indexing loop and everything
/// outside it is about to change (or the nest ends); without them, on every iteration.
inline std::uint64_t brute_write_count(const loopnest::LayerParams& L, const std::array<int, 6>& order,
                                       bool partial_sums) {
  const auto ext = extents_of(L);
  int deepest = -1;
  for (int p = 0; p < 6; ++p) {
    if (order[p] == 0 || order[p] == 2 || order[p] == 3) deepest = p;
  }
  std::array<std::uint32_t, 6> idx{};
  std::uint64_t writes = 0;
  std::set<std::array<std::uint32_t, 6>> prefixes;
  while (true) {
    // Next state in loop order (odometer over positions).
    std::array<std::uint32_t, 6> next = idx;
    int p = 5;
    for (; p >= 0; --p) {
      if (++next[p] < ext[order[p]]) break;
      next[p] = 0;
    }
    const bool last = p < 0;
    if (!partial_sums) {
      ++writes;
    } else {
      bool changes = last;
      for (int q = 0; q <= deepest && !changes; ++q) changes = next[q] != idx[q];
      if (changes) {
        ++writes;
        std::array<std::uint32_t, 6> pre{};
        for (int q = 0; q <= deepest; ++q) pre[q] = idx[q];
        prefixes.insert(pre);
      }
    }
    if (last) break;
    idx = next;
  }
  // Each distinct outer state is flushed exactly once.
  if (partial_sums && prefixes.size() != writes) return ~std::uint64_t{0};
  return writes;
}

}  // namespace oracle
