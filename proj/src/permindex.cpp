#include "loopnest/permindex.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <numeric>
#include <string>

#include "loopnest/errors.hpp"

namespace loopnest {

namespace {

void check_n(int n) {
  if (n < 1 || n > kMaxPermN) {
    throw DomainError("permutation size must be in [1, 8], got " + std::to_string(n));
  }
}

void check_perm(std::span<const std::uint8_t> perm) {
  check_n(static_cast<int>(perm.size()));
  std::vector<bool> seen(perm.size(), false);
  for (auto v : perm) {
    if (v >= perm.size() || seen[v]) throw DomainError("sequence is not a permutation of 0..n-1");
    seen[v] = true;
  }
}

PermVec reversed(std::span<const std::uint8_t> perm) { return PermVec(perm.rbegin(), perm.rend()); }

struct HamiltonianTable {
  std::vector<PermVec> path;
  std::map<PermVec, std::uint64_t> rank;
};

const HamiltonianTable& hamiltonian_table(int n) {
  static std::mutex mu;
  static std::map<int, HamiltonianTable> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) {
    HamiltonianTable t;
    t.path = sjt_path(n);
    for (std::uint64_t k = 0; k < t.path.size(); ++k) t.rank.emplace(t.path[k], k);
    it = cache.emplace(n, std::move(t)).first;
  }
  return it->second;
}

PermVec to_vec(const Permutation& perm) {
  PermVec v(kNumDims);
  for (int p = 0; p < kNumDims; ++p) v[static_cast<std::size_t>(p)] = static_cast<std::uint8_t>(ordinal(perm.at(p)));
  return v;
}

}  // namespace

std::string_view scheme_name(IndexScheme s) {
  switch (s) {
    case IndexScheme::Lex: return "lex";
    case IndexScheme::RevLex: return "revlex";
    case IndexScheme::Hamiltonian: return "hamiltonian";
  }
  return "?";
}

IndexScheme scheme_from_name(std::string_view name) {
  if (name == "lex") return IndexScheme::Lex;
  if (name == "revlex") return IndexScheme::RevLex;
  if (name == "hamiltonian" || name == "ham") return IndexScheme::Hamiltonian;
  throw DomainError("unknown index scheme '" + std::string(name) + "'");
}

std::uint64_t factorial(int n) {
  std::uint64_t f = 1;
  for (int k = 2; k <= n; ++k) f *= static_cast<std::uint64_t>(k);
  return f;
}

std::vector<PermVec> sjt_path(int n) {
  check_n(n);
  // Even's formulation: each element carries a direction; repeatedly move the largest
  // mobile element one step and flip the direction of every larger element.
  PermVec perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), std::uint8_t{0});
  std::vector<int> dir(static_cast<std::size_t>(n), -1);  // indexed by element value
  dir[0] = 0;

  std::vector<PermVec> out;
  out.reserve(factorial(n));
  out.push_back(perm);
  for (;;) {
    int best_pos = -1;
    for (int p = 0; p < n; ++p) {
      const auto v = perm[static_cast<std::size_t>(p)];
      if (dir[v] == 0) continue;
      if (best_pos < 0 || v > perm[static_cast<std::size_t>(best_pos)]) best_pos = p;
    }
    if (best_pos < 0) break;

    const auto v = perm[static_cast<std::size_t>(best_pos)];
    const int target = best_pos + dir[v];
    std::swap(perm[static_cast<std::size_t>(best_pos)], perm[static_cast<std::size_t>(target)]);
    // Stop moving at either end, or when the next element over is larger.
    const int beyond = target + dir[v];
    if (beyond < 0 || beyond >= n || perm[static_cast<std::size_t>(beyond)] > v) dir[v] = 0;
    for (int p = 0; p < n; ++p) {
      const auto w = perm[static_cast<std::size_t>(p)];
      if (w > v) dir[w] = p < target ? +1 : -1;
    }
    out.push_back(perm);
  }
  return out;
}

std::vector<PermVec> lex_permutations(int n) {
  check_n(n);
  PermVec perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), std::uint8_t{0});
  std::vector<PermVec> out;
  out.reserve(factorial(n));
  do {
    out.push_back(perm);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

std::uint64_t lex_rank(std::span<const std::uint8_t> perm) {
  check_perm(perm);
  const int n = static_cast<int>(perm.size());
  std::uint64_t rank = 0;
  for (int p = 0; p < n; ++p) {
    int smaller_after = 0;
    for (int q = p + 1; q < n; ++q) {
      if (perm[static_cast<std::size_t>(q)] < perm[static_cast<std::size_t>(p)]) ++smaller_after;
    }
    rank += static_cast<std::uint64_t>(smaller_after) * factorial(n - 1 - p);
  }
  return rank;
}

PermVec lex_unrank(int n, std::uint64_t rank) {
  check_n(n);
  if (rank >= factorial(n)) {
    throw DomainError("index " + std::to_string(rank) + " out of range for n=" + std::to_string(n));
  }
  std::vector<std::uint8_t> pool(static_cast<std::size_t>(n));
  std::iota(pool.begin(), pool.end(), std::uint8_t{0});
  PermVec out;
  for (int p = n - 1; p >= 0; --p) {
    const auto f = factorial(p);
    const auto k = rank / f;
    rank %= f;
    out.push_back(pool[k]);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(k));
  }
  return out;
}

PermIndex index_of(std::span<const std::uint8_t> perm, IndexScheme scheme) {
  check_perm(perm);
  switch (scheme) {
    case IndexScheme::Lex: return {lex_rank(perm), scheme};
    case IndexScheme::RevLex: return {lex_rank(reversed(perm)), scheme};
    case IndexScheme::Hamiltonian: {
      const auto& table = hamiltonian_table(static_cast<int>(perm.size()));
      return {table.rank.at(PermVec(perm.begin(), perm.end())), scheme};
    }
  }
  throw DomainError("unknown index scheme");
}

PermVec perm_of(int n, PermIndex idx) {
  check_n(n);
  if (idx.value >= factorial(n)) {
    throw DomainError("index " + std::to_string(idx.value) + " out of range for n=" +
                      std::to_string(n));
  }
  switch (idx.scheme) {
    case IndexScheme::Lex: return lex_unrank(n, idx.value);
    case IndexScheme::RevLex: return reversed(lex_unrank(n, idx.value));
    case IndexScheme::Hamiltonian: return hamiltonian_table(n).path[idx.value];
  }
  throw DomainError("unknown index scheme");
}

PermIndex index_of(const Permutation& perm, IndexScheme scheme) {
  const auto& table = LoopPermTable::get();
  const auto lex = lex_rank(to_vec(perm));
  const auto& row = table.by_lex[lex];
  switch (scheme) {
    case IndexScheme::Lex: return {row.lex, scheme};
    case IndexScheme::RevLex: return {row.revlex, scheme};
    case IndexScheme::Hamiltonian: return {row.hamiltonian, scheme};
  }
  throw DomainError("unknown index scheme");
}

Permutation loop_perm_of(PermIndex idx) {
  const auto v = perm_of(kNumDims, idx);
  std::array<int, kNumDims> ords{};
  for (std::size_t k = 0; k < kNumDims; ++k) ords[k] = v[k];
  return Permutation::from_ordinals(ords);
}

std::uint64_t permutohedron_edges(int n) {
  check_n(n);
  return factorial(n) * static_cast<std::uint64_t>(n - 1) / 2;
}

const LoopPermTable& LoopPermTable::get() {
  static const LoopPermTable table = [] {
    LoopPermTable t;
    const auto lex = lex_permutations(kNumDims);
    const auto& ham = hamiltonian_table(kNumDims);
    t.by_lex.reserve(lex.size());
    t.lex_by_hamiltonian.resize(lex.size());
    t.lex_by_revlex.resize(lex.size());
    for (std::size_t k = 0; k < lex.size(); ++k) {
      const auto& v = lex[k];
      std::array<int, kNumDims> ords{};
      for (std::size_t q = 0; q < kNumDims; ++q) ords[q] = v[q];
      const auto revlex = static_cast<std::uint16_t>(lex_rank(reversed(v)));
      const auto h = static_cast<std::uint16_t>(ham.rank.at(v));
      t.by_lex.push_back({static_cast<std::uint16_t>(k), revlex, h, Permutation::from_ordinals(ords)});
      t.lex_by_hamiltonian[h] = static_cast<std::uint16_t>(k);
      t.lex_by_revlex[revlex] = static_cast<std::uint16_t>(k);
    }
    return t;
  }();
  return table;
}

}  // namespace loopnest
