#pragma once

// Three one-parameter indexings of the permutations of n elements:
//   Lex          -- lexicographic order of the sequence (itertools.permutations order).
//   RevLex       -- lexicographic order of the reversed sequence, so the last element
//                   changes least often and each block of (n-1)! indices shares it.
//   Hamiltonian  -- position along the Steinhaus-Johnson-Trotter path, where neighbours
//                   differ by one adjacent transposition.

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "loopnest/conv_model.hpp"

namespace loopnest {

enum class IndexScheme { Lex, RevLex, Hamiltonian };

std::string_view scheme_name(IndexScheme s);
IndexScheme scheme_from_name(std::string_view name);

/// A permutation of 0..n-1 stored as element values, first position first.
using PermVec = std::vector<std::uint8_t>;

struct PermIndex {
  std::uint64_t value = 0;
  IndexScheme scheme = IndexScheme::Lex;
  friend bool operator==(const PermIndex&, const PermIndex&) = default;
};

inline constexpr int kMaxPermN = 8;

std::uint64_t factorial(int n);

/// All n! permutations along the SJT path, starting at the identity (Even's speedup).
/// Throws DomainError unless 1 <= n <= 8.
std::vector<PermVec> sjt_path(int n);

/// All n! permutations in lexicographic order.
std::vector<PermVec> lex_permutations(int n);

std::uint64_t lex_rank(std::span<const std::uint8_t> perm);
PermVec lex_unrank(int n, std::uint64_t rank);

/// Throws DomainError for a malformed permutation or an index >= n!.
PermIndex index_of(std::span<const std::uint8_t> perm, IndexScheme scheme);
PermVec perm_of(int n, PermIndex idx);

PermIndex index_of(const Permutation& perm, IndexScheme scheme);
Permutation loop_perm_of(PermIndex idx);

/// Number of edges of the adjacent-transposition graph on n elements, n!(n-1)/2.
std::uint64_t permutohedron_edges(int n);

/// Precomputed table for the 720 loop orders.
struct LoopPermTable {
  struct Row {
    std::uint16_t lex;
    std::uint16_t revlex;
    std::uint16_t hamiltonian;
    Permutation perm;
  };
  std::vector<Row> by_lex;  // indexed by lex rank
  std::vector<std::uint16_t> lex_by_hamiltonian;
  std::vector<std::uint16_t> lex_by_revlex;

  static const LoopPermTable& get();
};

}  // namespace loopnest
