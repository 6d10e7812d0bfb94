#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <set>

#include "loopnest/errors.hpp"
#include "loopnest/permindex.hpp"

using namespace loopnest;

namespace {

bool adjacent_swap(const PermVec& a, const PermVec& b) {
  std::vector<std::size_t> diff;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) diff.push_back(i);
  }
  return diff.size() == 2 && diff[1] == diff[0] + 1 && a[diff[0]] == b[diff[1]] && a[diff[1]] == b[diff[0]];
}

/// Edges of the adjacent-transposition graph, counted by brute force.
std::uint64_t brute_edges(int n) {
  const auto all = lex_permutations(n);
  std::set<PermVec> nodes(all.begin(), all.end());
  std::uint64_t edges = 0;
  for (const auto& p : all) {
    for (int i = 0; i + 1 < n; ++i) {
      auto q = p;
      std::swap(q[i], q[i + 1]);
      if (nodes.count(q)) ++edges;
    }
  }
  return edges / 2;
}

}  // namespace

TEST_SUITE("permindex") {

TEST_CASE("lex rank and unrank are inverse for n = 1..7") {
  for (int n = 1; n <= 7; ++n) {
    const auto all = lex_permutations(n);
    REQUIRE(all.size() == factorial(n));
    CHECK(std::is_sorted(all.begin(), all.end()));
    for (std::uint64_t r = 0; r < all.size(); ++r) {
      CHECK(lex_rank(all[r]) == r);
      CHECK(lex_unrank(n, r) == all[r]);
    }
  }
}

TEST_CASE("three-element path") {
  const auto path = sjt_path(3);
  const std::vector<PermVec> expect = {{0, 1, 2}, {0, 2, 1}, {2, 0, 1}, {2, 1, 0}, {1, 2, 0}, {1, 0, 2}};
  CHECK(path == expect);
}

TEST_CASE("path properties for n = 1..8") {
  for (int n = 1; n <= 8; ++n) {
    const auto path = sjt_path(n);
    REQUIRE(path.size() == factorial(n));
    PermVec id(static_cast<std::size_t>(n));
    std::iota(id.begin(), id.end(), std::uint8_t{0});
    CHECK(path.front() == id);
    CHECK(std::set<PermVec>(path.begin(), path.end()).size() == path.size());
    for (std::size_t k = 1; k < path.size(); ++k) CHECK(adjacent_swap(path[k - 1], path[k]));
  }
}

TEST_CASE("edge count of the adjacent-transposition graph") {
  for (int n = 1; n <= 6; ++n) CHECK(permutohedron_edges(n) == brute_edges(n));
  CHECK(permutohedron_edges(6) == 1800);
}

TEST_CASE("index schemes round trip and are bijections") {
  for (auto scheme : {IndexScheme::Lex, IndexScheme::RevLex, IndexScheme::Hamiltonian}) {
    std::set<std::uint64_t> seen;
    for (const auto& p : lex_permutations(5)) {
      const auto idx = index_of(p, scheme);
      CHECK(idx.scheme == scheme);
      CHECK(perm_of(5, idx) == p);
      seen.insert(idx.value);
    }
    CHECK(seen.size() == 120);
    CHECK(*seen.rbegin() == 119);
  }
  CHECK(scheme_from_name("ham") == IndexScheme::Hamiltonian);
  CHECK(scheme_name(IndexScheme::RevLex) == "revlex");
}

TEST_CASE("revlex blocks of (n-1)! share the last element") {
  const auto& t = LoopPermTable::get();
  for (std::uint16_t r = 0; r < 720; ++r) {
    const auto& first = t.by_lex[t.lex_by_revlex[r - r % 120]].perm;
    CHECK(t.by_lex[t.lex_by_revlex[r]].perm.innermost() == first.innermost());
  }
}

TEST_CASE("loop table is consistent") {
  const auto& t = LoopPermTable::get();
  REQUIRE(t.by_lex.size() == 720);
  CHECK(t.by_lex[0].perm == Permutation());
  CHECK(t.by_lex[0].hamiltonian == 0);
  for (std::uint16_t h = 0; h < 720; ++h) {
    const auto lex = t.lex_by_hamiltonian[h];
    CHECK(t.by_lex[lex].hamiltonian == h);
    CHECK(index_of(t.by_lex[lex].perm, IndexScheme::Hamiltonian).value == h);
    CHECK(loop_perm_of({h, IndexScheme::Hamiltonian}) == t.by_lex[lex].perm);
  }
}

TEST_CASE("domain errors") {
  CHECK_THROWS_AS(sjt_path(0), DomainError);
  CHECK_THROWS_AS(sjt_path(9), DomainError);
  CHECK_THROWS_AS(perm_of(3, {6, IndexScheme::Lex}), DomainError);
  const PermVec bad = {0, 0, 1};
  CHECK_THROWS_AS(index_of(bad, IndexScheme::Lex), DomainError);
}

}  // TEST_SUITE
