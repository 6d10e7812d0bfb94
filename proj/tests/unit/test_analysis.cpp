#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "loopnest/analysis.hpp"
#include "loopnest/errors.hpp"
#include "loopnest/permindex.hpp"
#include "oracles/brute_combos.hpp"

using namespace loopnest;

namespace {

SweepResult row(const std::string& layer, std::uint16_t lex, std::uint64_t cycles, std::uint64_t l2 = 1,
                const std::string& config = "c", std::uint32_t threads = 1) {
  SweepResult r;
  r.layer_id = layer;
  r.layer = {1, 1, 1, 1, 1, 1};
  r.perm_lex = lex;
  r.perm_ham = LoopPermTable::get().by_lex[lex].hamiltonian;
  r.config_id = config;
  r.threads = threads;
  r.cycles = r.total_cycles = cycles;
  r.l1_misses = l2;
  r.l2_misses = l2;
  return r;
}

/// 6 perms x 4 layers with hand-picked cycles.
std::vector<SweepResult> toy_rows() {
  const std::vector<std::vector<std::uint64_t>> cyc = {
      {100, 300, 250, 120}, {150, 100, 400, 200}, {300, 200, 100, 100},
      {110, 120, 130, 400}, {500, 500, 500, 500}, {200, 110, 105, 150}};
  std::vector<SweepResult> rows;
  const std::vector<std::uint16_t> lex = {3, 10, 42, 100, 200, 700};
  for (std::size_t p = 0; p < cyc.size(); ++p) {
    for (std::size_t c = 0; c < cyc[p].size(); ++c) {
      rows.push_back(row("L" + std::to_string(c), lex[p], cyc[p][c], 1000 - cyc[p][c]));
    }
  }
  return rows;
}

}  // namespace

TEST_SUITE("analysis") {

TEST_CASE("speedup table invariants") {
  const auto t = speedup_table(toy_rows(), Metric::Cycles);
  REQUIRE(t.columns.size() == 4);
  REQUIRE(t.perms.size() == 6);
  for (std::size_t c = 0; c < t.columns.size(); ++c) {
    double mx = 0;
    for (std::size_t p = 0; p < t.perms.size(); ++p) {
      CHECK(t.speedup[p][c] > 0.0);
      CHECK(t.speedup[p][c] <= 1.0);
      mx = std::max(mx, t.speedup[p][c]);
    }
    CHECK(mx == 1.0);
  }
  CHECK(t.best_perm[2] == 42);
  CHECK(t.spread(0) == doctest::Approx(5.0));
  CHECK(t.speedup[t.position_of(700)][1] == doctest::Approx(100.0 / 110.0));
  CHECK(t.columns[0].label() == "L0/c/t1");
}

TEST_CASE("l2 metric recomputed by hand") {
  const auto t = speedup_table(toy_rows(), Metric::L2Misses);
  // Column L0: l2 = 1000 - cycles, so the slowest perm (500) has the fewest misses.
  CHECK(t.best_perm[0] == 200);
  CHECK(t.speedup[t.position_of(3)][0] == doctest::Approx(500.0 / 900.0));
  CHECK(metric_from_name("l2_misses") == Metric::L2Misses);
}

TEST_CASE("missing and duplicate rows are reported") {
  auto rows = toy_rows();
  rows.pop_back();
  CHECK_THROWS_AS(speedup_table(rows, Metric::Cycles), CoverageError);
  rows = toy_rows();
  rows.push_back(rows.front());
  CHECK_THROWS_AS(speedup_table(rows, Metric::Cycles), CoverageError);
}

TEST_CASE("ranking order") {
  const auto t = speedup_table(toy_rows(), Metric::Cycles);
  const auto r = rank_permutations(t);
  REQUIRE(r.size() == 6);
  for (std::size_t i = 1; i < r.size(); ++i) {
    CHECK((r[i - 1].mean > r[i].mean || (r[i - 1].mean == r[i].mean && r[i - 1].min >= r[i].min)));
  }
  CHECK(r.back().lex == 200);
  const auto k1 = best_of_k(t, 1);
  REQUIRE(k1.size() == r.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    CHECK(k1[i].members == std::vector<std::uint16_t>{r[i].lex});
    CHECK(k1[i].mean == doctest::Approx(r[i].mean));
  }
}

TEST_CASE("pairs and triples match brute force") {
  const auto rows = toy_rows();
  const auto t = speedup_table(rows, Metric::Cycles);
  for (std::size_t k : {2u, 3u}) {
    const auto got = best_of_k(t, k, {1000, 0});
    const auto want = oracle::brute_best_of_k(rows, k);
    if (k == 2) REQUIRE(got.size() == want.size());
    CHECK(got.front().members == want.front().members);
    CHECK(got.front().mean == doctest::Approx(want.front().mean));
    for (std::size_t i = 0; i < std::min(got.size(), want.size()); ++i) {
      CHECK(got[i].members == want[i].members);
      CHECK(got[i].mean == doctest::Approx(want[i].mean));
    }
  }
  CHECK(best_of_k(t, 2).front().mean >= rank_permutations(t).front().mean);
  CHECK(best_of_k(t, 3).front().mean >= best_of_k(t, 2).front().mean);
  CHECK(best_of_k(t, 2, {64, 3}).size() == 3);
}

TEST_CASE("sample size formula") {
  CHECK(sample_size_for(80.0 / 720.0, 0.683) == 10u);
  CHECK(sample_size_for(80.0 / 720.0, 0.954) == 27u);
  CHECK(sample_size_for(1.0, 0.99) == 1u);
  CHECK_FALSE(sample_size_for(0.0, 0.5).has_value());
  CHECK_THROWS_AS(sample_size_for(0.5, 1.0), DomainError);
  for (double g : {0.01, 0.1, 0.37, 0.8}) {
    for (double conf : {0.5, 0.9, 0.99}) {
      const auto m = *sample_size_for(g, conf);
      CHECK(1.0 - std::pow(1.0 - g, static_cast<double>(m)) >= conf);
      if (m > 1) CHECK(1.0 - std::pow(1.0 - g, static_cast<double>(m - 1)) < conf);
    }
  }
}

TEST_CASE("sampling requirement agrees with simulation") {
  // 720 perms on 2 layers; layer B has 80 good perms, layer A 200.
  std::vector<SweepResult> rows;
  for (std::uint16_t p = 0; p < 720; ++p) {
    rows.push_back(row("A", p, p < 200 ? 100 : 300));
    rows.push_back(row("B", p, p % 9 == 0 ? 100 : 150));
  }
  const auto t = speedup_table(rows, Metric::Cycles);
  const auto r = random_sampling_requirement(t, 0.9, 0.683);
  CHECK(r.good_count == 80);
  CHECK(t.columns[r.worst_column].layer_id == "B");
  CHECK(r.m == 10u);
  std::mt19937_64 gen(2024);
  std::uniform_int_distribution<int> pick(0, 719);
  const int trials = 100000;
  int hits = 0;
  for (int k = 0; k < trials; ++k) {
    bool any = false;
    for (int j = 0; j < 10; ++j) any = any || pick(gen) % 9 == 0;
    hits += any;
  }
  const double p = static_cast<double>(hits) / trials;
  const double se = std::sqrt(r.achieved * (1 - r.achieved) / trials);
  CHECK(std::abs(p - r.achieved) <= 2 * se);
}

TEST_CASE("spearman with ties") {
  CHECK(spearman({1, 2, 3}, {10, 20, 30}) == doctest::Approx(1.0));
  CHECK(spearman({1, 2, 3}, {3, 2, 1}) == doctest::Approx(-1.0));
  CHECK(spearman({1, 2, 2, 3}, {1, 2, 3, 4}) == doctest::Approx(4.5 / std::sqrt(22.5)));
}

TEST_CASE("degraded group sits below the largest gap") {
  std::vector<SweepResult> rows;
  for (std::uint16_t p = 0; p < 12; ++p) {
    const std::uint64_t c = p < 4 ? 400 + p : 100 + p;
    rows.push_back(row("A", p, c));
    rows.push_back(row("B", p, c + 3));
  }
  const auto t = speedup_table(rows, Metric::Cycles);
  CHECK(degraded_group(t) == std::vector<std::uint16_t>{0, 1, 2, 3});
}

TEST_CASE("stability across thread counts") {
  std::vector<SweepResult> rows;
  for (std::uint16_t p = 0; p < 20; ++p) {
    rows.push_back(row("A", p, 100 + p, 1, "c", 1));
    rows.push_back(row("A", p, 100 + p, 1, "c", 16));
    rows.push_back(row("A", p, p < 5 ? 900 : 100 + p, 1, "c", 8));
  }
  const auto rep = stability_export(rows, StabilityAxis::Threads, Metric::Cycles);
  CHECK(rep.groups == std::vector<std::string>{"1", "8", "16"});
  REQUIRE(rep.adjacent_spearman.size() == 2);
  CHECK(rep.degraded[1] == std::vector<std::uint16_t>{0, 1, 2, 3, 4});
  CHECK(export_stability(rep).find("mean_8") != std::string::npos);
  CHECK_THROWS_AS(stability_axis_from_name("layer"), UsageError);
}

TEST_CASE("reuse map renames by first touch") {
  std::vector<Event> ev = {Event::read(0x100, 0), Event::ticks(0, 1), Event::read(0x200, 0),
                           Event::write(0x100, 0), Event::read(0x300, 0), Event::read(0x11c, 0)};
  const auto m = reuse_map(ev, 5, 3);
  CHECK(m.address_rank == std::vector<std::uint32_t>{0, 1, 0, 2, 3});
  CHECK(m.block_rank == std::vector<std::uint32_t>{0, 1, 0, 2, 0});
  CHECK(m.distinct_addresses == 4);
  CHECK(m.distinct_blocks == 3);
  CHECK(m.max_working_set == 3);
  // Windows: {0,1,0} {1,0,2} {0,2,0} -> 2, 3, 2.
  CHECK(m.mean_working_set == doctest::Approx(7.0 / 3.0));
  CHECK(export_reuse(m, 2).find("seq,address_rank,block_rank") == 0);
}

TEST_CASE("exports and plot scripts") {
  const auto rows = toy_rows();
  const auto t = speedup_table(rows, Metric::Cycles);
  const auto sig = export_signatures(rows);
  CHECK(std::count(sig.begin(), sig.end(), '\n') == 1 + 24);
  const auto sp = export_speedups(t);
  CHECK(std::count(sp.begin(), sp.end(), '\n') == 1 + 24);
  CHECK(export_combinations(best_of_k(t, 2, {64, 2})).find('+') != std::string::npos);
  CHECK(export_ipc({{10, 0.5}}).find("0.500000") != std::string::npos);
  for (const auto* f : {"f4_2", "f4_7", "f5_1", "f5_3", "f5_4", "f3_3", "ipc"}) {
    CHECK(plot_script(f, "x.csv").find("x.csv") != std::string::npos);
  }
  CHECK_THROWS(plot_script("bogus", "x.csv"));
}

}  // TEST_SUITE
