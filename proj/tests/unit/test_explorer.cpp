#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "loopnest/errors.hpp"
#include "loopnest/explorer.hpp"
#include "loopnest/permindex.hpp"

using namespace loopnest;

namespace {

DesignSpace tiny_space() {
  DesignSpace s;
  s.layers = {{"a", {4, 3, 6, 5, 3, 3}}, {"b", {2, 5, 4, 4, 1, 1}}};
  s.perms = PermSelection::explicit_list({0, 5, 99, 400, 719});
  s.configs = {CacheConfig::loki_sized(1024, 4096), CacheConfig::loki_sized(2048, 8192, 3)};
  s.thread_counts = {1, 4};
  return s;
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "loopnest_explorer_unit";
  std::filesystem::create_directories(dir);
  const auto p = dir / name;
  for (const auto& suffix : {"", ".json", ".partial"}) std::filesystem::remove(p.string() + suffix);
  return p;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("explorer") {

TEST_CASE("permutation selections") {
  CHECK(PermSelection::all().resolve().size() == 720);
  const auto s = PermSelection::sample(30, 4).resolve();
  CHECK(s.size() == 30);
  CHECK(std::set<std::uint16_t>(s.begin(), s.end()).size() == 30);
  CHECK(std::is_sorted(s.begin(), s.end()));
  CHECK(s == PermSelection::sample(30, 4).resolve());
  CHECK(s != PermSelection::sample(30, 5).resolve());
  CHECK(PermSelection::explicit_list({9, 2}).resolve() == std::vector<std::uint16_t>{2, 9});
}

TEST_CASE("sweep covers the cartesian product in key order") {
  const auto space = tiny_space();
  CHECK(space.total_runs() == 2 * 5 * 2 * 2);
  const auto rows = run_sweep(space, {1, {}});
  REQUIRE(rows.size() == space.total_runs());
  CHECK(std::is_sorted(rows.begin(), rows.end(), key_less));
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK_FALSE(same_key(rows[i - 1], rows[i]));
  for (const auto& r : rows) {
    CHECK(r.perm_ham == LoopPermTable::get().by_lex[r.perm_lex].hamiltonian);
    CHECK(r.cycles <= r.total_cycles);
    if (r.threads == 1) CHECK(r.cycles == r.total_cycles);
  }
}

TEST_CASE("results do not depend on the worker count") {
  const auto space = tiny_space();
  CHECK(run_sweep(space, {1, {}}) == run_sweep(space, {3, {}}));
}

TEST_CASE("single point agrees with the sweep row") {
  const auto space = tiny_space();
  const auto rows = run_sweep(space, {1, {}});
  const auto& r = rows.front();
  auto o = space.trace;
  o.threads = r.threads;
  const auto stats = simulate_point(r.layer, LoopPermTable::get().by_lex[r.perm_lex].perm, space.configs[0], o);
  CHECK(make_result(space.layers[0], LoopPermTable::get().by_lex[r.perm_lex].perm, space.configs[0], r.threads, stats) == r);
}

TEST_CASE("CSV round trip") {
  const auto rows = run_sweep(tiny_space(), {1, {}});
  const auto path = scratch("round.csv");
  write_results_csv(path.string(), rows);
  CHECK(read_results_csv(path.string()) == rows);
  for (const auto& r : rows) CHECK(parse_result_row(format_result_row(r)) == r);
  CHECK(slurp(path).rfind(results_csv_header(), 0) == 0);
  CHECK_THROWS(parse_result_row("a,b,c"));
}

TEST_CASE("file sweeps resume and reject a changed space") {
  const auto space = tiny_space();
  const auto path = scratch("resume.csv");
  const auto first = run_sweep_to_file(space, path.string(), {2, {}});
  CHECK(first.computed == first.total);
  const auto bytes = slurp(path);
  CHECK(std::filesystem::exists(path.string() + ".json"));
  CHECK_FALSE(std::filesystem::exists(path.string() + ".partial"));

  const auto again = run_sweep_to_file(space, path.string(), {1, {}});
  CHECK(again.reused == again.total);
  CHECK(again.computed == 0);
  CHECK(slurp(path) == bytes);

  // Interrupted run: the journal holds a subset, one line torn.
  {
    std::filesystem::remove(path);
    std::filesystem::remove(path.string() + ".json");
    const auto rows = run_sweep(space, {1, {}});
    std::ofstream j(path.string() + ".partial");
    j << "# space " << space.hash() << "\n";
    for (std::size_t i = 0; i < 7; ++i) j << format_result_row(rows[i]) << "\n";
    j << format_result_row(rows[7]).substr(0, 10);
  }
  const auto resumed = run_sweep_to_file(space, path.string(), {1, {}});
  CHECK(resumed.reused == 7);
  CHECK(resumed.computed == resumed.total - 7);
  CHECK(slurp(path) == bytes);

  auto changed = space;
  changed.instr_limit = 5000;
  CHECK(changed.hash() != space.hash());
  CHECK_THROWS_AS(run_sweep_to_file(changed, path.string(), {1, {}}), ConfigError);
}

TEST_CASE("space validation") {
  auto s = tiny_space();
  s.configs.clear();
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = tiny_space();
  s.layers.push_back(s.layers.front());
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = tiny_space();
  s.layers = {{"big", {256, 32, 28, 28, 3, 3}}};
  s.configs = {CacheConfig::loki().with_policy(Replacement::OPT)};
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s.instr_limit = 1'000'000;
  CHECK_NOTHROW(s.validate());
}

TEST_CASE("presets") {
  CHECK_THROWS_AS(preset_space("nope"), UsageError);
  const auto sq = preset_space("squeezenet");
  CHECK(sq.layers.size() == 8);
  CHECK(sq.total_runs() == 8 * 720);
  const auto s216 = preset_space("synthetic-216");
  CHECK(s216.layers.size() == 216);
  std::set<std::string> ids;
  for (const auto& l : s216.layers) {
    ids.insert(l.name);
    CHECK(l.params.out_channels == l.params.in_channels);
    CHECK(l.params.img_w == l.params.img_h);
    CHECK(l.params.ker_w == l.params.ker_h);
  }
  CHECK(ids.size() == 216);
  CHECK(ids.count("c010-i210-k11") == 1);
  const auto s36 = preset_space("synthetic-36");
  CHECK(s36.layers.size() == 36);
  CHECK(s36.thread_counts == std::vector<std::uint32_t>{8});
}

TEST_CASE("tile splits") {
  TileSweepOptions o;
  o.trace.instr_limit = 20'000;
  o.workers = 1;
  const LayerParams L{16, 8, 10, 10, 3, 3};
  const auto res = tile_sweep(L, Permutation(), o);
  REQUIRE(res.size() == 15);
  for (std::size_t i = 0; i < res.size(); ++i) {
    CHECK(res[i].tiles.full_utilization());
    CHECK(res[i].threads == 8 * res[i].tiles.compute_tiles);
    CHECK(res[i].l2_bytes == res[i].tiles.l2_tiles * 64ull * 1024);
  }
  CHECK(res[7].tiles.l2_tiles == 8);
  CHECK(res[7].l2_bytes == 512ull * 1024);

  const auto t = tile_tradeoff({res, res});
  CHECK(t.layers.size() == 2);
  CHECK(t.mean_gain == doctest::Approx(0.0));
  CHECK(t.max_gain == doctest::Approx(0.0));
}

TEST_CASE("tile trade-off gain") {
  auto mk = [](std::vector<std::uint64_t> cyc) {
    std::vector<TileResult> v;
    for (std::size_t i = 0; i < cyc.size(); ++i) {
      TileResult r;
      r.tiles.compute_tiles = static_cast<std::uint32_t>(i + 1);
      r.stats.cycles = cyc[i];
      r.stats.thread_cycles = {cyc[i]};
      v.push_back(r);
    }
    return v;
  };
  // Split 2 is best on average; layer b prefers split 1 by 25%.
  const auto t = tile_tradeoff({mk({200, 100, 300}), mk({100, 125, 300})});
  CHECK(t.best_overall == 2);
  CHECK(t.layers[0].gain == doctest::Approx(0.0));
  CHECK(t.layers[1].best_split == 1);
  CHECK(t.layers[1].gain == doctest::Approx(0.25));
  CHECK(t.max_gain == doctest::Approx(0.25));
  CHECK(t.mean_gain == doctest::Approx(0.125));
}

}  // TEST_SUITE
