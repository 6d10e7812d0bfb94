#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <numeric>

#include "loopnest/codegen.hpp"
#include "loopnest/errors.hpp"
#include "loopnest/permindex.hpp"
#include "oracles/brute_conv.hpp"
#include "oracles/c_structure.hpp"

using namespace loopnest;

namespace {

std::vector<std::string> names_of(const Permutation& p) {
  std::vector<std::string> v;
  for (int k = 0; k < kNumDims; ++k) v.emplace_back(dim_name(p.at(k)));
  return v;
}

/// Checksum the validation build must print, from the element-wise definition.
std::int64_t expected_checksum(const LayerParams& L, std::uint32_t seed) {
  std::uint32_t state = seed;
  std::vector<std::int64_t> in(L.input_elements()), w(L.weight_elements());
  for (auto& v : in) v = codegen_fill_value(state);
  for (auto& v : w) v = codegen_fill_value(state);
  const auto out = oracle::brute_convolve(L, in, w);
  return std::accumulate(out.begin(), out.end(), std::int64_t{0});
}

}  // namespace

TEST_SUITE("codegen") {

TEST_CASE("structure over every loop order") {
  const LayerParams L{8, 4, 6, 5, 3, 2};
  for (const auto& row : LoopPermTable::get().by_lex) {
    const auto names = names_of(row.perm);
    auto reversed = names;
    std::reverse(reversed.begin(), reversed.end());
    const auto d = row.perm.outermost();
    const bool partitions = d == LoopDim::OutChan || d == LoopDim::ImgX || d == LoopDim::ImgY;
    for (std::uint32_t threads : {1u, 4u}) {
      for (bool ps : {true, false}) {
        CodegenOptions o;
        o.threads = threads;
        o.partial_sums = ps;
        const auto s = oracle::scan_c(emit_c(L, row.perm, o));
        CHECK(s.balanced);
        CHECK(s.opened == names);
        CHECK(s.closed == reversed);
        CHECK((s.atomic_pragmas > 0) == (threads > 1 && !partitions));
        CHECK(s.atomic_pragmas <= 1);
        CHECK(s.parallel_pragmas == (threads > 1 ? 1 : 0));
      }
    }
  }
}

TEST_CASE("partial sums accumulate in a register only when an inner loop skips out") {
  const LayerParams L{2, 2, 3, 3, 2, 2};
  CodegenOptions o;
  CHECK(emit_c(L, Permutation::parse("o-y-x-i-ky-kx"), o).find("int sum = 0;") != std::string::npos);
  CHECK(emit_c(L, Permutation::parse("i-ky-kx-o-y-x"), o).find("int sum = 0;") == std::string::npos);
  o.partial_sums = false;
  CHECK(emit_c(L, Permutation::parse("o-y-x-i-ky-kx"), o).find("int sum") == std::string::npos);
}

TEST_CASE("output is deterministic and named by lex index") {
  const LayerParams L{4, 3, 5, 5, 3, 3};
  const auto perm = Permutation::parse("x-o-ky-i-y-kx");
  CodegenOptions o;
  o.threads = 8;
  CHECK(emit_c(L, perm, o, "conv1") == emit_c(L, perm, o, "conv1"));
  const auto lex = index_of(perm, IndexScheme::Lex).value;
  CHECK(emitted_file_name(L, perm, "conv1") == "conv1_" + std::to_string(lex) + ".c");
  CHECK(emitted_file_name(L, Permutation()) == "4x3x5x5x3x3_0.c");
  o.threads = 0;
  CHECK_THROWS_AS(emit_c(L, perm, o), ConfigError);
}

TEST_CASE("validation fill sequence") {
  std::uint32_t s = 1;
  std::vector<std::int64_t> v;
  for (int k = 0; k < 1000; ++k) v.push_back(codegen_fill_value(s));
  CHECK(*std::min_element(v.begin(), v.end()) == -3);
  CHECK(*std::max_element(v.begin(), v.end()) == 3);
  std::uint32_t a = 7, b = 7;
  CHECK(codegen_fill_value(a) == codegen_fill_value(b));
}

TEST_CASE("emitted kernels compile and agree on the checksum" * doctest::skip(std::getenv("LOOPNEST_COMPILE_CHECK") == nullptr)) {
  const LayerParams L{3, 2, 5, 4, 3, 2};
  const auto dir = std::filesystem::temp_directory_path() / "loopnest_codegen_unit";
  std::filesystem::create_directories(dir);
  const auto want = "checksum " + std::to_string(expected_checksum(L, 1)) + "\n";
  for (std::uint16_t lex : {0, 121, 359, 718}) {
    const auto& perm = LoopPermTable::get().by_lex[lex].perm;
    for (bool ps : {true, false}) {
      CodegenOptions o;
      o.emit_validation = true;
      o.partial_sums = ps;
      const auto got = oracle::compile_and_run(emit_c(L, perm, o), dir, "k" + std::to_string(lex), false);
      REQUIRE(got.has_value());
      CHECK(*got == want);
    }
  }
  std::filesystem::remove_all(dir);
}

}  // TEST_SUITE
