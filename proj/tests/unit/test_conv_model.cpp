#include <doctest.h>

#include "loopnest/conv_model.hpp"
#include "loopnest/errors.hpp"
#include "loopnest/permindex.hpp"
#include "oracles/brute_conv.hpp"

using namespace loopnest;

namespace {

std::vector<std::int64_t> flat(const Grid& g) { return {g.data().begin(), g.data().end()}; }

}  // namespace

TEST_SUITE("conv_model") {

TEST_CASE("layer parsing and formatting round trip") {
  const auto p = LayerParams::parse("256,32,28,28,3,3");
  CHECK(p == LayerParams{256, 32, 28, 28, 3, 3});
  CHECK(p.to_string() == "256,32,28,28,3,3");
  CHECK(LayerParams::parse("4x3x5x6x1x2") == LayerParams{4, 3, 5, 6, 1, 2});
  CHECK(p.iteration_count() == 256ull * 32 * 28 * 28 * 9);
  CHECK(p.padded_h() == 30);
  CHECK_THROWS_AS(LayerParams::parse("1,2,3"), DomainError);
  CHECK_THROWS_AS((LayerParams{1, 0, 1, 1, 1, 1}.validate()), DomainError);
}

TEST_CASE("permutation parsing and positions") {
  const auto p = Permutation::parse("ky-o-x-i-kx-y");
  CHECK(p.outermost() == LoopDim::KerY);
  CHECK(p.innermost() == LoopDim::ImgY);
  CHECK(p.position_of(LoopDim::ImgX) == 2);
  CHECK(p.deepest_output_position() == 5);
  CHECK(p.to_string(' ') == "ky o x i kx y");
  CHECK(Permutation::parse("o y x i ky kx").deepest_output_position() == 2);
  const auto closing = p.closing_order();
  CHECK(closing.front() == LoopDim::ImgY);
  CHECK(closing.back() == LoopDim::KerY);
  CHECK_THROWS_AS(Permutation::parse("o-o-y-x-ky-kx"), DomainError);
  CHECK_THROWS_AS(Permutation::parse("o-i-y-x-ky"), DomainError);
}

TEST_CASE("packed layout is disjoint and row-major") {
  const LayerParams L{3, 2, 5, 4, 3, 2};
  const auto lay = ArrayLayout::packed(L);
  CHECK(lay.input_end() <= lay.weights_base);
  CHECK(lay.weights_end() <= lay.output_base);
  CHECK(lay.input_addr(0, 0, 0, 0, 1) - lay.input_addr(0, 0, 0, 0, 0) == kWordBytes);
  CHECK(lay.input_addr(1, 0, 0, 0, 0) - lay.input_addr(0, 0, 0, 0, 0) == kWordBytes * L.padded_h() * L.padded_w());
  CHECK(lay.input_addr(0, 1, 0, 0, 0) == lay.input_addr(0, 0, 0, 1, 0));
  CHECK(lay.output_addr(1, 0, 0) - lay.output_addr(0, 0, 0) == kWordBytes * 4 * 5);
  CHECK(lay.weight_stride(LoopDim::ImgX) == 0);
  CHECK(lay.output_stride(LoopDim::InChan) == 0);
  CHECK(lay.region_of(lay.output_base) == ArrayLayout::Region::Output);
  CHECK(lay.region_of(0) == ArrayLayout::Region::None);
}

TEST_CASE("oracle convolution matches the element-wise definition") {
  for (const LayerParams L : {LayerParams{2, 3, 4, 5, 2, 3}, LayerParams{1, 1, 1, 1, 1, 1}, LayerParams{3, 2, 3, 2, 3, 1}}) {
    auto in = make_input_grid(L);
    auto w = make_weight_grid(L);
    fill_random(in, 11);
    fill_random(w, 12);
    CHECK(flat(oracle_convolve(L, in, w)) == oracle::brute_convolve(L, flat(in), flat(w)));
  }
}

TEST_CASE("every loop order computes the same result on a rectangular layer") {
  const LayerParams L{2, 3, 4, 3, 2, 3};
  auto in = make_input_grid(L);
  auto w = make_weight_grid(L);
  fill_random(in, 5);
  fill_random(w, 6);
  const auto ref = oracle_convolve(L, in, w);
  for (const auto& row : LoopPermTable::get().by_lex) {
    CHECK(permuted_convolve(L, in, w, row.perm, true) == ref);
    CHECK(permuted_convolve(L, in, w, row.perm, false) == ref);
  }
}

TEST_CASE("counted run reports body executions and write-backs") {
  const LayerParams L{2, 3, 4, 3, 2, 3};
  auto in = make_input_grid(L);
  auto w = make_weight_grid(L);
  const auto perm = Permutation::parse("o-y-i-x-ky-kx");
  const auto dense = permuted_convolve_counted(L, in, w, perm, false);
  const auto ps = permuted_convolve_counted(L, in, w, perm, true);
  CHECK(dense.body_executions == L.iteration_count());
  CHECK(dense.output_writes == L.iteration_count());
  CHECK(ps.output_writes == 2ull * 3 * 3 * 4);
}

TEST_CASE("shape mismatch is rejected") {
  const LayerParams L{2, 2, 3, 3, 2, 2};
  auto in = make_input_grid(L);
  auto w = make_weight_grid(LayerParams{2, 2, 3, 3, 3, 3});
  CHECK_THROWS_AS(oracle_convolve(L, in, w), ShapeError);
}

TEST_CASE("built-in layer table") {
  const auto layers = squeezenet_layers();
  REQUIRE(layers.size() == 8);
  CHECK(layers.front().name == "initial-conf");
  CHECK(layers.front().params == LayerParams{256, 32, 28, 28, 3, 3});
  bool found = false;
  for (const auto& l : layers) {
    if (l.name == "fire9-conv3x3-2") {
      found = true;
      CHECK(l.params == LayerParams{256, 64, 13, 13, 3, 3});
    }
  }
  CHECK(found);
  CHECK(layers.back().params == LayerParams{1000, 512, 13, 13, 1, 1});
}

}  // TEST_SUITE
