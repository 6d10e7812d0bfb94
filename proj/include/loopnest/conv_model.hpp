#pragma once

// Direct-convolution workload: loop dimensions, layer extents, the linear
// memory layout of the three arrays, and reference implementations used to
// validate every loop ordering.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace loopnest {

enum class LoopDim : std::uint8_t { OutChan = 0, InChan = 1, ImgY = 2, ImgX = 3, KerY = 4, KerX = 5 };

inline constexpr int kNumDims = 6;
inline constexpr std::array<LoopDim, kNumDims> kAllDims = {
    LoopDim::OutChan, LoopDim::InChan, LoopDim::ImgY, LoopDim::ImgX, LoopDim::KerY, LoopDim::KerX};

constexpr int ordinal(LoopDim d) { return static_cast<int>(d); }

/// Short loop-variable name: o, i, y, x, ky, kx.
std::string_view dim_name(LoopDim d);
std::optional<LoopDim> dim_from_name(std::string_view name);

/// The out array is indexed by o, y and x only; the other three loops are reductions.
constexpr bool indexes_output(LoopDim d) {
  return d == LoopDim::OutChan || d == LoopDim::ImgY || d == LoopDim::ImgX;
}

struct LayerParams {
  std::uint32_t out_channels = 1;
  std::uint32_t in_channels = 1;
  std::uint32_t img_w = 1;
  std::uint32_t img_h = 1;
  std::uint32_t ker_w = 1;
  std::uint32_t ker_h = 1;

  /// Throws DomainError if any extent is zero.
  void validate() const;

  std::uint64_t iteration_count() const;
  std::uint32_t extent(LoopDim d) const;
  std::uint32_t padded_h() const { return img_h + ker_h - 1; }
  std::uint32_t padded_w() const { return img_w + ker_w - 1; }

  std::uint64_t input_elements() const;
  std::uint64_t weight_elements() const;
  std::uint64_t output_elements() const;

  /// "out,in,w,h,kw,kh" -- the order used on the command line and in result files.
  std::string to_string() const;
  static LayerParams parse(std::string_view csv);

  friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

/// Loop order, outermost first.
class Permutation {
 public:
  /// Canonical order (o, i, y, x, ky, kx).
  Permutation();
  /// Throws DomainError unless `order` is a bijection on the six dimensions.
  explicit Permutation(const std::array<LoopDim, kNumDims>& order);

  static Permutation from_ordinals(std::span<const int> ordinals);
  /// Parses "o-i-y-x-ky-kx" (any of '-', ',', ' ' as separators).
  static Permutation parse(std::string_view text);

  LoopDim at(int position) const { return order_[static_cast<std::size_t>(position)]; }
  LoopDim outermost() const { return order_.front(); }
  LoopDim innermost() const { return order_.back(); }
  const std::array<LoopDim, kNumDims>& order() const { return order_; }
  std::array<int, kNumDims> ordinals() const;

  /// Nesting position (0 = outermost) of a dimension.
  int position_of(LoopDim d) const;

  /// Position of the deepest loop whose variable indexes the out array.
  int deepest_output_position() const;

  /// Loops close in the reverse of their opening order.
  std::array<LoopDim, kNumDims> closing_order() const;

  std::string to_string(char sep = '-') const;

  friend bool operator==(const Permutation&, const Permutation&) = default;

 private:
  std::array<LoopDim, kNumDims> order_;
};

inline constexpr std::uint64_t kWordBytes = 4;

/// Base addresses of the three disjoint row-major regions:
///   input[in_channels][Hp][Wp], weights[out][in][ker_h][ker_w], out[out][img_h][img_w].
struct ArrayLayout {
  LayerParams layer;
  std::uint64_t input_base = 0;
  std::uint64_t weights_base = 0;
  std::uint64_t output_base = 0;

  /// Regions placed back to back from `base`, each start rounded up to `align` bytes.
  static ArrayLayout packed(const LayerParams& layer, std::uint64_t base = 0x10000,
                            std::uint64_t align = 64);

  std::uint64_t input_addr(std::uint32_t i, std::uint32_t y, std::uint32_t x, std::uint32_t ky,
                           std::uint32_t kx) const;
  std::uint64_t weight_addr(std::uint32_t o, std::uint32_t i, std::uint32_t ky,
                            std::uint32_t kx) const;
  std::uint64_t output_addr(std::uint32_t o, std::uint32_t y, std::uint32_t x) const;

  /// Byte stride that one step of `d` adds to each array's address.
  std::uint64_t input_stride(LoopDim d) const;
  std::uint64_t weight_stride(LoopDim d) const;
  std::uint64_t output_stride(LoopDim d) const;

  std::uint64_t input_end() const { return input_base + layer.input_elements() * kWordBytes; }
  std::uint64_t weights_end() const { return weights_base + layer.weight_elements() * kWordBytes; }
  std::uint64_t output_end() const { return output_base + layer.output_elements() * kWordBytes; }

  enum class Region { Input, Weights, Output, None };
  Region region_of(std::uint64_t address) const;
};

/// Dense row-major integer grid.
class Grid {
 public:
  Grid() = default;
  explicit Grid(std::vector<std::size_t> shape, std::int64_t fill = 0);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  std::span<std::int64_t> data() { return data_; }
  std::span<const std::int64_t> data() const { return data_; }

  std::int64_t& operator[](std::size_t flat) { return data_[flat]; }
  std::int64_t operator[](std::size_t flat) const { return data_[flat]; }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<std::int64_t> data_;
};

Grid make_input_grid(const LayerParams& layer);
Grid make_weight_grid(const LayerParams& layer);
Grid make_output_grid(const LayerParams& layer);

/// Fills with integers uniform in [lo, hi] from a seeded xorshift stream.
void fill_random(Grid& grid, std::uint64_t seed, std::int64_t lo = -4, std::int64_t hi = 4);

/// out[o][y][x] = sum_i sum_ky sum_kx input[i][y+ky][x+kx] * weights[o][i][ky][kx], canonical order.
/// Throws ShapeError when the grids do not match the layer.
Grid oracle_convolve(const LayerParams& layer, const Grid& input, const Grid& weights);

struct PermutedRun {
  Grid out;
  std::uint64_t body_executions = 0;
  std::uint64_t output_writes = 0;
};

/// Same computation nested in `perm` order. With partial sums, the reduction over the loops
/// below the deepest out-indexing loop is kept in a local accumulator and written once when
/// those loops close.
PermutedRun permuted_convolve_counted(const LayerParams& layer, const Grid& input,
                                      const Grid& weights, const Permutation& perm,
                                      bool partial_sums = true);

Grid permuted_convolve(const LayerParams& layer, const Grid& input, const Grid& weights,
                       const Permutation& perm, bool partial_sums = true);

/// Built-in layer table (the SqueezeNet / Tiny Darknet selection).
struct NamedLayer {
  std::string name;
  LayerParams params;
};
std::vector<NamedLayer> squeezenet_layers();

}  // namespace loopnest
