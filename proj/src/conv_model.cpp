#include "loopnest/conv_model.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "loopnest/errors.hpp"
#include "loopnest/rng.hpp"

namespace loopnest {

namespace {

constexpr std::array<std::string_view, kNumDims> kDimNames = {"o", "i", "y", "x", "ky", "kx"};

std::vector<std::string_view> split_tokens(std::string_view text, std::string_view seps) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto next = text.find_first_of(seps, pos);
    const auto end = next == std::string_view::npos ? text.size() : next;
    if (end > pos) out.push_back(text.substr(pos, end - pos));
    pos = end + 1;
  }
  return out;
}

std::uint64_t align_up(std::uint64_t value, std::uint64_t align) {
  return align == 0 ? value : (value + align - 1) / align * align;
}

}  // namespace

std::string_view dim_name(LoopDim d) { return kDimNames[static_cast<std::size_t>(ordinal(d))]; }

std::optional<LoopDim> dim_from_name(std::string_view name) {
  for (int k = 0; k < kNumDims; ++k) {
    if (kDimNames[static_cast<std::size_t>(k)] == name) return static_cast<LoopDim>(k);
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// LayerParams

void LayerParams::validate() const {
  if (out_channels == 0 || in_channels == 0 || img_w == 0 || img_h == 0 || ker_w == 0 ||
      ker_h == 0) {
    throw DomainError("layer extents must all be >= 1, got " + to_string());
  }
}

std::uint64_t LayerParams::iteration_count() const {
  return std::uint64_t{out_channels} * in_channels * img_w * img_h * ker_w * ker_h;
}

std::uint32_t LayerParams::extent(LoopDim d) const {
  switch (d) {
    case LoopDim::OutChan: return out_channels;
    case LoopDim::InChan: return in_channels;
    case LoopDim::ImgY: return img_h;
    case LoopDim::ImgX: return img_w;
    case LoopDim::KerY: return ker_h;
    case LoopDim::KerX: return ker_w;
  }
  return 0;
}

std::uint64_t LayerParams::input_elements() const {
  return std::uint64_t{in_channels} * padded_h() * padded_w();
}

std::uint64_t LayerParams::weight_elements() const {
  return std::uint64_t{out_channels} * in_channels * ker_h * ker_w;
}

std::uint64_t LayerParams::output_elements() const {
  return std::uint64_t{out_channels} * img_h * img_w;
}

std::string LayerParams::to_string() const {
  std::ostringstream os;
  os << out_channels << ',' << in_channels << ',' << img_w << ',' << img_h << ',' << ker_w << ','
     << ker_h;
  return os.str();
}

LayerParams LayerParams::parse(std::string_view csv) {
  const auto tokens = split_tokens(csv, ", x");
  if (tokens.size() != 6) {
    throw DomainError("layer needs six extents out,in,w,h,kw,kh; got '" + std::string(csv) + "'");
  }
  std::array<std::uint32_t, 6> v{};
  for (std::size_t k = 0; k < 6; ++k) {
    const auto tok = tokens[k];
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v[k]);
    if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
      throw DomainError("bad layer extent '" + std::string(tok) + "'");
    }
  }
  LayerParams p{v[0], v[1], v[2], v[3], v[4], v[5]};
  p.validate();
  return p;
}

// ---------------------------------------------------------------------------
// Permutation

Permutation::Permutation() : order_(kAllDims) {}

Permutation::Permutation(const std::array<LoopDim, kNumDims>& order) : order_(order) {
  std::array<bool, kNumDims> seen{};
  for (auto d : order_) {
    const int k = ordinal(d);
    if (k < 0 || k >= kNumDims || seen[static_cast<std::size_t>(k)]) {
      throw DomainError("loop order is not a permutation of the six dimensions");
    }
    seen[static_cast<std::size_t>(k)] = true;
  }
}

Permutation Permutation::from_ordinals(std::span<const int> ordinals) {
  if (ordinals.size() != kNumDims) throw DomainError("loop order needs exactly six entries");
  std::array<LoopDim, kNumDims> order{};
  for (std::size_t k = 0; k < kNumDims; ++k) {
    if (ordinals[k] < 0 || ordinals[k] >= kNumDims) throw DomainError("loop ordinal out of range");
    order[k] = static_cast<LoopDim>(ordinals[k]);
  }
  return Permutation(order);
}

Permutation Permutation::parse(std::string_view text) {
  const auto tokens = split_tokens(text, "-, ");
  if (tokens.size() != kNumDims) {
    throw DomainError("loop order needs six names, got '" + std::string(text) + "'");
  }
  std::array<LoopDim, kNumDims> order{};
  for (std::size_t k = 0; k < kNumDims; ++k) {
    const auto d = dim_from_name(tokens[k]);
    if (!d) throw DomainError("unknown loop name '" + std::string(tokens[k]) + "'");
    order[k] = *d;
  }
  return Permutation(order);
}

std::array<int, kNumDims> Permutation::ordinals() const {
  std::array<int, kNumDims> out{};
  for (std::size_t k = 0; k < kNumDims; ++k) out[k] = ordinal(order_[k]);
  return out;
}

int Permutation::position_of(LoopDim d) const {
  for (int p = 0; p < kNumDims; ++p) {
    if (order_[static_cast<std::size_t>(p)] == d) return p;
  }
  return -1;
}

int Permutation::deepest_output_position() const {
  int deepest = -1;
  for (int p = 0; p < kNumDims; ++p) {
    if (indexes_output(order_[static_cast<std::size_t>(p)])) deepest = p;
  }
  return deepest;
}

std::array<LoopDim, kNumDims> Permutation::closing_order() const {
  auto out = order_;
  std::reverse(out.begin(), out.end());
  return out;
}

std::string Permutation::to_string(char sep) const {
  std::string s;
  for (std::size_t k = 0; k < kNumDims; ++k) {
    if (k) s += sep;
    s += dim_name(order_[k]);
  }
  return s;
}

// ---------------------------------------------------------------------------
// ArrayLayout

ArrayLayout ArrayLayout::packed(const LayerParams& layer, std::uint64_t base, std::uint64_t align) {
  layer.validate();
  ArrayLayout l;
  l.layer = layer;
  l.input_base = align_up(base, align);
  l.weights_base = align_up(l.input_end(), align);
  l.output_base = align_up(l.weights_end(), align);
  return l;
}

std::uint64_t ArrayLayout::input_addr(std::uint32_t i, std::uint32_t y, std::uint32_t x,
                                      std::uint32_t ky, std::uint32_t kx) const {
  const std::uint64_t hp = layer.padded_h();
  const std::uint64_t wp = layer.padded_w();
  return input_base + kWordBytes * (i * hp * wp + std::uint64_t{y + ky} * wp + (x + kx));
}

std::uint64_t ArrayLayout::weight_addr(std::uint32_t o, std::uint32_t i, std::uint32_t ky,
                                       std::uint32_t kx) const {
  const std::uint64_t kh = layer.ker_h;
  const std::uint64_t kw = layer.ker_w;
  return weights_base +
         kWordBytes * (((std::uint64_t{o} * layer.in_channels + i) * kh + ky) * kw + kx);
}

std::uint64_t ArrayLayout::output_addr(std::uint32_t o, std::uint32_t y, std::uint32_t x) const {
  return output_base +
         kWordBytes * ((std::uint64_t{o} * layer.img_h + y) * layer.img_w + x);
}

std::uint64_t ArrayLayout::input_stride(LoopDim d) const {
  const std::uint64_t wp = layer.padded_w();
  switch (d) {
    case LoopDim::InChan: return kWordBytes * layer.padded_h() * wp;
    case LoopDim::ImgY:
    case LoopDim::KerY: return kWordBytes * wp;
    case LoopDim::ImgX:
    case LoopDim::KerX: return kWordBytes;
    case LoopDim::OutChan: return 0;
  }
  return 0;
}

std::uint64_t ArrayLayout::weight_stride(LoopDim d) const {
  switch (d) {
    case LoopDim::OutChan:
      return kWordBytes * std::uint64_t{layer.in_channels} * layer.ker_h * layer.ker_w;
    case LoopDim::InChan: return kWordBytes * std::uint64_t{layer.ker_h} * layer.ker_w;
    case LoopDim::KerY: return kWordBytes * layer.ker_w;
    case LoopDim::KerX: return kWordBytes;
    default: return 0;
  }
}

std::uint64_t ArrayLayout::output_stride(LoopDim d) const {
  switch (d) {
    case LoopDim::OutChan: return kWordBytes * std::uint64_t{layer.img_h} * layer.img_w;
    case LoopDim::ImgY: return kWordBytes * layer.img_w;
    case LoopDim::ImgX: return kWordBytes;
    default: return 0;
  }
}

ArrayLayout::Region ArrayLayout::region_of(std::uint64_t address) const {
  if (address >= input_base && address < input_end()) return Region::Input;
  if (address >= weights_base && address < weights_end()) return Region::Weights;
  if (address >= output_base && address < output_end()) return Region::Output;
  return Region::None;
}

// ---------------------------------------------------------------------------
// Grids and reference convolutions

Grid::Grid(std::vector<std::size_t> shape, std::int64_t fill) : shape_(std::move(shape)) {
  std::size_t n = 1;
  for (auto s : shape_) n *= s;
  data_.assign(n, fill);
}

Grid make_input_grid(const LayerParams& layer) {
  return Grid({layer.in_channels, layer.padded_h(), layer.padded_w()});
}

Grid make_weight_grid(const LayerParams& layer) {
  return Grid({layer.out_channels, layer.in_channels, layer.ker_h, layer.ker_w});
}

Grid make_output_grid(const LayerParams& layer) {
  return Grid({layer.out_channels, layer.img_h, layer.img_w});
}

void fill_random(Grid& grid, std::uint64_t seed, std::int64_t lo, std::int64_t hi) {
  XorShift64Star rng(seed);
  const auto span = static_cast<std::uint64_t>(hi - lo + 1);
  for (auto& v : grid.data()) v = lo + static_cast<std::int64_t>(rng.below(span));
}

namespace {

void check_shapes(const LayerParams& layer, const Grid& input, const Grid& weights) {
  layer.validate();
  if (input.shape() != make_input_grid(layer).shape()) {
    throw ShapeError("input grid must be [in_channels][img_h+ker_h-1][img_w+ker_w-1] for layer " +
                     layer.to_string());
  }
  if (weights.shape() != make_weight_grid(layer).shape()) {
    throw ShapeError("weight grid must be [out][in][ker_h][ker_w] for layer " + layer.to_string());
  }
}

}  // namespace

Grid oracle_convolve(const LayerParams& layer, const Grid& input, const Grid& weights) {
  check_shapes(layer, input, weights);
  const std::size_t C = layer.in_channels, H = layer.img_h, W = layer.img_w;
  const std::size_t KH = layer.ker_h, KW = layer.ker_w;
  const std::size_t HP = layer.padded_h(), WP = layer.padded_w();
  Grid out = make_output_grid(layer);
  for (std::size_t o = 0; o < layer.out_channels; ++o)
    for (std::size_t i = 0; i < C; ++i)
      for (std::size_t y = 0; y < H; ++y)
        for (std::size_t x = 0; x < W; ++x)
          for (std::size_t ky = 0; ky < KH; ++ky)
            for (std::size_t kx = 0; kx < KW; ++kx)
              out[(o * H + y) * W + x] +=
                  input[(i * HP + y + ky) * WP + x + kx] * weights[((o * C + i) * KH + ky) * KW + kx];
  return out;
}

PermutedRun permuted_convolve_counted(const LayerParams& layer, const Grid& input,
                                      const Grid& weights, const Permutation& perm,
                                      bool partial_sums) {
  check_shapes(layer, input, weights);
  const auto layout = ArrayLayout::packed(layer, 0, 1);

  // Element strides per nesting position, derived from the byte strides of the layout.
  std::array<std::uint32_t, kNumDims> extent{};
  std::array<std::uint64_t, kNumDims> in_step{}, w_step{}, out_step{};
  for (int p = 0; p < kNumDims; ++p) {
    const auto d = perm.at(p);
    const auto k = static_cast<std::size_t>(p);
    extent[k] = layer.extent(d);
    in_step[k] = layout.input_stride(d) / kWordBytes;
    w_step[k] = layout.weight_stride(d) / kWordBytes;
    out_step[k] = layout.output_stride(d) / kWordBytes;
  }
  const int flush_pos = partial_sums ? perm.deepest_output_position() : kNumDims - 1;

  PermutedRun run{make_output_grid(layer), 0, 0};
  std::array<std::uint32_t, kNumDims> idx{};
  std::uint64_t in_off = 0, w_off = 0, out_off = 0;
  std::int64_t acc = 0;
  for (;;) {
    acc += input[in_off] * weights[w_off];
    ++run.body_executions;

    int p = kNumDims - 1;
    while (p >= 0 && idx[static_cast<std::size_t>(p)] + 1 == extent[static_cast<std::size_t>(p)]) --p;
    if (p <= flush_pos) {
      run.out[out_off] += acc;
      acc = 0;
      ++run.output_writes;
    }
    if (p < 0) break;
    for (int q = kNumDims - 1; q > p; --q) {
      const auto k = static_cast<std::size_t>(q);
      in_off -= in_step[k] * (extent[k] - 1);
      w_off -= w_step[k] * (extent[k] - 1);
      out_off -= out_step[k] * (extent[k] - 1);
      idx[k] = 0;
    }
    const auto k = static_cast<std::size_t>(p);
    ++idx[k];
    in_off += in_step[k];
    w_off += w_step[k];
    out_off += out_step[k];
  }
  return run;
}

Grid permuted_convolve(const LayerParams& layer, const Grid& input, const Grid& weights,
                       const Permutation& perm, bool partial_sums) {
  return permuted_convolve_counted(layer, input, weights, perm, partial_sums).out;
}

std::vector<NamedLayer> squeezenet_layers() {
  return {
      {"initial-conf", {256, 32, 28, 28, 3, 3}},    {"fire3-conv3x3-2", {64, 16, 55, 55, 3, 3}},
      {"fire4-conv1x1-1", {32, 128, 55, 55, 1, 1}}, {"fire4-conv1x1-2", {128, 32, 55, 55, 1, 1}},
      {"fire7-conv1x1-1", {48, 384, 27, 27, 1, 1}}, {"fire9-conv1x1-1", {64, 512, 13, 13, 1, 1}},
      {"fire9-conv3x3-2", {256, 64, 13, 13, 3, 3}}, {"conv-final", {1000, 512, 13, 13, 1, 1}},
  };
}

}  // namespace loopnest
