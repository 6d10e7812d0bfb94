#include "loopnest/tracegen.hpp"

#include <algorithm>
#include <limits>

#include "loopnest/errors.hpp"
#include "loopnest/rng.hpp"

namespace loopnest {

namespace {

constexpr std::size_t kChunkEvents = 4096;
// R in, R w, R out, atomic tick, W out, body ticks, then a flush of R, tick, W.
constexpr std::size_t kMaxIterationEvents = 9;

bool dense_body(const TraceOptions& opts, int flush_pos) {
  return !opts.partial_sums || flush_pos == kNumDims - 1;
}

}  // namespace

void TraceOptions::validate() const {
  if (threads < 1) throw ConfigError("thread count must be >= 1");
  if (body_ticks < 1) throw ConfigError("body cost must be >= 1 tick");
  if (sparsity) {
    const auto ok = [](double d) { return d >= 0.0 && d <= 1.0; };
    if (!ok(sparsity->weight_density) || !ok(sparsity->activation_density)) {
      throw ConfigError("sparsity densities must lie in [0, 1]");
    }
  }
}

Chunk static_chunk(std::uint32_t extent, std::uint32_t threads, std::uint32_t thread) {
  const std::uint32_t q = extent / threads;
  const std::uint32_t r = extent % threads;
  const std::uint32_t begin = thread * q + std::min(thread, r);
  return {begin, begin + q + (thread < r ? 1u : 0u)};
}

bool needs_atomic(const Permutation& perm, std::uint32_t threads) {
  return threads > 1 && !indexes_output(perm.outermost());
}

SparsityMasks SparsityMasks::make(const LayerParams& layer, const Sparsity& s) {
  SparsityMasks m;
  XorShift64Star wrng(splitmix64(s.seed ^ 0x5745494748545321ULL));
  XorShift64Star arng(splitmix64(s.seed ^ 0x4143544956415445ULL));
  m.weight_nonzero.resize(layer.weight_elements());
  for (std::size_t k = 0; k < m.weight_nonzero.size(); ++k) {
    m.weight_nonzero[k] = wrng.bernoulli(s.weight_density);
  }
  m.input_nonzero.resize(layer.input_elements());
  for (std::size_t k = 0; k < m.input_nonzero.size(); ++k) {
    m.input_nonzero[k] = arng.bernoulli(s.activation_density);
  }
  return m;
}

// ---------------------------------------------------------------------------

TraceGenerator::TraceGenerator(const LayerParams& layer, const Permutation& perm,
                               const TraceOptions& opts)
    : TraceGenerator(layer, perm, ArrayLayout::packed(layer), opts) {}

TraceGenerator::TraceGenerator(const LayerParams& layer, const Permutation& perm,
                               const ArrayLayout& layout, const TraceOptions& opts)
    : layer_(layer), perm_(perm), layout_(layout), opts_(opts) {
  layer_.validate();
  opts_.validate();
  if (!(layout_.layer == layer_)) throw ConfigError("array layout was built for a different layer");

  for (int p = 0; p < kNumDims; ++p) {
    const auto d = perm_.at(p);
    const auto k = static_cast<std::size_t>(p);
    extent_[k] = layer_.extent(d);
    in_step_[k] = layout_.input_stride(d);
    w_step_[k] = layout_.weight_stride(d);
    out_step_[k] = layout_.output_stride(d);
  }
  flush_pos_ = opts_.partial_sums ? perm_.deepest_output_position() : kNumDims - 1;
  atomic_ = needs_atomic(perm_, opts_.threads);
  if (opts_.sparsity) masks_ = SparsityMasks::make(layer_, *opts_.sparsity);

  threads_.resize(opts_.threads);
  for (std::uint32_t t = 0; t < opts_.threads; ++t) {
    const auto c = static_chunk(extent_[0], opts_.threads, t);
    auto& s = threads_[t];
    s.idx[0] = c.begin;
    s.end = c.end;
    s.in_addr = layout_.input_base + in_step_[0] * c.begin;
    s.w_addr = layout_.weights_base + w_step_[0] * c.begin;
    s.out_addr = layout_.output_base + out_step_[0] * c.begin;
    s.active = !c.empty();
    if (s.active) active_.push_back(t);
  }
  buffer_.resize(kChunkEvents + kMaxIterationEvents);
  dense_ = dense_body(opts_, flush_pos_);
  done_ = active_.empty();
}

void TraceGenerator::emit_iteration(ThreadState& t, std::uint32_t tid) {
  bool nonzero = true;
  if (masks_) {
    const auto wi = (t.w_addr - layout_.weights_base) / kWordBytes;
    const auto ii = (t.in_addr - layout_.input_base) / kWordBytes;
    nonzero = masks_->weight_nonzero[wi] && masks_->input_nonzero[ii];
  }

  Event* e = buffer_.data() + used_;
  std::size_t n = 0;
  std::uint64_t instr = 2;
  e[n++] = Event::read(t.in_addr, tid);
  e[n++] = Event::read(t.w_addr, tid);
  if (!nonzero) {
    e[n++] = Event::ticks(tid, 1);
    instr += 1;
  } else {
    if (dense_) {
      e[n++] = Event::read(t.out_addr, tid);
      if (atomic_) {
        e[n++] = Event::ticks(tid, 1);
        instr += 1;
      }
      e[n++] = Event::write(t.out_addr, tid);
      instr += 2;
    }
    e[n++] = Event::ticks(tid, opts_.body_ticks);
    instr += opts_.body_ticks;
  }
  ++iterations_;

  constexpr std::size_t kInner = kNumDims - 1;
  if (t.idx[kInner] + 1 < extent_[kInner]) {
    // No carry: only the innermost loop advances, and no flush can happen here.
    ++t.idx[kInner];
    t.in_addr += in_step_[kInner];
    t.w_addr += w_step_[kInner];
    t.out_addr += out_step_[kInner];
    used_ += n;
    emitted_ += instr;
    return;
  }

  // Advance the odometer; the outermost position is bounded by this thread's chunk.
  int p = kNumDims - 1;
  while (p >= 0) {
    const auto k = static_cast<std::size_t>(p);
    const std::uint32_t bound = p == 0 ? t.end : extent_[k];
    if (t.idx[k] + 1 < bound) break;
    --p;
  }
  if (!dense_ && p <= flush_pos_) {
    e[n++] = Event::read(t.out_addr, tid);
    if (atomic_) {
      e[n++] = Event::ticks(tid, 1);
      instr += 1;
    }
    e[n++] = Event::write(t.out_addr, tid);
    instr += 2;
  }
  used_ += n;
  emitted_ += instr;
  if (p < 0) {
    t.active = false;
    return;
  }
  for (int q = kNumDims - 1; q > p; --q) {
    const auto k = static_cast<std::size_t>(q);
    const std::uint64_t span = extent_[k] - 1;
    t.in_addr -= in_step_[k] * span;
    t.w_addr -= w_step_[k] * span;
    t.out_addr -= out_step_[k] * span;
    t.idx[k] = 0;
  }
  const auto k = static_cast<std::size_t>(p);
  ++t.idx[k];
  t.in_addr += in_step_[k];
  t.w_addr += w_step_[k];
  t.out_addr += out_step_[k];
}

std::span<const Event> TraceGenerator::next_chunk() {
  used_ = 0;
  const auto limit = opts_.instr_limit.value_or(std::numeric_limits<std::uint64_t>::max());
  if (active_.size() == 1 && !done_) {
    const auto tid = active_.front();
    auto& t = threads_[tid];
    while (used_ < kChunkEvents) {
      emit_iteration(t, tid);
      if (!t.active) {
        active_.clear();
        done_ = true;
        break;
      }
      if (emitted_ >= limit) {
        done_ = true;
        break;
      }
    }
    return {buffer_.data(), used_};
  }
  while (!done_ && used_ < kChunkEvents) {
    if (turn_ >= active_.size()) turn_ = 0;
    const auto tid = active_[turn_];
    auto& t = threads_[tid];
    emit_iteration(t, tid);
    if (!t.active) {
      active_.erase(active_.begin() + static_cast<std::ptrdiff_t>(turn_));
    } else {
      ++turn_;
    }
    if (active_.empty() || emitted_ >= limit) done_ = true;
  }
  return {buffer_.data(), used_};
}

std::vector<Event> TraceGenerator::collect() {
  std::vector<Event> all;
  for (auto chunk = next_chunk(); !chunk.empty(); chunk = next_chunk()) {
    all.insert(all.end(), chunk.begin(), chunk.end());
  }
  return all;
}

// ---------------------------------------------------------------------------

std::uint64_t output_write_count(const LayerParams& layer, const Permutation& perm,
                                 bool partial_sums) {
  if (!partial_sums) return layer.iteration_count();
  std::uint64_t f = 1;
  const int d = perm.deepest_output_position();
  for (int p = 0; p <= d; ++p) f *= layer.extent(perm.at(p));
  return f;
}

namespace {

/// Iterations whose weight and activation are both unmasked.
std::uint64_t nonzero_iterations(const LayerParams& layer, const SparsityMasks& m) {
  const std::size_t HP = layer.padded_h(), WP = layer.padded_w();
  const std::size_t H = layer.img_h, W = layer.img_w;
  // Per-channel 2D prefix sums of the activation mask.
  std::vector<std::uint64_t> pre((HP + 1) * (WP + 1));
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < layer.in_channels; ++i) {
    std::fill(pre.begin(), pre.end(), 0);
    for (std::size_t r = 0; r < HP; ++r)
      for (std::size_t c = 0; c < WP; ++c)
        pre[(r + 1) * (WP + 1) + c + 1] = pre[r * (WP + 1) + c + 1] + pre[(r + 1) * (WP + 1) + c] -
                                          pre[r * (WP + 1) + c] +
                                          (m.input_nonzero[(i * HP + r) * WP + c] ? 1 : 0);
    const auto window = [&](std::size_t r0, std::size_t c0) {
      const std::size_t r1 = r0 + H, c1 = c0 + W;
      return pre[r1 * (WP + 1) + c1] - pre[r0 * (WP + 1) + c1] - pre[r1 * (WP + 1) + c0] +
             pre[r0 * (WP + 1) + c0];
    };
    for (std::size_t ky = 0; ky < layer.ker_h; ++ky)
      for (std::size_t kx = 0; kx < layer.ker_w; ++kx) {
        const auto active = window(ky, kx);
        for (std::size_t o = 0; o < layer.out_channels; ++o) {
          const auto wi = ((o * layer.in_channels + i) * layer.ker_h + ky) * layer.ker_w + kx;
          if (m.weight_nonzero[wi]) total += active;
        }
      }
  }
  return total;
}

}  // namespace

RefCounts ref_count(const LayerParams& layer, const Permutation& perm, const TraceOptions& opts) {
  layer.validate();
  opts.validate();
  if (opts.instr_limit) {
    throw ConfigError("closed-form counts describe complete traces; drop the instruction limit");
  }
  const std::uint64_t n = layer.iteration_count();
  const std::uint64_t nz =
      opts.sparsity ? nonzero_iterations(layer, SparsityMasks::make(layer, *opts.sparsity)) : n;
  const std::uint64_t z = n - nz;
  const int flush_pos = opts.partial_sums ? perm.deepest_output_position() : kNumDims - 1;
  const std::uint64_t atomic = needs_atomic(perm, opts.threads) ? 1 : 0;

  RefCounts c;
  const std::uint64_t out_updates =
      dense_body(opts, flush_pos) ? nz : output_write_count(layer, perm, true);
  c.reads = 2 * n + out_updates;
  c.writes = out_updates;
  c.ticks = opts.body_ticks * nz + z + atomic * out_updates;
  return c;
}

}  // namespace loopnest
