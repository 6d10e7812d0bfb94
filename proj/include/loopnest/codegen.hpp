#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "loopnest/conv_model.hpp"

namespace loopnest {

struct CodegenOptions {
  std::uint32_t threads = 1;
  bool partial_sums = true;
  /// Fill in/w from a 32-bit LCG, zero out, and print a 64-bit checksum of out.
  bool emit_validation = false;
  std::uint32_t validation_seed = 1;
};

/// Self-contained C99 (+ OpenMP pragmas when threads > 1) source for one layer and loop
/// order. Extent products are folded into constants and array indices are carried as running
/// sums, one per loop level. Output is byte-identical for identical inputs.
std::string emit_c(const LayerParams& layer, const Permutation& perm, const CodegenOptions& opts,
                   std::string_view layer_name = {});

/// "<layer>_<lex index>.c"; the layer part is `layer_name` or "OxIxWxHxKWxKH".
std::string emitted_file_name(const LayerParams& layer, const Permutation& perm,
                              std::string_view layer_name = {});

/// The value sequence the emitted validation fill produces (in first, then w).
std::int64_t codegen_fill_value(std::uint32_t& lcg_state);

}  // namespace loopnest
