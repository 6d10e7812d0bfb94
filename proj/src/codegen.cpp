#include "loopnest/codegen.hpp"

#include <array>
#include <sstream>

#include "loopnest/errors.hpp"
#include "loopnest/permindex.hpp"
#include "loopnest/tracegen.hpp"

namespace loopnest {

namespace {

enum Array { kIn = 0, kW = 1, kOut = 2 };
constexpr std::array<std::string_view, 3> kArrayNames = {"in", "w", "out"};
constexpr std::array<std::string_view, 3> kStridePrefix = {"IN_STRIDE_", "W_STRIDE_", "OUT_STRIDE_"};

std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(c >= 'a' && c <= 'z' ? c - 'a' + 'A' : c);
  return out;
}

std::string extent_macro(LoopDim d) {
  switch (d) {
    case LoopDim::OutChan: return "OUT_CH";
    case LoopDim::InChan: return "IN_CH";
    case LoopDim::ImgY: return "IMG_H";
    case LoopDim::ImgX: return "IMG_W";
    case LoopDim::KerY: return "KER_H";
    case LoopDim::KerX: return "KER_W";
  }
  return "?";
}

/// Element stride of one step of `d` in array `a` (0 when `d` does not index it).
std::uint64_t element_stride(const ArrayLayout& layout, Array a, LoopDim d) {
  switch (a) {
    case kIn: return layout.input_stride(d) / kWordBytes;
    case kW: return layout.weight_stride(d) / kWordBytes;
    case kOut: return layout.output_stride(d) / kWordBytes;
  }
  return 0;
}

std::string stride_macro(Array a, LoopDim d) { return std::string(kStridePrefix[a]) + upper(dim_name(d)); }

std::string offset_var(Array a, LoopDim d) {
  return std::string(kArrayNames[a]) + "_" + std::string(dim_name(d));
}

std::string indent(int depth) { return std::string(static_cast<std::size_t>(depth) * 2, ' '); }

}  // namespace

std::int64_t codegen_fill_value(std::uint32_t& lcg_state) {
  lcg_state = lcg_state * 1664525u + 1013904223u;
  return static_cast<std::int64_t>((lcg_state >> 16) % 7u) - 3;
}

std::string emitted_file_name(const LayerParams& layer, const Permutation& perm,
                              std::string_view layer_name) {
  std::string name;
  if (layer_name.empty()) {
    name = layer.to_string();
    for (auto& c : name) if (c == ',') c = 'x';
  } else {
    name = layer_name;
  }
  return name + "_" + std::to_string(index_of(perm, IndexScheme::Lex).value) + ".c";
}

std::string emit_c(const LayerParams& layer, const Permutation& perm, const CodegenOptions& opts,
                   std::string_view layer_name) {
  layer.validate();
  if (opts.threads < 1) throw ConfigError("codegen thread count must be >= 1");
  const auto layout = ArrayLayout::packed(layer, 0, 1);
  const bool parallel = opts.threads > 1;
  const bool atomic = needs_atomic(perm, opts.threads);
  const int flush_pos = opts.partial_sums ? perm.deepest_output_position() : kNumDims - 1;
  const bool use_sum = flush_pos < kNumDims - 1;
  const auto lex = index_of(perm, IndexScheme::Lex).value;
  const auto ham = index_of(perm, IndexScheme::Hamiltonian).value;

  std::ostringstream os;
  os << "/* Direct convolution, loop order " << perm.to_string(' ') << " (lex " << lex
     << ", hamiltonian " << ham << ").\n"
     << " * Layer " << (layer_name.empty() ? std::string("") : std::string(layer_name) + " ")
     << "out=" << layer.out_channels << " in=" << layer.in_channels << " w=" << layer.img_w
     << " h=" << layer.img_h << " kw=" << layer.ker_w << " kh=" << layer.ker_h
     << "; threads=" << opts.threads << "; partial sums " << (opts.partial_sums ? "on" : "off")
     << ".\n"
     << " * Build with optimisation off, e.g. cc -std=c99 -O0" << (parallel ? " -fopenmp" : "")
     << "; higher levels delete the unobserved loop body.\n"
     << " */\n"
     << "#include <stdio.h>\n#include <stdlib.h>\n";
  if (opts.emit_validation) os << "#include <stdint.h>\n";
  if (parallel) os << "#ifdef _OPENMP\n#include <omp.h>\n#endif\n";
  os << "\n";

  os << "#define OUT_CH " << layer.out_channels << "\n"
     << "#define IN_CH " << layer.in_channels << "\n"
     << "#define IMG_W " << layer.img_w << "\n"
     << "#define IMG_H " << layer.img_h << "\n"
     << "#define KER_W " << layer.ker_w << "\n"
     << "#define KER_H " << layer.ker_h << "\n"
     << "#define THREADS " << opts.threads << "\n\n";

  os << "/* Extent products, folded. */\n"
     << "#define IN_SIZE " << layer.input_elements() << "L\n"
     << "#define W_SIZE " << layer.weight_elements() << "L\n"
     << "#define OUT_SIZE " << layer.output_elements() << "L\n";
  for (int a = kIn; a <= kOut; ++a) {
    for (auto d : kAllDims) {
      const auto s = element_stride(layout, static_cast<Array>(a), d);
      if (s == 0) continue;
      os << "#define " << stride_macro(static_cast<Array>(a), d) << " " << s << "L\n";
    }
  }
  os << "\n";

  if (opts.emit_validation) {
    os << "static uint32_t lcg_state = " << opts.validation_seed << "u;\n"
       << "static int next_value(void) {\n"
       << "  lcg_state = lcg_state * 1664525u + 1013904223u;\n"
       << "  return (int)((lcg_state >> 16) % 7u) - 3;\n"
       << "}\n\n";
  }

  os << "int main(void) {\n"
     << "  int *in = (int *)malloc(IN_SIZE * sizeof(int));\n"
     << "  int *w = (int *)malloc(W_SIZE * sizeof(int));\n"
     << "  int *out = (int *)malloc(OUT_SIZE * sizeof(int));\n"
     << "  if (!in || !w || !out) return 1;\n";
  if (opts.emit_validation) {
    os << "  for (long k = 0; k < IN_SIZE; k++) in[k] = next_value();\n"
       << "  for (long k = 0; k < W_SIZE; k++) w[k] = next_value();\n"
       << "  for (long k = 0; k < OUT_SIZE; k++) out[k] = 0;\n";
  }

  // Running offset expression of each array at the current nesting level.
  std::array<std::string, 3> current = {"0L", "0L", "0L"};

  // Declarations: serial code declares everything up front; the parallel version declares
  // inner counters inside the outermost loop so each thread has its own copies.
  const auto declare = [&](int from_pos, int depth) {
    std::string counters, offsets;
    for (int p = from_pos; p < kNumDims; ++p) {
      const auto d = perm.at(p);
      counters += (counters.empty() ? "" : ", ") + std::string(dim_name(d));
      for (int a = kIn; a <= kOut; ++a) {
        if (element_stride(layout, static_cast<Array>(a), d) == 0) continue;
        offsets += (offsets.empty() ? "" : ", ") + offset_var(static_cast<Array>(a), d);
      }
    }
    if (!counters.empty()) os << indent(depth) << "long " << counters << ";\n";
    if (!offsets.empty()) os << indent(depth) << "long " << offsets << ";\n";
  };

  if (parallel) {
    os << "#ifdef _OPENMP\n  omp_set_num_threads(THREADS);\n#endif\n";
  } else {
    declare(0, 1);
  }

  const auto emit_update = [&](int depth, const std::string& rhs) {
    if (atomic) os << indent(depth) << "#pragma omp atomic\n";
    os << indent(depth) << "out[" << current[kOut] << "] += " << rhs << ";\n";
  };

  int depth = 1;
  for (int p = 0; p < kNumDims; ++p) {
    const auto d = perm.at(p);
    const auto var = std::string(dim_name(d));
    if (p == 0 && parallel) {
      os << indent(depth) << "#pragma omp parallel for schedule(static)\n"
         << indent(depth) << "for (long " << var << " = 0; " << var << " < " << extent_macro(d)
         << "; " << var << "++) {\n";
      ++depth;
      declare(1, depth);
      for (int a = kIn; a <= kOut; ++a) {
        if (element_stride(layout, static_cast<Array>(a), d) == 0) continue;
        const auto ov = offset_var(static_cast<Array>(a), d);
        os << indent(depth) << "long " << ov << " = " << var << " * "
           << stride_macro(static_cast<Array>(a), d) << ";\n";
        current[a] = ov;
      }
    } else {
      std::string init = var + " = 0", step = var + "++";
      for (int a = kIn; a <= kOut; ++a) {
        if (element_stride(layout, static_cast<Array>(a), d) == 0) continue;
        const auto ov = offset_var(static_cast<Array>(a), d);
        init += ", " + ov + " = " + current[a];
        step += ", " + ov + " += " + stride_macro(static_cast<Array>(a), d);
        current[a] = ov;
      }
      os << indent(depth) << "for (" << init << "; " << var << " < " << extent_macro(d) << "; "
         << step << ") {\n";
      ++depth;
    }
    if (use_sum && p == flush_pos) os << indent(depth) << "int sum = 0;\n";
  }

  const std::string product = "in[" + current[kIn] + "] * w[" + current[kW] + "]";
  if (use_sum) {
    os << indent(depth) << "sum += " << product << ";\n";
  } else {
    emit_update(depth, product);
  }

  for (int p = kNumDims - 1; p >= 0; --p) {
    --depth;
    os << indent(depth) << "} /* end " << dim_name(perm.at(p)) << " */\n";
    if (use_sum && p == flush_pos + 1) {
      // Out offset at the flush level is the running sum of the loops that index out.
      std::string out_off = "0L";
      for (int q = 0; q <= flush_pos; ++q) {
        if (element_stride(layout, kOut, perm.at(q)) != 0) out_off = offset_var(kOut, perm.at(q));
      }
      if (atomic) os << indent(depth) << "#pragma omp atomic\n";
      os << indent(depth) << "out[" << out_off << "] += sum;\n";
    }
  }

  if (opts.emit_validation) {
    os << "  long long checksum = 0;\n"
       << "  for (long k = 0; k < OUT_SIZE; k++) checksum += out[k];\n"
       << "  printf(\"checksum %lld\\n\", checksum);\n";
  }
  os << "  free(in);\n  free(w);\n  free(out);\n  return 0;\n}\n";
  return os.str();
}

}  // namespace loopnest
