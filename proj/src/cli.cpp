#include "loopnest/cli.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "loopnest/analysis.hpp"
#include "loopnest/cachesim.hpp"
#include "loopnest/codegen.hpp"
#include "loopnest/config_file.hpp"
#include "loopnest/conv_model.hpp"
#include "loopnest/errors.hpp"
#include "loopnest/explorer.hpp"
#include "loopnest/permindex.hpp"
#include "loopnest/tracegen.hpp"

namespace loopnest {

namespace {

namespace fs = std::filesystem;

struct Globals {
  std::uint64_t seed = 1;
  std::string format = "csv";
  unsigned workers = 0;
};

/// --perm-lex / --perm-ham / --perm; defaults to lex 0.
struct PermArgs {
  std::optional<std::uint32_t> lex, ham;
  std::string text;

  void add(CLI::App* app) {
    app->add_option("--perm-lex", lex, "Loop order by lexicographic index (0..719)");
    app->add_option("--perm-ham", ham, "Loop order by Hamiltonian-path index (0..719)");
    app->add_option("--perm", text, "Loop order, e.g. o-i-y-x-ky-kx");
  }

  Permutation resolve() const {
    const int given = (lex ? 1 : 0) + (ham ? 1 : 0) + (text.empty() ? 0 : 1);
    if (given > 1) throw UsageError("give at most one of --perm-lex, --perm-ham, --perm");
    if (ham) return loop_perm_of({*ham, IndexScheme::Hamiltonian});
    if (!text.empty()) return Permutation::parse(text);
    return loop_perm_of({lex.value_or(0), IndexScheme::Lex});
  }
};

/// Trace flags shared by trace, simulate, sweep, tile-sweep and the trace-based analyses.
struct TraceArgs {
  std::uint32_t threads = 1;
  std::string limit;
  bool no_partial_sums = false;
  double weight_density = 1.0;
  double activation_density = 1.0;

  void add(CLI::App* app, bool with_threads = true) {
    if (with_threads) app->add_option("--threads", threads, "Logical threads (static schedule of the outermost loop)");
    app->add_option("--limit", limit, "Instruction limit, or 'none'");
    app->add_flag("--no-partial-sums", no_partial_sums, "Write out on every iteration");
    app->add_option("--weight-density", weight_density, "Fraction of nonzero weights (zero iterations are skipped)");
    app->add_option("--activation-density", activation_density, "Fraction of nonzero input activations");
  }

  std::optional<std::uint64_t> parsed_limit(std::optional<std::uint64_t> fallback) const {
    if (limit.empty()) return fallback;
    if (limit == "none") return std::nullopt;
    try {
      std::size_t pos = 0;
      const auto v = std::stoull(limit, &pos);
      if (pos == limit.size()) return v;
    } catch (const std::exception&) {
    }
    throw UsageError("bad --limit '" + limit + "'");
  }

  TraceOptions options(const Globals& g, std::optional<std::uint64_t> fallback_limit = std::nullopt) const {
    TraceOptions o;
    o.threads = threads;
    o.partial_sums = !no_partial_sums;
    o.instr_limit = parsed_limit(fallback_limit);
    if (weight_density < 1.0 || activation_density < 1.0) o.sparsity = Sparsity{weight_density, activation_density, g.seed};
    o.validate();
    return o;
  }
};

LayerParams parse_layer(const std::string& text) {
  try {
    return LayerParams::parse(text);
  } catch (const std::exception& e) {
    throw UsageError("bad --layer '" + text + "': " + e.what());
  }
}

std::string layer_id(const LayerParams& p) {
  auto s = p.to_string();
  for (auto& c : s) if (c == ',') c = 'x';
  return s;
}

/// CSV text -> JSON array of objects, numbers typed where they parse cleanly.
std::string csv_to_json(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  std::vector<std::string> header;
  nlohmann::json arr = nlohmann::json::array();
  const auto split = [](const std::string& l) {
    std::vector<std::string> f;
    std::string cur;
    std::istringstream ss(l);
    while (std::getline(ss, cur, ',')) f.push_back(cur);
    return f;
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (header.empty()) {
      header = split(line);
      continue;
    }
    const auto f = split(line);
    nlohmann::json obj = nlohmann::json::object();
    for (std::size_t i = 0; i < header.size() && i < f.size(); ++i) {
      const auto& v = f[i];
      char* end = nullptr;
      if (!v.empty() && v.find_first_not_of("0123456789") == std::string::npos) {
        obj[header[i]] = std::strtoull(v.c_str(), &end, 10);
      } else {
        const double d = std::strtod(v.c_str(), &end);
        if (!v.empty() && end == v.c_str() + v.size() && v.find_first_of("-.0123456789") == 0) {
          obj[header[i]] = d;
        } else {
          obj[header[i]] = v;
        }
      }
    }
    arr.push_back(std::move(obj));
  }
  return arr.dump(2) + "\n";
}

void emit(const std::string& csv, const Globals& g, const std::string& out_path, std::ostream& out) {
  const auto text = g.format == "json" ? csv_to_json(csv) : csv;
  if (out_path.empty() || out_path == "-") {
    out << text;
    return;
  }
  std::ofstream f(out_path, std::ios::binary | std::ios::trunc);
  f << text;
  if (!f) throw std::runtime_error("cannot write '" + out_path + "'");
}

void maybe_plot_script(bool wanted, const std::string& family, const std::string& out_path) {
  if (!wanted) return;
  if (out_path.empty() || out_path == "-") throw UsageError("--plot-script needs --out");
  const auto script = fs::path(out_path).replace_extension(".py").string();
  std::ofstream f(script);
  f << plot_script(family, fs::path(out_path).filename().string());
  if (!f) throw std::runtime_error("cannot write '" + script + "'");
}

std::string stats_csv(const LayerParams& layer, const Permutation& perm, const CacheConfig& config,
                      std::uint32_t threads, const CacheStats& s) {
  std::ostringstream os;
  os << "layer,perm_lex,perm_ham,order,config_id,threads,cycles,total_cycles,refs,ticks,instructions";
  for (const auto& l : config.levels) os << ',' << l.name << "_hits," << l.name << "_misses";
  os << ",memory_accesses\n";
  os << layer_id(layer) << ',' << index_of(perm, IndexScheme::Lex).value << ','
     << index_of(perm, IndexScheme::Hamiltonian).value << ',' << perm.to_string('-') << ',' << config.id << ','
     << threads << ',' << s.makespan() << ',' << s.cycles << ',' << s.refs << ',' << s.nonmem_ticks << ','
     << s.instructions();
  for (const auto& l : s.levels) os << ',' << l.hits << ',' << l.misses;
  os << ',' << s.memory_accesses << '\n';
  return os.str();
}

std::vector<SweepResult> load_results(const std::vector<std::string>& paths) {
  std::vector<SweepResult> rows;
  for (const auto& p : paths) {
    auto r = read_results_csv(p);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  return rows;
}

std::vector<Event> collect_trace(const LayerParams& layer, const Permutation& perm, const TraceOptions& opts) {
  TraceGenerator gen(layer, perm, opts);
  std::vector<Event> events;
  for (auto chunk = gen.next_chunk(); !chunk.empty(); chunk = gen.next_chunk()) {
    events.insert(events.end(), chunk.begin(), chunk.end());
    if (events.size() > kMaxBufferedRefs) {
      throw ConfigError("trace exceeds " + std::to_string(kMaxBufferedRefs) + " events; set a smaller --limit");
    }
  }
  return events;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Loop-order design-space explorer for direct convolution"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Seed for every random choice (replacement, sparsity, sampling)");
  app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--workers", g.workers, "Worker threads for sweeps (default: LOOPNEST_WORKERS or all cores)");

  // perms
  auto* perms = app.add_subcommand("perms", "Permutation index tables");
  int perm_n = 6;
  perms->add_option("--n", perm_n, "Number of elements (1..8)");

  // trace
  auto* trace = app.add_subcommand("trace", "Dump the memory-reference trace of one layer and loop order");
  std::string layer_text, trace_out, trace_fmt = "csv";
  PermArgs trace_perm;
  TraceArgs trace_args;
  trace->add_option("--layer", layer_text, "out,in,w,h,kw,kh")->required();
  trace_perm.add(trace);
  trace_args.add(trace);
  trace->add_option("--dump", trace_fmt, "csv or bin")->check(CLI::IsMember({"csv", "bin"}));
  trace->add_option("--out", trace_out, "Output file (default stdout)");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Simulate one layer and loop order");
  std::string sim_config = "loki", sim_policy, sim_out;
  PermArgs sim_perm;
  TraceArgs sim_args;
  std::uint64_t sim_ipc_window = 0;
  sim->add_option("--layer", layer_text, "out,in,w,h,kw,kh")->required();
  sim_perm.add(sim);
  sim_args.add(sim);
  sim->add_option("--config", sim_config, "Cache preset or config file");
  sim->add_option("--policy", sim_policy, "Override every level's replacement (lru, random, opt)");
  sim->add_option("--ipc-window", sim_ipc_window, "Also write the recent-IPC series over this window");
  sim->add_option("--out", sim_out, "Output file (default stdout)");

  // emit-c
  auto* emitc = app.add_subcommand("emit-c", "Generate C source for a layer and loop order");
  PermArgs emit_perm;
  bool emit_all = false, emit_validation = false, emit_no_ps = false;
  std::uint32_t emit_threads = 1;
  std::string emit_dir = ".", emit_name;
  emitc->add_option("--layer", layer_text, "out,in,w,h,kw,kh")->required();
  emit_perm.add(emitc);
  emitc->add_flag("--all", emit_all, "Emit all 720 loop orders");
  emitc->add_option("--threads", emit_threads, "OpenMP threads (1 = serial code)");
  emitc->add_flag("--no-partial-sums", emit_no_ps, "Update out on every iteration");
  emitc->add_flag("--validation", emit_validation, "Deterministic fill and printed checksum");
  emitc->add_option("--name", emit_name, "Layer name used in the file name");
  emitc->add_option("--out-dir", emit_dir, "Directory for <layer>_<lex>.c files");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Run a design-space sweep into a result CSV");
  std::string sw_preset, sw_layers_file, sw_perms = "all", sw_out;
  std::vector<std::string> sw_layers, sw_configs;
  std::vector<std::uint32_t> sw_threads;
  TraceArgs sw_args;
  bool sw_progress = false;
  sweep->add_option("--preset", sw_preset, "squeezenet, synthetic-216 or synthetic-36");
  sweep->add_option("--layers", sw_layers_file, "Layer list file (name out in w h kw kh per line)");
  sweep->add_option("--layer", sw_layers, "Layer out,in,w,h,kw,kh (repeatable)");
  sweep->add_option("--perms", sw_perms, "all | sample:N | comma-separated lex indices");
  sweep->add_option("--config", sw_configs, "Cache presets or files (repeatable)");
  sweep->add_option("--threads", sw_threads, "Thread counts (repeatable)");
  sw_args.add(sweep, false);
  sweep->add_option("--out", sw_out, "Result CSV")->required();
  sweep->add_flag("--progress", sw_progress, "Report progress on stderr");

  // tile-sweep
  auto* tiles = app.add_subcommand("tile-sweep", "Compute tiles vs L2 tiles trade-off");
  std::vector<std::string> ts_layers;
  PermArgs ts_perm;
  TraceArgs ts_args;
  std::uint32_t ts_total = 16, ts_kb = 64, ts_cores = 8;
  std::string ts_config = "loki", ts_out;
  tiles->add_option("--layer", ts_layers, "Layer out,in,w,h,kw,kh (repeatable)")->required();
  ts_perm.add(tiles);
  ts_args.add(tiles, false);
  tiles->add_option("--total-tiles", ts_total, "Tiles on the chip");
  tiles->add_option("--bank-kb", ts_kb, "L2 KiB contributed by one tile");
  tiles->add_option("--cores-per-tile", ts_cores, "Cores (threads) per compute tile");
  tiles->add_option("--config", ts_config, "Base cache hierarchy (its L2 is resized)");
  tiles->add_option("--out", ts_out, "Output file (default stdout)");

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Analyses over result files and traces");
  analyze->require_subcommand(1);
  std::vector<std::string> an_results;
  std::string an_metric = "cycles", an_out;
  bool an_plot = false;
  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--results", an_results, "Result CSV files")->required();
    sub->add_option("--metric", an_metric, "cycles or l2_misses");
    sub->add_option("--out", an_out, "Output file (default stdout)");
    sub->add_flag("--plot-script", an_plot, "Write a matplotlib script next to --out");
  };
  auto* an_rank = analyze->add_subcommand("rank", "Rank permutations by mean speedup");
  add_common(an_rank);
  bool rank_speedups = false;
  an_rank->add_flag("--speedups", rank_speedups, "Per-layer speedups (long format) instead of the ranking");
  auto* an_pairs = analyze->add_subcommand("pairs", "Best combinations of k permutations");
  add_common(an_pairs);
  std::size_t pairs_k = 2, pairs_top = 100, pairs_beam = 64;
  an_pairs->add_option("--k", pairs_k, "Combination size");
  an_pairs->add_option("--top", pairs_top, "Rows to output (0 = all)");
  an_pairs->add_option("--beam", pairs_beam, "Beam width for k > 2");
  auto* an_sample = analyze->add_subcommand("sample-size", "Random permutations needed to find a good one");
  double sample_threshold = 0.9, sample_conf = 0.954;
  std::optional<double> sample_g;
  an_sample->add_option("--results", an_results, "Result CSV files");
  an_sample->add_option("--metric", an_metric, "cycles or l2_misses");
  an_sample->add_option("--threshold", sample_threshold, "Speedup counted as good");
  an_sample->add_option("--confidence", sample_conf, "Required probability");
  an_sample->add_option("--good-fraction", sample_g, "Use this good fraction instead of result files");
  auto* an_stab = analyze->add_subcommand("stability", "Parallel-coordinates export across configs or threads");
  add_common(an_stab);
  std::string stab_axis = "config", stab_summary;
  an_stab->add_option("--axis", stab_axis, "config or threads");
  an_stab->add_option("--summary-out", stab_summary, "Spearman/degraded summary CSV");
  auto* an_sig = analyze->add_subcommand("signatures", "Per-layer metric along the Hamiltonian axis");
  add_common(an_sig);
  auto* an_curves = analyze->add_subcommand("curves", "Per-layer speedups, sorted");
  add_common(an_curves);

  auto* an_reuse = analyze->add_subcommand("reuse", "First-touch reuse map of a trace");
  PermArgs reuse_perm;
  TraceArgs reuse_args;
  unsigned reuse_bits = 5;
  std::uint64_t reuse_window = kDefaultWorkingSetWindow;
  std::size_t reuse_stride = 1;
  an_reuse->add_option("--layer", layer_text, "out,in,w,h,kw,kh")->required();
  reuse_perm.add(an_reuse);
  reuse_args.add(an_reuse);
  an_reuse->add_option("--offset-bits", reuse_bits, "Block offset bits");
  an_reuse->add_option("--window", reuse_window, "Working-set window (references)");
  an_reuse->add_option("--stride", reuse_stride, "Write every n-th reference");
  an_reuse->add_option("--out", an_out, "Output file (default stdout)");
  an_reuse->add_flag("--plot-script", an_plot, "Write a matplotlib script next to --out");

  auto* an_ipc = analyze->add_subcommand("ipc", "Recent-IPC series of one run");
  PermArgs ipc_perm;
  TraceArgs ipc_args;
  std::uint64_t ipc_window = 100000;
  std::string ipc_config = "loki";
  an_ipc->add_option("--layer", layer_text, "out,in,w,h,kw,kh")->required();
  ipc_perm.add(an_ipc);
  ipc_args.add(an_ipc);
  an_ipc->add_option("--window", ipc_window, "Instructions per window");
  an_ipc->add_option("--config", ipc_config, "Cache preset or config file");
  an_ipc->add_option("--out", an_out, "Output file (default stdout)");
  an_ipc->add_flag("--plot-script", an_plot, "Write a matplotlib script next to --out");

  // validate
  auto* validate = app.add_subcommand("validate", "Check every loop order against the reference convolution");
  std::uint32_t max_extent = 3;
  validate->add_option("--max-extent", max_extent, "Every extent ranges over 1..N")->check(CLI::Range(1, 4));

  std::vector<std::string> argv_store;
  argv_store.push_back("loopnest");
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_store) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  try {
    std::optional<unsigned> workers;
    if (g.workers > 0) workers = g.workers;

    if (*perms) {
      if (perm_n < 1 || perm_n > kMaxPermN) throw UsageError("--n must be in 1.." + std::to_string(kMaxPermN));
      std::ostringstream os;
      if (perm_n == kNumDims) {
        os << "lex,revlex,hamiltonian,order\n";
        for (const auto& row : LoopPermTable::get().by_lex) {
          os << row.lex << ',' << row.revlex << ',' << row.hamiltonian << ',' << row.perm.to_string('-') << '\n';
        }
      } else {
        os << "lex,revlex,hamiltonian,perm\n";
        const auto n_fact = factorial(perm_n);
        for (std::uint64_t r = 0; r < n_fact; ++r) {
          const auto p = lex_unrank(perm_n, r);
          os << r << ',' << index_of(p, IndexScheme::RevLex).value << ','
             << index_of(p, IndexScheme::Hamiltonian).value << ',';
          for (auto v : p) os << static_cast<int>(v);
          os << '\n';
        }
      }
      emit(os.str(), g, "", out);
      return 0;
    }

    if (*trace) {
      const auto layer = parse_layer(layer_text);
      const auto perm = trace_perm.resolve();
      TraceGenerator gen(layer, perm, trace_args.options(g));
      std::ofstream file;
      std::ostream* sink = &out;
      if (!trace_out.empty() && trace_out != "-") {
        file.open(trace_out, std::ios::binary | std::ios::trunc);
        if (!file) throw std::runtime_error("cannot write '" + trace_out + "'");
        sink = &file;
      }
      if (trace_fmt == "csv") *sink << "kind,thread,address,count\n";
      static constexpr const char* kKind[] = {"R", "W", "T"};
      std::uint64_t events = 0;
      for (auto chunk = gen.next_chunk(); !chunk.empty(); chunk = gen.next_chunk()) {
        for (const auto& e : chunk) {
          ++events;
          if (trace_fmt == "csv") {
            *sink << kKind[static_cast<int>(e.kind)] << ',' << e.thread << ',' << e.address << ',' << e.count << '\n';
          } else {
            // 16-byte little-endian record: u64 address, u32 thread, u16 count, u8 kind, u8 pad.
            unsigned char rec[16] = {};
            std::memcpy(rec, &e.address, 8);
            std::memcpy(rec + 8, &e.thread, 4);
            std::memcpy(rec + 12, &e.count, 2);
            rec[14] = static_cast<unsigned char>(e.kind);
            sink->write(reinterpret_cast<const char*>(rec), sizeof rec);
          }
        }
      }
      err << events << " events, " << gen.instructions_emitted() << " instructions, "
          << gen.iterations_emitted() << " iterations\n";
      return 0;
    }

    if (*sim) {
      const auto layer = parse_layer(layer_text);
      const auto perm = sim_perm.resolve();
      auto config = resolve_cache_config(sim_config, g.seed);
      if (!sim_policy.empty()) config = config.with_policy(replacement_from_name(sim_policy));
      const auto opts = sim_args.options(g);
      const auto stats = simulate_point(layer, perm, config, opts);
      emit(stats_csv(layer, perm, config, opts.threads, stats), g, sim_out, out);
      if (sim_ipc_window > 0) {
        TraceGenerator gen(layer, perm, opts);
        if (config.uses_opt()) throw UsageError("--ipc-window is not available with OPT replacement");
        const auto series = windowed_ipc(gen, config, sim_ipc_window);
        const auto path = sim_out.empty() || sim_out == "-" ? std::string("ipc.csv")
                                                            : fs::path(sim_out).replace_extension(".ipc.csv").string();
        emit(export_ipc(series), g, path, out);
        err << "recent-IPC series written to " << path << "\n";
      }
      err << "cycles " << stats.makespan() << " (aggregate " << stats.cycles << "), refs " << stats.refs << "\n";
      return 0;
    }

    if (*emitc) {
      const auto layer = parse_layer(layer_text);
      CodegenOptions copts;
      copts.threads = emit_threads;
      copts.partial_sums = !emit_no_ps;
      copts.emit_validation = emit_validation;
      copts.validation_seed = static_cast<std::uint32_t>(g.seed);
      std::vector<Permutation> list;
      if (emit_all) {
        for (const auto& row : LoopPermTable::get().by_lex) list.push_back(row.perm);
      } else {
        list.push_back(emit_perm.resolve());
      }
      fs::create_directories(emit_dir);
      for (const auto& p : list) {
        const auto path = fs::path(emit_dir) / emitted_file_name(layer, p, emit_name);
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        f << emit_c(layer, p, copts, emit_name);
        if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
        out << path.string() << '\n';
      }
      return 0;
    }

    if (*sweep) {
      DesignSpace space;
      if (!sw_preset.empty()) {
        space = preset_space(sw_preset);
      } else {
        space.instr_limit = 500'000'000;
      }
      if (!sw_layers_file.empty()) {
        const auto more = load_layer_list(sw_layers_file);
        if (sw_preset.empty()) space.layers.clear();
        space.layers.insert(space.layers.end(), more.begin(), more.end());
      }
      for (const auto& l : sw_layers) {
        const auto p = parse_layer(l);
        space.layers.push_back({layer_id(p), p});
      }
      if (space.layers.empty()) throw UsageError("sweep needs --preset, --layers or --layer");
      space.configs.clear();
      if (sw_configs.empty()) sw_configs.push_back("loki");
      for (const auto& c : sw_configs) space.configs.push_back(resolve_cache_config(c, g.seed));
      if (!sw_threads.empty()) space.thread_counts = sw_threads;
      const auto base = sw_args.options(g, space.instr_limit);
      space.instr_limit = base.instr_limit;
      space.trace = base;
      space.trace.instr_limit.reset();
      if (sw_perms == "all") {
        space.perms = PermSelection::all();
      } else if (sw_perms.rfind("sample:", 0) == 0) {
        space.perms = PermSelection::sample(std::stoul(sw_perms.substr(7)), g.seed);
      } else {
        std::vector<std::uint16_t> lex;
        std::istringstream ss(sw_perms);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
          try {
            lex.push_back(static_cast<std::uint16_t>(std::stoul(tok)));
          } catch (const std::exception&) {
            throw UsageError("bad --perms entry '" + tok + "'");
          }
        }
        space.perms = PermSelection::explicit_list(lex);
      }
      SweepOptions so;
      so.workers = workers;
      if (sw_progress) {
        so.progress = [&err](std::size_t done, std::size_t total) {
          if (done == total || done % 50 == 0) err << "\r" << done << "/" << total << std::flush;
          if (done == total) err << "\n";
        };
      }
      const auto summary = run_sweep_to_file(space, sw_out, so);
      err << summary.total << " points: " << summary.computed << " computed, " << summary.reused
          << " reused -> " << sw_out << "\n";
      return 0;
    }

    if (*tiles) {
      TileSweepOptions to;
      to.total_tiles = ts_total;
      to.l2_kb_per_tile = ts_kb;
      to.cores_per_tile = ts_cores;
      to.base = resolve_cache_config(ts_config, g.seed);
      to.trace = ts_args.options(g, 100'000'000);
      to.workers = workers;
      const auto perm = ts_perm.resolve();
      std::vector<std::vector<TileResult>> all;
      std::ostringstream os;
      os << "layer,compute_tiles,l2_tiles,threads,l2_bytes,cycles,total_cycles,l2_misses\n";
      for (const auto& text : ts_layers) {
        const auto layer = parse_layer(text);
        all.push_back(tile_sweep(layer, perm, to));
        for (const auto& r : all.back()) {
          os << layer_id(layer) << ',' << r.tiles.compute_tiles << ',' << r.tiles.l2_tiles << ',' << r.threads << ','
             << r.l2_bytes << ',' << r.stats.makespan() << ',' << r.stats.cycles << ','
             << (r.stats.levels.size() > 1 ? r.stats.levels[1].misses : 0) << '\n';
        }
      }
      emit(os.str(), g, ts_out, out);
      const auto t = tile_tradeoff(all);
      err << "best split on average: " << t.best_overall << " compute tiles; per-layer optimum gains mean "
          << t.mean_gain * 100 << "%, max " << t.max_gain * 100 << "%\n";
      return 0;
    }

    if (*analyze) {
      const auto metric = metric_from_name(an_metric);
      if (*an_rank) {
        const auto table = speedup_table(load_results(an_results), metric);
        const auto ranking = rank_permutations(table);
        emit(rank_speedups ? export_speedups(table) : export_ranking(ranking), g, an_out, out);
        maybe_plot_script(an_plot, rank_speedups ? "f4_7" : "f5_4", an_out);
        double worst_spread = 1.0;
        for (std::size_t c = 0; c < table.columns.size(); ++c) worst_spread = std::max(worst_spread, table.spread(c));
        err << table.columns.size() << " layer instances, " << table.perms.size() << " permutations; top "
            << ranking.front().lex << " (" << LoopPermTable::get().by_lex[ranking.front().lex].perm.to_string('-')
            << ") mean " << ranking.front().mean << " min " << ranking.front().min
            << "; largest worst/best ratio " << worst_spread << "\n";
        return 0;
      }
      if (*an_pairs) {
        const auto table = speedup_table(load_results(an_results), metric);
        BestOfKOptions bo;
        bo.top = pairs_top;
        bo.beam_width = pairs_beam;
        const auto combos = best_of_k(table, pairs_k, bo);
        emit(export_combinations(combos), g, an_out, out);
        maybe_plot_script(an_plot, "f5_3", an_out);
        if (!combos.empty()) err << "top mean " << combos.front().mean << " min " << combos.front().min << "\n";
        return 0;
      }
      if (*an_sample) {
        SamplingResult r;
        if (sample_g) {
          r.g = *sample_g;
          r.m = sample_size_for(r.g, sample_conf);
          if (r.m) r.achieved = 1.0 - std::pow(1.0 - r.g, static_cast<double>(*r.m));
        } else {
          if (an_results.empty()) throw UsageError("sample-size needs --results or --good-fraction");
          r = random_sampling_requirement(speedup_table(load_results(an_results), metric), sample_threshold,
                                          sample_conf);
        }
        std::ostringstream os;
        os << "good_count,universe,g,confidence,m,achieved\n"
           << r.good_count << ',' << r.universe << ',' << r.g << ',' << sample_conf << ','
           << (r.m ? std::to_string(*r.m) : std::string("none")) << ',' << r.achieved << '\n';
        emit(os.str(), g, "", out);
        if (!r.m) err << "no permutation reaches the threshold on some layer: no finite sample size\n";
        return 0;
      }
      if (*an_stab) {
        const auto rep = stability_export(load_results(an_results), stability_axis_from_name(stab_axis), metric);
        emit(export_stability(rep), g, an_out, out);
        maybe_plot_script(an_plot, "f5_1", an_out);
        const auto summary = export_stability_summary(rep);
        if (!stab_summary.empty()) emit(summary, g, stab_summary, out);
        err << summary;
        return 0;
      }
      if (*an_sig) {
        emit(export_signatures(load_results(an_results)), g, an_out, out);
        maybe_plot_script(an_plot, "f4_2", an_out);
        return 0;
      }
      if (*an_curves) {
        emit(export_sorted_curves(speedup_table(load_results(an_results), metric)), g, an_out, out);
        maybe_plot_script(an_plot, "f5_4", an_out);
        return 0;
      }
      if (*an_reuse) {
        const auto layer = parse_layer(layer_text);
        const auto opts = reuse_args.options(g, 1'000'000);
        const auto events = collect_trace(layer, reuse_perm.resolve(), opts);
        const auto map = reuse_map(events, reuse_bits, reuse_window);
        emit(export_reuse(map, reuse_stride), g, an_out, out);
        maybe_plot_script(an_plot, "f3_3", an_out);
        err << map.distinct_addresses << " addresses, " << map.distinct_blocks << " blocks; working set max "
            << map.max_working_set << " mean " << map.mean_working_set << " (window " << map.window << ")\n";
        return 0;
      }
      if (*an_ipc) {
        const auto layer = parse_layer(layer_text);
        const auto config = resolve_cache_config(ipc_config, g.seed);
        TraceGenerator gen(layer, ipc_perm.resolve(), ipc_args.options(g, 100'000'000));
        emit(export_ipc(windowed_ipc(gen, config, ipc_window)), g, an_out, out);
        maybe_plot_script(an_plot, "ipc", an_out);
        return 0;
      }
    }

    if (*validate) {
      const auto& table = LoopPermTable::get();
      std::vector<bool> ok(table.by_lex.size(), true);
      std::uint64_t layers = 0;
      std::array<std::uint32_t, kNumDims> e{};
      e.fill(1);
      while (true) {
        const LayerParams layer{e[0], e[1], e[2], e[3], e[4], e[5]};
        auto in = make_input_grid(layer);
        auto w = make_weight_grid(layer);
        fill_random(in, g.seed + layers * 2);
        fill_random(w, g.seed + layers * 2 + 1);
        const auto ref = oracle_convolve(layer, in, w);
        for (const auto& row : table.by_lex) {
          if (!ok[row.lex]) continue;
          if (permuted_convolve(layer, in, w, row.perm, true) != ref ||
              permuted_convolve(layer, in, w, row.perm, false) != ref) {
            ok[row.lex] = false;
            err << "mismatch: " << row.perm.to_string('-') << " on layer " << layer.to_string() << "\n";
          }
        }
        ++layers;
        std::size_t k = 0;
        while (k < e.size() && e[k] == max_extent) e[k++] = 1;
        if (k == e.size()) break;
        ++e[k];
      }
      const auto good = std::count(ok.begin(), ok.end(), true);
      out << good << "/" << ok.size() << " permutations match oracle\n";
      err << layers << " layers checked\n";
      return good == static_cast<std::ptrdiff_t>(ok.size()) ? 0 : 1;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const ShapeError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace loopnest
