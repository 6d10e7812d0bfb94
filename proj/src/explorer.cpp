#include "loopnest/explorer.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include <json.hpp>

#include "loopnest/config_file.hpp"
#include "loopnest/errors.hpp"
#include "loopnest/permindex.hpp"

namespace loopnest {

namespace {

namespace fs = std::filesystem;

constexpr std::uint64_t kDefaultLimit = 500'000'000;
constexpr std::uint64_t kMultiThreadLimit = 100'000'000;

std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Runs fn(i) for i in [0, n) on up to `workers` threads; rethrows the first failure.
template <typename Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn) {
  workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, workers), std::max<std::size_t>(n, 1)));
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mu;
  auto body = [&] {
    while (!failed.load(std::memory_order_relaxed)) {
      const auto i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  if (workers == 1) {
    body();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(body);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
}

struct Point {
  std::size_t layer;
  std::uint16_t lex;
  std::size_t config;
  std::uint32_t threads;
};

std::vector<Point> enumerate_points(const DesignSpace& space) {
  const auto perms = space.perms.resolve();
  std::vector<Point> pts;
  pts.reserve(space.total_runs());
  for (std::size_t l = 0; l < space.layers.size(); ++l)
    for (std::size_t c = 0; c < space.configs.size(); ++c)
      for (auto t : space.thread_counts)
        for (auto p : perms) pts.push_back({l, p, c, t});
  return pts;
}

TraceOptions point_options(const DesignSpace& space, std::uint32_t threads) {
  auto opts = space.trace;
  opts.threads = threads;
  opts.instr_limit = space.instr_limit;
  return opts;
}

SweepResult compute_point(const DesignSpace& space, const Point& p) {
  const auto& layer = space.layers[p.layer];
  const auto& config = space.configs[p.config];
  const auto& perm = LoopPermTable::get().by_lex[p.lex].perm;
  const auto stats = simulate_point(layer.params, perm, config, point_options(space, p.threads));
  return make_result(layer, perm, config, p.threads, stats);
}

void check_id(const std::string& id, const char* what) {
  if (id.empty() || id.find_first_of(",\n\r\"") != std::string::npos) {
    throw ConfigError(std::string(what) + " id '" + id + "' must be non-empty and free of commas/quotes");
  }
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, ',')) out.push_back(cur);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::uint64_t to_u64(const std::string& s) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size() || s.empty()) throw ConfigError("bad integer field '" + s + "' in result row");
  return v;
}

/// Rows of a result CSV or journal; `tolerate_tail` drops a truncated last line.
std::vector<SweepResult> read_rows(std::istream& in, bool tolerate_tail) {
  std::vector<SweepResult> rows;
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("layer_id,", 0) == 0) continue;
    lines.push_back(line);
  }
  for (std::size_t i = 0; i < lines.size(); ++i) {
    try {
      rows.push_back(parse_result_row(lines[i]));
    } catch (const ConfigError&) {
      if (tolerate_tail && i + 1 == lines.size()) break;
      throw;
    }
  }
  return rows;
}

void write_text_atomic(const std::string& path, const std::string& text) {
  const auto tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << text;
    out.flush();
    if (!out) throw std::runtime_error("cannot write '" + tmp + "'");
  }
  fs::rename(tmp, path);
}

std::string rows_to_csv(const std::vector<SweepResult>& rows) {
  std::string text = results_csv_header() + "\n";
  for (const auto& r : rows) text += format_result_row(r) + "\n";
  return text;
}

}  // namespace

// ---------------------------------------------------------------------------

PermSelection PermSelection::explicit_list(std::vector<std::uint16_t> lex) {
  PermSelection s;
  s.kind = Kind::Explicit;
  s.lex = std::move(lex);
  return s;
}

PermSelection PermSelection::sample(std::size_t n, std::uint64_t seed) {
  PermSelection s;
  s.kind = Kind::Sample;
  s.sample_size = n;
  s.seed = seed;
  return s;
}

std::vector<std::uint16_t> PermSelection::resolve() const {
  const auto total = static_cast<std::uint16_t>(factorial(kNumDims));
  std::vector<std::uint16_t> out;
  switch (kind) {
    case Kind::All:
      out.resize(total);
      std::iota(out.begin(), out.end(), std::uint16_t{0});
      return out;
    case Kind::Explicit:
      out = lex;
      for (auto v : out) {
        if (v >= total) throw ConfigError("permutation index " + std::to_string(v) + " out of range");
      }
      std::sort(out.begin(), out.end());
      out.erase(std::unique(out.begin(), out.end()), out.end());
      return out;
    case Kind::Sample: {
      if (sample_size == 0 || sample_size > total) {
        throw ConfigError("sample size must be in 1.." + std::to_string(total));
      }
      std::vector<std::uint16_t> all(total);
      std::iota(all.begin(), all.end(), std::uint16_t{0});
      XorShift64Star rng(seed);
      // Partial Fisher-Yates.
      for (std::size_t i = 0; i < sample_size; ++i) {
        const auto j = i + rng.below(total - i);
        std::swap(all[i], all[j]);
      }
      out.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(sample_size));
      std::sort(out.begin(), out.end());
      return out;
    }
  }
  return out;
}

void DesignSpace::validate() const {
  if (layers.empty()) throw ConfigError("design space has no layers");
  if (configs.empty()) throw ConfigError("design space has no cache configurations");
  if (thread_counts.empty()) throw ConfigError("design space has no thread counts");
  if (perms.resolve().empty()) throw ConfigError("design space has no permutations");
  std::set<std::string> ids;
  for (const auto& l : layers) {
    check_id(l.name, "layer");
    l.params.validate();
    if (!ids.insert(l.name).second) throw ConfigError("duplicate layer id '" + l.name + "'");
  }
  ids.clear();
  for (const auto& c : configs) {
    check_id(c.id, "config");
    c.validate();
    if (!ids.insert(c.id).second) throw ConfigError("duplicate config id '" + c.id + "'");
  }
  if (std::set<std::uint32_t>(thread_counts.begin(), thread_counts.end()).size() != thread_counts.size()) {
    throw ConfigError("duplicate thread counts");
  }
  for (auto t : thread_counts) {
    auto opts = point_options(*this, t);
    opts.validate();
  }
  const bool any_opt = std::any_of(configs.begin(), configs.end(), [](const CacheConfig& c) { return c.uses_opt(); });
  if (!any_opt) return;
  for (const auto& l : layers) {
    std::uint64_t events = 0;
    if (instr_limit) {
      events = *instr_limit;
    } else {
      auto opts = trace;
      opts.partial_sums = false;
      opts.threads = 1;
      opts.instr_limit.reset();
      events = ref_count(l.params, Permutation(), opts).instructions();
    }
    if (events > kMaxBufferedRefs) {
      throw ConfigError("OPT replacement buffers the whole trace; layer '" + l.name + "' needs up to " +
                        std::to_string(events) + " events, above the bound of " +
                        std::to_string(kMaxBufferedRefs) + ". Set a smaller instruction limit.");
    }
  }
}

std::size_t DesignSpace::total_runs() const {
  return layers.size() * perms.resolve().size() * configs.size() * thread_counts.size();
}

std::string DesignSpace::describe() const {
  nlohmann::json j;
  auto& jl = j["layers"] = nlohmann::json::array();
  for (const auto& l : layers) jl.push_back({{"id", l.name}, {"params", l.params.to_string()}});
  j["perms"] = perms.resolve();
  auto& jc = j["configs"] = nlohmann::json::array();
  for (const auto& c : configs) jc.push_back({{"id", c.id}, {"text", format_cache_config(c)}});
  j["threads"] = thread_counts;
  j["instr_limit"] = instr_limit ? nlohmann::json(*instr_limit) : nlohmann::json(nullptr);
  j["partial_sums"] = trace.partial_sums;
  j["body_ticks"] = trace.body_ticks;
  if (trace.sparsity) {
    j["sparsity"] = {{"weight_density", trace.sparsity->weight_density},
                     {"activation_density", trace.sparsity->activation_density},
                     {"seed", trace.sparsity->seed}};
  } else {
    j["sparsity"] = nullptr;
  }
  return j.dump();
}

std::string DesignSpace::hash() const { return fnv1a_hex(describe()); }

// ---------------------------------------------------------------------------

bool key_less(const SweepResult& a, const SweepResult& b) {
  return std::tie(a.layer_id, a.config_id, a.threads, a.perm_lex) <
         std::tie(b.layer_id, b.config_id, b.threads, b.perm_lex);
}

bool same_key(const SweepResult& a, const SweepResult& b) {
  return a.layer_id == b.layer_id && a.config_id == b.config_id && a.threads == b.threads &&
         a.perm_lex == b.perm_lex;
}

SweepResult make_result(const NamedLayer& layer, const Permutation& perm, const CacheConfig& config,
                        std::uint32_t threads, const CacheStats& stats) {
  SweepResult r;
  r.layer_id = layer.name;
  r.layer = layer.params;
  r.perm_lex = static_cast<std::uint16_t>(index_of(perm, IndexScheme::Lex).value);
  r.perm_ham = static_cast<std::uint16_t>(index_of(perm, IndexScheme::Hamiltonian).value);
  r.config_id = config.id;
  r.threads = threads;
  r.cycles = stats.makespan();
  r.total_cycles = stats.cycles;
  r.l1_misses = stats.levels.empty() ? 0 : stats.levels[0].misses;
  r.l2_misses = stats.levels.size() >= 2 ? stats.levels[1].misses : stats.memory_accesses;
  r.refs = stats.refs;
  r.ticks = stats.nonmem_ticks;
  return r;
}

CacheStats simulate_point(const LayerParams& layer, const Permutation& perm,
                          const CacheConfig& config, const TraceOptions& opts) {
  TraceGenerator gen(layer, perm, opts);
  if (!config.uses_opt()) return simulate(gen, config);
  std::vector<Event> buffer;
  for (auto chunk = gen.next_chunk(); !chunk.empty(); chunk = gen.next_chunk()) {
    buffer.insert(buffer.end(), chunk.begin(), chunk.end());
    if (buffer.size() > kMaxBufferedRefs) {
      throw ConfigError("OPT trace exceeds the buffering bound of " + std::to_string(kMaxBufferedRefs) +
                        " events; set an instruction limit");
    }
  }
  return simulate_opt(buffer, config);
}

std::string results_csv_header() {
  return "layer_id,out_ch,in_ch,img_w,img_h,ker_w,ker_h,perm_lex,perm_ham,order,config_id,threads,"
         "cycles,total_cycles,l1_misses,l2_misses,refs,ticks";
}

std::string format_result_row(const SweepResult& r) {
  std::ostringstream os;
  const auto& p = r.layer;
  os << r.layer_id << ',' << p.out_channels << ',' << p.in_channels << ',' << p.img_w << ','
     << p.img_h << ',' << p.ker_w << ',' << p.ker_h << ',' << r.perm_lex << ',' << r.perm_ham << ','
     << LoopPermTable::get().by_lex.at(r.perm_lex).perm.to_string('-') << ',' << r.config_id << ','
     << r.threads << ',' << r.cycles << ',' << r.total_cycles << ',' << r.l1_misses << ','
     << r.l2_misses << ',' << r.refs << ',' << r.ticks;
  return os.str();
}

SweepResult parse_result_row(const std::string& line) {
  auto f = split_csv(line);
  if (f.size() != 18) {
    throw ConfigError("result row has " + std::to_string(f.size()) + " fields, expected 18");
  }
  SweepResult r;
  r.layer_id = f[0];
  const auto u32 = [&](std::size_t i) { return static_cast<std::uint32_t>(to_u64(f[i])); };
  r.layer = {u32(1), u32(2), u32(3), u32(4), u32(5), u32(6)};
  r.perm_lex = static_cast<std::uint16_t>(to_u64(f[7]));
  r.perm_ham = static_cast<std::uint16_t>(to_u64(f[8]));
  if (r.perm_lex >= 720 || r.perm_ham >= 720) throw ConfigError("permutation index out of range in result row");
  r.config_id = f[10];
  r.threads = u32(11);
  r.cycles = to_u64(f[12]);
  r.total_cycles = to_u64(f[13]);
  r.l1_misses = to_u64(f[14]);
  r.l2_misses = to_u64(f[15]);
  r.refs = to_u64(f[16]);
  r.ticks = to_u64(f[17]);
  return r;
}

void write_results_csv(const std::string& path, const std::vector<SweepResult>& rows) {
  auto sorted = rows;
  std::stable_sort(sorted.begin(), sorted.end(), key_less);
  write_text_atomic(path, rows_to_csv(sorted));
}

std::vector<SweepResult> read_results_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open result file '" + path + "'");
  return read_rows(in, false);
}

unsigned resolve_workers(std::optional<unsigned> requested) {
  if (requested && *requested > 0) return *requested;
  if (const char* env = std::getenv("LOOPNEST_WORKERS")) {
    const auto v = std::strtoul(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<SweepResult> run_sweep(const DesignSpace& space, const SweepOptions& opts) {
  space.validate();
  const auto points = enumerate_points(space);
  std::vector<SweepResult> rows(points.size());
  std::atomic<std::size_t> done{0};
  std::mutex progress_mu;
  parallel_for(points.size(), resolve_workers(opts.workers), [&](std::size_t i) {
    rows[i] = compute_point(space, points[i]);
    const auto d = ++done;
    if (opts.progress) {
      std::lock_guard lock(progress_mu);
      opts.progress(d, points.size());
    }
  });
  std::sort(rows.begin(), rows.end(), key_less);
  return rows;
}

SweepSummary run_sweep_to_file(const DesignSpace& space, const std::string& path,
                               const SweepOptions& opts) {
  space.validate();
  const auto hash = space.hash();
  const auto sidecar = path + ".json";
  const auto journal = path + ".partial";

  std::vector<SweepResult> have;
  if (fs::exists(path)) {
    std::ifstream sj(sidecar);
    if (!sj) throw ConfigError("'" + path + "' exists without its sidecar; refusing to resume");
    const auto meta = nlohmann::json::parse(sj);
    if (meta.value("hash", "") != hash) {
      throw ConfigError("'" + path + "' was produced by a different design space (hash mismatch)");
    }
    have = read_results_csv(path);
  }
  const bool journal_exists = fs::exists(journal);
  if (journal_exists) {
    std::ifstream jin(journal);
    std::string first;
    std::getline(jin, first);
    if (first != "# space " + hash) {
      throw ConfigError("journal '" + journal + "' belongs to a different design space");
    }
    auto rows = read_rows(jin, true);
    have.insert(have.end(), rows.begin(), rows.end());
  }

  const auto points = enumerate_points(space);
  std::sort(have.begin(), have.end(), key_less);
  have.erase(std::unique(have.begin(), have.end(), same_key), have.end());
  const auto known = [&](const Point& p) {
    SweepResult probe;
    probe.layer_id = space.layers[p.layer].name;
    probe.config_id = space.configs[p.config].id;
    probe.threads = p.threads;
    probe.perm_lex = p.lex;
    return std::binary_search(have.begin(), have.end(), probe, key_less);
  };
  std::vector<Point> todo;
  for (const auto& p : points) {
    if (!known(p)) todo.push_back(p);
  }

  SweepSummary summary;
  summary.total = points.size();
  summary.reused = points.size() - todo.size();
  summary.computed = todo.size();

  std::vector<SweepResult> fresh(todo.size());
  if (!todo.empty()) {
    std::ofstream jout(journal, std::ios::app);
    if (!journal_exists) jout << "# space " << hash << "\n";
    jout.flush();
    if (!jout) throw std::runtime_error("cannot write journal '" + journal + "'");
    std::mutex sink_mu;
    std::size_t done = 0;
    parallel_for(todo.size(), resolve_workers(opts.workers), [&](std::size_t i) {
      fresh[i] = compute_point(space, todo[i]);
      std::lock_guard lock(sink_mu);
      jout << format_result_row(fresh[i]) << "\n";
      jout.flush();
      if (!jout) throw std::runtime_error("write to '" + journal + "' failed; partial results kept there");
      ++done;
      if (opts.progress) opts.progress(summary.reused + done, summary.total);
    });
  }

  have.insert(have.end(), fresh.begin(), fresh.end());
  std::sort(have.begin(), have.end(), key_less);
  write_text_atomic(path, rows_to_csv(have));
  nlohmann::json meta;
  meta["hash"] = hash;
  meta["space"] = nlohmann::json::parse(space.describe());
  meta["rows"] = have.size();
  meta["columns"] = results_csv_header();
  write_text_atomic(sidecar, meta.dump(2) + "\n");
  std::error_code ec;
  fs::remove(journal, ec);
  return summary;
}

// ---------------------------------------------------------------------------

std::vector<NamedLayer> synthetic_layers(const std::vector<std::uint32_t>& channels,
                                         const std::vector<std::uint32_t>& images,
                                         const std::vector<std::uint32_t>& kernels) {
  std::vector<NamedLayer> out;
  char buf[64];
  for (auto c : channels)
    for (auto i : images)
      for (auto k : kernels) {
        std::snprintf(buf, sizeof buf, "c%03u-i%03u-k%02u", c, i, k);
        out.push_back({buf, LayerParams{c, c, i, i, k, k}});
      }
  return out;
}

std::vector<NamedLayer> synthetic_216_layers() {
  const std::vector<std::uint32_t> grid = {10, 50, 90, 130, 170, 210};
  return synthetic_layers(grid, grid, {1, 3, 5, 7, 9, 11});
}

std::vector<NamedLayer> synthetic_36_layers() {
  const std::vector<std::uint32_t> grid = {10, 90, 170};
  return synthetic_layers(grid, grid, {1, 3, 9, 11});
}

DesignSpace preset_space(const std::string& name) {
  DesignSpace s;
  s.configs = {CacheConfig::loki()};
  if (name == "squeezenet") {
    s.layers = squeezenet_layers();
    s.instr_limit = kDefaultLimit;
  } else if (name == "synthetic-216") {
    s.layers = synthetic_216_layers();
    s.instr_limit = kDefaultLimit;
  } else if (name == "synthetic-36") {
    s.layers = synthetic_36_layers();
    s.thread_counts = {8};
    s.instr_limit = kMultiThreadLimit;
  } else {
    throw UsageError("unknown preset '" + name + "' (squeezenet, synthetic-216, synthetic-36)");
  }
  return s;
}

// ---------------------------------------------------------------------------

std::vector<TileResult> tile_sweep(const LayerParams& layer, const Permutation& perm,
                                   const TileSweepOptions& opts) {
  if (opts.total_tiles < 2) throw ConfigError("tile sweep needs at least 2 tiles");
  if (opts.base.levels.size() < 2) throw ConfigError("tile sweep needs a hierarchy with an L2");
  if (opts.cores_per_tile == 0 || opts.l2_kb_per_tile == 0) throw ConfigError("tile sizes must be positive");
  layer.validate();
  std::vector<TileResult> out(opts.total_tiles - 1);
  parallel_for(out.size(), resolve_workers(opts.workers), [&](std::size_t i) {
    TileResult r;
    r.tiles.total_tiles = opts.total_tiles;
    r.tiles.compute_tiles = static_cast<std::uint32_t>(i + 1);
    r.tiles.l2_tiles = opts.total_tiles - r.tiles.compute_tiles;
    r.threads = opts.cores_per_tile * r.tiles.compute_tiles;
    r.l2_bytes = std::uint64_t{r.tiles.l2_tiles} * opts.l2_kb_per_tile * 1024;
    auto config = opts.base;
    config.levels[1].size_bytes = r.l2_bytes;
    config.id = "tiles-c" + std::to_string(r.tiles.compute_tiles) + "-l" + std::to_string(r.tiles.l2_tiles);
    config.validate();
    auto trace = opts.trace;
    trace.threads = r.threads;
    r.stats = simulate_point(layer, perm, config, trace);
    out[i] = std::move(r);
  });
  return out;
}

TileTradeoff tile_tradeoff(const std::vector<std::vector<TileResult>>& per_layer) {
  if (per_layer.empty()) throw ConfigError("tile trade-off needs at least one layer");
  const auto splits = per_layer.front().size();
  if (splits == 0) throw ConfigError("tile trade-off needs at least one split");
  for (const auto& l : per_layer) {
    if (l.size() != splits) throw ConfigError("tile results cover different splits per layer");
  }
  // Normalised performance of split s on a layer: best cycles / cycles(s).
  std::vector<double> mean_perf(splits, 0.0);
  std::vector<std::size_t> best_idx(per_layer.size());
  for (std::size_t li = 0; li < per_layer.size(); ++li) {
    const auto& l = per_layer[li];
    std::size_t b = 0;
    for (std::size_t s = 1; s < splits; ++s) {
      if (l[s].stats.makespan() < l[b].stats.makespan()) b = s;
    }
    best_idx[li] = b;
    const auto best = static_cast<double>(l[b].stats.makespan());
    for (std::size_t s = 0; s < splits; ++s) {
      mean_perf[s] += best / static_cast<double>(std::max<std::uint64_t>(1, l[s].stats.makespan()));
    }
  }
  const auto overall = static_cast<std::size_t>(
      std::max_element(mean_perf.begin(), mean_perf.end()) - mean_perf.begin());
  TileTradeoff t;
  t.best_overall = per_layer.front()[overall].tiles.compute_tiles;
  for (std::size_t li = 0; li < per_layer.size(); ++li) {
    const auto& l = per_layer[li];
    TileTradeoff::PerLayer pl;
    pl.best_split = l[best_idx[li]].tiles.compute_tiles;
    pl.gain = static_cast<double>(l[overall].stats.makespan()) /
                  static_cast<double>(std::max<std::uint64_t>(1, l[best_idx[li]].stats.makespan())) - 1.0;
    t.mean_gain += pl.gain;
    t.max_gain = std::max(t.max_gain, pl.gain);
    t.layers.push_back(pl);
  }
  t.mean_gain /= static_cast<double>(per_layer.size());
  return t;
}

}  // namespace loopnest
