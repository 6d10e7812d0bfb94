#include "loopnest/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <tuple>
#include <unordered_map>

#include "loopnest/errors.hpp"
#include "loopnest/permindex.hpp"

namespace loopnest {

namespace {

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::uint16_t ham_of(std::uint16_t lex) { return LoopPermTable::get().by_lex.at(lex).hamiltonian; }

std::string order_of(std::uint16_t lex) { return LoopPermTable::get().by_lex.at(lex).perm.to_string('-'); }

bool better(double mean_a, double min_a, double mean_b, double min_b) {
  if (mean_a != mean_b) return mean_a > mean_b;
  return min_a > min_b;
}

struct Scored {
  std::vector<std::uint16_t> members;  // positions into table.perms, ascending
  double mean;
  double min;
};

bool scored_before(const Scored& a, const Scored& b) {
  if (a.mean != b.mean || a.min != b.min) return better(a.mean, a.min, b.mean, b.min);
  return a.members < b.members;
}

Scored score(const SpeedupTable& t, std::vector<std::uint16_t> members) {
  Scored s{std::move(members), 0.0, 1.0};
  const auto cols = t.columns.size();
  for (std::size_t c = 0; c < cols; ++c) {
    double best = 0.0;
    for (auto m : s.members) best = std::max(best, t.speedup[m][c]);
    s.mean += best;
    s.min = std::min(s.min, best);
  }
  s.mean /= static_cast<double>(cols);
  return s;
}

std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> rank(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[idx[k]] = r;
    i = j + 1;
  }
  return rank;
}

}  // namespace

std::string metric_name(Metric m) { return m == Metric::Cycles ? "cycles" : "l2_misses"; }

Metric metric_from_name(const std::string& name) {
  if (name == "cycles") return Metric::Cycles;
  if (name == "l2_misses" || name == "l2-misses") return Metric::L2Misses;
  throw UsageError("unknown metric '" + name + "' (cycles, l2_misses)");
}

std::uint64_t metric_value(const SweepResult& r, Metric m) {
  return m == Metric::Cycles ? r.cycles : r.l2_misses;
}

std::string Column::label() const { return layer_id + "/" + config_id + "/t" + std::to_string(threads); }

std::size_t SpeedupTable::position_of(std::uint16_t lex) const {
  const auto it = std::lower_bound(perms.begin(), perms.end(), lex);
  if (it == perms.end() || *it != lex) throw DomainError("permutation " + std::to_string(lex) + " not in table");
  return static_cast<std::size_t>(it - perms.begin());
}

double SpeedupTable::spread(std::size_t column) const {
  return best_metric.at(column) == 0 ? 1.0
                                     : static_cast<double>(worst_metric[column]) / static_cast<double>(best_metric[column]);
}

SpeedupTable speedup_table(const std::vector<SweepResult>& rows, Metric metric,
                           std::optional<std::vector<std::uint16_t>> perms) {
  if (rows.empty()) throw CoverageError("no result rows");
  using Key = std::tuple<std::string, std::string, std::uint32_t>;
  std::map<Key, std::size_t> col_index;
  std::set<std::uint16_t> seen;
  for (const auto& r : rows) {
    col_index.emplace(Key{r.layer_id, r.config_id, r.threads}, 0);
    seen.insert(r.perm_lex);
  }
  SpeedupTable t;
  t.metric = metric;
  for (auto& [key, idx] : col_index) {
    idx = t.columns.size();
    t.columns.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key)});
  }
  if (perms) {
    t.perms = *perms;
    std::sort(t.perms.begin(), t.perms.end());
    t.perms.erase(std::unique(t.perms.begin(), t.perms.end()), t.perms.end());
  } else {
    t.perms.assign(seen.begin(), seen.end());
  }
  const auto P = t.perms.size();
  const auto C = t.columns.size();
  std::vector<std::vector<std::optional<std::uint64_t>>> value(P, std::vector<std::optional<std::uint64_t>>(C));
  for (const auto& r : rows) {
    const auto it = std::lower_bound(t.perms.begin(), t.perms.end(), r.perm_lex);
    if (it == t.perms.end() || *it != r.perm_lex) continue;
    const auto p = static_cast<std::size_t>(it - t.perms.begin());
    const auto c = col_index.at(Key{r.layer_id, r.config_id, r.threads});
    if (value[p][c]) {
      throw CoverageError("duplicate result for " + t.columns[c].label() + " perm " + std::to_string(r.perm_lex));
    }
    value[p][c] = metric_value(r, metric);
  }
  std::vector<std::string> missing;
  std::size_t missing_count = 0;
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t p = 0; p < P; ++p) {
      if (value[p][c]) continue;
      ++missing_count;
      if (missing.size() < 8) missing.push_back(t.columns[c].label() + " perm " + std::to_string(t.perms[p]));
    }
  }
  if (missing_count > 0) {
    std::string msg = std::to_string(missing_count) + " missing results, e.g.";
    for (const auto& m : missing) msg += " [" + m + "]";
    throw CoverageError(msg);
  }

  t.speedup.assign(P, std::vector<double>(C, 0.0));
  t.best_perm.resize(C);
  t.best_metric.resize(C);
  t.worst_metric.resize(C);
  for (std::size_t c = 0; c < C; ++c) {
    std::size_t best = 0, worst = 0;
    for (std::size_t p = 1; p < P; ++p) {
      if (*value[p][c] < *value[best][c]) best = p;
      if (*value[p][c] > *value[worst][c]) worst = p;
    }
    t.best_perm[c] = t.perms[best];
    t.best_metric[c] = *value[best][c];
    t.worst_metric[c] = *value[worst][c];
    for (std::size_t p = 0; p < P; ++p) {
      const auto v = *value[p][c];
      t.speedup[p][c] = v == 0 ? 1.0 : static_cast<double>(t.best_metric[c]) / static_cast<double>(v);
    }
  }
  t.mean.assign(P, 0.0);
  t.min.assign(P, 1.0);
  for (std::size_t p = 0; p < P; ++p) {
    for (std::size_t c = 0; c < C; ++c) {
      t.mean[p] += t.speedup[p][c];
      t.min[p] = std::min(t.min[p], t.speedup[p][c]);
    }
    t.mean[p] /= static_cast<double>(C);
  }
  return t;
}

std::vector<RankEntry> rank_permutations(const SpeedupTable& table) {
  std::vector<RankEntry> out;
  out.reserve(table.perms.size());
  for (std::size_t p = 0; p < table.perms.size(); ++p) {
    out.push_back({table.perms[p], ham_of(table.perms[p]), table.mean[p], table.min[p]});
  }
  std::sort(out.begin(), out.end(), [](const RankEntry& a, const RankEntry& b) {
    if (a.mean != b.mean || a.min != b.min) return better(a.mean, a.min, b.mean, b.min);
    return a.lex < b.lex;
  });
  return out;
}

std::vector<Combination> best_of_k(const SpeedupTable& table, std::size_t k, const BestOfKOptions& opts) {
  const auto P = table.perms.size();
  if (k < 1) throw DomainError("k must be >= 1");
  if (k > P) throw DomainError("k exceeds the number of permutations");
  std::vector<Scored> scored;
  if (k == 1) {
    for (std::size_t p = 0; p < P; ++p) scored.push_back(score(table, {static_cast<std::uint16_t>(p)}));
    std::sort(scored.begin(), scored.end(), scored_before);
  } else {
    scored.reserve(P * (P - 1) / 2);
    for (std::size_t a = 0; a < P; ++a) {
      for (std::size_t b = a + 1; b < P; ++b) {
        scored.push_back(score(table, {static_cast<std::uint16_t>(a), static_cast<std::uint16_t>(b)}));
      }
    }
    std::sort(scored.begin(), scored.end(), scored_before);
    for (std::size_t size = 3; size <= k; ++size) {
      if (scored.size() > opts.beam_width) scored.resize(std::max<std::size_t>(1, opts.beam_width));
      std::set<std::vector<std::uint16_t>> candidates;
      for (const auto& s : scored) {
        for (std::size_t p = 0; p < P; ++p) {
          const auto m = static_cast<std::uint16_t>(p);
          if (std::binary_search(s.members.begin(), s.members.end(), m)) continue;
          auto members = s.members;
          members.insert(std::upper_bound(members.begin(), members.end(), m), m);
          candidates.insert(std::move(members));
        }
      }
      scored.clear();
      for (const auto& c : candidates) scored.push_back(score(table, c));
      std::sort(scored.begin(), scored.end(), scored_before);
    }
  }
  if (opts.top > 0 && scored.size() > opts.top) scored.resize(opts.top);
  std::vector<Combination> out;
  out.reserve(scored.size());
  for (const auto& s : scored) {
    Combination c;
    for (auto m : s.members) c.members.push_back(table.perms[m]);
    c.mean = s.mean;
    c.min = s.min;
    out.push_back(std::move(c));
  }
  return out;
}

std::optional<std::uint64_t> sample_size_for(double g, double confidence) {
  if (!(g >= 0.0 && g <= 1.0)) throw DomainError("good fraction must be in [0, 1]");
  if (!(confidence > 0.0 && confidence < 1.0)) throw DomainError("confidence must be in (0, 1)");
  if (g == 0.0) return std::nullopt;
  if (g == 1.0) return 1;
  const auto achieved = [&](std::uint64_t m) { return 1.0 - std::pow(1.0 - g, static_cast<double>(m)); };
  auto m = static_cast<std::uint64_t>(std::max(1.0, std::ceil(std::log1p(-confidence) / std::log1p(-g))));
  while (m > 1 && achieved(m - 1) >= confidence) --m;
  while (achieved(m) < confidence) ++m;
  return m;
}

SamplingResult random_sampling_requirement(const SpeedupTable& table, double good_threshold,
                                           double confidence) {
  if (!(good_threshold > 0.0 && good_threshold <= 1.0)) throw DomainError("good threshold must be in (0, 1]");
  SamplingResult r;
  r.universe = table.perms.size();
  r.good_count = r.universe;
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    std::size_t good = 0;
    for (std::size_t p = 0; p < table.perms.size(); ++p) {
      if (table.speedup[p][c] >= good_threshold) ++good;
    }
    if (good < r.good_count) {
      r.good_count = good;
      r.worst_column = c;
    }
  }
  r.g = static_cast<double>(r.good_count) / static_cast<double>(r.universe);
  r.m = sample_size_for(r.g, confidence);
  if (r.m) r.achieved = 1.0 - std::pow(1.0 - r.g, static_cast<double>(*r.m));
  return r;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty()) throw DomainError("spearman needs two equal-length, non-empty series");
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return (saa == 0.0 && sbb == 0.0) ? 1.0 : 0.0;
  return sab / std::sqrt(saa * sbb);
}

std::vector<std::uint16_t> degraded_group(const SpeedupTable& table) {
  const auto P = table.perms.size();
  if (P < 2) return {};
  std::vector<std::size_t> idx(P);
  for (std::size_t i = 0; i < P; ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return table.mean[a] < table.mean[b]; });
  double gap = 0.0;
  std::size_t cut = 0;  // degraded = idx[0..cut]
  for (std::size_t i = 0; i + 1 < P; ++i) {
    const double d = table.mean[idx[i + 1]] - table.mean[idx[i]];
    if (d > gap) {
      gap = d;
      cut = i + 1;
    }
  }
  std::vector<std::uint16_t> out;
  for (std::size_t i = 0; i < cut; ++i) out.push_back(table.perms[idx[i]]);
  std::sort(out.begin(), out.end());
  return out;
}

StabilityAxis stability_axis_from_name(const std::string& name) {
  if (name == "config" || name == "cache_config" || name == "cache") return StabilityAxis::Config;
  if (name == "threads") return StabilityAxis::Threads;
  throw UsageError("unknown stability axis '" + name + "' (config, threads)");
}

StabilityReport stability_export(const std::vector<SweepResult>& rows, StabilityAxis axis, Metric metric) {
  if (rows.empty()) throw CoverageError("no result rows");
  // Threads sort numerically, configs by id.
  std::map<std::pair<std::uint32_t, std::string>, std::vector<SweepResult>> grouped;
  std::set<std::uint16_t> all_perms;
  for (const auto& r : rows) {
    const auto key = axis == StabilityAxis::Threads ? std::make_pair(r.threads, std::string())
                                                    : std::make_pair(0u, r.config_id);
    grouped[key].push_back(r);
    all_perms.insert(r.perm_lex);
  }
  if (grouped.size() < 2) throw CoverageError("stability export needs at least two groups on the axis");
  const std::vector<std::uint16_t> universe(all_perms.begin(), all_perms.end());

  StabilityReport rep;
  rep.perms = universe;
  for (const auto& [key, group_rows] : grouped) {
    rep.groups.push_back(axis == StabilityAxis::Threads ? std::to_string(key.first) : key.second);
    const auto t = speedup_table(group_rows, metric, universe);
    rep.mean.push_back(t.mean);
    rep.degraded.push_back(degraded_group(t));
  }
  for (std::size_t g = 0; g + 1 < rep.groups.size(); ++g) {
    rep.adjacent_spearman.push_back(spearman(rep.mean[g], rep.mean[g + 1]));
  }
  const auto P = universe.size();
  std::vector<std::size_t> order(P);
  for (std::size_t i = 0; i < P; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return rep.mean[0][a] > rep.mean[0][b]; });
  const auto decile = std::max<std::size_t>(1, (P + 9) / 10);
  for (std::size_t g = 0; g < rep.groups.size(); ++g) {
    double drop = 0.0;
    for (std::size_t i = 0; i < decile; ++i) drop = std::max(drop, rep.mean[0][order[i]] - rep.mean[g][order[i]]);
    rep.top_decile_drop.push_back(drop);
  }
  return rep;
}

ReuseMap reuse_map(std::span<const Event> trace, unsigned block_offset_bits, std::uint64_t window) {
  if (window == 0) throw DomainError("working-set window must be positive");
  ReuseMap m;
  m.window = window;
  std::unordered_map<std::uint64_t, std::uint32_t> addr_rank, block_rank;
  for (const auto& e : trace) {
    if (!e.is_ref()) continue;
    const auto a = addr_rank.try_emplace(e.address, static_cast<std::uint32_t>(addr_rank.size())).first->second;
    const auto b = block_rank.try_emplace(e.address >> block_offset_bits,
                                          static_cast<std::uint32_t>(block_rank.size())).first->second;
    m.address_rank.push_back(a);
    m.block_rank.push_back(b);
  }
  m.distinct_addresses = addr_rank.size();
  m.distinct_blocks = block_rank.size();

  // Block ranks are dense, so a flat counter array tracks the window contents.
  const auto n = m.block_rank.size();
  if (n == 0) return m;
  if (n <= window) {
    m.max_working_set = m.distinct_blocks;
    m.mean_working_set = static_cast<double>(m.distinct_blocks);
    return m;
  }
  std::vector<std::uint32_t> count(m.distinct_blocks, 0);
  std::uint64_t distinct = 0, positions = 0;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (count[m.block_rank[i]]++ == 0) ++distinct;
    if (i >= window && --count[m.block_rank[i - window]] == 0) --distinct;
    if (i + 1 >= window) {
      m.max_working_set = std::max(m.max_working_set, distinct);
      sum += static_cast<double>(distinct);
      ++positions;
    }
  }
  m.mean_working_set = sum / static_cast<double>(positions);
  return m;
}

// ---------------------------------------------------------------------------

std::string export_signatures(const std::vector<SweepResult>& rows) {
  auto sorted = rows;
  std::sort(sorted.begin(), sorted.end(), [](const SweepResult& a, const SweepResult& b) {
    return std::tie(a.layer_id, a.config_id, a.threads, a.perm_ham) <
           std::tie(b.layer_id, b.config_id, b.threads, b.perm_ham);
  });
  std::ostringstream os;
  os << "column,ham,lex,order,cycles,l2_misses\n";
  for (const auto& r : sorted) {
    os << Column{r.layer_id, r.config_id, r.threads}.label() << ',' << r.perm_ham << ',' << r.perm_lex << ','
       << order_of(r.perm_lex) << ',' << r.cycles << ',' << r.l2_misses << '\n';
  }
  return os.str();
}

std::string export_speedups(const SpeedupTable& table) {
  std::ostringstream os;
  os << "column,lex,ham,speedup\n";
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    for (std::size_t p = 0; p < table.perms.size(); ++p) {
      os << table.columns[c].label() << ',' << table.perms[p] << ',' << ham_of(table.perms[p]) << ','
         << fixed(table.speedup[p][c]) << '\n';
    }
  }
  return os.str();
}

std::string export_ranking(const std::vector<RankEntry>& ranking) {
  std::ostringstream os;
  os << "rank,lex,ham,order,mean_speedup,min_speedup\n";
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    const auto& e = ranking[i];
    os << i + 1 << ',' << e.lex << ',' << e.ham << ',' << order_of(e.lex) << ',' << fixed(e.mean) << ','
       << fixed(e.min) << '\n';
  }
  return os.str();
}

std::string export_stability(const StabilityReport& report) {
  std::vector<std::size_t> order(report.perms.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](auto a, auto b) { return ham_of(report.perms[a]) < ham_of(report.perms[b]); });
  std::ostringstream os;
  os << "ham,lex,order,color_key";
  for (const auto& g : report.groups) os << ",mean_" << g;
  os << '\n';
  for (auto p : order) {
    const auto lex = report.perms[p];
    os << ham_of(lex) << ',' << lex << ',' << order_of(lex) << ','
       << dim_name(LoopPermTable::get().by_lex[lex].perm.outermost());
    for (std::size_t g = 0; g < report.groups.size(); ++g) os << ',' << fixed(report.mean[g][p]);
    os << '\n';
  }
  return os.str();
}

std::string export_stability_summary(const StabilityReport& report) {
  std::ostringstream os;
  os << "group_a,group_b,spearman,top_decile_drop,degraded_b\n";
  for (std::size_t g = 0; g + 1 < report.groups.size(); ++g) {
    os << report.groups[g] << ',' << report.groups[g + 1] << ',' << fixed(report.adjacent_spearman[g]) << ','
       << fixed(report.top_decile_drop[g + 1]) << ',' << report.degraded[g + 1].size() << '\n';
  }
  return os.str();
}

std::string export_combinations(const std::vector<Combination>& combos) {
  std::ostringstream os;
  os << "rank,members,mean_speedup,min_speedup\n";
  for (std::size_t i = 0; i < combos.size(); ++i) {
    os << i + 1 << ',';
    for (std::size_t m = 0; m < combos[i].members.size(); ++m) os << (m ? "+" : "") << combos[i].members[m];
    os << ',' << fixed(combos[i].mean) << ',' << fixed(combos[i].min) << '\n';
  }
  return os.str();
}

std::string export_sorted_curves(const SpeedupTable& table) {
  const auto P = table.perms.size();
  const auto C = table.columns.size();
  std::vector<std::vector<double>> curves(C, std::vector<double>(P));
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t p = 0; p < P; ++p) curves[c][p] = table.speedup[p][c];
    std::sort(curves[c].begin(), curves[c].end(), std::greater<>());
  }
  std::ostringstream os;
  os << "rank";
  for (const auto& col : table.columns) os << ',' << col.label();
  os << '\n';
  for (std::size_t p = 0; p < P; ++p) {
    os << p + 1;
    for (std::size_t c = 0; c < C; ++c) os << ',' << fixed(curves[c][p]);
    os << '\n';
  }
  return os.str();
}

std::string export_reuse(const ReuseMap& map, std::size_t stride) {
  if (stride == 0) stride = 1;
  std::ostringstream os;
  os << "seq,address_rank,block_rank\n";
  for (std::size_t i = 0; i < map.address_rank.size(); i += stride) {
    os << i << ',' << map.address_rank[i] << ',' << map.block_rank[i] << '\n';
  }
  return os.str();
}

std::string export_ipc(const std::vector<IpcPoint>& series) {
  std::ostringstream os;
  os << "window_end,recent_ipc\n";
  for (const auto& p : series) os << p.window_end << ',' << fixed(p.recent_ipc) << '\n';
  return os.str();
}

std::string plot_script(const std::string& family, const std::string& csv_path) {
  std::string body;
  if (family == "f4_2") {
    body =
        "for col, g in df.groupby('column'):\n"
        "    plt.plot(g['ham'], g['cycles'], '.', markersize=2, label=col)\n"
        "plt.xlabel('permutation (hamiltonian index)'); plt.ylabel('cycles')\n";
  } else if (family == "f4_7") {
    body =
        "for col, g in df.groupby('column'):\n"
        "    plt.plot(g['ham'], g['speedup'], '.', markersize=1)\n"
        "plt.xlabel('permutation (hamiltonian index)'); plt.ylabel('speedup vs layer optimum')\n";
  } else if (family == "f5_1") {
    body =
        "groups = [c for c in df.columns if c.startswith('mean_')]\n"
        "keys = sorted(df['color_key'].unique())\n"
        "cmap = plt.get_cmap('tab10')\n"
        "for _, r in df.iterrows():\n"
        "    plt.plot(range(len(groups)), [r[g] for g in groups], color=cmap(keys.index(r['color_key'])),\n"
        "             alpha=0.3, linewidth=0.6)\n"
        "plt.xticks(range(len(groups)), groups); plt.ylabel('mean speedup')\n";
  } else if (family == "f5_3") {
    body =
        "plt.plot(df['rank'], df['mean_speedup'], label='mean'); plt.plot(df['rank'], df['min_speedup'], label='min')\n"
        "plt.xscale('log'); plt.xlabel('combination rank'); plt.ylabel('speedup'); plt.legend()\n";
  } else if (family == "f5_4") {
    body =
        "for c in df.columns[1:]:\n"
        "    plt.plot(df['rank'], df[c], linewidth=0.6)\n"
        "plt.xlabel('permutations, sorted'); plt.ylabel('speedup')\n";
  } else if (family == "f3_3") {
    body =
        "plt.plot(df['seq'], df['block_rank'], ',', markersize=1)\n"
        "plt.xlabel('access'); plt.ylabel('block (first-touch order)')\n";
  } else if (family == "ipc") {
    body =
        "plt.plot(df['window_end'], df['recent_ipc'])\n"
        "plt.xlabel('instructions'); plt.ylabel('recent IPC')\n";
  } else {
    throw UsageError("unknown plot family '" + family + "'");
  }
  return "import sys\nimport pandas as pd\nimport matplotlib\nmatplotlib.use('Agg')\n"
         "import matplotlib.pyplot as plt\n\n"
         "path = sys.argv[1] if len(sys.argv) > 1 else '" + csv_path + "'\n"
         "df = pd.read_csv(path)\nplt.figure(figsize=(8, 4.5))\n" + body +
         "plt.tight_layout()\nplt.savefig(path.rsplit('.', 1)[0] + '.png', dpi=150)\n";
}

}  // namespace loopnest
