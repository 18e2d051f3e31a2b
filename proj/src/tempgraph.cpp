#include "ethgraph/tempgraph.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <thread>

#include <fmt/format.h>

namespace ethgraph {

std::string_view to_string(WindowMode mode) {
  switch (mode) {
  case WindowMode::utc_day:
    return "day";
  case WindowMode::utc_week:
    return "week";
  case WindowMode::block_range:
    break;
  }
  return "blocks";
}

std::string_view to_string(DegreeMetric metric) {
  return metric == DegreeMetric::distinct ? "distinct" : "txcount";
}

WindowSpec WindowSpec::days(std::optional<Date> anchor, std::optional<int> count) {
  WindowSpec s;
  s.mode = WindowMode::utc_day;
  s.anchor = anchor;
  s.count = count;
  return s;
}

WindowSpec WindowSpec::weeks(Date anchor, std::optional<int> count) {
  WindowSpec s;
  s.mode = WindowMode::utc_week;
  s.anchor = anchor;
  s.count = count;
  return s;
}

WindowSpec WindowSpec::blocks(std::vector<BlockRange> ranges) {
  WindowSpec s;
  s.mode = WindowMode::block_range;
  s.ranges = std::move(ranges);
  return s;
}

void WindowSpec::validate() const {
  if (count && *count <= 0) {
    throw ValidationError("window count must be positive");
  }
  if (mode != WindowMode::block_range) return;
  if (ranges.empty()) {
    throw ValidationError("block_range windows need at least one range");
  }
  for (std::size_t i = 0; i < ranges.size(); ++i) {
    if (ranges[i].min > ranges[i].max) {
      throw ValidationError(fmt::format("block range {}-{} is inverted",
                                        ranges[i].min, ranges[i].max));
    }
    if (i > 0 && ranges[i].min <= ranges[i - 1].max) {
      throw ValidationError(fmt::format(
          "block ranges {}-{} and {}-{} overlap or are out of order",
          ranges[i - 1].min, ranges[i - 1].max, ranges[i].min, ranges[i].max));
    }
  }
}

std::string WindowSpec::describe() const {
  if (mode == WindowMode::block_range) {
    std::string out = "blocks";
    for (std::size_t i = 0; i < ranges.size(); ++i) {
      out += fmt::format("{}{}-{}", i ? "," : " ", ranges[i].min, ranges[i].max);
    }
    return out;
  }
  std::string out = mode == WindowMode::utc_day ? "utc_day" : "utc_week";
  out += anchor ? " anchor=" + iso_date(*anchor) : " anchor=auto";
  if (count) out += fmt::format(" count={}", *count);
  return out;
}

std::vector<BlockRange> parse_block_ranges(std::string_view text) {
  auto number = [&](std::string_view s) {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || p != s.data() + s.size()) {
      throw ValidationError(fmt::format("invalid block range list '{}'", text));
    }
    return v;
  };
  std::vector<BlockRange> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t comma = text.find(',', pos);
    std::string_view item =
        text.substr(pos, comma == std::string_view::npos ? text.npos : comma - pos);
    std::size_t dash = item.find('-');
    if (dash == std::string_view::npos) {
      std::uint64_t b = number(item);
      out.push_back({b, b});
    } else {
      out.push_back({number(item.substr(0, dash)), number(item.substr(dash + 1))});
    }
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

std::string Window::label() const {
  if (blocks) return fmt::format("blocks {}-{}", blocks->min, blocks->max);
  if (first_day && last_day && *first_day != *last_day) {
    return fmt::format("{}..{}", iso_date(*first_day), iso_date(*last_day));
  }
  return first_day ? iso_date(*first_day) : std::string{};
}

Partition partition_windows(const Dataset &ds, const WindowSpec &spec,
                            View view) {
  spec.validate();
  Partition p;
  p.spec = spec;
  p.view = view;
  const auto &txs = ds.transactions();

  if (spec.mode == WindowMode::block_range) {
    for (std::size_t i = 0; i < spec.ranges.size(); ++i) {
      Window w;
      w.index = static_cast<int>(i) + 1;
      w.blocks = spec.ranges[i];
      p.windows.push_back(std::move(w));
    }
    for (std::size_t i = 0; i < txs.size(); ++i) {
      if (!ds.in_view(i, view)) continue;
      std::uint64_t b = txs[i].block_number;
      auto it = std::upper_bound(
          spec.ranges.begin(), spec.ranges.end(), b,
          [](std::uint64_t v, const BlockRange &r) { return v < r.min; });
      if (it != spec.ranges.begin() && b <= std::prev(it)->max) {
        auto w = static_cast<std::size_t>(std::prev(it) - spec.ranges.begin());
        p.windows[w].tx_indices.push_back(static_cast<std::uint32_t>(i));
      } else {
        ++p.unassigned;
      }
    }
    return p;
  }

  const int length = spec.mode == WindowMode::utc_week ? 7 : 1;
  std::optional<Date> first, last;
  for (std::size_t i = 0; i < txs.size(); ++i) {
    if (!ds.in_view(i, view)) continue;
    Date d = utc_date(txs[i].timestamp);
    if (!first || d < *first) first = d;
    if (!last || d > *last) last = d;
  }
  std::optional<Date> anchor = spec.anchor ? spec.anchor : first;
  if (!anchor) return p; // no anchor and nothing in view

  long long n_windows = 0;
  if (spec.count) {
    n_windows = *spec.count;
  } else if (last && *last >= *anchor) {
    n_windows = ((*last - *anchor).count()) / length + 1;
  }
  for (long long w = 0; w < n_windows; ++w) {
    Window win;
    win.index = static_cast<int>(w) + 1;
    win.first_day = *anchor + std::chrono::days{w * length};
    win.last_day = *win.first_day + std::chrono::days{length - 1};
    p.windows.push_back(std::move(win));
  }
  for (std::size_t i = 0; i < txs.size(); ++i) {
    if (!ds.in_view(i, view)) continue;
    long long offset = (utc_date(txs[i].timestamp) - *anchor).count();
    long long w = offset >= 0 ? offset / length : -1;
    if (w >= 0 && w < n_windows) {
      p.windows[static_cast<std::size_t>(w)].tx_indices.push_back(
          static_cast<std::uint32_t>(i));
    } else {
      ++p.unassigned;
    }
  }
  return p;
}

std::optional<std::uint32_t> WindowGraph::vertex_id(const Address &a) const {
  auto it = std::lower_bound(vertices_.begin(), vertices_.end(), a);
  if (it == vertices_.end() || *it != a) return std::nullopt;
  return static_cast<std::uint32_t>(it - vertices_.begin());
}

std::uint64_t WindowGraph::edge_count(const Address &from,
                                      const Address &to) const {
  auto u = vertex_id(from);
  auto v = vertex_id(to);
  if (!u || !v) return 0;
  auto it = std::lower_bound(edges_.begin(), edges_.end(), std::pair{*u, *v},
                             [](const Edge &e, const std::pair<std::uint32_t, std::uint32_t> &k) {
                               return std::pair{e.from, e.to} < k;
                             });
  if (it == edges_.end() || it->from != *u || it->to != *v) return 0;
  return it->count;
}

std::uint32_t WindowGraphBuilder::intern(const Address &a) {
  auto [it, inserted] =
      ids_.try_emplace(a, static_cast<std::uint32_t>(vertices_.size()));
  if (inserted) vertices_.push_back(a);
  return it->second;
}

void WindowGraphBuilder::add(const Transaction &tx) {
  std::uint32_t u = intern(tx.from);
  if (!tx.to) return; // contract creation: vertex only
  std::uint32_t v = intern(*tx.to);
  ++edges_[(static_cast<std::uint64_t>(u) << 32) | v];
  ++tx_total_;
}

WindowGraph WindowGraphBuilder::build() && {
  WindowGraph g;
  g.index_ = index_;
  g.tx_total_ = tx_total_;

  std::vector<std::uint32_t> order(vertices_.size());
  for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    return vertices_[a] < vertices_[b];
  });
  std::vector<std::uint32_t> remap(vertices_.size());
  g.vertices_.reserve(vertices_.size());
  for (std::uint32_t rank = 0; rank < order.size(); ++rank) {
    remap[order[rank]] = rank;
    g.vertices_.push_back(vertices_[order[rank]]);
  }

  g.edges_.reserve(edges_.size());
  for (const auto &[key, count] : edges_) {
    g.edges_.push_back({remap[static_cast<std::uint32_t>(key >> 32)],
                        remap[static_cast<std::uint32_t>(key & 0xffffffffu)],
                        count});
  }
  std::sort(g.edges_.begin(), g.edges_.end(),
            [](const WindowGraph::Edge &a, const WindowGraph::Edge &b) {
              return a.from != b.from ? a.from < b.from : a.to < b.to;
            });
  return g;
}

WindowGraph build_window_graph(std::span<const Transaction> txs, int index) {
  WindowGraphBuilder b(index);
  for (const auto &tx : txs) b.add(tx);
  return std::move(b).build();
}

WindowGraph build_window_graph(const Dataset &ds, const Window &window) {
  WindowGraphBuilder b(window.index);
  const auto &txs = ds.transactions();
  for (std::uint32_t i : window.tx_indices) b.add(txs[i]);
  return std::move(b).build();
}

std::vector<WindowGraph> build_window_graphs(const Dataset &ds,
                                             const Partition &partition,
                                             unsigned threads) {
  const std::size_t n = partition.windows.size();
  std::vector<WindowGraph> graphs(n);
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      graphs[i] = build_window_graph(ds, partition.windows[i]);
    }
    return graphs;
  }
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < n; i += threads) {
        graphs[i] = build_window_graph(ds, partition.windows[i]);
      }
    });
  }
  for (auto &th : pool) th.join();
  return graphs;
}

const DegreeRecord *DegreeTable::find(const Address &a) const {
  auto it = std::lower_bound(
      records.begin(), records.end(), a,
      [](const DegreeRecord &r, const Address &x) { return r.account < x; });
  return it != records.end() && it->account == a ? &*it : nullptr;
}

DegreeTable degree_table(const WindowGraph &g, DegreeMetric metric) {
  DegreeTable table;
  table.metric = metric;
  table.records.resize(g.vertices().size());
  for (std::size_t i = 0; i < g.vertices().size(); ++i) {
    table.records[i].account = g.vertices()[i];
    table.records[i].metric = metric;
  }
  for (const auto &e : g.edges()) {
    std::uint64_t w = metric == DegreeMetric::distinct ? 1 : e.count;
    table.records[e.from].outdegree += w;
    table.records[e.to].indegree += w;
  }
  for (auto &r : table.records) r.total = r.indegree + r.outdegree;
  return table;
}

ActivitySeries activity_series(const Dataset &ds,
                               const std::unordered_set<Address> &seed,
                               const WindowSpec &day_spec, View view,
                               NewAccountConvention convention) {
  if (day_spec.mode != WindowMode::utc_day) {
    throw ValidationError("activity series requires utc_day windows");
  }
  return activity_series(ds, seed, partition_windows(ds, day_spec, view),
                         convention);
}

ActivitySeries activity_series(const Dataset &ds,
                               const std::unordered_set<Address> &seed,
                               const Partition &days,
                               NewAccountConvention convention) {
  if (days.spec.mode != WindowMode::utc_day) {
    throw ValidationError("activity series requires utc_day windows");
  }
  ActivitySeries series;
  series.seed_size = seed.size();
  series.convention = convention;

  // Last day (1-based) each account was active; 0 for seed-only accounts.
  std::unordered_map<Address, int> last_active;
  last_active.reserve(seed.size() * 2 + 1024);
  for (const auto &a : seed) last_active.emplace(a, 0);

  const auto &txs = ds.transactions();
  std::uint64_t prev_cumulative = seed.size();
  for (const Window &w : days.windows) {
    ActivityDay day;
    day.date = *w.first_day;
    auto touch = [&](const Address &a) {
      auto it = last_active.try_emplace(a, 0).first;
      if (it->second != w.index) {
        it->second = w.index;
        ++day.active;
      }
    };
    for (std::uint32_t i : w.tx_indices) {
      touch(txs[i].from);
      if (txs[i].to) touch(*txs[i].to);
    }
    day.cumulative = last_active.size();
    if (w.index == 1) {
      day.new_accounts = convention == NewAccountConvention::seed_included
                             ? day.cumulative
                             : day.cumulative - seed.size();
    } else {
      day.new_accounts = day.cumulative - prev_cumulative;
    }
    prev_cumulative = day.cumulative;
    series.days.push_back(day);
  }
  return series;
}

std::unordered_set<Address> read_seed_accounts(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error(
        fmt::format("cannot open seed accounts file '{}'", path.string()));
  }
  std::unordered_set<Address> seed;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') continue;
    auto e = line.find_last_not_of(" \t\r");
    try {
      seed.insert(normalize_address(std::string_view(line).substr(b, e - b + 1)));
    } catch (const ValidationError &err) {
      throw ParseError(line_no, err.what());
    }
  }
  return seed;
}

} // namespace ethgraph
