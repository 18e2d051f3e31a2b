#pragma once

#include "ethgraph/core.hpp"
#include "ethgraph/ingest.hpp"

#include <cstdint>
#include <optional>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace ethgraph {

enum class WindowMode { utc_day, utc_week, block_range };

std::string_view to_string(WindowMode mode);

/// How transactions are bucketed into the snapshots G_1, G_2, ...
struct WindowSpec {
  WindowMode mode = WindowMode::utc_day;
  /// First day of window 1 for the UTC modes. Defaults to the UTC date of
  /// the earliest transaction in the partitioned view.
  std::optional<Date> anchor;
  /// Number of UTC windows. Defaults to as many as needed to reach the last
  /// transaction.
  std::optional<int> count;
  /// Closed block intervals for block_range mode; window t is ranges[t-1].
  std::vector<BlockRange> ranges;

  static WindowSpec days(std::optional<Date> anchor = {},
                         std::optional<int> count = {});
  static WindowSpec weeks(Date anchor, std::optional<int> count = {});
  static WindowSpec blocks(std::vector<BlockRange> ranges);

  /// Throws ValidationError for overlapping, unordered or inverted block
  /// ranges, or a non-positive count.
  void validate() const;
  std::string describe() const;
};

/// Parses "a-b,c-d" into closed block ranges.
std::vector<BlockRange> parse_block_ranges(std::string_view text);

struct Window {
  int index = 0; // 1-based
  // UTC modes: first and last day covered (inclusive). Block mode: unset.
  std::optional<Date> first_day;
  std::optional<Date> last_day;
  std::optional<BlockRange> blocks;
  std::vector<std::uint32_t> tx_indices; // into Dataset::transactions()

  std::string label() const;
};

struct Partition {
  WindowSpec spec;
  View view = View::full;
  std::vector<Window> windows; // ordered by index, including empty windows
  std::size_t unassigned = 0;  // in-view transactions outside every window
};

/// Assigns every in-view transaction to at most one window: by UTC timestamp
/// for the day/week modes, by block number for block_range mode.
Partition partition_windows(const Dataset &ds, const WindowSpec &spec,
                            View view = View::full);

/// Directed multigraph snapshot for one window. Vertices are kept sorted by
/// address; edges are sorted by (from, to) and refer to vertex positions.
class WindowGraph {
public:
  struct Edge {
    std::uint32_t from;
    std::uint32_t to;
    std::uint64_t count;
  };

  int index() const { return index_; }
  const std::vector<Address> &vertices() const { return vertices_; }
  const std::vector<Edge> &edges() const { return edges_; }
  std::uint64_t tx_total() const { return tx_total_; }

  std::optional<std::uint32_t> vertex_id(const Address &a) const;
  /// Number of transactions from -> to; 0 when there is no such edge.
  std::uint64_t edge_count(const Address &from, const Address &to) const;

private:
  friend class WindowGraphBuilder;
  int index_ = 1;
  std::vector<Address> vertices_;
  std::vector<Edge> edges_;
  std::uint64_t tx_total_ = 0;
};

/// Incremental construction; the result does not depend on insertion order.
class WindowGraphBuilder {
public:
  explicit WindowGraphBuilder(int index = 1) : index_(index) {}
  void add(const Transaction &tx);
  WindowGraph build() &&;

private:
  std::uint32_t intern(const Address &a);

  int index_;
  std::vector<Address> vertices_;
  std::unordered_map<Address, std::uint32_t> ids_;
  std::unordered_map<std::uint64_t, std::uint64_t> edges_;
  std::uint64_t tx_total_ = 0;
};

WindowGraph build_window_graph(std::span<const Transaction> txs, int index = 1);
WindowGraph build_window_graph(const Dataset &ds, const Window &window);

/// Builds every window graph of a partition, optionally on several threads.
std::vector<WindowGraph> build_window_graphs(const Dataset &ds,
                                             const Partition &partition,
                                             unsigned threads = 1);

enum class DegreeMetric { distinct, tx_count };

std::string_view to_string(DegreeMetric metric);

struct DegreeRecord {
  Address account;
  std::uint64_t indegree = 0;
  std::uint64_t outdegree = 0;
  std::uint64_t total = 0;
  DegreeMetric metric = DegreeMetric::distinct;
};

/// One record per vertex, sorted by address.
struct DegreeTable {
  DegreeMetric metric = DegreeMetric::distinct;
  std::vector<DegreeRecord> records;

  const DegreeRecord *find(const Address &a) const;
};

/// distinct: number of distinct in/out neighbours. tx_count: sums of edge
/// counts. A self-loop (v, v) counts once in each direction.
DegreeTable degree_table(const WindowGraph &g, DegreeMetric metric);

enum class NewAccountConvention {
  seed_included, // new_1 = N_1
  seed_excluded, // new_1 = N_1 - |seed|
};

struct ActivityDay {
  Date date;
  std::uint64_t cumulative = 0; // N_t
  std::uint64_t new_accounts = 0;
  std::uint64_t active = 0;
};

struct ActivitySeries {
  std::vector<ActivityDay> days;
  std::uint64_t seed_size = 0;
  NewAccountConvention convention = NewAccountConvention::seed_included;
};

/// Daily cumulative/new/active account counts. The cumulative set starts as
/// the seed and absorbs every sender and recipient day by day. `day_spec`
/// must be in utc_day mode.
ActivitySeries activity_series(const Dataset &ds,
                               const std::unordered_set<Address> &seed,
                               const WindowSpec &day_spec,
                               View view = View::full,
                               NewAccountConvention convention =
                                   NewAccountConvention::seed_included);

/// Same computation over a prebuilt day partition.
ActivitySeries activity_series(const Dataset &ds,
                               const std::unordered_set<Address> &seed,
                               const Partition &days,
                               NewAccountConvention convention =
                                   NewAccountConvention::seed_included);

/// Reads one address per line; blank lines and '#' comments are ignored.
std::unordered_set<Address> read_seed_accounts(const std::filesystem::path &path);

} // namespace ethgraph
