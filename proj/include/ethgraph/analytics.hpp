#pragma once

#include "ethgraph/core.hpp"
#include "ethgraph/tempgraph.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace ethgraph {

struct VolumePoint {
  Date date;
  std::uint64_t count = 0;
};

/// Daily transaction counts for one view, one point per day window.
struct VolumeSeries {
  View view = View::full;
  std::vector<VolumePoint> points;

  std::uint64_t total() const;
};

/// `days` must come from partition_windows in utc_day mode; the view is the
/// one the partition was built for.
VolumeSeries volume_series(const Partition &days);

enum class Direction { in, out, total };

std::string_view to_string(Direction direction);

std::uint64_t degree_of(const DegreeRecord &r, Direction direction);

struct GrowthRecord {
  Address account;
  std::uint64_t degree_prev = 0;
  std::uint64_t degree_next = 0;
  std::int64_t delta = 0;
  std::pair<int, int> week_pair{1, 2};
  DegreeMetric metric = DegreeMetric::distinct;
  Direction direction = Direction::total;
};

/// One record per account in either table; a missing side counts as degree 0.
/// Throws ValidationError when the tables use different metrics. Records are
/// sorted by address.
std::vector<GrowthRecord> degree_growth(const DegreeTable &prev,
                                        const DegreeTable &next,
                                        Direction direction,
                                        std::pair<int, int> week_pair = {1, 2});

/// Address -> public tag. Unknown addresses resolve to the "No public tag"
/// sentinel with kind unknown.
class TagMap {
public:
  static constexpr std::string_view kNoPublicTag = "No public tag";

  /// Returns true when an earlier entry was replaced.
  bool insert(Tag tag);
  Tag lookup(const Address &a) const;
  bool contains(const Address &a) const { return entries_.count(a) != 0; }
  std::size_t size() const { return entries_.size(); }

private:
  std::unordered_map<Address, Tag> entries_;
};

struct TagLoadStats {
  std::size_t rows = 0;
  std::size_t overridden = 0;
  std::size_t skipped_rows = 0;
  std::vector<std::string> sample_errors;
};

/// CSV with header "address,label,kind". Later rows for the same address win.
TagMap load_tag_map(const std::filesystem::path &path, TagLoadStats &stats);
TagMap parse_tag_map(std::string_view csv_text, TagLoadStats &stats);

enum class RankOrder { top, bottom };

struct RankedRow {
  Address account;
  std::string short_address;
  std::string label;
  TagKind kind = TagKind::unknown;
  std::int64_t delta = 0;
  std::uint64_t degree_next = 0;
};

/// Ties are broken by larger degree_next, then by ascending full address.
inline constexpr std::string_view kTieBreakRule =
    "ties broken by larger next-week degree, then ascending full address";

/// The k largest deltas (RankOrder::top), or the k smallest for exploration
/// (RankOrder::bottom). Output is independent of the input order.
std::vector<RankedRow> top_k_growth(const std::vector<GrowthRecord> &records,
                                    std::size_t k, const TagMap &tags,
                                    RankOrder order = RankOrder::top);

struct CcdfPoint {
  std::uint64_t degree = 0;
  double fraction = 0.0;
};

/// Points at every observed degree d >= 1, with the fraction of accounts of
/// degree >= d among accounts of degree >= 1. Empty when every degree is 0.
std::vector<CcdfPoint> degree_ccdf(const DegreeTable &table, Direction direction);

} // namespace ethgraph
