#include "ethgraph/analytics.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

namespace ethgraph {

std::uint64_t VolumeSeries::total() const {
  std::uint64_t t = 0;
  for (const auto &p : points) t += p.count;
  return t;
}

VolumeSeries volume_series(const Partition &days) {
  if (days.spec.mode != WindowMode::utc_day) {
    throw ValidationError("volume series requires utc_day windows");
  }
  VolumeSeries s;
  s.view = days.view;
  s.points.reserve(days.windows.size());
  for (const Window &w : days.windows) {
    s.points.push_back({*w.first_day, w.tx_indices.size()});
  }
  return s;
}

std::string_view to_string(Direction direction) {
  switch (direction) {
  case Direction::in:
    return "in";
  case Direction::out:
    return "out";
  case Direction::total:
    break;
  }
  return "total";
}

std::uint64_t degree_of(const DegreeRecord &r, Direction direction) {
  switch (direction) {
  case Direction::in:
    return r.indegree;
  case Direction::out:
    return r.outdegree;
  case Direction::total:
    break;
  }
  return r.total;
}

std::vector<GrowthRecord> degree_growth(const DegreeTable &prev,
                                        const DegreeTable &next,
                                        Direction direction,
                                        std::pair<int, int> week_pair) {
  if (prev.metric != next.metric) {
    throw ValidationError(fmt::format(
        "degree growth needs tables of one metric, got {} and {}",
        to_string(prev.metric), to_string(next.metric)));
  }
  // Both tables are sorted by address: merge them.
  std::vector<GrowthRecord> out;
  out.reserve(std::max(prev.records.size(), next.records.size()));
  auto a = prev.records.begin();
  auto b = next.records.begin();
  auto emit = [&](const Address &acct, std::uint64_t before, std::uint64_t after) {
    GrowthRecord g;
    g.account = acct;
    g.degree_prev = before;
    g.degree_next = after;
    g.delta = static_cast<std::int64_t>(after) - static_cast<std::int64_t>(before);
    g.week_pair = week_pair;
    g.metric = next.metric;
    g.direction = direction;
    out.push_back(g);
  };
  while (a != prev.records.end() || b != next.records.end()) {
    if (b == next.records.end() ||
        (a != prev.records.end() && a->account < b->account)) {
      emit(a->account, degree_of(*a, direction), 0);
      ++a;
    } else if (a == prev.records.end() || b->account < a->account) {
      emit(b->account, 0, degree_of(*b, direction));
      ++b;
    } else {
      emit(a->account, degree_of(*a, direction), degree_of(*b, direction));
      ++a;
      ++b;
    }
  }
  return out;
}

bool TagMap::insert(Tag tag) {
  if (tag.label.empty()) throw ValidationError("tag label must be non-empty");
  auto [it, inserted] = entries_.insert_or_assign(tag.address, tag);
  return !inserted;
}

Tag TagMap::lookup(const Address &a) const {
  if (auto it = entries_.find(a); it != entries_.end()) return it->second;
  return Tag{a, std::string(kNoPublicTag), TagKind::unknown};
}

TagMap parse_tag_map(std::string_view csv_text, TagLoadStats &stats) {
  TagMap map;
  std::istringstream in{std::string(csv_text)};
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  auto fail = [&](const std::string &msg) {
    ++stats.skipped_rows;
    if (stats.sample_errors.size() < 10) {
      stats.sample_errors.push_back(fmt::format("line {}: {}", line_no, msg));
    }
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (!header_seen) {
      header_seen = true;
      // Strip a UTF-8 BOM if present.
      if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
      auto cols = split_csv_line(line);
      if (cols.size() < 3 || cols[0] != "address" || cols[1] != "label" ||
          cols[2] != "kind") {
        throw ValidationError(
            "tag file must start with the header 'address,label,kind'");
      }
      continue;
    }
    try {
      auto cols = split_csv_line(line);
      if (cols.size() != 3) {
        fail(fmt::format("expected 3 columns, got {}", cols.size()));
        continue;
      }
      Tag tag{normalize_address(cols[0]), cols[1], parse_tag_kind(cols[2])};
      if (tag.label.empty()) {
        fail("empty label");
        continue;
      }
      ++stats.rows;
      if (map.insert(std::move(tag))) ++stats.overridden;
    } catch (const ValidationError &e) {
      fail(e.what());
    }
  }
  return map;
}

TagMap load_tag_map(const std::filesystem::path &path, TagLoadStats &stats) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error(
        fmt::format("cannot open tag file '{}'", path.string()));
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_tag_map(buf.str(), stats);
}

std::vector<RankedRow> top_k_growth(const std::vector<GrowthRecord> &records,
                                    std::size_t k, const TagMap &tags,
                                    RankOrder order) {
  if (k == 0) throw ValidationError("k must be at least 1");
  std::vector<const GrowthRecord *> ptrs;
  ptrs.reserve(records.size());
  for (const auto &r : records) ptrs.push_back(&r);
  auto better = [order](const GrowthRecord *a, const GrowthRecord *b) {
    if (a->delta != b->delta) {
      return order == RankOrder::top ? a->delta > b->delta : a->delta < b->delta;
    }
    if (a->degree_next != b->degree_next) return a->degree_next > b->degree_next;
    return a->account < b->account;
  };
  std::size_t n = std::min(k, ptrs.size());
  std::partial_sort(ptrs.begin(), ptrs.begin() + static_cast<std::ptrdiff_t>(n),
                    ptrs.end(), better);
  std::vector<RankedRow> rows;
  rows.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const GrowthRecord &g = *ptrs[i];
    Tag tag = tags.lookup(g.account);
    rows.push_back({g.account, shorten_address(g.account), tag.label, tag.kind,
                    g.delta, g.degree_next});
  }
  return rows;
}

std::vector<CcdfPoint> degree_ccdf(const DegreeTable &table, Direction direction) {
  std::vector<std::uint64_t> degrees;
  degrees.reserve(table.records.size());
  for (const auto &r : table.records) {
    std::uint64_t d = degree_of(r, direction);
    if (d >= 1) degrees.push_back(d);
  }
  std::vector<CcdfPoint> out;
  if (degrees.empty()) return out;
  std::sort(degrees.begin(), degrees.end());
  const double n = static_cast<double>(degrees.size());
  for (std::size_t i = 0; i < degrees.size();) {
    std::size_t j = i;
    while (j < degrees.size() && degrees[j] == degrees[i]) ++j;
    // degrees[i..] are all >= degrees[i]
    out.push_back({degrees[i], static_cast<double>(degrees.size() - i) / n});
    i = j;
  }
  return out;
}

} // namespace ethgraph
