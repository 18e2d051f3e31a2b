#pragma once

#include "ethgraph/ingest.hpp"
#include "ethgraph/tempgraph.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace ethgraph {

/// Windows and filters for the four-week study around 2022-02-24: weeks
/// anchored on 2022-02-10, collection blocks [14174989, 14355747].
struct StudyPreset {
  std::string name;
  WindowSpec weeks;
  WindowSpec days;
  LoadFilter filter;
  /// Pre-event (weeks 1-2) and post-event (weeks 3-4) block spans.
  std::vector<BlockRange> period_blocks;
  /// Interval whose accounts form the seed set (half-open: [from, to)).
  Date seed_from;
  Date seed_to;
};

StudyPreset paper_study_preset();

/// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFatal = 1;
inline constexpr int kExitUsage = 2;

/// Entry point shared by the ethgraph binary and the tests.
int run_cli(const std::vector<std::string> &args, std::ostream &out,
            std::ostream &err);

} // namespace ethgraph
