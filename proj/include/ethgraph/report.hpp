#pragma once

#include "ethgraph/analytics.hpp"
#include "ethgraph/tempgraph.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ethgraph {

inline constexpr std::string_view kToolVersion = "0.3.0";
inline constexpr std::string_view kUtcNotice =
    "all dates are UTC; a day runs from 00:00:00Z to 23:59:59Z";

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Writes bytes exactly as given (binary mode). Throws IoError.
void write_text_file(const std::filesystem::path &path, std::string_view content);

/// "date,value" with one row per day, trailing newline.
std::string series_csv(const VolumeSeries &series);
/// "date,cumulative,new,active".
std::string series_csv(const ActivitySeries &series);

void emit_series_csv(const VolumeSeries &series, const std::filesystem::path &path);
void emit_series_csv(const ActivitySeries &series, const std::filesystem::path &path);

/// Degree table as CSV: "address,indegree,outdegree,total".
std::string degree_table_csv(const DegreeTable &table);
/// "degree,fraction".
std::string ccdf_csv(const std::vector<CcdfPoint> &points);

/// Three-column table (Address, Tag, Degree Growth) with the caption on the
/// line above and an optional footer line below.
std::string render_markdown_table(const std::vector<RankedRow> &ranked,
                                  std::string_view caption,
                                  std::string_view footer = {});

struct ChartSeries {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

struct AxisSpec {
  std::string title;
  std::string subtitle;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  bool x_is_day = false; // x holds days since 1970-01-01; ticks show dates
  std::string metadata;  // embedded verbatim in <metadata>
};

/// Self-contained SVG 1.1 line chart: one polyline and point markers per
/// series, a legend entry per series. Non-positive values are dropped on
/// logarithmic axes.
std::string render_line_chart(const std::vector<ChartSeries> &series,
                              const AxisSpec &axes);
void write_line_chart(const std::vector<ChartSeries> &series,
                      const AxisSpec &axes, const std::filesystem::path &path);

struct RunMetadata {
  std::string tool_version{kToolVersion};
  std::string command;
  std::string dataset;
  std::string window;
  std::string utc_notice{kUtcNotice};
};

struct ArtifactInfo {
  std::string file;
  std::string kind; // csv | markdown | svg
  std::string view;
  std::string window;
  std::string direction;
  std::string metric;
};

struct ReportBundle {
  RunMetadata metadata;
  std::vector<ArtifactInfo> artifacts;
  std::vector<std::pair<std::string, std::string>> inputs; // path, sha256

  std::string to_json() const;
};

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path &path);
std::string sha256_hex(std::string_view data);

} // namespace ethgraph
