#include "ethgraph/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <fmt/format.h>
#include <json.hpp>
#include <openssl/evp.h>

namespace ethgraph {

void write_text_file(const std::filesystem::path &path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError(fmt::format("write to '{}' failed", path.string()));
}

std::string series_csv(const VolumeSeries &series) {
  if (series.points.empty()) throw ValidationError("volume series is empty");
  std::string out = "date,value\n";
  for (const auto &p : series.points) {
    out += fmt::format("{},{}\n", iso_date(p.date), p.count);
  }
  return out;
}

std::string series_csv(const ActivitySeries &series) {
  if (series.days.empty()) throw ValidationError("activity series is empty");
  std::string out = "date,cumulative,new,active\n";
  for (const auto &d : series.days) {
    out += fmt::format("{},{},{},{}\n", iso_date(d.date), d.cumulative,
                       d.new_accounts, d.active);
  }
  return out;
}

void emit_series_csv(const VolumeSeries &series, const std::filesystem::path &path) {
  write_text_file(path, series_csv(series));
}

void emit_series_csv(const ActivitySeries &series, const std::filesystem::path &path) {
  write_text_file(path, series_csv(series));
}

std::string degree_table_csv(const DegreeTable &table) {
  std::string out = "address,indegree,outdegree,total\n";
  for (const auto &r : table.records) {
    out += fmt::format("{},{},{},{}\n", r.account.text(), r.indegree, r.outdegree, r.total);
  }
  return out;
}

std::string ccdf_csv(const std::vector<CcdfPoint> &points) {
  std::string out = "degree,fraction\n";
  for (const auto &p : points) out += fmt::format("{},{:.8f}\n", p.degree, p.fraction);
  return out;
}

namespace {

std::string md_cell(std::string_view text) {
  std::string out;
  for (char c : text) {
    if (c == '|') out += "\\|";
    else if (c == '\n' || c == '\r') out += ' ';
    else out += c;
  }
  return out;
}

std::string xml_escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
    case '&': out += "&amp;"; break;
    case '<': out += "&lt;"; break;
    case '>': out += "&gt;"; break;
    case '"': out += "&quot;"; break;
    default: out += c;
    }
  }
  return out;
}

} // namespace

std::string render_markdown_table(const std::vector<RankedRow> &ranked,
                                  std::string_view caption,
                                  std::string_view footer) {
  std::string out = fmt::format("{}\n\n", caption);
  out += "| Address | Tag | Degree Growth |\n";
  out += "|---|---|---:|\n";
  for (const auto &r : ranked) {
    std::string_view label = r.label.empty() ? TagMap::kNoPublicTag : std::string_view(r.label);
    out += fmt::format("| {} | {} | {} |\n", r.short_address, md_cell(label), r.delta);
  }
  if (!footer.empty()) out += fmt::format("\n{}\n", footer);
  return out;
}

namespace {

constexpr double kWidth = 800, kHeight = 500;
constexpr double kLeft = 80, kRight = 180, kTop = 70, kBottom = 60;
constexpr const char *kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                    "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

struct Axis {
  double lo = 0, hi = 1;
  bool log = false;

  double map(double v, double p0, double p1) const {
    double a = log ? std::log10(v) : v;
    double l = log ? std::log10(lo) : lo;
    double h = log ? std::log10(hi) : hi;
    double t = h > l ? (a - l) / (h - l) : 0.5;
    return p0 + t * (p1 - p0);
  }
};

double nice_step(double span) {
  double raw = span / 5.0;
  double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (m * mag >= raw) return m * mag;
  }
  return 10 * mag;
}

std::vector<double> ticks(const Axis &a) {
  std::vector<double> out;
  if (a.log) {
    for (double p = std::floor(std::log10(a.lo)); p <= std::ceil(std::log10(a.hi)); p += 1) {
      double v = std::pow(10.0, p);
      if (v >= a.lo * (1 - 1e-9) && v <= a.hi * (1 + 1e-9)) out.push_back(v);
    }
    if (out.empty()) out.push_back(a.lo);
    return out;
  }
  double step = nice_step(std::max(a.hi - a.lo, 1e-12));
  for (double v = std::ceil(a.lo / step) * step; v <= a.hi + step * 1e-9; v += step) {
    out.push_back(std::abs(v) < step * 1e-9 ? 0.0 : v);
  }
  return out;
}

std::string tick_label(double v, bool log, bool is_day) {
  if (is_day) {
    return iso_date(Date{std::chrono::days{static_cast<long long>(std::llround(v))}}).substr(5);
  }
  if (log) {
    int p = static_cast<int>(std::lround(std::log10(v)));
    return p >= 0 && p <= 6 ? fmt::format("{}", static_cast<long long>(std::llround(v)))
                            : fmt::format("1e{}", p);
  }
  if (std::abs(v - std::round(v)) < 1e-9) return fmt::format("{}", static_cast<long long>(std::llround(v)));
  return fmt::format("{:.2f}", v);
}

Axis fit_axis(const std::vector<ChartSeries> &series, bool x, bool log) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto &s : series) {
    for (auto [px, py] : s.points) {
      double v = x ? px : py;
      if (log && v <= 0) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!std::isfinite(lo)) {
    lo = log ? 1 : 0;
    hi = log ? 10 : 1;
  }
  if (!log && !x) lo = std::min(lo, 0.0);
  if (hi <= lo) {
    if (log) {
      lo /= 10;
      hi *= 10;
    } else {
      hi = lo + 1;
    }
  }
  return {lo, hi, log};
}

} // namespace

std::string render_line_chart(const std::vector<ChartSeries> &series,
                              const AxisSpec &axes) {
  if (series.empty()) throw ValidationError("chart needs at least one series");
  Axis ax = fit_axis(series, true, axes.log_x);
  Axis ay = fit_axis(series, false, axes.log_y);
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;

  std::string svg;
  svg += fmt::format(
      "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{0}\" height=\"{1}\" "
      "viewBox=\"0 0 {0} {1}\" font-family=\"sans-serif\" font-size=\"12\">\n",
      kWidth, kHeight);
  svg += fmt::format("<title>{}</title>\n", xml_escape(axes.title));
  if (!axes.metadata.empty()) {
    svg += fmt::format("<metadata>{}</metadata>\n", xml_escape(axes.metadata));
  }
  svg += fmt::format("<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"#ffffff\"/>\n", kWidth, kHeight);
  svg += fmt::format("<text x=\"{:.2f}\" y=\"24\" font-size=\"16\" text-anchor=\"middle\">{}</text>\n",
                     (x0 + x1) / 2, xml_escape(axes.title));
  if (!axes.subtitle.empty()) {
    svg += fmt::format("<text x=\"{:.2f}\" y=\"44\" font-size=\"11\" fill=\"#555555\" text-anchor=\"middle\">{}</text>\n",
                       (x0 + x1) / 2, xml_escape(axes.subtitle));
  }

  // Frame, grid and tick labels.
  svg += fmt::format("<g class=\"axes\" data-x-scale=\"{}\" data-y-scale=\"{}\" stroke=\"#cccccc\" stroke-width=\"1\">\n",
                     ax.log ? "log" : "linear", ay.log ? "log" : "linear");
  svg += fmt::format("<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"none\" stroke=\"#333333\"/>\n",
                     x0, y1, x1 - x0, y0 - y1);
  std::string labels;
  for (double t : ticks(ax)) {
    double px = ax.map(t, x0, x1);
    svg += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\"/>\n", px, y0, y1);
    labels += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{}</text>\n", px, y0 + 16,
                          xml_escape(tick_label(t, ax.log, axes.x_is_day)));
  }
  for (double t : ticks(ay)) {
    double py = ay.map(t, y0, y1);
    svg += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{2:.2f}\" y2=\"{1:.2f}\"/>\n", x0, py, x1);
    labels += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"end\">{}</text>\n", x0 - 6, py + 4,
                          xml_escape(tick_label(t, ay.log, false)));
  }
  svg += "</g>\n";
  svg += labels;
  svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{}</text>\n", (x0 + x1) / 2,
                     kHeight - 16, xml_escape(axes.x_label));
  svg += fmt::format("<text x=\"16\" y=\"{0:.2f}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {0:.2f})\">{1}</text>\n",
                     (y0 + y1) / 2, xml_escape(axes.y_label));

  for (std::size_t i = 0; i < series.size(); ++i) {
    const char *color = kPalette[i % std::size(kPalette)];
    std::string pts;
    std::string marks;
    for (auto [vx, vy] : series[i].points) {
      if ((ax.log && vx <= 0) || (ay.log && vy <= 0)) continue;
      double px = ax.map(vx, x0, x1);
      double py = ay.map(vy, y0, y1);
      if (!pts.empty()) pts += ' ';
      pts += fmt::format("{:.2f},{:.2f}", px, py);
      marks += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"2.5\"/>\n", px, py);
    }
    svg += fmt::format("<g class=\"series\" fill=\"{0}\" stroke=\"{0}\">\n", color);
    svg += fmt::format("<polyline fill=\"none\" stroke-width=\"1.5\" points=\"{}\"/>\n", pts);
    svg += marks;
    svg += "</g>\n";
    double ly = kTop + 10 + 20.0 * static_cast<double>(i);
    svg += fmt::format("<g class=\"legend\"><line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{2:.2f}\" y2=\"{1:.2f}\" "
                       "stroke=\"{3}\" stroke-width=\"3\"/><text x=\"{4:.2f}\" y=\"{5:.2f}\">{6}</text></g>\n",
                       x1 + 12, ly, x1 + 36, color, x1 + 42, ly + 4, xml_escape(series[i].name));
  }
  svg += "</svg>\n";
  return svg;
}

void write_line_chart(const std::vector<ChartSeries> &series,
                      const AxisSpec &axes, const std::filesystem::path &path) {
  write_text_file(path, render_line_chart(series, axes));
}

std::string ReportBundle::to_json() const {
  nlohmann::ordered_json j;
  j["tool_version"] = metadata.tool_version;
  j["command"] = metadata.command;
  j["dataset"] = metadata.dataset;
  j["window"] = metadata.window;
  j["utc_notice"] = metadata.utc_notice;
  j["tie_break"] = std::string(kTieBreakRule);
  auto &in = j["inputs"] = nlohmann::ordered_json::array();
  for (const auto &[path, digest] : inputs) {
    in.push_back({{"path", path}, {"sha256", digest}});
  }
  auto &arts = j["artifacts"] = nlohmann::ordered_json::array();
  for (const auto &a : artifacts) {
    arts.push_back({{"file", a.file},
                    {"kind", a.kind},
                    {"view", a.view},
                    {"window", a.window},
                    {"direction", a.direction},
                    {"metric", a.metric}});
  }
  return j.dump(2) + "\n";
}

namespace {

std::string to_hex(const unsigned char *d, unsigned n) {
  std::string out;
  out.reserve(2 * n);
  for (unsigned i = 0; i < n; ++i) out += fmt::format("{:02x}", d[i]);
  return out;
}

struct MdCtx {
  EVP_MD_CTX *ctx = EVP_MD_CTX_new();
  ~MdCtx() { EVP_MD_CTX_free(ctx); }
};

} // namespace

std::string sha256_hex(std::string_view data) {
  MdCtx c;
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned len = 0;
  EVP_DigestInit_ex(c.ctx, EVP_sha256(), nullptr);
  EVP_DigestUpdate(c.ctx, data.data(), data.size());
  EVP_DigestFinal_ex(c.ctx, digest, &len);
  return to_hex(digest, len);
}

std::string sha256_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot read '{}'", path.string()));
  MdCtx c;
  EVP_DigestInit_ex(c.ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    EVP_DigestUpdate(c.ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned len = 0;
  EVP_DigestFinal_ex(c.ctx, digest, &len);
  return to_hex(digest, len);
}

} // namespace ethgraph
