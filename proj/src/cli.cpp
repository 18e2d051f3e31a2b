#include "ethgraph/cli.hpp"

#include "ethgraph/analytics.hpp"
#include "ethgraph/fetch.hpp"
#include "ethgraph/report.hpp"
#include "ethgraph/synth.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

namespace ethgraph {

namespace fs = std::filesystem;

StudyPreset paper_study_preset() {
  using namespace std::chrono;
  StudyPreset p;
  p.name = "paper-study";
  const Date anchor{year{2022} / February / 10};
  p.weeks = WindowSpec::weeks(anchor, 4);
  // 2022-02-10 through 2022-03-10 inclusive.
  p.days = WindowSpec::days(anchor, 29);
  p.filter.min_block = 14174989;
  p.filter.max_block = 14355747;
  p.period_blocks = {{14174989, 14265470}, {14265812, 14355747}};
  p.seed_from = Date{year{2022} / January / 10};
  p.seed_to = anchor;
  return p;
}

namespace {

// Thrown for configuration mistakes detected after CLI11 parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string join_command(const std::vector<std::string> &args) {
  std::string out = "ethgraph";
  for (const auto &a : args) {
    out += ' ';
    out += a.find_first_of(" \t\"'") == std::string::npos ? a : fmt::format("'{}'", a);
  }
  return out;
}

template <class Enum>
Enum pick(const std::string &value, std::initializer_list<std::pair<const char *, Enum>> options,
          const char *flag) {
  for (const auto &[name, e] : options) {
    if (value == name) return e;
  }
  throw UsageError(fmt::format("invalid value '{}' for {}", value, flag));
}

struct CommonInputs {
  std::vector<std::string> txs;
  std::string manifest;
  std::optional<std::uint64_t> min_block;
  std::optional<std::uint64_t> max_block;
  bool require_success = false;
  std::string on_error = "skip";
  std::string preset;
};

void add_common(CLI::App *cmd, CommonInputs &in) {
  cmd->add_option("--txs", in.txs, "Transaction files (NDJSON or .csv)");
  cmd->add_option("--flashbots-manifest", in.manifest, "Flashbots block manifest (NDJSON)");
  cmd->add_option("--min-block", in.min_block, "Drop transactions below this block");
  cmd->add_option("--max-block", in.max_block, "Drop transactions above this block");
  cmd->add_flag("--require-success", in.require_success,
                "Drop transactions whose status says they failed");
  cmd->add_option("--on-error", in.on_error, "Malformed records: skip or abort")
      ->check(CLI::IsMember({"skip", "abort"}));
  cmd->add_option("--preset", in.preset, "Named study preset")
      ->check(CLI::IsMember({"paper-study"}));
}

LoadFilter make_filter(const CommonInputs &in) {
  LoadFilter f;
  if (!in.preset.empty()) f = paper_study_preset().filter;
  if (in.min_block) f.min_block = in.min_block;
  if (in.max_block) f.max_block = in.max_block;
  f.require_success = f.require_success || in.require_success;
  return f;
}

nlohmann::ordered_json load_report_json(const LoadReport &r, const ReadStats &rs,
                                        const ManifestReadStats &ms) {
  nlohmann::ordered_json j;
  j["input_records"] = r.input_records;
  j["skipped_lines"] = rs.skipped_lines;
  j["duplicates"] = r.duplicates;
  j["out_of_range"] = r.out_of_range;
  j["failed_dropped"] = r.failed_dropped;
  j["status_absent"] = r.status_absent;
  j["success_filter_unavailable"] = r.success_filter_unavailable;
  j["flashbots_members"] = r.flashbots_members;
  j["unmatched_manifest_entries"] = r.unmatched_manifest;
  j["manifest_pairs"] = ms.pairs;
  j["manifest_duplicate_hashes"] = ms.duplicate_hashes;
  j["manifest_skipped_lines"] = ms.skipped_lines;
  j["sample_errors"] = rs.sample_errors;
  return j;
}

std::size_t warning_count(const LoadReport &r, const ReadStats &rs,
                          const ManifestReadStats &ms) {
  return rs.skipped_lines + r.duplicates + r.unmatched_manifest + ms.skipped_lines +
         ms.duplicate_hashes + (r.success_filter_unavailable ? 1 : 0);
}

void print_warnings(std::ostream &err, const LoadReport &r, const ReadStats &rs,
                    const ManifestReadStats &ms) {
  if (rs.skipped_lines) err << fmt::format("warning: skipped {} malformed records\n", rs.skipped_lines);
  for (const auto &e : rs.sample_errors) err << "  " << e << '\n';
  if (r.duplicates) err << fmt::format("warning: {} duplicate hashes dropped (first occurrence kept)\n", r.duplicates);
  if (r.unmatched_manifest) {
    err << fmt::format("warning: {} unmatched manifest entries\n", r.unmatched_manifest);
  }
  if (ms.skipped_lines) err << fmt::format("warning: skipped {} malformed manifest lines\n", ms.skipped_lines);
  if (r.success_filter_unavailable) {
    err << fmt::format("warning: success filtering unavailable for {} records without status; kept\n",
                       r.status_absent);
  }
}

std::vector<std::pair<std::string, std::string>> digest_inputs(const std::vector<std::string> &paths) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto &p : paths) {
    if (!p.empty()) out.emplace_back(p, sha256_file(p));
  }
  return out;
}

void ensure_dir(const fs::path &dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError(fmt::format("cannot create output directory '{}'", dir.string()));
  }
}

// ---------------------------------------------------------------------------
// ingest

struct IngestArgs {
  CommonInputs in;
  std::string endpoint;
  std::string blocks;
  bool resume = false;
  bool fetch_flashbots = false;
  std::string out;
};

// Keeps the first `records` lines of a partially written fetch file.
void truncate_to_records(const fs::path &path, std::uint64_t records) {
  std::ifstream in(path, std::ios::binary);
  std::string kept, line;
  std::uint64_t n = 0;
  while (n < records && std::getline(in, line)) {
    kept += line;
    kept += '\n';
    ++n;
  }
  in.close();
  write_text_file(path, kept);
}

int cmd_ingest(const IngestArgs &a, const std::vector<std::string> &args,
               std::ostream &out, std::ostream &err) {
  const bool files_mode = !a.in.txs.empty();
  const bool endpoint_mode = !a.endpoint.empty();
  if (files_mode == endpoint_mode) {
    throw UsageError("ingest needs exactly one of --txs or --endpoint");
  }
  if (a.resume && !endpoint_mode) throw UsageError("--resume applies to --endpoint ingestion");
  const fs::path dir = a.out;
  ensure_dir(dir);

  LoadFilter filter = make_filter(a.in);
  ErrorPolicy policy = a.in.on_error == "abort" ? ErrorPolicy::abort : ErrorPolicy::skip;
  std::vector<std::string> tx_files = a.in.txs;
  std::string manifest_path = a.in.manifest;
  nlohmann::ordered_json fetch_json;

  if (endpoint_mode) {
    EndpointConfig config = load_endpoint_config(a.endpoint);
    BlockRange range;
    if (!a.blocks.empty()) {
      auto ranges = parse_block_ranges(a.blocks);
      if (ranges.size() != 1) throw UsageError("--blocks must name one range for --endpoint");
      range = ranges.front();
    } else if (filter.min_block && filter.max_block) {
      range = {*filter.min_block, *filter.max_block};
    } else {
      throw UsageError("--endpoint needs --blocks A-B (or --preset)");
    }
    const fs::path fetched = dir / "fetched.ndjson";
    const fs::path cp_path = dir / "checkpoint.json";
    std::optional<Checkpoint> resume;
    if (a.resume) {
      resume = read_checkpoint(cp_path);
      if (!resume) err << "note: no checkpoint found, starting from the first block\n";
    }
    if (resume) {
      truncate_to_records(fetched, resume->records_written);
    } else {
      write_text_file(fetched, "");
      std::error_code ec;
      fs::remove(cp_path, ec);
    }
    std::ofstream sink_file(fetched, std::ios::binary | std::ios::app);
    if (!sink_file) throw IoError(fmt::format("cannot append to '{}'", fetched.string()));
    FetchStats stats;
    try {
      stats = fetch_transactions(
          config, range, resume,
          [&](const Transaction &tx) {
            sink_file << serialize_tx_record(tx, RecordFormat::ndjson) << '\n';
          },
          [&](const Checkpoint &cp) {
            sink_file.flush();
            write_checkpoint(cp_path, cp);
          });
    } catch (const FetchInterrupted &e) {
      sink_file.flush();
      err << "error: fetch interrupted: " << e.what() << '\n';
      if (e.checkpoint()) {
        err << fmt::format("checkpoint at block {}; rerun with --resume to continue\n",
                           e.checkpoint()->last_completed_block);
      }
      return kExitFatal;
    }
    sink_file.close();
    tx_files = {fetched.string()};
    fetch_json["blocks"] = stats.blocks;
    fetch_json["transactions"] = stats.transactions;
    fetch_json["requests"] = stats.requests;
    fetch_json["retries"] = stats.retries;
    fetch_json["source"] = config.descriptor(range);

    if (a.fetch_flashbots) {
      auto records = fetch_flashbots_blocks(config, range);
      std::string text;
      for (const auto &r : records) text += r + "\n";
      manifest_path = (dir / "flashbots_fetched.ndjson").string();
      write_text_file(manifest_path, text);
    }
  }

  LoadReport report;
  ReadStats rs;
  ManifestReadStats ms;
  std::vector<fs::path> paths(tx_files.begin(), tx_files.end());
  std::optional<fs::path> manifest;
  if (!manifest_path.empty()) manifest = manifest_path;
  Dataset ds = load_dataset_files(paths, manifest, filter, policy, report, rs, ms);

  std::string tx_text;
  std::string member_text;
  std::map<std::uint64_t, std::vector<std::string>> members;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto &tx = ds.transactions()[i];
    tx_text += serialize_tx_record(tx, RecordFormat::ndjson);
    tx_text += '\n';
    if (ds.flashbots_member(i)) members[tx.block_number].push_back(tx.hash.text());
  }
  for (const auto &[block, hashes] : members) {
    nlohmann::ordered_json rec;
    rec["block_number"] = block;
    rec["transactions"] = nlohmann::ordered_json::array();
    for (const auto &h : hashes) rec["transactions"].push_back({{"transaction_hash", h}});
    member_text += rec.dump() + "\n";
  }
  write_text_file(dir / "transactions.ndjson", tx_text);
  write_text_file(dir / "flashbots.ndjson", member_text);

  nlohmann::ordered_json summary;
  summary["tool_version"] = std::string(kToolVersion);
  summary["command"] = join_command(args);
  summary["records_out"] = ds.size();
  summary["flashbots_out"] = ds.flashbots_count();
  summary["block_range"] = {ds.block_range().min, ds.block_range().max};
  summary["load"] = load_report_json(report, rs, ms);
  summary["warnings"] = warning_count(report, rs, ms);
  if (!fetch_json.empty()) summary["fetch"] = fetch_json;
  std::vector<std::string> inputs = tx_files;
  if (!manifest_path.empty()) inputs.push_back(manifest_path);
  auto &inj = summary["inputs"] = nlohmann::ordered_json::array();
  for (const auto &[p, d] : digest_inputs(inputs)) inj.push_back({{"path", p}, {"sha256", d}});
  write_text_file(dir / "ingest_summary.json", summary.dump(2) + "\n");

  print_warnings(err, report, rs, ms);
  out << fmt::format("ingested {} transactions ({} flashbots) into {}\n", ds.size(),
                     ds.flashbots_count(), dir.string());
  return kExitOk;
}

// ---------------------------------------------------------------------------
// analyze

struct AnalyzeArgs {
  CommonInputs in;
  std::string tags;
  std::string seed_accounts;
  std::string window = "week";
  std::string anchor;
  int count = 0;
  std::string blocks;
  std::string metric = "distinct";
  std::string direction = "total";
  std::size_t k = 10;
  std::string view = "full";
  std::string out;
  std::string pair;
  bool bottom = false;
  std::string new_convention = "seed-included";
  unsigned threads = 1;
};

std::pair<int, int> parse_pair(const std::string &text) {
  auto comma = text.find(',');
  try {
    if (comma == std::string::npos) throw std::invalid_argument("pair");
    std::size_t p1 = 0, p2 = 0;
    int a = std::stoi(text.substr(0, comma), &p1);
    int b = std::stoi(text.substr(comma + 1), &p2);
    if (p1 != comma || p2 != text.size() - comma - 1) throw std::invalid_argument("pair");
    return {a, b};
  } catch (const std::exception &) {
    throw UsageError(fmt::format("--pair expects 't,t+1', got '{}'", text));
  }
}

std::string window_noun(WindowMode mode) {
  switch (mode) {
  case WindowMode::utc_day:
    return "days";
  case WindowMode::utc_week:
    return "weeks";
  case WindowMode::block_range:
    break;
  }
  return "windows";
}

int cmd_analyze(const AnalyzeArgs &a, const std::vector<std::string> &args,
                std::ostream &out, std::ostream &err) {
  if (a.in.txs.empty()) throw UsageError("analyze needs --txs");
  if (a.k < 1) throw UsageError("--k must be at least 1");
  const bool use_preset = !a.in.preset.empty();
  const StudyPreset preset = paper_study_preset();

  const View view = pick<View>(a.view, {{"full", View::full}, {"flashbots", View::flashbots}}, "--view");
  const DegreeMetric metric = pick<DegreeMetric>(
      a.metric, {{"distinct", DegreeMetric::distinct}, {"txcount", DegreeMetric::tx_count}}, "--metric");
  const Direction direction = pick<Direction>(
      a.direction, {{"in", Direction::in}, {"out", Direction::out}, {"total", Direction::total}}, "--direction");
  const auto convention = pick<NewAccountConvention>(
      a.new_convention,
      {{"seed-included", NewAccountConvention::seed_included}, {"seed-excluded", NewAccountConvention::seed_excluded}},
      "--new-accounts");
  if (view == View::flashbots && a.in.manifest.empty()) {
    throw UsageError("--view flashbots needs --flashbots-manifest");
  }

  std::optional<Date> anchor;
  if (!a.anchor.empty()) {
    try {
      anchor = parse_iso_date(a.anchor);
    } catch (const ValidationError &e) {
      throw UsageError(e.what());
    }
  }
  std::optional<int> count;
  if (a.count > 0) count = a.count;

  WindowSpec spec;
  WindowSpec day_spec;
  if (a.window == "week") {
    if (!anchor && !use_preset) throw UsageError("--window week needs --anchor DATE (or --preset)");
    spec = use_preset ? preset.weeks : WindowSpec::weeks(*anchor, count);
    if (anchor) spec.anchor = anchor;
    if (count) spec.count = count;
    day_spec = use_preset ? preset.days
                          : WindowSpec::days(spec.anchor, spec.count ? std::optional<int>(*spec.count * 7)
                                                                     : std::nullopt);
    if (anchor) day_spec.anchor = anchor;
  } else if (a.window == "day") {
    spec = use_preset ? preset.days : WindowSpec::days(anchor, count);
    if (anchor) spec.anchor = anchor;
    if (count) spec.count = count;
    day_spec = spec;
  } else if (a.window == "blocks") {
    std::vector<BlockRange> ranges;
    if (!a.blocks.empty()) {
      try {
        ranges = parse_block_ranges(a.blocks);
      } catch (const ValidationError &e) {
        throw UsageError(e.what());
      }
    } else if (use_preset) {
      ranges = preset.period_blocks;
    } else {
      throw UsageError("--window blocks needs --blocks RANGES");
    }
    spec = WindowSpec::blocks(std::move(ranges));
    day_spec = use_preset ? preset.days : WindowSpec::days(anchor, std::nullopt);
  } else {
    throw UsageError(fmt::format("invalid value '{}' for --window", a.window));
  }
  try {
    spec.validate();
  } catch (const ValidationError &e) {
    throw UsageError(e.what());
  }

  const fs::path dir = a.out;
  ensure_dir(dir);

  LoadReport report;
  ReadStats rs;
  ManifestReadStats ms;
  std::vector<fs::path> paths(a.in.txs.begin(), a.in.txs.end());
  std::optional<fs::path> manifest;
  if (!a.in.manifest.empty()) manifest = a.in.manifest;
  const ErrorPolicy policy = a.in.on_error == "abort" ? ErrorPolicy::abort : ErrorPolicy::skip;
  Dataset ds = load_dataset_files(paths, manifest, make_filter(a.in), policy, report, rs, ms);

  TagMap tags;
  TagLoadStats tag_stats;
  if (!a.tags.empty()) tags = load_tag_map(a.tags, tag_stats);
  std::unordered_set<Address> seed;
  if (!a.seed_accounts.empty()) seed = read_seed_accounts(a.seed_accounts);

  const std::string vname{to_string(view)};
  const std::string mname{to_string(metric)};
  const std::string dname{to_string(direction)};
  ReportBundle bundle;
  bundle.metadata.command = join_command(args);
  bundle.metadata.dataset = ds.source_descriptor();
  bundle.metadata.window = spec.describe();
  {
    std::vector<std::string> inputs = a.in.txs;
    std::sort(inputs.begin(), inputs.end());
    for (const auto &p : {a.in.manifest, a.tags, a.seed_accounts}) inputs.push_back(p);
    bundle.inputs = digest_inputs(inputs);
  }
  const std::string meta_line =
      fmt::format("{} | tool {} | {}", bundle.metadata.command, kToolVersion, kUtcNotice);
  auto record = [&](const std::string &file, const char *kind, const std::string &window,
                    const std::string &dir_name, const std::string &metric_name) {
    bundle.artifacts.push_back({file, kind, vname, window, dir_name, metric_name});
  };

  // Daily series.
  Partition days = partition_windows(ds, day_spec, view);
  if (!days.windows.empty()) {
    VolumeSeries vol = volume_series(days);
    const std::string day_desc = day_spec.describe();
    emit_series_csv(vol, dir / fmt::format("volume_{}.csv", vname));
    record(fmt::format("volume_{}.csv", vname), "csv", day_desc, "-", "tx_count");
    ChartSeries vs{"transactions", {}};
    for (const auto &p : vol.points) {
      vs.points.emplace_back(static_cast<double>(p.date.time_since_epoch().count()),
                             static_cast<double>(p.count));
    }
    AxisSpec vaxes;
    vaxes.title = fmt::format("Daily transaction volume ({} view)", vname);
    vaxes.subtitle = fmt::format("{}; {}", day_desc, kUtcNotice);
    vaxes.x_label = "date (UTC)";
    vaxes.y_label = "transactions";
    vaxes.x_is_day = true;
    vaxes.metadata = meta_line;
    write_line_chart({vs}, vaxes, dir / fmt::format("volume_{}.svg", vname));
    record(fmt::format("volume_{}.svg", vname), "svg", day_desc, "-", "tx_count");

    ActivitySeries act = activity_series(ds, seed, days, convention);
    emit_series_csv(act, dir / fmt::format("activity_{}.csv", vname));
    record(fmt::format("activity_{}.csv", vname), "csv", day_desc, "-", "accounts");
    ChartSeries active{"active accounts", {}}, fresh{"new accounts", {}};
    for (const auto &d : act.days) {
      double x = static_cast<double>(d.date.time_since_epoch().count());
      active.points.emplace_back(x, static_cast<double>(d.active));
      fresh.points.emplace_back(x, static_cast<double>(d.new_accounts));
    }
    AxisSpec aaxes = vaxes;
    aaxes.title = fmt::format("Active and new accounts ({} view)", vname);
    aaxes.subtitle = fmt::format("{}; seed {} accounts; new on day 1 = {}; {}", day_desc,
                                 act.seed_size, a.new_convention, kUtcNotice);
    aaxes.y_label = "accounts";
    write_line_chart({active, fresh}, aaxes, dir / fmt::format("activity_{}.svg", vname));
    record(fmt::format("activity_{}.svg", vname), "svg", day_desc, "-", "accounts");
  } else {
    err << "warning: no transactions in view for the daily series\n";
  }

  // Window graphs and degree tables.
  Partition part = partition_windows(ds, spec, view);
  std::vector<WindowGraph> graphs = build_window_graphs(ds, part, a.threads);
  std::vector<DegreeTable> tables;
  tables.reserve(graphs.size());
  for (const auto &g : graphs) tables.push_back(degree_table(g, metric));

  for (std::size_t i = 0; i < part.windows.size(); ++i) {
    const Window &w = part.windows[i];
    std::string noun = window_noun(spec.mode);
    noun.pop_back();
    const std::string wlabel = fmt::format("{} {} ({})", noun, w.index, w.label());
    const std::string stem = fmt::format("{}_{}_w{}", vname, mname, w.index);
    write_text_file(dir / fmt::format("degrees_{}.csv", stem), degree_table_csv(tables[i]));
    record(fmt::format("degrees_{}.csv", stem), "csv", wlabel, "in/out/total", mname);
    std::vector<ChartSeries> curves;
    for (Direction d : {Direction::in, Direction::out}) {
      ChartSeries s{fmt::format("{}degree", to_string(d)), {}};
      for (const auto &p : degree_ccdf(tables[i], d)) {
        s.points.emplace_back(static_cast<double>(p.degree), p.fraction);
      }
      curves.push_back(std::move(s));
    }
    AxisSpec caxes;
    caxes.title = fmt::format("Degree CCDF, {} ({} view, {})", wlabel, vname, mname);
    caxes.subtitle = "log-log axes; per-window snapshot degrees, not cumulative";
    caxes.x_label = "degree d";
    caxes.y_label = "fraction of accounts with degree >= d";
    caxes.log_x = caxes.log_y = true;
    caxes.metadata = meta_line;
    write_line_chart(curves, caxes, dir / fmt::format("ccdf_{}.svg", stem));
    record(fmt::format("ccdf_{}.svg", stem), "svg", wlabel, "in,out", mname);
  }

  // Growth rankings.
  std::vector<std::pair<int, int>> pairs;
  const int n = static_cast<int>(part.windows.size());
  if (!a.pair.empty()) {
    auto p = parse_pair(a.pair);
    if (p.first < 1 || p.second <= p.first || p.second > n) {
      throw UsageError(fmt::format("--pair {} is outside windows 1..{}", a.pair, n));
    }
    pairs.push_back(p);
  } else {
    for (int t = 1; t < n; ++t) pairs.emplace_back(t, t + 1);
  }
  const RankOrder order = a.bottom ? RankOrder::bottom : RankOrder::top;
  for (auto [t0, t1] : pairs) {
    auto growth = degree_growth(tables[static_cast<std::size_t>(t0 - 1)],
                                tables[static_cast<std::size_t>(t1 - 1)], direction, {t0, t1});
    auto ranked = top_k_growth(growth, a.k, tags, order);
    std::string caption = fmt::format(
        "{} degree growth, {} {}→{}, {} view ({} metric, {} degree, k={})",
        a.bottom ? "Bottom" : "Top", window_noun(spec.mode), t0, t1, vname, mname, dname, a.k);
    std::string footer = fmt::format("Windows: {} / {}; {}; {}.", part.windows[static_cast<std::size_t>(t0 - 1)].label(),
                                     part.windows[static_cast<std::size_t>(t1 - 1)].label(), kTieBreakRule, kUtcNotice);
    std::string md = render_markdown_table(ranked, caption, footer);
    const std::string file = fmt::format("growth_{}_{}_{}_{}-{}{}.md", vname, mname, dname, t0, t1,
                                         a.bottom ? "_bottom" : "");
    write_text_file(dir / file, fmt::format("{}\n<!-- {} | tool {} -->\n", md, bundle.metadata.command, kToolVersion));
    record(file, "markdown", fmt::format("{} {}→{}", window_noun(spec.mode), t0, t1), dname, mname);
    out << md << '\n';
  }

  write_text_file(dir / "report.json", bundle.to_json());

  print_warnings(err, report, rs, ms);
  if (part.unassigned) {
    err << fmt::format("note: {} transactions fall outside every window ({})\n", part.unassigned,
                       spec.describe());
  }
  if (tag_stats.skipped_rows || tag_stats.overridden) {
    err << fmt::format("warning: tag file: {} rows skipped, {} overridden\n", tag_stats.skipped_rows,
                       tag_stats.overridden);
  }
  std::size_t warnings = warning_count(report, rs, ms) + tag_stats.skipped_rows + tag_stats.overridden;
  err << fmt::format("summary: {} transactions, {} windows, {} warnings\n", ds.size(), n, warnings);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// generate

struct GenerateArgs {
  SynthConfig config;
  std::string out;
};

int cmd_generate(const GenerateArgs &a, std::ostream &out) {
  const fs::path dir = a.out;
  ensure_dir(dir);
  SynthCorpus corpus = generate_corpus(a.config);
  write_text_file(dir / "transactions.ndjson", to_ndjson(corpus.records));
  write_text_file(dir / "flashbots.ndjson", to_manifest_ndjson(corpus.flashbots));
  std::string seed_text;
  for (const auto &s : corpus.seed) seed_text += s.text() + "\n";
  write_text_file(dir / "seed_accounts.txt", seed_text);
  out << fmt::format("wrote {} records, {} flashbots pairs, {} seed accounts to {}\n",
                     corpus.records.size(), corpus.flashbots.size(), corpus.seed.size(), dir.string());
  return kExitOk;
}

int cmd_preset(const std::string &name, std::ostream &out) {
  if (name != "paper-study") throw UsageError(fmt::format("unknown preset '{}'", name));
  StudyPreset p = paper_study_preset();
  nlohmann::ordered_json j;
  j["name"] = p.name;
  auto &weeks = j["weeks"] = nlohmann::ordered_json::array();
  Partition empty = partition_windows(Dataset{}, p.weeks);
  for (const auto &w : empty.windows) {
    weeks.push_back({{"index", w.index}, {"first_day", iso_date(*w.first_day)}, {"last_day", iso_date(*w.last_day)}});
  }
  j["days"] = {{"first_day", iso_date(*p.days.anchor)},
               {"last_day", iso_date(*p.days.anchor + std::chrono::days{*p.days.count - 1})}};
  j["block_filter"] = {*p.filter.min_block, *p.filter.max_block};
  auto &periods = j["period_blocks"] = nlohmann::ordered_json::array();
  for (const auto &r : p.period_blocks) periods.push_back({r.min, r.max});
  j["seed_interval"] = {iso_date(p.seed_from), iso_date(p.seed_to)};
  j["timezone"] = "UTC";
  out << j.dump(2) << '\n';
  return kExitOk;
}

} // namespace

int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  CLI::App app{"Temporal graph analytics for Ethereum-style transaction records", "ethgraph"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  IngestArgs ingest;
  auto *ingest_cmd = app.add_subcommand("ingest", "Parse or fetch transactions into a normalized dataset");
  add_common(ingest_cmd, ingest.in);
  ingest_cmd->add_option("--endpoint", ingest.endpoint, "Endpoint config file (key=value)");
  ingest_cmd->add_option("--blocks", ingest.blocks, "Block range A-B to fetch");
  ingest_cmd->add_flag("--resume", ingest.resume, "Continue from the checkpoint in --out");
  ingest_cmd->add_flag("--fetch-flashbots", ingest.fetch_flashbots,
                       "Also fetch the Flashbots block manifest for the range");
  ingest_cmd->add_option("--out", ingest.out, "Output directory")->required();

  AnalyzeArgs analyze;
  auto *analyze_cmd = app.add_subcommand("analyze", "Window graphs, series, degree distributions and rankings");
  add_common(analyze_cmd, analyze.in);
  analyze_cmd->add_option("--tags", analyze.tags, "Tag CSV (address,label,kind)");
  analyze_cmd->add_option("--seed-accounts", analyze.seed_accounts, "Accounts seeded into day 1");
  analyze_cmd->add_option("--window", analyze.window, "day, week or blocks")
      ->check(CLI::IsMember({"day", "week", "blocks"}));
  analyze_cmd->add_option("--anchor", analyze.anchor, "First day of window 1 (YYYY-MM-DD, UTC)");
  analyze_cmd->add_option("--count", analyze.count, "Number of day/week windows");
  analyze_cmd->add_option("--blocks", analyze.blocks, "Block windows, e.g. 100-199,200-299");
  analyze_cmd->add_option("--metric", analyze.metric, "distinct or txcount")
      ->check(CLI::IsMember({"distinct", "txcount"}));
  analyze_cmd->add_option("--direction", analyze.direction, "in, out or total")
      ->check(CLI::IsMember({"in", "out", "total"}));
  analyze_cmd->add_option("--k", analyze.k, "Rows per ranking table")->check(CLI::PositiveNumber);
  analyze_cmd->add_option("--view", analyze.view, "full or flashbots")
      ->check(CLI::IsMember({"full", "flashbots"}));
  analyze_cmd->add_option("--pair", analyze.pair, "Window pair t,t+1 (default: every consecutive pair)");
  analyze_cmd->add_flag("--bottom", analyze.bottom, "Rank the largest decreases instead");
  analyze_cmd->add_option("--new-accounts", analyze.new_convention, "Day-1 new accounts: seed-included or seed-excluded")
      ->check(CLI::IsMember({"seed-included", "seed-excluded"}));
  analyze_cmd->add_option("--threads", analyze.threads, "Threads for window graph construction");
  analyze_cmd->add_option("--out", analyze.out, "Output directory")->required();

  GenerateArgs gen;
  auto *gen_cmd = app.add_subcommand("generate", "Write a seeded synthetic corpus");
  gen_cmd->add_option("--seed", gen.config.seed, "Generator seed");
  gen_cmd->add_option("--transactions", gen.config.transactions, "Number of transactions");
  gen_cmd->add_option("--days", gen.config.days, "Days covered");
  gen_cmd->add_option("--accounts", gen.config.accounts, "Account pool size");
  gen_cmd->add_option("--seed-accounts", gen.config.seed_accounts, "Accounts written to seed_accounts.txt");
  gen_cmd->add_option("--duplicates-permille", gen.config.duplicate_permille, "Duplicated records per 1000");
  gen_cmd->add_option("--unmatched-manifest", gen.config.unmatched_manifest, "Manifest hashes with no transaction");
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();

  std::string preset_name;
  auto *preset_cmd = app.add_subcommand("preset", "Print a named study preset as JSON");
  preset_cmd->add_option("name", preset_name, "Preset name")->required();

  std::vector<std::string> argv_store;
  argv_store.push_back("ethgraph");
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char *> argv;
  for (const auto &s : argv_store) argv.push_back(s.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion &e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError &e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (*ingest_cmd) return cmd_ingest(ingest, args, out, err);
    if (*analyze_cmd) return cmd_analyze(analyze, args, out, err);
    if (*gen_cmd) return cmd_generate(gen, out);
    if (*preset_cmd) return cmd_preset(preset_name, out);
  } catch (const UsageError &e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const AuthError &e) {
    err << "error: authentication failed: " << e.what() << '\n';
    return kExitFatal;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return kExitFatal;
  }
  return kExitUsage;
}

} // namespace ethgraph
