#include "ethgraph/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

namespace ethgraph {

using nlohmann::json;

namespace {

constexpr std::size_t kMaxSampleErrors = 10;

std::uint64_t parse_decimal(std::string_view text, std::string_view field,
                            std::size_t line_no) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ParseError(line_no,
                     fmt::format("field '{}' is not a decimal integer: '{}'",
                                 field, text));
  }
  return v;
}

std::uint64_t json_number(const json &obj, const char *field,
                          std::size_t line_no) {
  auto it = obj.find(field);
  if (it == obj.end() || it->is_null()) {
    throw ParseError(line_no, fmt::format("missing required field '{}'", field));
  }
  if (it->is_number_unsigned()) return it->get<std::uint64_t>();
  if (it->is_number_integer()) {
    auto v = it->get<std::int64_t>();
    if (v < 0) {
      throw ParseError(line_no, fmt::format("field '{}' is negative", field));
    }
    return static_cast<std::uint64_t>(v);
  }
  if (it->is_string()) {
    return parse_decimal(it->get_ref<const std::string &>(), field, line_no);
  }
  throw ParseError(line_no,
                   fmt::format("field '{}' must be an integer or string", field));
}

const std::string *json_string(const json &obj, const char *field) {
  auto it = obj.find(field);
  if (it == obj.end() || it->is_null()) return nullptr;
  if (!it->is_string()) return nullptr;
  return &it->get_ref<const std::string &>();
}

std::optional<bool> status_from_is_error(std::string_view text,
                                         std::size_t line_no) {
  if (text.empty()) return std::nullopt;
  if (text == "0") return true;
  if (text == "1") return false;
  throw ParseError(line_no,
                   fmt::format("field 'isError' must be \"0\" or \"1\", got '{}'",
                               text));
}

template <class Fn> auto wrap_validation(std::size_t line_no, Fn &&fn) {
  try {
    return fn();
  } catch (const ValidationError &e) {
    throw ParseError(line_no, e.what());
  }
}

Transaction parse_ndjson(std::string_view line, std::size_t line_no) {
  json obj = json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (obj.is_discarded() || !obj.is_object()) {
    throw ParseError(line_no, "record is not a JSON object");
  }
  Transaction tx;
  const std::string *hash = json_string(obj, "hash");
  if (!hash) throw ParseError(line_no, "missing required field 'hash'");
  const std::string *from = json_string(obj, "from");
  if (!from) throw ParseError(line_no, "missing required field 'from'");
  tx.block_number = json_number(obj, "blockNumber", line_no);
  tx.timestamp = static_cast<std::int64_t>(json_number(obj, "timestamp", line_no));
  wrap_validation(line_no, [&] {
    tx.hash = normalize_tx_hash(*hash);
    tx.from = normalize_address(*from);
    if (const std::string *to = json_string(obj, "to"); to && !to->empty()) {
      tx.to = normalize_address(*to);
    }
    return 0;
  });
  if (auto it = obj.find("isError"); it != obj.end() && !it->is_null()) {
    if (it->is_string()) {
      tx.success = status_from_is_error(it->get_ref<const std::string &>(), line_no);
    } else if (it->is_number_integer()) {
      tx.success = status_from_is_error(std::to_string(it->get<std::int64_t>()),
                                        line_no);
    } else {
      throw ParseError(line_no, "field 'isError' has an unsupported type");
    }
  }
  return tx;
}

Transaction parse_csv(std::string_view line, std::size_t line_no,
                      const CsvLayout &layout) {
  std::vector<std::string> fields = wrap_validation(
      line_no, [&] { return split_csv_line(line); });
  auto field = [&](int col, const char *name,
                   bool required) -> std::optional<std::string_view> {
    if (col < 0 || static_cast<std::size_t>(col) >= fields.size()) {
      if (required) {
        throw ParseError(line_no, fmt::format("missing required field '{}'", name));
      }
      return std::nullopt;
    }
    std::string_view v = fields[static_cast<std::size_t>(col)];
    if (required && v.empty()) {
      throw ParseError(line_no, fmt::format("missing required field '{}'", name));
    }
    return v;
  };
  Transaction tx;
  auto hash = *field(layout.hash, "hash", true);
  auto from = *field(layout.from, "from", true);
  tx.block_number =
      parse_decimal(*field(layout.block_number, "blockNumber", true),
                    "blockNumber", line_no);
  tx.timestamp = static_cast<std::int64_t>(parse_decimal(
      *field(layout.timestamp, "timestamp", true), "timestamp", line_no));
  auto to = field(layout.to, "to", false);
  wrap_validation(line_no, [&] {
    tx.hash = normalize_tx_hash(hash);
    tx.from = normalize_address(from);
    if (to && !to->empty() && *to != "null") tx.to = normalize_address(*to);
    return 0;
  });
  if (auto status = field(layout.is_error, "isError", false)) {
    tx.success = status_from_is_error(*status, line_no);
  }
  return tx;
}

bool is_blank(std::string_view line) {
  return line.find_first_not_of(" \t\r") == std::string_view::npos;
}

void note_error(ReadStats &stats, const ParseError &e) {
  ++stats.skipped_lines;
  if (stats.sample_errors.size() < kMaxSampleErrors) {
    stats.sample_errors.emplace_back(e.what());
  }
}

} // namespace

ParseError::ParseError(std::size_t line, const std::string &message)
    : std::runtime_error(line ? fmt::format("line {}: {}", line, message)
                              : message),
      line_(line) {}

CsvLayout CsvLayout::canonical() {
  CsvLayout l;
  l.hash = 0;
  l.block_number = 1;
  l.timestamp = 2;
  l.to = 3;
  l.from = 4;
  l.is_error = 5;
  return l;
}

CsvLayout CsvLayout::from_header(std::string_view header_line) {
  CsvLayout l;
  std::vector<std::string> cols =
      wrap_validation(1, [&] { return split_csv_line(header_line); });
  for (std::size_t i = 0; i < cols.size(); ++i) {
    const std::string &c = cols[i];
    int idx = static_cast<int>(i);
    if (c == "hash") l.hash = idx;
    else if (c == "blockNumber") l.block_number = idx;
    else if (c == "timestamp") l.timestamp = idx;
    else if (c == "to") l.to = idx;
    else if (c == "from") l.from = idx;
    else if (c == "isError") l.is_error = idx;
  }
  for (auto [col, name] : {std::pair{l.hash, "hash"},
                           std::pair{l.block_number, "blockNumber"},
                           std::pair{l.timestamp, "timestamp"},
                           std::pair{l.to, "to"}, std::pair{l.from, "from"}}) {
    if (col < 0) {
      throw ParseError(1, fmt::format("CSV header lacks column '{}'", name));
    }
  }
  return l;
}

Transaction parse_tx_record(std::string_view line, RecordFormat format,
                            std::size_t line_no, const CsvLayout &layout) {
  Transaction tx = format == RecordFormat::ndjson
                       ? parse_ndjson(line, line_no)
                       : parse_csv(line, line_no, layout);
  wrap_validation(line_no, [&] {
    validate_transaction(tx);
    return 0;
  });
  return tx;
}

std::string serialize_tx_record(const Transaction &tx, RecordFormat format) {
  std::string to = tx.to ? tx.to->text() : std::string{};
  if (format == RecordFormat::csv) {
    std::string is_error =
        tx.success ? (*tx.success ? "0" : "1") : std::string{};
    return fmt::format("{},{},{},{},{},{}", tx.hash.text(), tx.block_number,
                       tx.timestamp, to, tx.from.text(), is_error);
  }
  std::string out = fmt::format(
      R"({{"hash":"{}","blockNumber":"{}","timestamp":"{}","to":{},"from":"{}")",
      tx.hash.text(), tx.block_number, tx.timestamp,
      tx.to ? "\"" + to + "\"" : std::string("null"), tx.from.text());
  if (tx.success) {
    out += fmt::format(R"(,"isError":"{}")", *tx.success ? "0" : "1");
  }
  out += '}';
  return out;
}

std::vector<std::pair<std::uint64_t, TxHash>>
parse_flashbots_block_record(std::string_view line, std::size_t line_no) {
  json obj = json::parse(line, nullptr, false);
  if (obj.is_discarded() || !obj.is_object()) {
    throw ParseError(line_no, "block record is not a JSON object");
  }
  std::uint64_t block = json_number(obj, "block_number", line_no);
  auto txs = obj.find("transactions");
  if (txs == obj.end() || !txs->is_array()) {
    throw ParseError(line_no, "block record lacks a 'transactions' array");
  }
  std::vector<std::pair<std::uint64_t, TxHash>> out;
  out.reserve(txs->size());
  for (const json &entry : *txs) {
    const std::string *hash =
        entry.is_object() ? json_string(entry, "transaction_hash") : nullptr;
    if (!hash) {
      throw ParseError(line_no, "bundled transaction lacks 'transaction_hash'");
    }
    out.emplace_back(block,
                     wrap_validation(line_no, [&] { return normalize_tx_hash(*hash); }));
  }
  return out;
}

bool FlashbotsManifest::add(std::uint64_t block_number, const TxHash &hash) {
  auto [it, inserted] = index_.try_emplace(hash, entries_.size());
  if (!inserted) return false;
  entries_.push_back({block_number, hash});
  return true;
}

bool FlashbotsManifest::contains(const TxHash &hash) const {
  return index_.count(hash) != 0;
}

RecordFormat format_for_path(const std::filesystem::path &path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".csv" ? RecordFormat::csv : RecordFormat::ndjson;
}

namespace {

template <class LineFn>
void for_each_line(std::istream &in, LineFn &&fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    fn(std::string_view(line), line_no);
  }
}

std::vector<Transaction> read_tx_stream(std::istream &in, RecordFormat format,
                                        ErrorPolicy policy, ReadStats &stats) {
  std::vector<Transaction> out;
  std::optional<CsvLayout> layout;
  if (format == RecordFormat::ndjson) layout = CsvLayout::canonical();
  for_each_line(in, [&](std::string_view line, std::size_t line_no) {
    if (is_blank(line)) {
      ++stats.blank_lines;
      return;
    }
    if (!layout) {
      layout = CsvLayout::from_header(line);
      return;
    }
    try {
      out.push_back(parse_tx_record(line, format, line_no, *layout));
      ++stats.records;
    } catch (const ParseError &e) {
      if (policy == ErrorPolicy::abort) throw;
      note_error(stats, e);
    }
  });
  return out;
}

} // namespace

std::vector<Transaction> read_tx_file(const std::filesystem::path &path,
                                      ErrorPolicy policy, ReadStats &stats) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error(
        fmt::format("cannot open transaction file '{}'", path.string()));
  }
  return read_tx_stream(in, format_for_path(path), policy, stats);
}

std::vector<Transaction> read_tx_text(std::string_view text,
                                      RecordFormat format, ErrorPolicy policy,
                                      ReadStats &stats) {
  std::istringstream in{std::string(text)};
  return read_tx_stream(in, format, policy, stats);
}

FlashbotsManifest read_manifest_file(const std::filesystem::path &path,
                                     ErrorPolicy policy,
                                     ManifestReadStats &stats) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error(
        fmt::format("cannot open Flashbots manifest '{}'", path.string()));
  }
  FlashbotsManifest manifest;
  for_each_line(in, [&](std::string_view line, std::size_t line_no) {
    if (is_blank(line)) return;
    try {
      auto pairs = parse_flashbots_block_record(line, line_no);
      ++stats.block_records;
      for (const auto &[block, hash] : pairs) {
        ++stats.pairs;
        if (!manifest.add(block, hash)) ++stats.duplicate_hashes;
      }
    } catch (const ParseError &) {
      if (policy == ErrorPolicy::abort) throw;
      ++stats.skipped_lines;
    }
  });
  return manifest;
}

std::string_view to_string(View view) {
  return view == View::full ? "full" : "flashbots";
}

std::size_t Dataset::flashbots_count() const {
  return static_cast<std::size_t>(
      std::count(flashbots_.begin(), flashbots_.end(), true));
}

struct DatasetAssembler {
  static Dataset assemble(const std::vector<std::vector<Transaction>> &sources,
                          const FlashbotsManifest *manifest,
                          const LoadFilter &filter, LoadReport &report,
                          std::string source_descriptor) {
    report = LoadReport{};
    Dataset ds;
    ds.source_ = std::move(source_descriptor);

    std::size_t total = 0;
    for (const auto &s : sources) total += s.size();
    report.input_records = total;

    std::unordered_map<TxHash, std::size_t> seen;
    seen.reserve(total);
    ds.txs_.reserve(total);
    for (const auto &source : sources) {
      for (const Transaction &tx : source) {
        if (!seen.try_emplace(tx.hash, 0).second) {
          ++report.duplicates;
          continue;
        }
        if ((filter.min_block && tx.block_number < *filter.min_block) ||
            (filter.max_block && tx.block_number > *filter.max_block)) {
          ++report.out_of_range;
          continue;
        }
        if (!tx.success) ++report.status_absent;
        if (filter.require_success && tx.success && !*tx.success) {
          ++report.failed_dropped;
          continue;
        }
        ds.txs_.push_back(tx);
      }
    }
    report.success_filter_unavailable =
        filter.require_success && report.status_absent > 0;

    std::stable_sort(ds.txs_.begin(), ds.txs_.end(),
                     [](const Transaction &a, const Transaction &b) {
                       return a.block_number < b.block_number;
                     });

    ds.flashbots_.assign(ds.txs_.size(), false);
    if (manifest) {
      std::unordered_map<TxHash, std::size_t> position;
      position.reserve(ds.txs_.size());
      for (std::size_t i = 0; i < ds.txs_.size(); ++i) {
        position.emplace(ds.txs_[i].hash, i);
      }
      for (const auto &entry : manifest->entries()) {
        auto it = position.find(entry.tx_hash);
        if (it == position.end()) {
          ++report.unmatched_manifest;
        } else {
          ds.flashbots_[it->second] = true;
          ++report.flashbots_members;
        }
      }
    }
    if (!ds.txs_.empty()) {
      ds.range_ = {ds.txs_.front().block_number, ds.txs_.back().block_number};
    }
    return ds;
  }
};

Dataset load_dataset(const std::vector<std::vector<Transaction>> &sources,
                     const FlashbotsManifest *manifest, const LoadFilter &filter,
                     LoadReport &report, std::string source_descriptor) {
  return DatasetAssembler::assemble(sources, manifest, filter, report,
                                    std::move(source_descriptor));
}

Dataset load_dataset_files(std::vector<std::filesystem::path> tx_files,
                           const std::optional<std::filesystem::path> &manifest,
                           const LoadFilter &filter, ErrorPolicy policy,
                           LoadReport &report, ReadStats &read_stats,
                           ManifestReadStats &manifest_stats) {
  std::sort(tx_files.begin(), tx_files.end());
  std::vector<std::vector<Transaction>> sources;
  std::string descriptor;
  for (const auto &path : tx_files) {
    sources.push_back(read_tx_file(path, policy, read_stats));
    if (!descriptor.empty()) descriptor += ';';
    descriptor += path.generic_string();
  }
  std::optional<FlashbotsManifest> fb;
  if (manifest) {
    fb = read_manifest_file(*manifest, policy, manifest_stats);
    descriptor += fmt::format(" +flashbots:{}", manifest->generic_string());
  }
  return load_dataset(sources, fb ? &*fb : nullptr, filter, report,
                      std::move(descriptor));
}

} // namespace ethgraph
