#pragma once

#include "ethgraph/core.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace ethgraph {

/// A record-level parse failure. `line()` is 1-based; 0 when unknown.
class ParseError : public std::runtime_error {
public:
  ParseError(std::size_t line, const std::string &message);
  std::size_t line() const { return line_; }

private:
  std::size_t line_;
};

enum class RecordFormat { ndjson, csv };

/// Column positions for CSV transaction records, built from a header line.
class CsvLayout {
public:
  /// hash,blockNumber,timestamp,to,from,isError
  static CsvLayout canonical();
  /// Throws ParseError when a required column is missing from the header.
  static CsvLayout from_header(std::string_view header_line);

  int hash = -1;
  int block_number = -1;
  int timestamp = -1;
  int to = -1;
  int from = -1;
  int is_error = -1; // optional
};

inline constexpr std::string_view kCsvHeader =
    "hash,blockNumber,timestamp,to,from,isError";

/// Parses one transaction record. Field names follow the collected schema:
/// hash, blockNumber, timestamp, to, from and optional isError. Numbers may be
/// JSON integers or decimal strings. Empty or null "to" means contract creation.
Transaction parse_tx_record(std::string_view line, RecordFormat format,
                            std::size_t line_no = 0,
                            const CsvLayout &layout = CsvLayout::canonical());

/// Serializes in the canonical field order; numbers are written as decimal
/// strings in NDJSON. No trailing newline.
std::string serialize_tx_record(const Transaction &tx, RecordFormat format);

/// Unpacks one Flashbots block record into (block_number, tx_hash) pairs.
std::vector<std::pair<std::uint64_t, TxHash>>
parse_flashbots_block_record(std::string_view line, std::size_t line_no = 0);

/// Set of Flashbots-bundled transactions, unique by hash.
class FlashbotsManifest {
public:
  struct Entry {
    std::uint64_t block_number;
    TxHash tx_hash;
  };

  /// Returns false when the hash was already present (first entry kept).
  bool add(std::uint64_t block_number, const TxHash &hash);
  bool contains(const TxHash &hash) const;
  std::size_t size() const { return entries_.size(); }
  const std::vector<Entry> &entries() const { return entries_; }

private:
  std::vector<Entry> entries_;
  std::unordered_map<TxHash, std::size_t> index_;
};

enum class ErrorPolicy { skip, abort };

struct ReadStats {
  std::size_t records = 0;       // successfully parsed
  std::size_t skipped_lines = 0; // malformed, skipped under ErrorPolicy::skip
  std::size_t blank_lines = 0;
  std::vector<std::string> sample_errors; // first few messages
};

/// Infers the format from the extension: ".csv" is CSV, anything else NDJSON.
RecordFormat format_for_path(const std::filesystem::path &path);

/// Streams a transaction file; CSV files must start with a header line.
/// Under ErrorPolicy::abort the first malformed record throws ParseError.
std::vector<Transaction> read_tx_file(const std::filesystem::path &path,
                                      ErrorPolicy policy, ReadStats &stats);

/// Same as read_tx_file but over in-memory text (used for piped input).
std::vector<Transaction> read_tx_text(std::string_view text,
                                      RecordFormat format, ErrorPolicy policy,
                                      ReadStats &stats);

struct ManifestReadStats {
  std::size_t block_records = 0;
  std::size_t pairs = 0;
  std::size_t duplicate_hashes = 0;
  std::size_t skipped_lines = 0;
};

FlashbotsManifest read_manifest_file(const std::filesystem::path &path,
                                     ErrorPolicy policy,
                                     ManifestReadStats &stats);

struct LoadFilter {
  std::optional<std::uint64_t> min_block;
  std::optional<std::uint64_t> max_block;
  bool require_success = false;
};

struct BlockRange {
  std::uint64_t min = 0;
  std::uint64_t max = 0;
};

enum class View { full, flashbots };

std::string_view to_string(View view);

/// Transactions ordered by block number (stable within a block), unique by
/// hash, with Flashbots membership flags. The Flashbots view is a flagged
/// subset of the full view, never a separate copy.
class Dataset {
public:
  Dataset() = default;

  const std::vector<Transaction> &transactions() const { return txs_; }
  bool flashbots_member(std::size_t i) const { return flashbots_[i]; }
  bool in_view(std::size_t i, View view) const {
    return view == View::full || flashbots_[i];
  }
  std::size_t size() const { return txs_.size(); }
  std::size_t flashbots_count() const;
  /// Empty dataset reports {0, 0}.
  BlockRange block_range() const { return range_; }
  const std::string &source_descriptor() const { return source_; }

private:
  friend struct DatasetAssembler;
  std::vector<Transaction> txs_;
  std::vector<bool> flashbots_;
  BlockRange range_;
  std::string source_;
};

struct LoadReport {
  std::size_t input_records = 0;
  std::size_t duplicates = 0;
  std::size_t out_of_range = 0;
  std::size_t failed_dropped = 0;
  std::size_t flashbots_members = 0;
  std::size_t unmatched_manifest = 0;
  // require_success was requested but some records carried no status.
  bool success_filter_unavailable = false;
  std::size_t status_absent = 0;
};

/// Assembles a Dataset from one or more parsed sources, in the given order.
/// First occurrence of a hash wins.
Dataset load_dataset(const std::vector<std::vector<Transaction>> &sources,
                     const FlashbotsManifest *manifest, const LoadFilter &filter,
                     LoadReport &report, std::string source_descriptor = {});

/// File-based convenience: files are read in lexicographic path order so the
/// result does not depend on the order they were listed in.
Dataset load_dataset_files(std::vector<std::filesystem::path> tx_files,
                           const std::optional<std::filesystem::path> &manifest,
                           const LoadFilter &filter, ErrorPolicy policy,
                           LoadReport &report, ReadStats &read_stats,
                           ManifestReadStats &manifest_stats);

} // namespace ethgraph
