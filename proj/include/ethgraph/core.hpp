#pragma once

#include <array>
#include <chrono>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ethgraph {

/// Raised when a textual identifier, date or config value fails validation.
class ValidationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

namespace detail {

// Parses "0x"-prefixed (or bare) hex of exactly 2*N digits into bytes.
// Throws ValidationError naming the input on failure.
void parse_hex_bytes(std::string_view raw, std::uint8_t *out, std::size_t n,
                     std::string_view what);
std::string hex_text(const std::uint8_t *bytes, std::size_t n);

} // namespace detail

/// Fixed-width hex identifier stored as raw bytes. The canonical text form is
/// lowercase with a "0x" prefix; equality and ordering follow that text.
template <std::size_t N, class Tag> class HexId {
public:
  static constexpr std::size_t kBytes = N;
  static constexpr std::size_t kTextLength = 2 + 2 * N;

  HexId() = default;

  static HexId parse(std::string_view raw) {
    HexId id;
    detail::parse_hex_bytes(raw, id.bytes_.data(), N, Tag::kName);
    return id;
  }

  static HexId from_bytes(const std::array<std::uint8_t, N> &bytes) {
    HexId id;
    id.bytes_ = bytes;
    return id;
  }

  std::string text() const { return detail::hex_text(bytes_.data(), N); }
  const std::array<std::uint8_t, N> &bytes() const { return bytes_; }

  // Byte order comparison matches lexicographic order of the lowercase text.
  friend auto operator<=>(const HexId &, const HexId &) = default;
  friend bool operator==(const HexId &, const HexId &) = default;

private:
  std::array<std::uint8_t, N> bytes_{};
};

struct AddressTag {
  static constexpr const char *kName = "address";
};
struct TxHashTag {
  static constexpr const char *kName = "transaction hash";
};

using Address = HexId<20, AddressTag>;
using TxHash = HexId<32, TxHashTag>;

struct HexIdHash {
  template <std::size_t N, class Tag>
  std::size_t operator()(const HexId<N, Tag> &id) const noexcept {
    // FNV-1a over the raw bytes.
    std::uint64_t h = 1469598103934665603ULL;
    for (auto b : id.bytes()) {
      h ^= b;
      h *= 1099511628211ULL;
    }
    return static_cast<std::size_t>(h);
  }
};

Address normalize_address(std::string_view raw);
TxHash normalize_tx_hash(std::string_view raw);

/// Final seven characters of the canonical address text.
std::string shorten_address(const Address &addr);

/// One external transaction. Identity (equality, dedup key) is the hash alone.
struct Transaction {
  TxHash hash;
  std::uint64_t block_number = 0;
  std::int64_t timestamp = 0; // Unix seconds, UTC
  Address from;
  std::optional<Address> to;  // absent for contract creation
  std::optional<bool> success; // absent when the source carries no status

  friend bool operator==(const Transaction &a, const Transaction &b) {
    return a.hash == b.hash;
  }
};

/// Field-by-field comparison, unlike operator== which compares hashes only.
bool same_fields(const Transaction &a, const Transaction &b);

/// Throws ValidationError when block_number or timestamp is not positive.
void validate_transaction(const Transaction &tx);

enum class TagKind { contract, user, unknown };

std::string_view to_string(TagKind kind);
TagKind parse_tag_kind(std::string_view text);

struct Tag {
  Address address;
  std::string label;
  TagKind kind = TagKind::unknown;
};

// ---------------------------------------------------------------------------
// UTC calendar helpers. Day boundaries are always UTC midnight.

using Date = std::chrono::sys_days;

Date utc_date(std::int64_t unix_seconds);
std::string iso_date(Date d);
/// Parses YYYY-MM-DD.
Date parse_iso_date(std::string_view text);

// ---------------------------------------------------------------------------
// Minimal RFC-4180 helpers shared by the CSV readers and writers.

/// Splits one CSV line into fields, honouring double-quoted fields with ""
/// escapes. Throws ValidationError on an unterminated quote.
std::vector<std::string> split_csv_line(std::string_view line);
/// Quotes a field when it contains a comma, quote, CR or LF.
std::string csv_escape(std::string_view field);

} // namespace ethgraph

template <std::size_t N, class Tag> struct std::hash<ethgraph::HexId<N, Tag>> {
  std::size_t operator()(const ethgraph::HexId<N, Tag> &id) const noexcept {
    return ethgraph::HexIdHash{}(id);
  }
};
