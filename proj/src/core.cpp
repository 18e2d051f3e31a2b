#include "ethgraph/core.hpp"

#include <fmt/format.h>

namespace ethgraph {

namespace detail {

namespace {

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

} // namespace

void parse_hex_bytes(std::string_view raw, std::uint8_t *out, std::size_t n,
                     std::string_view what) {
  std::string_view digits = raw;
  if (digits.size() >= 2 && digits[0] == '0' &&
      (digits[1] == 'x' || digits[1] == 'X')) {
    digits.remove_prefix(2);
  }
  if (digits.size() != 2 * n) {
    throw ValidationError(fmt::format(
        "invalid {} '{}': expected {} characters including 0x prefix, got {}",
        what, raw, 2 + 2 * n, digits.size() + 2));
  }
  for (std::size_t i = 0; i < n; ++i) {
    int hi = hex_value(digits[2 * i]);
    int lo = hex_value(digits[2 * i + 1]);
    if (hi < 0 || lo < 0) {
      throw ValidationError(
          fmt::format("invalid {} '{}': non-hex character", what, raw));
    }
    out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
  }
}

std::string hex_text(const std::uint8_t *bytes, std::size_t n) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s(2 + 2 * n, '0');
  s[1] = 'x';
  for (std::size_t i = 0; i < n; ++i) {
    s[2 + 2 * i] = kDigits[bytes[i] >> 4];
    s[3 + 2 * i] = kDigits[bytes[i] & 0xf];
  }
  return s;
}

} // namespace detail

Address normalize_address(std::string_view raw) { return Address::parse(raw); }

TxHash normalize_tx_hash(std::string_view raw) { return TxHash::parse(raw); }

std::string shorten_address(const Address &addr) {
  std::string text = addr.text();
  return text.substr(text.size() - 7);
}

bool same_fields(const Transaction &a, const Transaction &b) {
  return a.hash == b.hash && a.block_number == b.block_number &&
         a.timestamp == b.timestamp && a.from == b.from && a.to == b.to &&
         a.success == b.success;
}

void validate_transaction(const Transaction &tx) {
  if (tx.block_number == 0) {
    throw ValidationError(
        fmt::format("transaction {}: blockNumber must be positive",
                    tx.hash.text()));
  }
  if (tx.timestamp <= 0) {
    throw ValidationError(fmt::format(
        "transaction {}: timestamp must be positive", tx.hash.text()));
  }
}

std::string_view to_string(TagKind kind) {
  switch (kind) {
  case TagKind::contract:
    return "contract";
  case TagKind::user:
    return "user";
  case TagKind::unknown:
    break;
  }
  return "unknown";
}

TagKind parse_tag_kind(std::string_view text) {
  if (text == "contract") return TagKind::contract;
  if (text == "user") return TagKind::user;
  if (text == "unknown" || text.empty()) return TagKind::unknown;
  throw ValidationError(fmt::format("unknown tag kind '{}'", text));
}

Date utc_date(std::int64_t unix_seconds) {
  return std::chrono::floor<std::chrono::days>(
      std::chrono::sys_seconds{std::chrono::seconds{unix_seconds}});
}

std::string iso_date(Date d) {
  std::chrono::year_month_day ymd{d};
  return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(ymd.year()),
                     static_cast<unsigned>(ymd.month()),
                     static_cast<unsigned>(ymd.day()));
}

Date parse_iso_date(std::string_view text) {
  auto bad = [&] {
    return ValidationError(
        fmt::format("invalid date '{}': expected YYYY-MM-DD", text));
  };
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') throw bad();
  auto num = [&](std::size_t pos, std::size_t len) {
    int v = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
      if (text[i] < '0' || text[i] > '9') throw bad();
      v = v * 10 + (text[i] - '0');
    }
    return v;
  };
  std::chrono::year_month_day ymd{std::chrono::year{num(0, 4)},
                                  std::chrono::month{static_cast<unsigned>(num(5, 2))},
                                  std::chrono::day{static_cast<unsigned>(num(8, 2))}};
  if (!ymd.ok()) throw bad();
  return Date{ymd};
}

std::vector<std::string> split_csv_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (quoted) throw ValidationError("unterminated quoted CSV field");
  fields.push_back(std::move(cur));
  return fields;
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) {
    return std::string(field);
  }
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

} // namespace ethgraph
