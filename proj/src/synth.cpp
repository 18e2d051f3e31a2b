#include "ethgraph/synth.hpp"

#include <algorithm>
#include <map>

#include <fmt/format.h>

namespace ethgraph {

std::uint64_t draw_below(std::mt19937_64 &rng, std::uint64_t n) {
  // Rejection sampling keeps the draw unbiased.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

namespace {

template <std::size_t N> std::array<std::uint8_t, N> random_bytes(std::mt19937_64 &rng) {
  std::array<std::uint8_t, N> out{};
  for (std::size_t i = 0; i < N; i += 8) {
    std::uint64_t x = rng();
    for (std::size_t j = 0; j < 8 && i + j < N; ++j) {
      out[i + j] = static_cast<std::uint8_t>(x >> (8 * j));
    }
  }
  return out;
}

bool chance(std::mt19937_64 &rng, unsigned permille) {
  return draw_below(rng, 1000) < permille;
}

// Popularity-skewed account pick: index = floor(n * u^skew) with u drawn as
// an exact fixed-point fraction, so the result is integer-exact.
std::size_t pick_account(std::mt19937_64 &rng, std::size_t n, unsigned skew) {
  constexpr std::uint64_t kScale = 1u << 20;
  std::uint64_t prod = kScale;
  for (unsigned i = 0; i < std::max(1u, skew); ++i) {
    prod = prod * draw_below(rng, kScale) / kScale;
  }
  return static_cast<std::size_t>(static_cast<unsigned __int128>(prod) * n / kScale);
}

} // namespace

SynthCorpus generate_corpus(const SynthConfig &config) {
  if (config.accounts < 2 || config.days < 1) {
    throw ValidationError("synthetic corpus needs >= 2 accounts and >= 1 day");
  }
  std::mt19937_64 rng(config.seed);
  std::vector<Address> accounts;
  accounts.reserve(config.accounts);
  for (std::size_t i = 0; i < config.accounts; ++i) {
    accounts.push_back(Address::from_bytes(random_bytes<20>(rng)));
  }

  const std::int64_t start =
      std::chrono::duration_cast<std::chrono::seconds>(config.start.time_since_epoch()).count();
  const std::uint64_t span = static_cast<std::uint64_t>(config.days) * 86400;

  std::vector<std::int64_t> times(config.transactions);
  for (auto &t : times) t = start + static_cast<std::int64_t>(draw_below(rng, span));
  std::sort(times.begin(), times.end());

  SynthCorpus corpus;
  corpus.records.reserve(config.transactions);
  std::map<std::uint64_t, std::vector<TxHash>> fb_blocks;
  for (std::size_t i = 0; i < config.transactions; ++i) {
    Transaction tx;
    tx.hash = TxHash::from_bytes(random_bytes<32>(rng));
    tx.timestamp = times[i];
    tx.block_number = config.first_block + static_cast<std::uint64_t>(times[i] - start) / 13;
    std::size_t from = pick_account(rng, accounts.size(), config.skew);
    tx.from = accounts[from];
    if (chance(rng, config.creation_permille)) {
      // contract creation: no recipient
    } else if (chance(rng, config.self_permille)) {
      tx.to = tx.from;
    } else {
      std::size_t to = pick_account(rng, accounts.size(), config.skew);
      if (to == from) to = (to + 1 + draw_below(rng, accounts.size() - 1)) % accounts.size();
      tx.to = accounts[to];
    }
    if (config.with_status) tx.success = !chance(rng, config.failed_permille);
    if (chance(rng, config.flashbots_permille)) fb_blocks[tx.block_number].push_back(tx.hash);
    corpus.records.push_back(tx);
    if (chance(rng, config.duplicate_permille)) corpus.records.push_back(tx);
  }
  for (std::size_t i = 0; i < config.unmatched_manifest; ++i) {
    std::uint64_t block = config.first_block + draw_below(rng, span / 13 + 1);
    fb_blocks[block].push_back(TxHash::from_bytes(random_bytes<32>(rng)));
  }
  for (const auto &[block, hashes] : fb_blocks) {
    for (const auto &h : hashes) corpus.flashbots.emplace_back(block, h);
  }
  std::size_t n_seed = std::min(config.seed_accounts, accounts.size());
  for (std::size_t i = 0; i < n_seed; ++i) {
    corpus.seed.push_back(accounts[draw_below(rng, accounts.size())]);
  }
  return corpus;
}

std::string to_ndjson(const std::vector<Transaction> &records) {
  std::string out;
  out.reserve(records.size() * 240);
  for (const auto &tx : records) {
    out += serialize_tx_record(tx, RecordFormat::ndjson);
    out += '\n';
  }
  return out;
}

std::string to_manifest_ndjson(const std::vector<std::pair<std::uint64_t, TxHash>> &pairs) {
  std::map<std::uint64_t, std::vector<TxHash>> blocks;
  for (const auto &[b, h] : pairs) blocks[b].push_back(h);
  std::string out;
  for (const auto &[block, hashes] : blocks) {
    out += fmt::format(R"({{"block_number":{},"transactions":[)", block);
    for (std::size_t i = 0; i < hashes.size(); ++i) {
      out += fmt::format(R"({}{{"transaction_hash":"{}"}})", i ? "," : "", hashes[i].text());
    }
    out += "]}\n";
  }
  return out;
}

} // namespace ethgraph
