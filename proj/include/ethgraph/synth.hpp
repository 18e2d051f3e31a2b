#pragma once

#include "ethgraph/core.hpp"
#include "ethgraph/ingest.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

namespace ethgraph {

/// Parameters for a seeded synthetic corpus. Output depends only on these
/// values: draws use the raw std::mt19937_64 stream and integer arithmetic,
/// so corpora are identical across platforms and standard libraries.
struct SynthConfig {
  std::uint64_t seed = 42;
  std::size_t transactions = 2000;
  int days = 28;
  std::size_t accounts = 400;
  Date start = Date{std::chrono::year{2022} / 2 / 10};
  std::uint64_t first_block = 14174989;
  // Shares are expressed in parts per thousand.
  unsigned flashbots_permille = 60;
  unsigned creation_permille = 10;
  unsigned self_permille = 10;
  unsigned duplicate_permille = 0; // records re-emitted with the same hash
  unsigned failed_permille = 0;    // only used when with_status
  bool with_status = false;
  unsigned skew = 2;               // account popularity ~ u^skew
  std::size_t unmatched_manifest = 0; // manifest hashes absent from the txs
  std::size_t seed_accounts = 0;      // accounts listed as the seed set
};

struct SynthCorpus {
  std::vector<Transaction> records; // in emission order, may hold duplicates
  std::vector<std::pair<std::uint64_t, TxHash>> flashbots;
  std::vector<Address> seed;
};

SynthCorpus generate_corpus(const SynthConfig &config);

/// NDJSON text, one record per line.
std::string to_ndjson(const std::vector<Transaction> &records);
/// One Flashbots block record per block, ascending.
std::string to_manifest_ndjson(const std::vector<std::pair<std::uint64_t, TxHash>> &pairs);

/// Uniform integer in [0, n) from the raw engine stream (n > 0).
std::uint64_t draw_below(std::mt19937_64 &rng, std::uint64_t n);

} // namespace ethgraph
