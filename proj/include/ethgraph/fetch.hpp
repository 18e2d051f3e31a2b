#pragma once

#include "ethgraph/core.hpp"
#include "ethgraph/ingest.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>

namespace ethgraph {

/// Connection settings for the Etherscan-compatible and Flashbots-blocks
/// compatible endpoints. Loaded from a key=value file; the API key may be
/// overridden by ETHGRAPH_API_KEY or ETHERSCAN_API_KEY.
struct EndpointConfig {
  std::string base_url;          // e.g. https://api.etherscan.io
  std::string api_path = "/api"; // Etherscan-style query endpoint
  std::string api_key;
  std::string flashbots_url;     // e.g. https://blocks.flashbots.net
  std::size_t flashbots_page_limit = 100;
  double requests_per_second = 5.0;
  int max_retries = 5;
  std::chrono::milliseconds backoff_initial{500};
  std::chrono::milliseconds backoff_max{30000};
  std::chrono::seconds timeout{30};
  unsigned concurrency = 1; // blocks requested in parallel

  /// Identifies the source in checkpoints; a resume must match it.
  std::string descriptor(BlockRange range) const;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string &)>;

/// Parses key=value lines ('#' comments allowed). Unknown keys are rejected.
EndpointConfig parse_endpoint_config(std::string_view text,
                                     const EnvLookup &env = {});
EndpointConfig load_endpoint_config(const std::filesystem::path &path);

struct Checkpoint {
  std::uint64_t last_completed_block = 0;
  std::uint64_t records_written = 0;
  std::string source_descriptor;
};

std::optional<Checkpoint> read_checkpoint(const std::filesystem::path &path);
/// Writes through a temporary file and rename so a crash never leaves a torn
/// checkpoint behind.
void write_checkpoint(const std::filesystem::path &path, const Checkpoint &cp);

/// Transport retries were exhausted. The checkpoint marks the last block that
/// was fully delivered; pass it back to fetch_transactions to resume.
class FetchInterrupted : public std::runtime_error {
public:
  FetchInterrupted(const std::string &what, std::optional<Checkpoint> cp)
      : std::runtime_error(what), checkpoint_(std::move(cp)) {}
  const std::optional<Checkpoint> &checkpoint() const { return checkpoint_; }

private:
  std::optional<Checkpoint> checkpoint_;
};

/// Rejected credentials. Never retried.
class AuthError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Spaces requests at least 1/rate seconds apart across all callers.
class RateLimiter {
public:
  explicit RateLimiter(double requests_per_second);
  void acquire();

private:
  std::mutex mu_;
  std::chrono::steady_clock::duration interval_;
  std::chrono::steady_clock::time_point next_;
};

struct FetchStats {
  std::uint64_t blocks = 0;
  std::uint64_t transactions = 0;
  std::uint64_t requests = 0;
  std::uint64_t retries = 0;
};

using TxSink = std::function<void(const Transaction &)>;
using CheckpointSink = std::function<void(const Checkpoint &)>;

/// Streams every transaction in the closed block interval in block order.
/// After each block is delivered to `sink`, `on_checkpoint` receives the new
/// checkpoint. A range with min > max is empty and produces nothing.
FetchStats fetch_transactions(const EndpointConfig &config, BlockRange range,
                              const std::optional<Checkpoint> &resume,
                              const TxSink &sink,
                              const CheckpointSink &on_checkpoint = {});

/// Pages through the Flashbots blocks endpoint and returns one interchange
/// record (block_number + transactions[].transaction_hash) per block in the
/// range, ascending by block number.
std::vector<std::string> fetch_flashbots_blocks(const EndpointConfig &config,
                                                BlockRange range);

} // namespace ethgraph
