#include "ethgraph/fetch.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <future>
#include <map>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>
#include <json.hpp>

namespace ethgraph {

using nlohmann::json;

std::string EndpointConfig::descriptor(BlockRange range) const {
  return fmt::format("etherscan:{}{} blocks {}-{}", base_url, api_path,
                     range.min, range.max);
}

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

template <class T> T parse_config_number(const std::string &key, const std::string &v) {
  T out{};
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc{} || p != v.data() + v.size()) {
    throw ValidationError(fmt::format("config key '{}': invalid number '{}'", key, v));
  }
  return out;
}

double parse_config_double(const std::string &key, const std::string &v) {
  char *end = nullptr;
  double d = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || !(d > 0)) {
    throw ValidationError(
        fmt::format("config key '{}': expected a positive number, got '{}'", key, v));
  }
  return d;
}

std::uint64_t hex_quantity(const json &v, const char *what) {
  if (!v.is_string()) {
    throw std::runtime_error(fmt::format("endpoint field '{}' is not a string", what));
  }
  const auto &s = v.get_ref<const std::string &>();
  std::string_view digits = s;
  int base = 10;
  if (digits.size() > 2 && digits[0] == '0' && (digits[1] == 'x' || digits[1] == 'X')) {
    digits.remove_prefix(2);
    base = 16;
  }
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), out, base);
  if (digits.empty() || ec != std::errc{} || p != digits.data() + digits.size()) {
    throw std::runtime_error(fmt::format("endpoint field '{}' is malformed: '{}'", what, s));
  }
  return out;
}

// Outcome of a single HTTP round trip.
enum class Attempt { ok, transient, auth, fatal };

struct Response {
  Attempt kind = Attempt::ok;
  json body;
  std::string message;
};

struct UrlParts {
  std::string origin; // scheme://host[:port]
  std::string prefix; // path prefix, no trailing slash
};

UrlParts split_url(const std::string &url) {
  auto scheme = url.find("://");
  auto path_start = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  if (path_start == std::string::npos) return {url, ""};
  std::string prefix = url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {url.substr(0, path_start), prefix};
}

Response http_get_json(const std::string &base_url, const std::string &path,
                       const httplib::Params &params,
                       std::chrono::seconds timeout) {
  UrlParts url = split_url(base_url);
  httplib::Client client(url.origin);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  auto res = client.Get(url.prefix + path, params, httplib::Headers{});
  if (!res) {
    return {Attempt::transient, {}, fmt::format("transport error: {}", httplib::to_string(res.error()))};
  }
  if (res->status == 401 || res->status == 403) {
    return {Attempt::auth, {}, fmt::format("HTTP {}: authentication rejected", res->status)};
  }
  if (res->status == 429 || res->status >= 500) {
    return {Attempt::transient, {}, fmt::format("HTTP {}", res->status)};
  }
  if (res->status != 200) {
    return {Attempt::fatal, {}, fmt::format("HTTP {} for {}", res->status, path)};
  }
  json body = json::parse(res->body, nullptr, false);
  if (body.is_discarded()) {
    return {Attempt::transient, {}, "response body is not JSON"};
  }
  return {Attempt::ok, std::move(body), {}};
}

bool mentions(const json &v, std::string_view needle) {
  if (!v.is_string()) return false;
  std::string s = v.get<std::string>();
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s.find(needle) != std::string::npos;
}

class Requester {
public:
  Requester(const EndpointConfig &config, RateLimiter &limiter)
      : config_(config), limiter_(limiter) {}

  // Returns the parsed body or throws: AuthError immediately, or
  // std::runtime_error tagged transient once retries run out.
  json get(const std::string &base, const std::string &path,
           const httplib::Params &params,
           const std::function<Attempt(const json &, std::string &)> &classify) {
    std::string last;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
      if (attempt > 0) {
        ++retries;
        auto delay = config_.backoff_initial * (1LL << std::min(attempt - 1, 20));
        std::this_thread::sleep_for(std::min<std::chrono::milliseconds>(
            std::chrono::duration_cast<std::chrono::milliseconds>(delay),
            config_.backoff_max));
      }
      limiter_.acquire();
      ++requests;
      Response r = http_get_json(base, path, params, config_.timeout);
      if (r.kind == Attempt::ok) {
        r.kind = classify(r.body, r.message);
      }
      switch (r.kind) {
      case Attempt::ok:
        return std::move(r.body);
      case Attempt::auth:
        throw AuthError(r.message);
      case Attempt::fatal:
        throw std::runtime_error(r.message);
      case Attempt::transient:
        last = r.message;
        break;
      }
    }
    throw TransientFailure(fmt::format("giving up after {} attempts: {}",
                                       config_.max_retries + 1, last));
  }

  struct TransientFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
  };

  std::atomic<std::uint64_t> requests{0};
  std::atomic<std::uint64_t> retries{0};

private:
  const EndpointConfig &config_;
  RateLimiter &limiter_;
};

Attempt classify_etherscan(const json &body, std::string &message) {
  if (body.contains("status") && body["status"] == "0") {
    const json &result = body.contains("result") ? body["result"] : json();
    message = result.is_string() ? result.get<std::string>()
                                 : body.value("message", std::string("NOTOK"));
    if (mentions(result, "api key")) return Attempt::auth;
    return Attempt::transient; // rate limit and similar soft errors
  }
  if (body.contains("error")) {
    message = body["error"].dump();
    return Attempt::transient;
  }
  if (!body.contains("result") || !body["result"].is_object()) {
    message = "block not available";
    return Attempt::transient;
  }
  return Attempt::ok;
}

std::vector<Transaction> block_transactions(const json &block,
                                            std::uint64_t expected_block) {
  std::uint64_t number = hex_quantity(block.at("number"), "number");
  if (number != expected_block) {
    throw std::runtime_error(fmt::format(
        "endpoint returned block {} for a request of block {}", number, expected_block));
  }
  auto timestamp = static_cast<std::int64_t>(hex_quantity(block.at("timestamp"), "timestamp"));
  std::vector<Transaction> out;
  for (const json &t : block.at("transactions")) {
    Transaction tx;
    tx.hash = normalize_tx_hash(t.at("hash").get<std::string>());
    tx.block_number = number;
    tx.timestamp = timestamp;
    tx.from = normalize_address(t.at("from").get<std::string>());
    if (auto it = t.find("to"); it != t.end() && it->is_string() && !it->get_ref<const std::string &>().empty()) {
      tx.to = normalize_address(it->get<std::string>());
    }
    validate_transaction(tx);
    out.push_back(std::move(tx));
  }
  return out;
}

} // namespace

EndpointConfig parse_endpoint_config(std::string_view text, const EnvLookup &env) {
  EndpointConfig c;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ValidationError(fmt::format("config line {}: expected key=value", line_no));
    }
    std::string key = trim(std::string_view(t).substr(0, eq));
    std::string value = trim(std::string_view(t).substr(eq + 1));
    if (key == "base_url") c.base_url = value;
    else if (key == "api_path") c.api_path = value;
    else if (key == "api_key") c.api_key = value;
    else if (key == "flashbots_url") c.flashbots_url = value;
    else if (key == "flashbots_page_limit") c.flashbots_page_limit = parse_config_number<std::size_t>(key, value);
    else if (key == "requests_per_second") c.requests_per_second = parse_config_double(key, value);
    else if (key == "max_retries") c.max_retries = parse_config_number<int>(key, value);
    else if (key == "backoff_initial_ms") c.backoff_initial = std::chrono::milliseconds(parse_config_number<long>(key, value));
    else if (key == "backoff_max_ms") c.backoff_max = std::chrono::milliseconds(parse_config_number<long>(key, value));
    else if (key == "timeout_s") c.timeout = std::chrono::seconds(parse_config_number<long>(key, value));
    else if (key == "concurrency") c.concurrency = std::max(1u, parse_config_number<unsigned>(key, value));
    else throw ValidationError(fmt::format("config line {}: unknown key '{}'", line_no, key));
  }
  if (env) {
    for (const char *var : {"ETHGRAPH_API_KEY", "ETHERSCAN_API_KEY"}) {
      if (auto v = env(var); v && !v->empty()) {
        c.api_key = *v;
        break;
      }
    }
  }
  if (c.base_url.empty() && c.flashbots_url.empty()) {
    throw ValidationError("endpoint config needs base_url or flashbots_url");
  }
  return c;
}

EndpointConfig load_endpoint_config(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error(fmt::format("cannot open endpoint config '{}'", path.string()));
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_endpoint_config(buf.str(), [](const std::string &name) -> std::optional<std::string> {
    if (const char *v = std::getenv(name.c_str())) return std::string(v);
    return std::nullopt;
  });
}

std::optional<Checkpoint> read_checkpoint(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw ValidationError(fmt::format("checkpoint '{}' is not a JSON object", path.string()));
  }
  try {
    return Checkpoint{j.at("last_completed_block").get<std::uint64_t>(),
                      j.at("records_written").get<std::uint64_t>(),
                      j.at("source_descriptor").get<std::string>()};
  } catch (const json::exception &e) {
    throw ValidationError(fmt::format("checkpoint '{}': {}", path.string(), e.what()));
  }
}

void write_checkpoint(const std::filesystem::path &path, const Checkpoint &cp) {
  json j = {{"last_completed_block", cp.last_completed_block},
            {"records_written", cp.records_written},
            {"source_descriptor", cp.source_descriptor}};
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw std::runtime_error(fmt::format("cannot write checkpoint '{}'", tmp.string()));
    }
    out << j.dump() << '\n';
  }
  std::filesystem::rename(tmp, path);
}

RateLimiter::RateLimiter(double requests_per_second)
    : interval_(std::chrono::duration_cast<std::chrono::steady_clock::duration>(
          std::chrono::duration<double>(1.0 / requests_per_second))),
      next_(std::chrono::steady_clock::now()) {
  if (!(requests_per_second > 0)) {
    throw ValidationError("request rate must be positive");
  }
}

void RateLimiter::acquire() {
  std::chrono::steady_clock::time_point slot;
  {
    std::lock_guard lock(mu_);
    auto now = std::chrono::steady_clock::now();
    slot = std::max(now, next_);
    next_ = slot + interval_;
  }
  std::this_thread::sleep_until(slot);
}

FetchStats fetch_transactions(const EndpointConfig &config, BlockRange range,
                              const std::optional<Checkpoint> &resume,
                              const TxSink &sink,
                              const CheckpointSink &on_checkpoint) {
  FetchStats stats;
  if (range.min > range.max) return stats;
  if (config.base_url.empty()) {
    throw ValidationError("endpoint config has no base_url");
  }

  const std::string descriptor = config.descriptor(range);
  Checkpoint cp{0, 0, descriptor};
  std::uint64_t next_block = range.min;
  if (resume) {
    if (resume->source_descriptor != descriptor) {
      throw ValidationError(fmt::format(
          "checkpoint belongs to '{}', not '{}'", resume->source_descriptor, descriptor));
    }
    if (resume->last_completed_block + 1 < range.min ||
        resume->last_completed_block > range.max) {
      throw ValidationError("checkpoint block lies outside the requested range");
    }
    cp = *resume;
    next_block = resume->last_completed_block + 1;
  }
  std::optional<Checkpoint> last_good = resume;

  RateLimiter limiter(config.requests_per_second);
  Requester requester(config, limiter);
  auto fetch_block = [&](std::uint64_t block) {
    httplib::Params params{{"module", "proxy"},
                           {"action", "eth_getBlockByNumber"},
                           {"tag", fmt::format("0x{:x}", block)},
                           {"boolean", "true"}};
    if (!config.api_key.empty()) params.emplace("apikey", config.api_key);
    json body = requester.get(config.base_url, config.api_path, params, classify_etherscan);
    return block_transactions(body["result"], block);
  };

  const unsigned width = std::max(1u, config.concurrency);
  while (next_block <= range.max) {
    std::uint64_t batch_end =
        std::min<std::uint64_t>(range.max, next_block + width - 1);
    std::vector<std::future<std::vector<Transaction>>> pending;
    for (std::uint64_t b = next_block; b <= batch_end; ++b) {
      pending.push_back(std::async(width > 1 ? std::launch::async : std::launch::deferred,
                                   fetch_block, b));
    }
    // Deliver in block order; stop at the first failure so the checkpoint
    // always marks a gap-free prefix.
    for (std::uint64_t b = next_block; b <= batch_end; ++b) {
      std::vector<Transaction> txs;
      try {
        txs = pending[b - next_block].get();
      } catch (const Requester::TransientFailure &e) {
        for (auto &f : pending) {
          if (f.valid()) {
            try { f.get(); } catch (...) {}
          }
        }
        stats.requests = requester.requests;
        stats.retries = requester.retries;
        throw FetchInterrupted(fmt::format("block {}: {}", b, e.what()), last_good);
      } catch (...) {
        for (auto &f : pending) {
          if (f.valid()) {
            try { f.get(); } catch (...) {}
          }
        }
        throw;
      }
      for (const auto &tx : txs) sink(tx);
      ++stats.blocks;
      stats.transactions += txs.size();
      cp.last_completed_block = b;
      cp.records_written += txs.size();
      last_good = cp;
      if (on_checkpoint) on_checkpoint(cp);
    }
    next_block = batch_end + 1;
  }
  stats.requests = requester.requests;
  stats.retries = requester.retries;
  return stats;
}

std::vector<std::string> fetch_flashbots_blocks(const EndpointConfig &config,
                                                BlockRange range) {
  if (range.min > range.max) return {};
  if (config.flashbots_url.empty()) {
    throw ValidationError("endpoint config has no flashbots_url");
  }
  RateLimiter limiter(config.requests_per_second);
  Requester requester(config, limiter);
  auto classify = [](const json &body, std::string &message) {
    if (!body.is_object() || !body.contains("blocks") || !body["blocks"].is_array()) {
      message = "response lacks a 'blocks' array";
      return Attempt::transient;
    }
    return Attempt::ok;
  };

  std::map<std::uint64_t, std::string> records;
  std::uint64_t before = range.max + 1;
  for (;;) {
    httplib::Params params{{"before", std::to_string(before)},
                           {"limit", std::to_string(config.flashbots_page_limit)}};
    json body;
    try {
      body = requester.get(config.flashbots_url, "/v1/blocks", params, classify);
    } catch (const Requester::TransientFailure &e) {
      throw FetchInterrupted(e.what(), std::nullopt);
    }
    const json &blocks = body["blocks"];
    if (blocks.empty()) break;
    std::uint64_t lowest = before;
    for (const json &b : blocks) {
      std::uint64_t number = b.at("block_number").is_string()
                                 ? hex_quantity(b.at("block_number"), "block_number")
                                 : b.at("block_number").get<std::uint64_t>();
      lowest = std::min(lowest, number);
      if (number < range.min || number > range.max) continue;
      json rec = {{"block_number", number}, {"transactions", json::array()}};
      for (const json &t : b.value("transactions", json::array())) {
        rec["transactions"].push_back(
            {{"transaction_hash", normalize_tx_hash(t.at("transaction_hash").get<std::string>()).text()}});
      }
      records[number] = rec.dump();
    }
    if (lowest <= range.min || lowest >= before) break;
    before = lowest;
  }
  std::vector<std::string> out;
  out.reserve(records.size());
  for (auto &[_, rec] : records) out.push_back(std::move(rec));
  return out;
}

} // namespace ethgraph
