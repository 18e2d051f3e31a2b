#include "ethgraph/cli.hpp"
#include "ethgraph/ingest.hpp"
#include "ethgraph/synth.hpp"
#include "mock_endpoint.hpp"

#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

using namespace ethgraph;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = fs::path(ETHGRAPH_SOURCE_DIR) / "tests" / "fixtures";

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string &name) {
  fs::path p = fs::temp_directory_path() / ("ethgraph_test_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<std::string> csv_column(const fs::path &p, std::size_t col) {
  std::vector<std::string> out;
  std::istringstream in(slurp(p));
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) out.push_back(split_csv_line(line).at(col));
  return out;
}

} // namespace

TEST_CASE("conflicting or missing input modes are usage errors") {
  fs::path dir = fresh_dir("usage");
  fs::path cfg = dir / "endpoint.conf";
  std::ofstream(cfg) << "base_url=http://127.0.0.1:1\n";
  CHECK(cli({"ingest", "--txs", (kFixtures / "ingest" / "txs.ndjson").string(), "--endpoint", cfg.string(),
             "--out", (dir / "o").string()})
            .code == kExitUsage);
  CHECK(cli({"ingest", "--out", (dir / "o").string()}).code == kExitUsage);
  CHECK(cli({"analyze", "--txs", "x", "--window", "fortnight", "--out", (dir / "o").string()}).code == kExitUsage);
  CHECK(cli({"analyze", "--txs", "x", "--k", "0", "--out", (dir / "o").string()}).code == kExitUsage);
  CHECK(cli({"bogus"}).code == kExitUsage);
  CHECK(cli({"--help"}).code == kExitOk);
}

TEST_CASE("fatal errors exit with 1") {
  fs::path dir = fresh_dir("fatal");
  Run r = cli({"ingest", "--txs", (dir / "missing.ndjson").string(), "--out", (dir / "o").string()});
  CHECK(r.code == kExitFatal);
  CHECK(r.err.find("missing.ndjson") != std::string::npos);
  Run abort = cli({"ingest", "--txs", (kFixtures / "ingest" / "txs.ndjson").string(), "--on-error", "abort",
                   "--out", (dir / "o").string()});
  CHECK(abort.code == kExitFatal);
  CHECK(abort.err.find("line 5") != std::string::npos);
}

TEST_CASE("ingesting the fixture reproduces its known counts") {
  fs::path dir = fresh_dir("ingest");
  // Listed out of order on purpose; files are read in path order.
  Run r = cli({"ingest", "--txs", (kFixtures / "ingest" / "txs_more.csv").string(), "--txs",
               (kFixtures / "ingest" / "txs.ndjson").string(), "--flashbots-manifest",
               (kFixtures / "ingest" / "flashbots.ndjson").string(), "--preset", "paper-study",
               "--require-success", "--out", dir.string()});
  REQUIRE(r.code == kExitOk);
  auto s = nlohmann::json::parse(slurp(dir / "ingest_summary.json"));
  CHECK(s["records_out"] == 4);
  CHECK(s["flashbots_out"] == 2);
  CHECK(s["load"]["input_records"] == 8);
  CHECK(s["load"]["skipped_lines"] == 1);
  CHECK(s["load"]["duplicates"] == 2);
  CHECK(s["load"]["out_of_range"] == 1);
  CHECK(s["load"]["failed_dropped"] == 1);
  CHECK(s["load"]["flashbots_members"] == 2);
  CHECK(s["load"]["unmatched_manifest_entries"] == 1);
  CHECK(s["warnings"] == 4);
  CHECK(s["inputs"].size() == 3);
  CHECK(s["inputs"][0]["sha256"].get<std::string>().size() == 64);

  ReadStats rs;
  auto txs = read_tx_file(dir / "transactions.ndjson", ErrorPolicy::abort, rs);
  REQUIRE(txs.size() == 4);
  CHECK(txs[0].block_number == 14174989);
  CHECK(txs[3].block_number == 14265812);
  CHECK_FALSE(txs[2].to.has_value());
  ManifestReadStats ms;
  CHECK(read_manifest_file(dir / "flashbots.ndjson", ErrorPolicy::abort, ms).size() == 2);
}

TEST_CASE("endpoint ingestion resumes to the one-shot dataset") {
  SynthConfig cfg;
  cfg.seed = 9;
  cfg.transactions = 400;
  cfg.days = 1;
  auto corpus = generate_corpus(cfg);
  // One timestamp per block, as a chain would serve it.
  std::map<std::uint64_t, std::int64_t> block_ts;
  for (auto &tx : corpus.records) {
    auto [it, _] = block_ts.try_emplace(tx.block_number, tx.timestamp);
    tx.timestamp = it->second;
  }
  std::uint64_t lo = corpus.records.front().block_number, hi = lo + 300;
  mock::Endpoint ep;
  ep.set_chain(corpus.records, lo, hi);
  fs::path dir = fresh_dir("resume");
  fs::path conf = dir / "endpoint.conf";
  std::ofstream(conf) << "base_url=" << ep.base_url() << "\nrequests_per_second=5000\nmax_retries=1\n"
                      << "backoff_initial_ms=1\nbackoff_max_ms=2\ntimeout_s=5\nconcurrency=4\n";
  const std::string range = std::to_string(lo) + "-" + std::to_string(hi);

  REQUIRE(cli({"ingest", "--endpoint", conf.string(), "--blocks", range, "--out", (dir / "oneshot").string()}).code ==
          kExitOk);

  ep.fail_from_block(lo + 150);
  Run first = cli({"ingest", "--endpoint", conf.string(), "--blocks", range, "--out", (dir / "resumed").string()});
  CHECK(first.code == kExitFatal);
  CHECK(first.err.find("--resume") != std::string::npos);
  ep.heal();
  Run second = cli({"ingest", "--endpoint", conf.string(), "--blocks", range, "--resume", "--out",
                    (dir / "resumed").string()});
  REQUIRE(second.code == kExitOk);
  CHECK(slurp(dir / "resumed" / "transactions.ndjson") == slurp(dir / "oneshot" / "transactions.ndjson"));
  CHECK(slurp(dir / "resumed" / "fetched.ndjson") == slurp(dir / "oneshot" / "fetched.ndjson"));
  ReadStats rs;
  auto got = read_tx_file(dir / "oneshot" / "transactions.ndjson", ErrorPolicy::abort, rs);
  std::set<std::string> want_hashes, got_hashes;
  for (auto &tx : corpus.records)
    if (tx.block_number <= hi) want_hashes.insert(tx.hash.text());
  for (auto &tx : got) got_hashes.insert(tx.hash.text());
  CHECK(got_hashes == want_hashes);
}

TEST_CASE("analyze writes the bundle and captions the requested pair") {
  fs::path dir = fresh_dir("analyze");
  REQUIRE(cli({"generate", "--seed", "5", "--transactions", "3000", "--seed-accounts", "10", "--out",
               (dir / "in").string()})
              .code == kExitOk);
  const std::string txs = (dir / "in" / "transactions.ndjson").string();
  const std::string fb = (dir / "in" / "flashbots.ndjson").string();
  Run full = cli({"analyze", "--txs", txs, "--flashbots-manifest", fb, "--window", "week", "--anchor",
                  "2022-02-10", "--count", "4", "--pair", "2,3", "--k", "5", "--seed-accounts",
                  (dir / "in" / "seed_accounts.txt").string(), "--tags",
                  (fs::path(ETHGRAPH_SOURCE_DIR) / "data" / "study_tags.csv").string(), "--out",
                  (dir / "full").string()});
  REQUIRE(full.code == kExitOk);
  CHECK(full.out.find("weeks 2→3") != std::string::npos);
  CHECK(full.out.find("| Address | Tag | Degree Growth |") != std::string::npos);
  for (const char *f : {"volume_full.csv", "volume_full.svg", "activity_full.csv", "activity_full.svg",
                        "degrees_full_distinct_w1.csv", "degrees_full_distinct_w4.csv", "ccdf_full_distinct_w2.svg",
                        "growth_full_distinct_total_2-3.md", "report.json"}) {
    CHECK_MESSAGE(fs::exists(dir / "full" / f), f);
  }
  CHECK_FALSE(fs::exists(dir / "full" / "growth_full_distinct_total_1-2.md"));
  auto report = nlohmann::json::parse(slurp(dir / "full" / "report.json"));
  CHECK(report["inputs"].size() == 4);
  for (const auto &a : report["artifacts"]) {
    CHECK(a["view"] == "full");
    CHECK_FALSE(a["window"].get<std::string>().empty());
  }

  Run flash = cli({"analyze", "--txs", txs, "--flashbots-manifest", fb, "--view", "flashbots", "--window", "week",
                   "--anchor", "2022-02-10", "--count", "4", "--out", (dir / "fb").string()});
  REQUIRE(flash.code == kExitOk);
  auto a = csv_column(dir / "full" / "volume_full.csv", 1);
  auto b = csv_column(dir / "fb" / "volume_flashbots.csv", 1);
  auto dates_a = csv_column(dir / "full" / "volume_full.csv", 0);
  auto dates_b = csv_column(dir / "fb" / "volume_flashbots.csv", 0);
  REQUIRE(a.size() == b.size());
  CHECK(dates_a == dates_b);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::stoull(b[i]) <= std::stoull(a[i]));
  CHECK(fs::exists(dir / "fb" / "growth_flashbots_distinct_total_3-4.md"));

  CHECK(cli({"analyze", "--txs", txs, "--window", "week", "--anchor", "2022-02-10", "--count", "4", "--pair",
             "4,5", "--out", (dir / "bad").string()})
            .code == kExitUsage);
  CHECK(cli({"analyze", "--txs", txs, "--view", "flashbots", "--window", "week", "--anchor", "2022-02-10",
             "--out", (dir / "bad").string()})
            .code == kExitUsage);
}

TEST_CASE("analyze output is byte-identical across runs") {
  fs::path dir = fresh_dir("determinism");
  REQUIRE(cli({"generate", "--seed", "6", "--transactions", "1500", "--out", (dir / "in").string()}).code == kExitOk);
  auto run = [&](const std::string &out, const std::string &threads) {
    return cli({"analyze", "--txs", (dir / "in" / "transactions.ndjson").string(), "--flashbots-manifest",
                (dir / "in" / "flashbots.ndjson").string(), "--window", "week", "--anchor", "2022-02-10",
                "--threads", threads, "--out", (dir / out).string()});
  };
  auto snapshot = [&](const std::string &out) {
    std::map<std::string, std::string> files;
    for (const auto &e : fs::directory_iterator(dir / out)) files[e.path().filename().string()] = slurp(e.path());
    return files;
  };
  REQUIRE(run("a", "1").code == kExitOk);
  auto first = snapshot("a");
  REQUIRE(run("a", "1").code == kExitOk);
  CHECK(snapshot("a") == first);
  CHECK(first.size() > 10);

  // Thread count changes only the recorded command line.
  REQUIRE(run("b", "4").code == kExitOk);
  auto other = snapshot("b");
  auto body = [](const std::string &md) { return md.substr(0, md.rfind("<!-- ")); };
  for (const auto &[name, bytes] : first) {
    if (name.ends_with(".csv")) CHECK_MESSAGE(other[name] == bytes, name);
    if (name.ends_with(".md")) {
      CHECK_MESSAGE(body(other[name]) == body(bytes), name);
      CHECK(bytes.find("<!-- ethgraph analyze --txs ") != std::string::npos);
    }
  }
}

TEST_CASE("block windows and bottom rankings") {
  fs::path dir = fresh_dir("blocks");
  REQUIRE(cli({"generate", "--seed", "7", "--transactions", "2000", "--out", (dir / "in").string()}).code == kExitOk);
  Run r = cli({"analyze", "--txs", (dir / "in" / "transactions.ndjson").string(), "--window", "blocks", "--blocks",
               "14174989-14220000,14220001-14270000", "--metric", "txcount", "--direction", "in", "--bottom",
               "--out", (dir / "o").string()});
  REQUIRE(r.code == kExitOk);
  CHECK(r.out.find("Bottom degree growth, windows 1→2") != std::string::npos);
  CHECK(fs::exists(dir / "o" / "growth_full_txcount_in_1-2_bottom.md"));
  CHECK(cli({"analyze", "--txs", (dir / "in" / "transactions.ndjson").string(), "--window", "blocks", "--blocks",
             "10-20,15-30", "--out", (dir / "o").string()})
            .code == kExitUsage);
}

TEST_CASE("paper-study preset") {
  Run r = cli({"preset", "paper-study"});
  REQUIRE(r.code == kExitOk);
  auto j = nlohmann::json::parse(r.out);
  CHECK(j["weeks"][0]["first_day"] == "2022-02-10");
  CHECK(j["weeks"][0]["last_day"] == "2022-02-16");
  CHECK(j["weeks"][1]["first_day"] == "2022-02-17");
  CHECK(j["weeks"].size() == 4);
  CHECK(j["block_filter"][0] == 14174989);
  CHECK(j["block_filter"][1] == 14355747);
  CHECK(j["period_blocks"][0][1] == 14265470);
  CHECK(j["period_blocks"][1][0] == 14265812);
  CHECK(j["seed_interval"][0] == "2022-01-10");
  CHECK(j["timezone"] == "UTC");
  CHECK(cli({"preset", "other"}).code == kExitUsage);
}
