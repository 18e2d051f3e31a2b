#include "ethgraph/analytics.hpp"
#include "ethgraph/synth.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

using namespace ethgraph;

namespace {

constexpr std::int64_t kFeb10 = 1644451200;
constexpr std::int64_t kDay = 86400;

Address addr(char c) { return normalize_address("0x" + std::string(40, c)); }

Transaction tx(int n, char from, std::optional<char> to, std::int64_t ts) {
  Transaction t;
  std::string h = std::to_string(n);
  t.hash = normalize_tx_hash("0x" + std::string(64 - h.size(), '0') + h);
  t.block_number = 14174989 + static_cast<std::uint64_t>(ts - kFeb10) / 13;
  t.timestamp = ts;
  t.from = addr(from);
  if (to) t.to = addr(*to);
  return t;
}

DegreeTable table(const std::vector<Transaction> &txs, DegreeMetric m = DegreeMetric::distinct) {
  return degree_table(build_window_graph(txs), m);
}

GrowthRecord rec(char a, std::int64_t delta, std::uint64_t next) {
  GrowthRecord r;
  r.account = addr(a);
  r.delta = delta;
  r.degree_next = next;
  r.degree_prev = static_cast<std::uint64_t>(static_cast<std::int64_t>(next) - delta);
  return r;
}

} // namespace

TEST_CASE("volume counts per day, including empty days") {
  std::vector<Transaction> txs = {tx(1, 'a', 'b', kFeb10), tx(2, 'a', 'b', kFeb10 + 5), tx(3, 'b', 'c', kFeb10 + 9),
                                  tx(4, 'a', 'c', kFeb10 + 2 * kDay), tx(5, 'c', std::nullopt, kFeb10 + 2 * kDay + 1)};
  LoadReport r;
  Dataset ds = load_dataset({txs}, nullptr, {}, r);
  VolumeSeries v = volume_series(partition_windows(ds, WindowSpec::days()));
  REQUIRE(v.points.size() == 3);
  CHECK(v.points[0].count == 3);
  CHECK(v.points[1].count == 0);
  CHECK(v.points[2].count == 2);
  CHECK(iso_date(v.points[1].date) == "2022-02-11");
  CHECK(v.total() == 5);
  CHECK_THROWS_AS(volume_series(partition_windows(ds, WindowSpec::weeks(parse_iso_date("2022-02-10")))),
                  ValidationError);
}

TEST_CASE("Flashbots view volume never exceeds the full view") {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    SynthConfig cfg;
    cfg.seed = seed;
    cfg.transactions = 3000;
    cfg.flashbots_permille = 50 * seed;
    SynthCorpus c = generate_corpus(cfg);
    FlashbotsManifest m;
    for (auto &[b, h] : c.flashbots) m.add(b, h);
    LoadReport r;
    Dataset ds = load_dataset({c.records}, &m, {}, r);
    auto spec = WindowSpec::days(parse_iso_date("2022-02-10"), 28);
    VolumeSeries full = volume_series(partition_windows(ds, spec, View::full));
    VolumeSeries fb = volume_series(partition_windows(ds, spec, View::flashbots));
    REQUIRE(full.points.size() == fb.points.size());
    for (std::size_t i = 0; i < full.points.size(); ++i) CHECK(fb.points[i].count <= full.points[i].count);
    CHECK(fb.total() == ds.flashbots_count());
    CHECK(fb.view == View::flashbots);
  }
}

TEST_CASE("28-day volume equals the date-bucket oracle") {
  SynthConfig cfg;
  cfg.seed = 28;
  cfg.transactions = 6000;
  SynthCorpus c = generate_corpus(cfg);
  LoadReport r;
  Dataset ds = load_dataset({c.records}, nullptr, {}, r);
  Partition p = partition_windows(ds, WindowSpec::days(parse_iso_date("2022-02-10"), 28));
  VolumeSeries v = volume_series(p);
  auto expected = oracle::volume(ds.transactions(), kFeb10, 28);
  REQUIRE(v.points.size() == 28);
  for (std::size_t i = 0; i < 28; ++i) CHECK(v.points[i].count == expected[i]);
  CHECK(v.total() == ds.size() - p.unassigned);
}

TEST_CASE("degree growth examples") {
  DegreeTable prev = table({tx(1, 'a', 'b', kFeb10)});
  DegreeTable next = table({tx(2, 'a', 'b', kFeb10), tx(3, 'a', 'c', kFeb10), tx(4, 'a', 'd', kFeb10),
                            tx(5, 'e', 'b', kFeb10), tx(6, 'e', 'c', kFeb10), tx(7, 'e', 'd', kFeb10),
                            tx(8, 'e', 'a', kFeb10), tx(9, 'f', 'e', kFeb10)});
  auto out = degree_growth(prev, next, Direction::out, {2, 3});
  auto find = [](const std::vector<GrowthRecord> &v, char c) {
    for (const auto &r : v)
      if (r.account == addr(c)) return r;
    FAIL("account missing");
    return GrowthRecord{};
  };
  CHECK(find(out, 'a').delta == 2);
  CHECK(find(out, 'a').week_pair == std::pair{2, 3});
  auto total = degree_growth(prev, next, Direction::total);
  CHECK(find(total, 'e').degree_prev == 0);
  CHECK(find(total, 'e').degree_next == 5);
  CHECK(find(total, 'e').delta == 5);

  DegreeTable shrink = table({tx(10, 'a', 'b', kFeb10)});
  auto neg = degree_growth(next, shrink, Direction::total);
  CHECK(find(neg, 'e').delta == -5);
  CHECK(find(neg, 'e').degree_next == 0);

  CHECK_THROWS_AS(degree_growth(prev, table({tx(11, 'a', 'b', kFeb10)}, DegreeMetric::tx_count), Direction::total),
                  ValidationError);
}

TEST_CASE("two-week growth equals the two-pass recount oracle") {
  SynthConfig cfg;
  cfg.seed = 77;
  cfg.transactions = 6000;
  cfg.days = 14;
  cfg.accounts = 500;
  SynthCorpus c = generate_corpus(cfg);
  LoadReport r;
  Dataset ds = load_dataset({c.records}, nullptr, {}, r);
  Partition weeks = partition_windows(ds, WindowSpec::weeks(parse_iso_date("2022-02-10"), 2));
  std::vector<Transaction> w1, w2;
  for (auto i : weeks.windows[0].tx_indices) w1.push_back(ds.transactions()[i]);
  for (auto i : weeks.windows[1].tx_indices) w2.push_back(ds.transactions()[i]);
  auto graphs = build_window_graphs(ds, weeks);
  for (auto metric : {DegreeMetric::distinct, DegreeMetric::tx_count}) {
    DegreeTable a = degree_table(graphs[0], metric), b = degree_table(graphs[1], metric);
    std::vector<std::vector<GrowthRecord>> by_dir;
    int d = 0;
    for (auto dir : {Direction::in, Direction::out, Direction::total}) {
      auto got = degree_growth(a, b, dir);
      auto want = oracle::growth(w1, w2, metric == DegreeMetric::distinct, d++);
      REQUIRE(got.size() == want.size());
      for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i].account.text() == want[i].account);
        CHECK(got[i].degree_prev == want[i].prev);
        CHECK(got[i].degree_next == want[i].next);
        CHECK(got[i].delta == want[i].delta);
      }
      by_dir.push_back(std::move(got));
    }
    for (std::size_t i = 0; i < by_dir[2].size(); ++i) {
      CHECK(by_dir[2][i].delta == by_dir[0][i].delta + by_dir[1][i].delta);
    }
    // Ranking agrees with a full sort of the oracle records.
    auto ranked = top_k_growth(by_dir[2], 10, TagMap{});
    auto want = oracle::top_k(oracle::growth(w1, w2, metric == DegreeMetric::distinct, 2), 10);
    REQUIRE(ranked.size() == want.size());
    for (std::size_t i = 0; i < ranked.size(); ++i) {
      CHECK(ranked[i].account.text() == want[i].account);
      CHECK(ranked[i].delta == want[i].delta);
    }
  }
}

TEST_CASE("top-k tie rule: larger next degree, then ascending address") {
  std::vector<GrowthRecord> recs = {rec('a', 5, 8), rec('b', 5, 9), rec('c', 1, 1)};
  auto top = top_k_growth(recs, 2, TagMap{});
  REQUIRE(top.size() == 2);
  CHECK(top[0].account == addr('b'));
  CHECK(top[1].account == addr('a'));

  std::vector<GrowthRecord> flat = {rec('d', 3, 4), rec('1', 3, 4), rec('9', 3, 4)};
  auto byaddr = top_k_growth(flat, 3, TagMap{});
  CHECK(byaddr[0].account == addr('1'));
  CHECK(byaddr[1].account == addr('9'));
  CHECK(byaddr[2].account == addr('d'));

  CHECK(top_k_growth(recs, 10, TagMap{}).size() == 3);
  CHECK(top_k_growth({}, 10, TagMap{}).empty());
  CHECK_THROWS_AS(top_k_growth(recs, 0, TagMap{}), ValidationError);
}

TEST_CASE("negative deltas only surface in the bottom ranking") {
  std::vector<GrowthRecord> recs = {rec('a', -4, 0), rec('b', 2, 3), rec('c', -1, 1)};
  auto top = top_k_growth(recs, 2, TagMap{});
  CHECK(top[0].delta == 2);
  CHECK(top[1].delta == -1);
  auto bottom = top_k_growth(recs, 1, TagMap{}, RankOrder::bottom);
  REQUIRE(bottom.size() == 1);
  CHECK(bottom[0].account == addr('a'));
  CHECK(bottom[0].delta == -4);
}

TEST_CASE("top-k is invariant under input permutation") {
  std::mt19937_64 rng(3);
  std::vector<GrowthRecord> recs;
  const std::string hex = "0123456789abcdef";
  for (int i = 0; i < 300; ++i) {
    GrowthRecord r;
    std::string a = "0x";
    for (int j = 0; j < 40; ++j) a += hex[rng() % 16];
    r.account = normalize_address(a);
    r.degree_next = rng() % 6;
    r.delta = static_cast<std::int64_t>(rng() % 5) - 2;
    recs.push_back(r);
  }
  auto base = top_k_growth(recs, 25, TagMap{});
  for (int i = 0; i < 10; ++i) {
    std::shuffle(recs.begin(), recs.end(), rng);
    auto again = top_k_growth(recs, 25, TagMap{});
    for (std::size_t j = 0; j < base.size(); ++j) CHECK(again[j].account == base[j].account);
  }
}

TEST_CASE("ranked rows carry tags and short addresses") {
  TagMap tags;
  Address cb = normalize_address("0xa090e606e30bd747d4e6245a1517ebe430f0057e");
  tags.insert({cb, "Coinbase: Miscellaneous", TagKind::contract});
  GrowthRecord r;
  r.account = cb;
  r.delta = 106853;
  r.degree_next = 106853;
  auto rows = top_k_growth({r, rec('b', 1, 1)}, 10, tags);
  CHECK(rows[0].short_address == "0f0057e");
  CHECK(rows[0].label == "Coinbase: Miscellaneous");
  CHECK(rows[0].kind == TagKind::contract);
  CHECK(rows[1].label == TagMap::kNoPublicTag);
  CHECK(rows[1].kind == TagKind::unknown);
}

TEST_CASE("CCDF examples") {
  auto pts = degree_ccdf(table({tx(1, 'a', 'b', kFeb10), tx(2, 'c', 'd', kFeb10), tx(3, 'c', 'e', kFeb10),
                                tx(4, 'f', '1', kFeb10), tx(5, 'f', '2', kFeb10), tx(6, 'f', '3', kFeb10),
                                tx(7, 'f', '4', kFeb10)}),
                         Direction::out);
  // out-degrees: a=1, c=2, f=4, the rest 0.
  REQUIRE(pts.size() == 3);
  CHECK(pts[0].degree == 1);
  CHECK(pts[0].fraction == doctest::Approx(1.0));
  CHECK(pts[1].degree == 2);
  CHECK(pts[1].fraction == doctest::Approx(2.0 / 3.0));
  CHECK(pts[2].degree == 4);
  CHECK(pts[2].fraction == doctest::Approx(1.0 / 3.0));

  DegreeTable t;
  for (auto [c, d] : std::vector<std::pair<char, std::uint64_t>>{{'a', 1}, {'b', 1}, {'c', 2}, {'d', 4}}) {
    t.records.push_back({addr(c), d, 0, d, DegreeMetric::distinct});
  }
  auto four = degree_ccdf(t, Direction::in);
  REQUIRE(four.size() == 3);
  CHECK(four[0].fraction == doctest::Approx(1.0));
  CHECK(four[1].degree == 2);
  CHECK(four[1].fraction == doctest::Approx(0.5));
  CHECK(four[2].degree == 4);
  CHECK(four[2].fraction == doctest::Approx(0.25));

  DegreeTable one;
  one.records.push_back({addr('a'), 7, 0, 7, DegreeMetric::distinct});
  auto single = degree_ccdf(one, Direction::in);
  REQUIRE(single.size() == 1);
  CHECK(single[0].degree == 7);
  CHECK(single[0].fraction == doctest::Approx(1.0));

  DegreeTable zeros;
  zeros.records.push_back({addr('a'), 0, 0, 0, DegreeMetric::distinct});
  CHECK(degree_ccdf(zeros, Direction::total).empty());
}

TEST_CASE("5k-account CCDF equals the sort-and-scan oracle") {
  SynthConfig cfg;
  cfg.seed = 5;
  cfg.transactions = 12000;
  cfg.accounts = 5000;
  auto txs = generate_corpus(cfg).records;
  DegreeTable t = table(txs);
  for (auto dir : {Direction::in, Direction::out, Direction::total}) {
    std::vector<std::uint64_t> degs;
    for (const auto &r : t.records) degs.push_back(degree_of(r, dir));
    auto want = oracle::ccdf(degs);
    auto got = degree_ccdf(t, dir);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].degree == want[i].first);
      CHECK(got[i].fraction == doctest::Approx(want[i].second));
      CHECK(got[i].fraction > 0.0);
      CHECK(got[i].fraction <= 1.0);
      if (i > 0) CHECK(got[i].fraction <= got[i - 1].fraction);
    }
  }
}

TEST_CASE("tag map loading") {
  TagLoadStats stats;
  std::string text =
      "\xEF\xBB\xBF" "address,label,kind\n"
      "0xA090E606E30BD747D4E6245A1517EBE430F0057E,Coinbase: Miscellaneous,contract\n"
      "0x" + std::string(40, 'b') + ",First,user\n"
      "not-an-address,Broken,user\n"
      "0x" + std::string(40, 'b') + ",\"Second, revised\",\n";
  TagMap tags = parse_tag_map(text, stats);
  CHECK(tags.size() == 2);
  CHECK(stats.overridden == 1);
  CHECK(stats.skipped_rows == 1);
  CHECK(tags.lookup(normalize_address("0xa090e606e30bd747d4e6245a1517ebe430f0057e")).label ==
        "Coinbase: Miscellaneous");
  CHECK(tags.lookup(addr('b')).label == "Second, revised");
  CHECK(tags.lookup(addr('b')).kind == TagKind::unknown);
  Tag none = tags.lookup(addr('c'));
  CHECK(none.label == "No public tag");
  CHECK(none.kind == TagKind::unknown);
  CHECK_FALSE(tags.contains(addr('c')));

  TagLoadStats s2;
  CHECK_THROWS_AS(parse_tag_map("addr,name\n", s2), ValidationError);
  auto path = std::filesystem::temp_directory_path() / "ethgraph_test_tags.csv";
  std::ofstream(path) << text;
  TagLoadStats s3;
  CHECK(load_tag_map(path, s3).size() == 2);
  CHECK_THROWS(load_tag_map(path.string() + ".missing", s3));
}

TEST_CASE("bundled tag fixture uses the shortened addresses from the published tables") {
  const std::set<std::string> published = {
      "0f0057e", "1abebc9", "bb538e5", "d831ec7", "606eb48", "b898ec8", "665fc45",
      "9f2488d", "643097d", "c378b9f", "903a5d0", "147ea85", "33ab239", "c756cc2",
      "57fb793"};
  TagLoadStats stats;
  TagMap tags = load_tag_map(std::filesystem::path(ETHGRAPH_SOURCE_DIR) / "data" / "study_tags.csv", stats);
  CHECK(stats.skipped_rows == 0);
  CHECK(stats.overridden == 0);
  CHECK(tags.size() == stats.rows);
  CHECK(tags.size() >= 10);
  std::ifstream in(std::filesystem::path(ETHGRAPH_SOURCE_DIR) / "data" / "study_tags.csv");
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Address a = normalize_address(line.substr(0, line.find(',')));
    CHECK_MESSAGE(published.count(shorten_address(a)) == 1, a.text());
    CHECK(tags.lookup(a).label != TagMap::kNoPublicTag);
  }
}
