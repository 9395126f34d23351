#include <gtest/gtest.h>

#include <placeharvest.hpp>

#include <algorithm>
#include <random>

using namespace placeharvest;
using namespace std::chrono;

namespace {

const std::string kHeader = "post_id,repost_id,post_time,longitude,latitude,text\n";

Advertisement ad(std::string id, int minute, std::string text, std::optional<std::string> repost = std::nullopt) {
  Advertisement a;
  a.post_id = std::move(id);
  a.repost_id = std::move(repost);
  a.post_time = Timestamp{sys_days{year{2017} / 3 / 1}} + minutes{minute};
  a.location = {43.6, -116.2};
  a.text = std::move(text);
  return a;
}

std::vector<std::string> ids(const Corpus& c) {
  std::vector<std::string> out;
  for (const auto& a : c.ads) out.push_back(a.post_id);
  return out;
}

}  // namespace

TEST(LoadCorpus, DropsRowsWithoutCoordinates) {
  const std::string csv = kHeader +
                          "p1,,2017-03-01T10:00:00Z,-116.2,43.6,Room near Boise State\n"
                          "p2,,2017-03-01T11:00:00Z,,43.6,No longitude here\n"
                          "p3,,2017-03-01T12:00:00Z,-116.3,43.5,Studio in the North End\n"
                          "p4,,2017-03-01T13:00:00Z,-116.1,43.7,\"Quoted, with comma\"\n";
  LoadReport report;
  const Corpus c = parse_corpus(csv, "boise", &report);
  EXPECT_EQ(c.region_id, "boise");
  EXPECT_EQ(ids(c), (std::vector<std::string>{"p1", "p3", "p4"}));
  EXPECT_EQ(report.rows, 4u);
  EXPECT_EQ(report.loaded, 3u);
  EXPECT_EQ(report.missing_location, 1u);
  EXPECT_TRUE(report.invalid.empty());
  EXPECT_EQ(c.ads[2].text, "Quoted, with comma");
}

TEST(LoadCorpus, HeaderOnlyIsEmpty) {
  LoadReport report;
  EXPECT_TRUE(parse_corpus(kHeader, "r", &report).ads.empty());
  EXPECT_EQ(report.rows, 0u);
}

TEST(LoadCorpus, OutOfRangeLatitudeRejectedWithLineNumber) {
  const std::string csv = kHeader +
                          "p1,,2017-03-01T10:00:00Z,-116.2,91,Too far north\n"
                          "p2,,2017-03-01T10:00:00Z,-116.2,43.6,Fine\n";
  LoadReport report;
  const Corpus c = parse_corpus(csv, "r", &report);
  ASSERT_EQ(c.ads.size(), 1u);
  ASSERT_EQ(report.invalid.size(), 1u);
  EXPECT_EQ(report.invalid[0].line, 2u);
}

TEST(LoadCorpus, ColumnsMatchedByName) {
  const std::string csv =
      "text,latitude,longitude,post_time,repost_id,post_id\n"
      "Hello there,43.6,-116.2,2017-03-01 10:00,,p9\n";
  const Corpus c = parse_corpus(csv, "r");
  ASSERT_EQ(c.ads.size(), 1u);
  EXPECT_EQ(c.ads[0].post_id, "p9");
  EXPECT_DOUBLE_EQ(c.ads[0].location.lon_deg, -116.2);
}

TEST(LoadCorpus, MalformedHeaderThrows) {
  EXPECT_THROW(parse_corpus("post_id,post_time,text\np1,2017-03-01T10:00:00Z,x\n", "r"), DataError);
  EXPECT_THROW(parse_corpus("", "r"), DataError);
}

TEST(LoadCorpus, AllRowsInvalidThrows) {
  const std::string csv = kHeader + "p1,,not a time,-116.2,43.6,x\np2,,also bad,-116.2,43.6,y\n";
  EXPECT_THROW(parse_corpus(csv, "r"), DataError);
}

TEST(LoadCorpus, UnreadableFileThrows) {
  try {
    load_corpus("/nonexistent/ads.csv", "r");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_EQ(e.code(), ExitCode::kData);
  }
}

TEST(LoadCorpus, BomCrlfAndMultilineFields) {
  const std::string csv = "\xEF\xBB\xBF" + std::string("post_id,repost_id,post_time,longitude,latitude,text\r\n") +
                          "p1,,2017-03-01T10:00:00Z,-116.2,43.6,\"two\r\nlines \"\"quoted\"\"\"\r\n";
  const Corpus c = parse_corpus(csv, "r");
  ASSERT_EQ(c.ads.size(), 1u);
  EXPECT_EQ(c.ads[0].text, "two\r\nlines \"quoted\"");
}

TEST(LoadCorpus, RoundTripsThroughCsv) {
  Corpus c{"r", {ad("a", 0, "First, \"quoted\" ad"), ad("b", 5, "Second ad", "a")}};
  c.ads[1].location = {-33.8688123, 151.2093456};
  const Corpus back = parse_corpus(format_corpus_csv(c), "r");
  ASSERT_EQ(back.ads.size(), 2u);
  EXPECT_EQ(back.ads[0], c.ads[0]);
  EXPECT_EQ(back.ads[1].repost_id, std::optional<std::string>("a"));
  EXPECT_NEAR(back.ads[1].location.lat_deg, -33.8688123, 1e-9);
}

TEST(Timestamp, ParsesIsoVariants) {
  const Timestamp base = sys_days{year{2017} / 2 / 18} + hours{10} + minutes{30};
  EXPECT_EQ(parse_timestamp("2017-02-18T10:30:00Z"), base);
  EXPECT_EQ(parse_timestamp("2017-02-18 10:30"), base);
  EXPECT_EQ(parse_timestamp("2017-02-18T12:30:00+02:00"), base);
  EXPECT_EQ(parse_timestamp("2017-02-18T03:30:00-0700"), base);
  EXPECT_EQ(parse_timestamp("2017-02-18T10:30:00.250Z"), base + milliseconds{250});
  EXPECT_FALSE(parse_timestamp("2017-02-30T10:30:00Z"));
  EXPECT_FALSE(parse_timestamp("2017-02-18T25:00:00Z"));
  EXPECT_FALSE(parse_timestamp("yesterday"));
  EXPECT_EQ(parse_timestamp(format_timestamp(base + milliseconds{7})), base + milliseconds{7});
}

TEST(Dedup, IdenticalLongTextKeepsEarlier) {
  const std::string text(60, 'x');
  const Corpus c{"r", {ad("late", 10, text), ad("early", 1, text)}};
  EXPECT_EQ(ids(dedup(c)), (std::vector<std::string>{"early"}));
}

TEST(Dedup, TextsDifferingAtCharacterTenBothKept) {
  const Corpus c{"r", {ad("a", 0, "0123456789 same tail"), ad("b", 1, "012345678X same tail")}};
  EXPECT_EQ(dedup(c).ads.size(), 2u);
}

TEST(Dedup, PrefixComparedInScalarValues) {
  // 50 two-byte characters, then different tails.
  std::string prefix;
  for (int i = 0; i < 50; ++i) prefix += "\xC3\xA9";
  const Corpus c{"r", {ad("a", 0, prefix + " one"), ad("b", 1, prefix + " two")}};
  EXPECT_EQ(ids(dedup(c)), (std::vector<std::string>{"a"}));
  const Corpus shorter{"r", {ad("a", 0, "short"), ad("b", 1, "short text")}};
  EXPECT_EQ(dedup(shorter).ads.size(), 2u);
}

TEST(Dedup, RepostOfRetainedAdDropped) {
  const Corpus c{"r", {ad("A", 0, "original listing text"), ad("B", 3, "edited listing text", "A")}};
  EXPECT_EQ(ids(dedup(c)), (std::vector<std::string>{"A"}));
}

TEST(Dedup, RepostChainResolved) {
  const Corpus c{"r",
                 {ad("A", 0, "first text"), ad("B", 1, "second text", "A"), ad("C", 2, "third text", "B"),
                  ad("D", 3, "fourth text", "X"), ad("E", 4, "fifth text", "X")}};
  EXPECT_EQ(ids(dedup(c)), (std::vector<std::string>{"A", "D"}));
}

TEST(Dedup, TiesBrokenByPostId) {
  const Corpus c{"r", {ad("b", 0, "same text"), ad("a", 0, "same text")}};
  EXPECT_EQ(ids(dedup(c)), (std::vector<std::string>{"a"}));
}

TEST(Dedup, PropertiesOnRandomCorpora) {
  std::mt19937_64 rng(2024);
  const std::vector<std::string> texts{"alpha", "beta", "gamma", "delta", std::string(55, 'z') + "1",
                                       std::string(55, 'z') + "2"};
  for (int trial = 0; trial < 200; ++trial) {
    Corpus c{"r", {}};
    const size_t n = rng() % 12;
    for (size_t i = 0; i < n; ++i) {
      std::optional<std::string> repost;
      if (rng() % 3 == 0) repost = "p" + std::to_string(rng() % 8);
      c.ads.push_back(ad("p" + std::to_string(rng() % 8), static_cast<int>(rng() % 5), texts[rng() % texts.size()],
                         repost));
    }
    const Corpus once = dedup(c);
    EXPECT_EQ(dedup(once).ads, once.ads);
    EXPECT_LE(once.ads.size(), c.ads.size());
    for (const auto& a : once.ads) EXPECT_NE(std::find(c.ads.begin(), c.ads.end(), a), c.ads.end());

    Corpus shuffled = c;
    std::shuffle(shuffled.ads.begin(), shuffled.ads.end(), rng);
    EXPECT_EQ(dedup(shuffled).ads, once.ads);

    std::set<std::string> seen_ids;
    std::set<std::string> prefixes;
    for (const auto& a : once.ads) {
      EXPECT_TRUE(seen_ids.insert(a.post_id).second);
      EXPECT_TRUE(prefixes.insert(a.text.substr(0, unicode::utf8_prefix_bytes(a.text, 50))).second);
    }
    for (const auto& a : once.ads) {
      if (a.repost_id) {
        for (const auto& b : once.ads) {
          if (&a != &b) {
            EXPECT_NE(*a.repost_id, b.post_id);
          }
        }
      }
    }
  }
}
