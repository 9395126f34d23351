#include <gtest/gtest.h>

#include <placeharvest.hpp>

#include "oracles.hpp"

#include <cmath>
#include <random>

using namespace placeharvest;

namespace {

// Point at planar offset (east, north) meters from `origin`.
GeoPoint offset(GeoPoint origin, double east, double north) { return LocalProjection(origin).inverse({east, north}); }

std::vector<GeoPoint> ring_of(size_t n, double radius_m, GeoPoint center = {43.6, -116.2}) {
  std::vector<GeoPoint> pts;
  for (size_t i = 0; i < n; ++i) {
    const double a = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
    pts.push_back(offset(center, radius_m * std::cos(a), radius_m * std::sin(a)));
  }
  return pts;
}

CandidateEntry entry_of(const std::vector<GeoPoint>& pts) {
  CandidateEntry e;
  for (size_t i = 0; i < pts.size(); ++i) {
    e.post_ids.push_back("p" + std::to_string(i));
    e.points.push_back(pts[i]);
  }
  return e;
}

}  // namespace

// Reference distances from the haversine formula evaluated with 50-digit
// arithmetic (mpmath), R = 6371008.8 m.
TEST(Haversine, MatchesHighPrecisionReference) {
  EXPECT_EQ(haversine_m({0, 0}, {0, 0}), 0.0);
  EXPECT_NEAR(haversine_m({0, 0}, {0, 1}), 111195.08023353291285, 1e-6);
  EXPECT_NEAR(haversine_m({43.615, -116.2023}, {43.6187, -116.2146}), 1072.2446540811955971, 1e-6);
  EXPECT_NEAR(haversine_m({40.7128, -74.006}, {34.0522, -118.2437}), 3935751.6908939863564, 1e-4);
  EXPECT_NEAR(haversine_m({-33.8688, 151.2093}, {51.5074, -0.1278}), 16993956.932816536777, 1e-3);
}

TEST(Haversine, SymmetricAndZeroOnlyOnIdentity) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> lat(-90, 90), lon(-180, 180);
  for (int i = 0; i < 1000; ++i) {
    const GeoPoint a{lat(rng), lon(rng)}, b{lat(rng), lon(rng)};
    EXPECT_EQ(haversine_m(a, b), haversine_m(b, a));
    EXPECT_GT(haversine_m(a, b), 0.0);
    EXPECT_NEAR(haversine_m(a, b), static_cast<double>(oracle::haversine(a, b)), 1e-6);
  }
}

TEST(Medoid, Examples) {
  const std::vector<GeoPoint> line{{0, 0}, {0, 0.001}, {0, 0.002}};
  EXPECT_EQ(medoid(line), 1u);
  const std::vector<GeoPoint> single{{10, 10}};
  EXPECT_EQ(medoid(single), 0u);
  const std::vector<GeoPoint> same{{1, 1}, {1, 1}, {1, 1}};
  EXPECT_EQ(medoid(same), 0u);
  EXPECT_THROW(medoid(std::vector<GeoPoint>{}), DataError);
}

TEST(Medoid, MatchesExhaustiveSearch) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    const auto pts = oracle::random_points(rng, 7, {43.6, -116.2}, 5000.0);
    EXPECT_EQ(medoid(pts), oracle::medoid(pts));
  }
}

TEST(ThirdQuartile, LinearInterpolationConvention) {
  EXPECT_DOUBLE_EQ(third_quartile({0, 10, 20, 1000}), 755.0);
  EXPECT_DOUBLE_EQ(third_quartile({5}), 5.0);
  EXPECT_DOUBLE_EQ(third_quartile({1, 2}), 2.0);
  EXPECT_DOUBLE_EQ(third_quartile({3, 1, 2}), 3.0);
  EXPECT_DOUBLE_EQ(third_quartile({1, 2, 3, 4, 5, 6, 7}), 6.0);
  EXPECT_THROW(third_quartile({}), DataError);
}

TEST(SpatialFilter, Examples) {
  const GeoPoint o{43.6, -116.2};
  const std::vector<GeoPoint> pts{o, offset(o, 0, 10), offset(o, 0, -20), offset(o, 1000, 0)};
  EXPECT_EQ(medoid(pts), 0u);
  EXPECT_EQ(spatial_filter_indices(pts), (std::vector<size_t>{0, 1, 2}));

  const std::vector<GeoPoint> same(5, o);
  EXPECT_EQ(spatial_filter(same).size(), 5u);

  const std::vector<GeoPoint> three{o, offset(o, 50, 0), offset(o, 5000, 0)};
  EXPECT_EQ(spatial_filter(three).size(), 3u);
  EXPECT_THROW(spatial_filter(std::vector<GeoPoint>{}), DataError);
}

TEST(SpatialFilter, MatchesIndependentQuantile) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 500; ++trial) {
    const size_t n = 1 + rng() % 30;
    const auto pts = oracle::random_points(rng, n, {40.7, -74.0}, 20000.0);
    const size_t m = oracle::medoid(pts);
    std::vector<double> d;
    for (const auto& p : pts) d.push_back(haversine_m(pts[m], p));
    const double q3 = oracle::quantile_weibull(d, 0.75);
    std::vector<size_t> expected;
    for (size_t i = 0; i < n; ++i) {
      if (d[i] <= q3) expected.push_back(i);
    }
    const auto got = spatial_filter_indices(pts);
    EXPECT_EQ(got, expected);
    EXPECT_FALSE(got.empty());
    EXPECT_TRUE(std::find(got.begin(), got.end(), m) != got.end());
  }
}

TEST(EntropyAtScale, WorkedValues) {
  const std::vector<size_t> four(4, 1), six(6, 1), one{5};
  EXPECT_NEAR(entropy_at_scale(four, 4), 2.0, 1e-12);
  EXPECT_NEAR(entropy_at_scale(six, 6), std::log2(6.0), 1e-12);
  EXPECT_NEAR(entropy_at_scale(six, 6), 2.585, 0.005);
  EXPECT_EQ(entropy_at_scale(one, 5), 0.0);
  const std::vector<size_t> mixed{2, 1, 1};
  EXPECT_NEAR(entropy_at_scale(mixed, 4), 1.5, 1e-12);
  EXPECT_THROW(entropy_at_scale(four, 5), DataError);
  EXPECT_THROW(entropy_at_scale(std::vector<size_t>{}, 0), DataError);
}

TEST(Ssi, FourAndSixPointConfigurations) {
  // Neighbors 3 m apart: separate at r_1 = 2 m, one component at r_2 = 4 m.
  const auto a = ring_of(4, 3.0 / std::sqrt(2.0));
  const auto ra = ssi(a, {}, NormalizationMode::kInvSqrt);
  ASSERT_EQ(ra.entropies.size(), 2u);
  EXPECT_NEAR(ra.entropies[0].entropy, 2.0, 1e-12);
  EXPECT_EQ(ra.entropies[1].entropy, 0.0);
  EXPECT_NEAR(ra.adjusted_sum, 1.0, 1e-12);

  const auto b = ring_of(6, 3.0);
  const auto rb = ssi(b, {}, NormalizationMode::kInvSqrt);
  EXPECT_NEAR(rb.entropy_sum, std::log2(6.0), 1e-12);
  EXPECT_NEAR(rb.adjusted_sum, 1.0554, 0.005);
}

TEST(Ssi, ImmediateConnectivityGivesZero) {
  const GeoPoint o{10, 20};
  const std::vector<GeoPoint> pts{o, offset(o, 0.5, 0), offset(o, 0, 0.7), offset(o, -0.4, 0.3)};
  for (auto mode : {NormalizationMode::kNone, NormalizationMode::kInvSqrt, NormalizationMode::kInvLinear,
                    NormalizationMode::kInvLog}) {
    const auto r = ssi(pts, {}, mode);
    EXPECT_EQ(r.k_max(), 1);
    EXPECT_EQ(r.entropy_sum, 0.0);
    EXPECT_EQ(r.adjusted_sum, 0.0);
  }
}

TEST(Ssi, Preconditions) {
  EXPECT_THROW(ssi(std::vector<GeoPoint>{{0, 0}}, {}, NormalizationMode::kNone), DataError);
  EXPECT_THROW(ssi(ring_of(3, 10), ScaleSet{1.0}, NormalizationMode::kNone), ConfigError);
  EXPECT_THROW(ssi(ring_of(3, 10), ScaleSet{-2.0}, NormalizationMode::kNone), ConfigError);
}

TEST(Ssi, MatchesBfsOracleAndInvariants) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 300; ++trial) {
    const size_t n = 2 + rng() % 11;
    const double alpha = trial % 3 == 0 ? 1.5 : 2.0;
    const auto pts = oracle::random_points(rng, n, {35.0, 139.0}, 100000.0);
    const auto r = ssi(pts, ScaleSet{alpha}, NormalizationMode::kInvSqrt);
    const auto ref = oracle::ssi_bfs(pts, alpha);
    ASSERT_EQ(r.entropies.size(), ref.entropies.size());
    for (size_t k = 0; k < ref.entropies.size(); ++k) {
      EXPECT_EQ(r.entropies[k].k, static_cast<int>(k + 1));
      EXPECT_NEAR(r.entropies[k].entropy, ref.entropies[k], 1e-9);
      EXPECT_GE(r.entropies[k].entropy, 0.0);
      EXPECT_LE(r.entropies[k].entropy, std::log2(static_cast<double>(n)) + 1e-12);
      if (k > 0) {
        EXPECT_LE(r.entropies[k].entropy, r.entropies[k - 1].entropy + 1e-12);
      }
    }
    EXPECT_EQ(r.entropies.back().entropy, 0.0);
    EXPECT_NEAR(r.entropy_sum, ref.sum, 1e-9);
    EXPECT_DOUBLE_EQ(r.adjusted_sum * std::sqrt(static_cast<double>(n)), r.entropy_sum);
  }
}

TEST(Ssi, AdjustmentModes) {
  EXPECT_DOUBLE_EQ(adjust_entropy_sum(12.0, 9, NormalizationMode::kNone), 12.0);
  EXPECT_DOUBLE_EQ(adjust_entropy_sum(12.0, 9, NormalizationMode::kInvSqrt), 4.0);
  EXPECT_DOUBLE_EQ(adjust_entropy_sum(12.0, 9, NormalizationMode::kInvLinear), 12.0 / 9.0);
  EXPECT_DOUBLE_EQ(adjust_entropy_sum(12.0, 8, NormalizationMode::kInvLog), 4.0);
  EXPECT_THROW(adjust_entropy_sum(1.0, 1, NormalizationMode::kInvLog), DataError);
  EXPECT_EQ(parse_normalization_mode("inv_log"), NormalizationMode::kInvLog);
  EXPECT_FALSE(parse_normalization_mode("sqrt"));
}

TEST(Ssi, TranslationInvariantAwayFromScaleBoundaries) {
  std::mt19937_64 rng(21);
  int checked = 0;
  for (int trial = 0; trial < 2000 && checked < 100; ++trial) {
    const auto pts = oracle::random_points(rng, 2 + rng() % 3, {0.0, 10.0}, 3000.0);
    bool clear = true;
    for (size_t i = 0; i < pts.size() && clear; ++i) {
      for (size_t j = i + 1; j < pts.size() && clear; ++j) {
        const double d = haversine_m(pts[i], pts[j]);
        for (int k = 1; k < 40; ++k) {
          if (std::abs(d - std::pow(2.0, k)) < 0.05 * std::pow(2.0, k)) clear = false;
        }
      }
    }
    if (!clear) continue;
    ++checked;
    auto shifted = pts;
    for (auto& p : shifted) p.lon_deg += 0.5;
    EXPECT_NEAR(ssi(shifted, {}, NormalizationMode::kNone).entropy_sum, ssi(pts, {}, NormalizationMode::kNone).entropy_sum,
                1e-12);
  }
  EXPECT_GE(checked, 20);
}

TEST(RankCandidates, FiltersSmallCandidates) {
  const GeoPoint o{43.6, -116.2};
  CandidateSet set;
  set["pair"] = entry_of({o, offset(o, 100, 0)});
  set["trio"] = entry_of({o, offset(o, 100, 0), offset(o, 0, 100)});
  set["quad"] = entry_of({o, offset(o, 10, 0), offset(o, 0, -20), offset(o, 900, 0)});
  const auto ranked = rank_candidates(set, RankOptions{});
  ASSERT_EQ(ranked.size(), 2u);
  for (const auto& r : ranked) {
    EXPECT_NE(r.term, "pair");
    EXPECT_GE(r.n_filtered, 3u);
  }
  const auto& quad = ranked[0].term == "quad" ? ranked[0] : ranked[1];
  EXPECT_EQ(quad.n_raw, 4u);
  EXPECT_EQ(quad.n_filtered, 3u);
  EXPECT_THROW(rank_candidates(set, RankOptions{{}, NormalizationMode::kNone, 1, 1}), ConfigError);
}

TEST(RankCandidates, ClusteredBeforeScattered) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g(0.0, 50.0);
  const GeoPoint o{43.6, -116.2};
  std::vector<GeoPoint> tight;
  for (int i = 0; i < 20; ++i) tight.push_back(offset(o, g(rng), g(rng)));
  CandidateSet set;
  set["tight"] = entry_of(tight);
  set["spread"] = entry_of(oracle::random_points(rng, 20, o, 40000.0));
  for (auto mode : {NormalizationMode::kNone, NormalizationMode::kInvSqrt, NormalizationMode::kInvLinear,
                    NormalizationMode::kInvLog}) {
    const auto ranked = rank_candidates(set, {}, mode);
    ASSERT_EQ(ranked.size(), 2u);
    EXPECT_EQ(ranked[0].term, "tight");
    EXPECT_EQ(ranked[0].normalized_score, 0.0);
    EXPECT_EQ(ranked[1].normalized_score, 1.0);
    // The ranking agrees with the oracle's sums.
    EXPECT_LT(oracle::ssi_bfs(spatial_filter(set["tight"].points), 2.0).sum,
              oracle::ssi_bfs(spatial_filter(set["spread"].points), 2.0).sum);
  }
}

TEST(RankCandidates, DegenerateNormalizationAndTieOrder) {
  const GeoPoint o{43.6, -116.2};
  const std::vector<GeoPoint> dot{o, offset(o, 0.1, 0), offset(o, 0, 0.1)};
  const std::vector<GeoPoint> dot4{o, o, o, o, offset(o, 0.1, 0)};
  CandidateSet set;
  set["b"] = entry_of(dot);
  set["a"] = entry_of(dot);
  set["c"] = entry_of(dot4);
  const auto ranked = rank_candidates(set, RankOptions{});
  ASSERT_EQ(ranked.size(), 3u);
  for (const auto& r : ranked) EXPECT_EQ(r.normalized_score, 0.0);
  EXPECT_EQ(ranked[0].term, "c");
  EXPECT_EQ(ranked[1].term, "a");
  EXPECT_EQ(ranked[2].term, "b");
  EXPECT_TRUE(rank_candidates(CandidateSet{}, RankOptions{}).empty());
}

TEST(RankCandidates, SameResultForAnyThreadCount) {
  std::mt19937_64 rng(4);
  CandidateSet set;
  for (int t = 0; t < 40; ++t) {
    set["term" + std::to_string(t)] = entry_of(oracle::random_points(rng, 3 + rng() % 15, {51.5, -0.12}, 8000.0));
  }
  const auto one = format_ranked_csv(rank_candidates(set, RankOptions{{}, NormalizationMode::kInvSqrt, 3, 1}));
  const auto eight = format_ranked_csv(rank_candidates(set, RankOptions{{}, NormalizationMode::kInvSqrt, 3, 8}));
  EXPECT_EQ(one, eight);
  const auto parsed = parse_ranked_csv(one);
  EXPECT_EQ(format_ranked_csv(parsed), one);
}
