#include <gtest/gtest.h>

#include <placeharvest.hpp>

#include "oracles.hpp"

#include <random>

using namespace placeharvest;

namespace {

GeoPoint offset(GeoPoint origin, double east, double north) { return LocalProjection(origin).inverse({east, north}); }

double lonlat_area(const std::vector<GeoPoint>& ring) {
  double a = 0.0;
  for (size_t i = 0; i < ring.size(); ++i) {
    const auto& p = ring[i];
    const auto& q = ring[(i + 1) % ring.size()];
    a += p.lon_deg * q.lat_deg - q.lon_deg * p.lat_deg;
  }
  return a / 2.0;
}

std::vector<GeoPoint> gaussian_cluster(std::mt19937_64& rng, GeoPoint center, double sigma_m, size_t n) {
  std::normal_distribution<double> g(0.0, sigma_m);
  std::vector<GeoPoint> pts;
  for (size_t i = 0; i < n; ++i) pts.push_back(offset(center, g(rng), g(rng)));
  return pts;
}

std::pair<size_t, size_t> argmax(const DensityGrid& grid) {
  size_t best = 0;
  for (size_t i = 1; i < grid.values.size(); ++i) {
    if (grid.values[i] > grid.values[best]) best = i;
  }
  return {best / grid.n_cols, best % grid.n_cols};
}

}  // namespace

TEST(ConvexHull, SquareWithCenterAndMidpoints) {
  const std::vector<GeoPoint> pts{{0, 0}, {0, 1}, {1, 1}, {1, 0}, {0.5, 0.5}, {0, 0.5}, {0.5, 1}};
  const auto hull = convex_hull(pts);
  const std::vector<GeoPoint> expected{{0, 0}, {0, 1}, {1, 1}, {1, 0}};
  EXPECT_EQ(hull.ring, expected);
  EXPECT_GT(lonlat_area(hull.ring), 0.0);
}

TEST(ConvexHull, CircleKeepsEveryPointInOrder) {
  const GeoPoint c{43.6, -116.2};
  std::vector<GeoPoint> pts;
  for (int i = 0; i < 24; ++i) {
    const double a = 2 * std::numbers::pi * i / 24.0;
    pts.push_back(offset(c, 500 * std::cos(a), 500 * std::sin(a)));
  }
  const auto hull = convex_hull(pts);
  ASSERT_EQ(hull.ring.size(), 24u);
  // Starting from the westernmost point (angle pi), counterclockwise.
  for (size_t i = 0; i < 24; ++i) EXPECT_EQ(hull.ring[i], pts[(12 + i) % 24]);
}

TEST(ConvexHull, DegenerateInputs) {
  EXPECT_THROW(convex_hull(std::vector<GeoPoint>{{0, 0}, {1, 1}}), DegenerateGeometry);
  EXPECT_THROW(convex_hull(std::vector<GeoPoint>{{0, 0}, {0, 0}, {0, 0}}), DegenerateGeometry);
  EXPECT_THROW(convex_hull(std::vector<GeoPoint>{{0, 0}, {0, 1}, {0, 2}, {0, 3}}), DegenerateGeometry);
  try {
    convex_hull(std::vector<GeoPoint>{{1, 0}, {2, 0}, {3, 0}});
    FAIL();
  } catch (const DataError& e) {
    EXPECT_EQ(e.code(), ExitCode::kData);
  }
}

TEST(ConvexHull, MatchesBruteForceAndContainsInput) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    auto pts = oracle::random_points(rng, 3 + rng() % 48, {-23.5, -46.6}, 10000.0);
    const auto hull = convex_hull(pts);
    std::set<std::pair<double, double>> got;
    for (const auto& p : hull.ring) got.insert({p.lon_deg, p.lat_deg});
    EXPECT_EQ(got.size(), hull.ring.size());
    EXPECT_EQ(got, oracle::hull_vertices(pts));
    EXPECT_GT(lonlat_area(hull.ring), 0.0);
    EXPECT_LE(hull.ring.size(), pts.size());
    for (const auto& p : pts) EXPECT_TRUE(oracle::in_convex_ring(p, hull.ring, 1e-9));

    // Permutation and duplication leave the ring unchanged.
    auto shuffled = pts;
    shuffled.insert(shuffled.end(), pts.begin(), pts.begin() + pts.size() / 2);
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    EXPECT_EQ(convex_hull(shuffled).ring, hull.ring);
  }
}

TEST(KdeSurface, IntegratesToOneAndIsNonNegative) {
  std::mt19937_64 rng(2);
  const auto pts = gaussian_cluster(rng, {43.6, -116.2}, 300.0, 40);
  const auto grid = kde_surface(pts);
  EXPECT_NEAR(grid.mass(), 1.0, 0.02);
  for (double v : grid.values) {
    EXPECT_GE(v, 0.0);
    EXPECT_TRUE(std::isfinite(v));
  }
  EXPECT_LE(grid.cell_size_m, 50.0);
  EXPECT_LE(grid.cell_size_m, grid.bandwidth_m / 2.0 + 1e-12);

  // Scott's rule from the planar sample deviations.
  const auto proj = LocalProjection::centered_on(detail::canonical_points(pts));
  double mx = 0, my = 0;
  for (const auto& p : pts) {
    mx += proj.forward(p).x;
    my += proj.forward(p).y;
  }
  mx /= 40;
  my /= 40;
  double vx = 0, vy = 0;
  for (const auto& p : pts) {
    vx += std::pow(proj.forward(p).x - mx, 2);
    vy += std::pow(proj.forward(p).y - my, 2);
  }
  const double sigma = (std::sqrt(vx / 39) + std::sqrt(vy / 39)) / 2;
  EXPECT_NEAR(grid.bandwidth_m, sigma * std::pow(40.0, -1.0 / 6.0), 1e-9);

  // Every point lies inside the grid, at least 3 bandwidths from its edges.
  for (const auto& p : pts) {
    const auto q = grid.projection.forward(p);
    EXPECT_GE(q.x - grid.origin_planar.x, 3 * grid.bandwidth_m - 1e-6);
    EXPECT_GE(q.y - grid.origin_planar.y, 3 * grid.bandwidth_m - 1e-6);
    EXPECT_GE(grid.origin_planar.x + grid.n_cols * grid.cell_size_m - q.x, 3 * grid.bandwidth_m - 1e-6);
    EXPECT_GE(grid.origin_planar.y + grid.n_rows * grid.cell_size_m - q.y, 3 * grid.bandwidth_m - 1e-6);
  }
}

TEST(KdeSurface, UnimodalMaximumNearCentroid) {
  std::mt19937_64 rng(9);
  const GeoPoint c{51.5, -0.12};
  const auto pts = gaussian_cluster(rng, c, 200.0, 200);
  const auto grid = kde_surface(pts);
  double mx = 0, my = 0;
  for (const auto& p : pts) {
    mx += grid.projection.forward(p).x / 200;
    my += grid.projection.forward(p).y / 200;
  }
  const auto [row, col] = argmax(grid);
  const auto center = grid.cell_center(row, col);
  // The mode of a 200-point KDE sits within a fraction of sigma of the centroid.
  EXPECT_LT(std::hypot(center.x - mx, center.y - my), 0.5 * 200.0);
}

TEST(KdeSurface, PermutationInvariant) {
  std::mt19937_64 rng(10);
  auto pts = gaussian_cluster(rng, {10, 10}, 100.0, 30);
  const auto a = kde_surface(pts);
  std::shuffle(pts.begin(), pts.end(), rng);
  const auto b = kde_surface(pts);
  EXPECT_EQ(a.values, b.values);
}

TEST(KdeSurface, MonteCarloMassWithinThreeSigma) {
  std::mt19937_64 rng(77);
  const GeoPoint c{43.6, -116.2};
  const double sigma = 250.0;
  const auto pts = gaussian_cluster(rng, c, sigma, 200);
  const auto grid = kde_surface(pts);
  const auto center = grid.projection.forward(c);
  double inside = 0.0;
  for (size_t r = 0; r < grid.n_rows; ++r) {
    for (size_t col = 0; col < grid.n_cols; ++col) {
      const auto p = grid.cell_center(r, col);
      if (std::hypot(p.x - center.x, p.y - center.y) <= 3 * sigma) inside += grid.at(r, col);
    }
  }
  EXPECT_GE(inside * grid.cell_size_m * grid.cell_size_m, 0.95);
}

TEST(KdeSurface, Errors) {
  const GeoPoint c{1, 1};
  EXPECT_THROW(kde_surface(std::vector<GeoPoint>{c, c}), DataError);
  EXPECT_THROW(kde_surface(std::vector<GeoPoint>{c, c, c}), DegenerateGeometry);
}

TEST(KdeContour, SingleClusterGivesOnePolygonAroundMode) {
  std::mt19937_64 rng(12);
  const auto pts = gaussian_cluster(rng, {43.6, -116.2}, 300.0, 60);
  const auto grid = kde_surface(pts);
  const auto polygons = kde_contour(grid, 0.9);
  ASSERT_EQ(polygons.size(), 1u);
  EXPECT_GT(lonlat_area(polygons[0].ring), 0.0);
  std::vector<PlanarPoint> ring;
  for (const auto& p : polygons[0].ring) ring.push_back(grid.projection.forward(p));
  const auto [row, col] = argmax(grid);
  EXPECT_TRUE(detail::point_in_ring(grid.cell_center(row, col), ring));
}

TEST(KdeContour, TwoSeparatedClustersGiveTwoPolygons) {
  std::mt19937_64 rng(13);
  const GeoPoint a{43.6, -116.2};
  auto pts = gaussian_cluster(rng, a, 100.0, 30);
  const auto more = gaussian_cluster(rng, offset(a, 10000, 0), 100.0, 30);
  pts.insert(pts.end(), more.begin(), more.end());
  const auto grid = kde_surface(pts, 100.0);
  // Near-zero density midway between the clusters.
  const auto mid = grid.projection.forward(offset(a, 5000, 0));
  const size_t col = static_cast<size_t>((mid.x - grid.origin_planar.x) / grid.cell_size_m);
  const size_t row = static_cast<size_t>((mid.y - grid.origin_planar.y) / grid.cell_size_m);
  const auto [mr, mc] = argmax(grid);
  EXPECT_LT(grid.at(row, col), 1e-9 * grid.at(mr, mc));
  EXPECT_EQ(kde_contour(grid, 0.9).size(), 2u);
}

TEST(KdeContour, FullMassCoversEveryNonzeroCell) {
  std::mt19937_64 rng(14);
  const auto pts = gaussian_cluster(rng, {0, 0}, 200.0, 20);
  const auto grid = kde_surface(pts);
  const auto polygons = kde_contour(grid, 1.0);
  ASSERT_FALSE(polygons.empty());
  std::vector<std::vector<PlanarPoint>> rings;
  for (const auto& poly : polygons) {
    std::vector<PlanarPoint> ring;
    for (const auto& p : poly.ring) ring.push_back(grid.projection.forward(p));
    rings.push_back(ring);
  }
  for (size_t r = 0; r < grid.n_rows; ++r) {
    for (size_t c = 0; c < grid.n_cols; ++c) {
      if (grid.at(r, c) <= 0.0) continue;
      bool covered = false;
      for (const auto& ring : rings) covered = covered || detail::point_in_ring(grid.cell_center(r, c), ring);
      EXPECT_TRUE(covered);
    }
  }
}

TEST(KdeContour, FlatGridRejected) {
  DensityGrid grid;
  grid.n_rows = 2;
  grid.n_cols = 2;
  grid.cell_size_m = 1;
  grid.values = {0, 0, 0, 0};
  EXPECT_THROW(kde_contour(grid), DataError);
  grid.values = {1, 1, 1, 1};
  EXPECT_THROW(kde_contour(grid), DataError);
}

TEST(GeoJson, FeatureCollection) {
  EXPECT_EQ(to_geojson({}).dump(), R"({"features":[],"type":"FeatureCollection"})");

  const std::vector<GeoPoint> tri{{0, 0}, {0, 1}, {1, 0}};
  const auto doc = to_geojson({{"triangle", hull_footprint(tri)}});
  ASSERT_EQ(doc["features"].size(), 1u);
  const auto& f = doc["features"][0];
  EXPECT_EQ(f["type"], "Feature");
  EXPECT_EQ(f["properties"]["name"], "triangle");
  EXPECT_EQ(f["geometry"]["type"], "Polygon");
  const auto& ring = f["geometry"]["coordinates"][0];
  ASSERT_EQ(ring.size(), 4u);
  EXPECT_EQ(ring.front(), ring.back());
  EXPECT_EQ(ring[0], nlohmann::json::array({0.0, 0.0}));
  EXPECT_EQ(ring[1], nlohmann::json::array({1.0, 0.0}));  // [lon, lat]

  const std::vector<GeoPoint> line{{0, 0}, {0, 1}, {0, 2}, {0, 1}};
  const auto fallback = to_geojson({{"line", hull_footprint(line)}});
  EXPECT_EQ(fallback["features"][0]["geometry"]["type"], "MultiPoint");
  EXPECT_EQ(fallback["features"][0]["geometry"]["coordinates"].size(), 3u);
}

TEST(GeoJson, KdeFootprintKinds) {
  std::mt19937_64 rng(15);
  const GeoPoint a{43.6, -116.2};
  auto pts = gaussian_cluster(rng, a, 100.0, 30);
  const auto more = gaussian_cluster(rng, offset(a, 10000, 0), 100.0, 30);
  pts.insert(pts.end(), more.begin(), more.end());
  const auto doc = to_geojson({{"one", kde_footprint(std::vector<GeoPoint>(pts.begin(), pts.begin() + 30))},
                               {"two", kde_footprint(pts, 0.9, 100.0)},
                               {"dot", kde_footprint(std::vector<GeoPoint>(4, a))}});
  EXPECT_EQ(doc["features"][0]["geometry"]["type"], "Polygon");
  EXPECT_EQ(doc["features"][1]["geometry"]["type"], "MultiPolygon");
  EXPECT_EQ(doc["features"][2]["geometry"]["type"], "MultiPoint");
  EXPECT_EQ(doc["features"][2]["geometry"]["coordinates"].size(), 1u);
}
