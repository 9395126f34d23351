#pragma once

// Rough spatial footprints for extracted place names: convex hull, Gaussian
// KDE surface with a mass-enclosing contour, and GeoJSON output.
//
// All planar work happens in an equirectangular projection about the mean of
// the (canonically sorted) input points, which is adequate at city scale and
// breaks down near the poles or for extents of several hundred kilometers.

#include <placeharvest/error.hpp>
#include <placeharvest/geo.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <variant>
#include <vector>

namespace placeharvest {

// Counterclockwise ring in the lon/lat plane, implicitly closed. Holes, when
// present, run clockwise.
struct Polygon {
  std::vector<GeoPoint> ring;
  std::vector<std::vector<GeoPoint>> holes;
};

namespace detail {

inline bool lon_lat_less(const GeoPoint& a, const GeoPoint& b) {
  return std::tie(a.lon_deg, a.lat_deg) < std::tie(b.lon_deg, b.lat_deg);
}

inline std::vector<GeoPoint> canonical_points(std::span<const GeoPoint> points) {
  std::vector<GeoPoint> sorted(points.begin(), points.end());
  std::sort(sorted.begin(), sorted.end(), lon_lat_less);
  return sorted;
}

inline double cross(const PlanarPoint& o, const PlanarPoint& a, const PlanarPoint& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

}  // namespace detail

// Andrew's monotone chain. Collinear boundary points are left out of the ring;
// the ring starts at the westernmost (then southernmost) vertex.
inline Polygon convex_hull(std::span<const GeoPoint> points) {
  if (points.size() < 3) throw DegenerateGeometry("convex hull needs at least 3 points");
  auto sorted = detail::canonical_points(points);
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  if (sorted.size() < 3) throw DegenerateGeometry("convex hull needs at least 3 distinct points");

  const auto proj = LocalProjection::centered_on(sorted);
  std::vector<PlanarPoint> planar;
  planar.reserve(sorted.size());
  for (const auto& p : sorted) planar.push_back(proj.forward(p));

  std::vector<size_t> hull(2 * sorted.size());
  size_t k = 0;
  for (size_t i = 0; i < sorted.size(); ++i) {
    while (k >= 2 && detail::cross(planar[hull[k - 2]], planar[hull[k - 1]], planar[i]) <= 0.0) --k;
    hull[k++] = i;
  }
  for (size_t i = sorted.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && detail::cross(planar[hull[k - 2]], planar[hull[k - 1]], planar[i]) <= 0.0) --k;
    hull[k++] = i;
  }
  hull.resize(k - 1);
  if (hull.size() < 3) throw DegenerateGeometry("all points are collinear");

  Polygon poly;
  for (size_t i : hull) poly.ring.push_back(sorted[i]);
  return poly;
}

struct DensityGrid {
  GeoPoint origin;              // southwest corner of the grid
  LocalProjection projection;   // planar frame the grid is laid out in
  PlanarPoint origin_planar;
  double cell_size_m = 0.0;
  double bandwidth_m = 0.0;
  size_t n_rows = 0;
  size_t n_cols = 0;
  std::vector<double> values;  // row-major, row 0 southernmost; density per square meter

  double at(size_t row, size_t col) const { return values[row * n_cols + col]; }

  PlanarPoint cell_center(size_t row, size_t col) const {
    return {origin_planar.x + (static_cast<double>(col) + 0.5) * cell_size_m,
            origin_planar.y + (static_cast<double>(row) + 0.5) * cell_size_m};
  }

  // Integral of the surface over the grid (midpoint rule).
  double mass() const {
    double total = 0.0;
    for (double v : values) total += v;
    return total * cell_size_m * cell_size_m;
  }
};

inline constexpr double kKdePaddingBandwidths = 3.0;
inline constexpr double kKdeKernelCutoff = 6.0;      // kernel evaluated out to this many bandwidths
inline constexpr size_t kKdeMaxCells = 4'000'000;

// Gaussian KDE in local planar meters. The default bandwidth is Scott's rule
// n^(-1/6) * sigma, sigma the mean of the per-axis sample standard deviations.
// The cell size is reduced to half the bandwidth when needed so that the
// midpoint sum integrates the surface accurately.
inline DensityGrid kde_surface(std::span<const GeoPoint> input, std::optional<double> bandwidth_m = std::nullopt,
                               double cell_size_m = 50.0) {
  if (input.size() < 3) throw DataError("KDE footprint needs at least 3 points");
  if (!(cell_size_m > 0.0)) throw ConfigError("cell size must be positive");
  const auto points = detail::canonical_points(input);
  const auto proj = LocalProjection::centered_on(points);
  std::vector<PlanarPoint> planar;
  for (const auto& p : points) planar.push_back(proj.forward(p));

  const double n = static_cast<double>(planar.size());
  double mx = 0.0, my = 0.0;
  for (const auto& q : planar) {
    mx += q.x;
    my += q.y;
  }
  mx /= n;
  my /= n;
  double vx = 0.0, vy = 0.0;
  for (const auto& q : planar) {
    vx += (q.x - mx) * (q.x - mx);
    vy += (q.y - my) * (q.y - my);
  }
  const double sigma = (std::sqrt(vx / (n - 1.0)) + std::sqrt(vy / (n - 1.0))) / 2.0;
  if (!(sigma > 1e-9)) {
    throw DegenerateGeometry("all points coincide; emit the points instead of a density footprint");
  }
  const double h = bandwidth_m.value_or(sigma * std::pow(n, -1.0 / 6.0));
  if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("bandwidth must be positive");

  double min_x = planar[0].x, max_x = planar[0].x, min_y = planar[0].y, max_y = planar[0].y;
  for (const auto& q : planar) {
    min_x = std::min(min_x, q.x);
    max_x = std::max(max_x, q.x);
    min_y = std::min(min_y, q.y);
    max_y = std::max(max_y, q.y);
  }
  const double pad = kKdePaddingBandwidths * h;
  const double width = (max_x - min_x) + 2.0 * pad;
  const double height = (max_y - min_y) + 2.0 * pad;
  double cell = std::min(cell_size_m, h / 2.0);
  if (width * height / (cell * cell) > static_cast<double>(kKdeMaxCells)) {
    cell = std::sqrt(width * height / static_cast<double>(kKdeMaxCells));
  }

  DensityGrid grid;
  grid.projection = proj;
  grid.origin_planar = {min_x - pad, min_y - pad};
  grid.origin = proj.inverse(grid.origin_planar);
  grid.cell_size_m = cell;
  grid.bandwidth_m = h;
  grid.n_cols = static_cast<size_t>(std::ceil(width / cell));
  grid.n_rows = static_cast<size_t>(std::ceil(height / cell));
  grid.values.assign(grid.n_rows * grid.n_cols, 0.0);

  const double norm = 1.0 / (n * 2.0 * std::numbers::pi * h * h);
  const double reach = kKdeKernelCutoff * h;
  for (const auto& q : planar) {
    const auto col_range = [&](double lo, double hi, size_t count, double origin) {
      const double a = std::floor((lo - origin) / cell - 0.5);
      const double b = std::ceil((hi - origin) / cell - 0.5);
      return std::pair<size_t, size_t>{static_cast<size_t>(std::max(0.0, a)),
                                       static_cast<size_t>(std::clamp(b, 0.0, static_cast<double>(count - 1)))};
    };
    const auto [c0, c1] = col_range(q.x - reach, q.x + reach, grid.n_cols, grid.origin_planar.x);
    const auto [r0, r1] = col_range(q.y - reach, q.y + reach, grid.n_rows, grid.origin_planar.y);
    for (size_t r = r0; r <= r1; ++r) {
      for (size_t c = c0; c <= c1; ++c) {
        const PlanarPoint center = grid.cell_center(r, c);
        const double d2 = (center.x - q.x) * (center.x - q.x) + (center.y - q.y) * (center.y - q.y);
        if (d2 > reach * reach) continue;
        grid.values[r * grid.n_cols + c] += norm * std::exp(-d2 / (2.0 * h * h));
      }
    }
  }
  return grid;
}

namespace detail {

// Marching-squares vertex identity: the lattice edge it lies on. Lattice
// nodes are cell centers, with a ring of implicit zero nodes around the grid
// (indices -1 and n) so every contour closes.
struct EdgeId {
  bool vertical = false;
  long i = 0;  // x index of the edge's first node
  long j = 0;  // y index of the edge's first node

  friend auto operator<=>(const EdgeId&, const EdgeId&) = default;
};

inline double signed_area(const std::vector<PlanarPoint>& ring) {
  double a = 0.0;
  for (size_t i = 0, n = ring.size(); i < n; ++i) {
    const auto& p = ring[i];
    const auto& q = ring[(i + 1) % n];
    a += p.x * q.y - q.x * p.y;
  }
  return a / 2.0;
}

inline bool point_in_ring(const PlanarPoint& p, const std::vector<PlanarPoint>& ring) {
  bool inside = false;
  for (size_t i = 0, j = ring.size() - 1; i < ring.size(); j = i++) {
    const auto& a = ring[i];
    const auto& b = ring[j];
    if ((a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x) inside = !inside;
  }
  return inside;
}

}  // namespace detail

// Density level whose superlevel set holds `mass_level` of the grid's mass.
inline double kde_mass_level_density(const DensityGrid& grid, double mass_level) {
  std::vector<double> positive;
  double total = 0.0;
  for (double v : grid.values) {
    if (v > 0.0) {
      positive.push_back(v);
      total += v;
    }
  }
  if (positive.empty()) throw DataError("density grid is flat");
  std::sort(positive.begin(), positive.end(), std::greater<>());
  const double target = mass_level * total * (1.0 - 1e-12);
  double cumulative = 0.0;
  for (double v : positive) {
    cumulative += v;
    if (cumulative >= target) return v;
  }
  return positive.back();
}

// Traces the isoline enclosing `mass_level` of the grid mass. One Polygon per
// connected superlevel region, holes attached to their enclosing ring.
inline std::vector<Polygon> kde_contour(const DensityGrid& grid, double mass_level = 0.90) {
  if (!(mass_level > 0.0 && mass_level <= 1.0)) throw ConfigError("mass level must be in (0, 1]");
  if (grid.n_rows == 0 || grid.n_cols == 0 || grid.values.size() != grid.n_rows * grid.n_cols) {
    throw DataError("malformed density grid");
  }
  double lo = grid.values.front(), hi = grid.values.front();
  for (double v : grid.values) {
    if (!std::isfinite(v) || v < 0.0) throw DataError("density grid has negative or non-finite values");
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi <= 0.0 || lo == hi) throw DataError("density grid is flat");

  const double level = kde_mass_level_density(grid, mass_level);
  const long cols = static_cast<long>(grid.n_cols);
  const long rows = static_cast<long>(grid.n_rows);
  auto value = [&](long i, long j) {
    if (i < 0 || j < 0 || i >= cols || j >= rows) return 0.0;
    return grid.at(static_cast<size_t>(j), static_cast<size_t>(i));
  };
  auto inside = [&](long i, long j) { return value(i, j) >= level; };

  // Crossing point on a lattice edge, in lattice coordinates.
  auto crossing = [&](const detail::EdgeId& e) {
    const long i2 = e.vertical ? e.i : e.i + 1;
    const long j2 = e.vertical ? e.j + 1 : e.j;
    const double va = value(e.i, e.j);
    const double vb = value(i2, j2);
    const double t = std::clamp((level - va) / (vb - va), 1e-6, 1.0 - 1e-6);
    return PlanarPoint{static_cast<double>(e.i) + t * static_cast<double>(i2 - e.i),
                       static_cast<double>(e.j) + t * static_cast<double>(j2 - e.j)};
  };

  // Directed segments, inside on the left.
  std::map<detail::EdgeId, detail::EdgeId> next;
  for (long j = -1; j < rows; ++j) {
    for (long i = -1; i < cols; ++i) {
      const std::array<std::pair<long, long>, 4> corner{{{i, j}, {i + 1, j}, {i + 1, j + 1}, {i, j + 1}}};
      std::array<bool, 4> in{};
      int count = 0;
      for (int c = 0; c < 4; ++c) {
        in[c] = inside(corner[c].first, corner[c].second);
        count += in[c];
      }
      if (count == 0 || count == 4) continue;
      // Edges: 0 bottom, 1 right, 2 top, 3 left.
      const std::array<detail::EdgeId, 4> edge{{{false, i, j}, {true, i + 1, j}, {false, i, j + 1}, {true, i, j}}};
      // Edges adjacent to each corner.
      static constexpr std::array<std::array<int, 2>, 4> around{{{0, 3}, {0, 1}, {1, 2}, {2, 3}}};
      std::vector<std::array<int, 2>> segments;
      if (count == 1 || count == 3) {
        for (int c = 0; c < 4; ++c) {
          if (in[c] == (count == 1)) segments.push_back(around[c]);
        }
      } else if (in[0] == in[1]) {
        segments.push_back({1, 3});
      } else if (in[1] == in[2]) {
        segments.push_back({0, 2});
      } else {
        // Saddle: resolve by the mean of the four corners.
        const double center = (value(i, j) + value(i + 1, j) + value(i + 1, j + 1) + value(i, j + 1)) / 4.0;
        const bool joined = center >= level;
        for (int c = 0; c < 4; ++c) {
          if (in[c] != joined) segments.push_back(around[c]);
        }
      }
      for (auto [ea, eb] : segments) {
        const PlanarPoint p = crossing(edge[ea]);
        const PlanarPoint q = crossing(edge[eb]);
        int vote = 0;
        for (int c = 0; c < 4; ++c) {
          const PlanarPoint corner_pt{static_cast<double>(corner[c].first), static_cast<double>(corner[c].second)};
          const double s = detail::cross(p, q, corner_pt);
          if (s != 0.0) vote += (s > 0.0) == in[c] ? 1 : -1;
        }
        auto from = edge[ea];
        auto to = edge[eb];
        if (vote < 0) std::swap(from, to);
        if (!next.emplace(from, to).second) throw InvariantError("contour tracing produced a branching vertex");
      }
    }
  }

  auto to_geo = [&](const PlanarPoint& lattice) {
    return grid.projection.inverse({grid.origin_planar.x + (lattice.x + 0.5) * grid.cell_size_m,
                                    grid.origin_planar.y + (lattice.y + 0.5) * grid.cell_size_m});
  };

  struct Ring {
    std::vector<PlanarPoint> lattice;
    double area = 0.0;
  };
  std::vector<Ring> outers;
  std::vector<Ring> holes;
  std::map<detail::EdgeId, bool> used;
  for (const auto& [start, ignored] : next) {
    if (used[start]) continue;
    Ring ring;
    detail::EdgeId at = start;
    do {
      used[at] = true;
      ring.lattice.push_back(crossing(at));
      auto it = next.find(at);
      if (it == next.end()) throw InvariantError("contour tracing produced an open ring");
      at = it->second;
    } while (!(at == start));
    if (ring.lattice.size() < 3) continue;
    ring.area = detail::signed_area(ring.lattice);
    (ring.area > 0.0 ? outers : holes).push_back(std::move(ring));
  }

  std::vector<Polygon> polygons(outers.size());
  for (size_t o = 0; o < outers.size(); ++o) {
    for (const auto& p : outers[o].lattice) polygons[o].ring.push_back(to_geo(p));
  }
  for (const auto& hole : holes) {
    std::optional<size_t> owner;
    for (size_t o = 0; o < outers.size(); ++o) {
      if (detail::point_in_ring(hole.lattice.front(), outers[o].lattice) &&
          (!owner || outers[o].area < outers[*owner].area)) {
        owner = o;
      }
    }
    if (!owner) throw InvariantError("contour hole without an enclosing ring");
    std::vector<GeoPoint> ring;
    for (const auto& p : hole.lattice) ring.push_back(to_geo(p));
    polygons[*owner].holes.push_back(std::move(ring));
  }
  return polygons;
}

using FootprintGeometry = std::variant<Polygon, std::vector<Polygon>, std::vector<GeoPoint>>;

struct NamedFootprint {
  std::string name;
  FootprintGeometry geometry;
};

// Convex hull, or the distinct points when they are too few or collinear.
inline FootprintGeometry hull_footprint(std::span<const GeoPoint> points) {
  try {
    return convex_hull(points);
  } catch (const DegenerateGeometry&) {
    auto distinct = detail::canonical_points(points);
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    return distinct;
  }
}

// KDE contour polygons, or the distinct points when no surface can be built.
inline FootprintGeometry kde_footprint(std::span<const GeoPoint> points, double mass_level = 0.90,
                                       std::optional<double> bandwidth_m = std::nullopt, double cell_size_m = 50.0) {
  try {
    auto polygons = kde_contour(kde_surface(points, bandwidth_m, cell_size_m), mass_level);
    if (polygons.size() == 1) return std::move(polygons.front());
    if (!polygons.empty()) return polygons;
  } catch (const DataError&) {
  }
  auto distinct = detail::canonical_points(points);
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  return distinct;
}

namespace detail {

inline nlohmann::json position(const GeoPoint& p) { return nlohmann::json::array({p.lon_deg, p.lat_deg}); }

inline nlohmann::json closed_ring(const std::vector<GeoPoint>& ring) {
  auto out = nlohmann::json::array();
  for (const auto& p : ring) out.push_back(position(p));
  if (!ring.empty()) out.push_back(position(ring.front()));
  return out;
}

inline nlohmann::json polygon_coordinates(const Polygon& poly) {
  auto rings = nlohmann::json::array({closed_ring(poly.ring)});
  for (const auto& hole : poly.holes) rings.push_back(closed_ring(hole));
  return rings;
}

}  // namespace detail

// RFC 7946 FeatureCollection, one Feature per name with property "name".
inline nlohmann::json to_geojson(const std::vector<NamedFootprint>& footprints) {
  auto features = nlohmann::json::array();
  for (const auto& fp : footprints) {
    nlohmann::json geometry;
    if (const auto* poly = std::get_if<Polygon>(&fp.geometry)) {
      geometry = {{"type", "Polygon"}, {"coordinates", detail::polygon_coordinates(*poly)}};
    } else if (const auto* multi = std::get_if<std::vector<Polygon>>(&fp.geometry)) {
      auto coords = nlohmann::json::array();
      for (const auto& p : *multi) coords.push_back(detail::polygon_coordinates(p));
      geometry = {{"type", "MultiPolygon"}, {"coordinates", coords}};
    } else {
      auto coords = nlohmann::json::array();
      for (const auto& p : std::get<std::vector<GeoPoint>>(fp.geometry)) coords.push_back(detail::position(p));
      geometry = {{"type", "MultiPoint"}, {"coordinates", coords}};
    }
    features.push_back({{"type", "Feature"}, {"properties", {{"name", fp.name}}}, {"geometry", geometry}});
  }
  return {{"type", "FeatureCollection"}, {"features", features}};
}

}  // namespace placeharvest
