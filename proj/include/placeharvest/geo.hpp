#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>

namespace placeharvest {

struct GeoPoint {
  double lat_deg = 0.0;
  double lon_deg = 0.0;

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

inline bool is_valid(const GeoPoint& p) {
  return std::isfinite(p.lat_deg) && std::isfinite(p.lon_deg) && p.lat_deg >= -90.0 &&
         p.lat_deg <= 90.0 && p.lon_deg >= -180.0 && p.lon_deg <= 180.0;
}

inline constexpr double kEarthRadiusM = 6371008.8;

inline constexpr double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline constexpr double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

// Great-circle distance in meters on the mean-radius sphere.
inline double haversine_m(const GeoPoint& a, const GeoPoint& b) {
  const double phi1 = deg_to_rad(a.lat_deg);
  const double phi2 = deg_to_rad(b.lat_deg);
  const double dphi = phi2 - phi1;
  const double dlambda = deg_to_rad(b.lon_deg - a.lon_deg);
  const double s1 = std::sin(dphi / 2.0);
  const double s2 = std::sin(dlambda / 2.0);
  double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  h = std::min(1.0, std::max(0.0, h));
  return 2.0 * kEarthRadiusM * std::asin(std::sqrt(h));
}

struct PlanarPoint {
  double x = 0.0;  // meters east
  double y = 0.0;  // meters north
};

// Equirectangular projection about a reference point. Good to well under a
// percent at city extents; not meant for polar regions or continental spans.
class LocalProjection {
 public:
  LocalProjection() = default;
  explicit LocalProjection(const GeoPoint& ref)
      : ref_(ref), cos_lat_(std::cos(deg_to_rad(ref.lat_deg))) {}

  // Reference at the arithmetic mean of the points.
  static LocalProjection centered_on(std::span<const GeoPoint> points) {
    double lat = 0.0;
    double lon = 0.0;
    for (const auto& p : points) {
      lat += p.lat_deg;
      lon += p.lon_deg;
    }
    const double n = points.empty() ? 1.0 : static_cast<double>(points.size());
    return LocalProjection(GeoPoint{lat / n, lon / n});
  }

  PlanarPoint forward(const GeoPoint& p) const {
    return {kEarthRadiusM * deg_to_rad(p.lon_deg - ref_.lon_deg) * cos_lat_,
            kEarthRadiusM * deg_to_rad(p.lat_deg - ref_.lat_deg)};
  }

  GeoPoint inverse(const PlanarPoint& q) const {
    return {ref_.lat_deg + rad_to_deg(q.y / kEarthRadiusM),
            ref_.lon_deg + rad_to_deg(q.x / (kEarthRadiusM * cos_lat_))};
  }

  const GeoPoint& reference() const { return ref_; }
  double cos_lat() const { return cos_lat_; }

 private:
  GeoPoint ref_{};
  double cos_lat_ = 1.0;
};

}  // namespace placeharvest
