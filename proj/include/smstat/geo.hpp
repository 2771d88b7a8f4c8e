#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

namespace smstat::geo {

inline constexpr double earth_radius_m = 6371000.0;

struct LatLon {
  double lat = 0.0;
  double lon = 0.0;
  friend bool operator==(const LatLon&, const LatLon&) = default;
};

inline bool valid(const LatLon& p) {
  return std::isfinite(p.lat) && std::isfinite(p.lon) && p.lat >= -90.0 && p.lat <= 90.0 && p.lon >= -180.0 &&
         p.lon <= 180.0;
}

inline double radians(double deg) { return deg * std::numbers::pi / 180.0; }

/// Great-circle distance in metres on a sphere of radius 6 371 km.
inline double haversine_m(const LatLon& a, const LatLon& b) {
  const double dlat = radians(b.lat - a.lat);
  const double dlon = radians(b.lon - a.lon);
  const double s = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(radians(a.lat)) * std::cos(radians(b.lat)) * std::sin(dlon / 2) * std::sin(dlon / 2);
  return 2.0 * earth_radius_m * std::asin(std::min(1.0, std::sqrt(s)));
}

/// Shift by (north, east) metres using a local tangent plane.
inline LatLon offset_m(const LatLon& origin, double north_m, double east_m) {
  const double dlat = north_m / earth_radius_m * 180.0 / std::numbers::pi;
  const double dlon = east_m / (earth_radius_m * std::cos(radians(origin.lat))) * 180.0 / std::numbers::pi;
  return {origin.lat + dlat, origin.lon + dlon};
}

}  // namespace smstat::geo
