#pragma once

#include <cmath>

#include "bibo/domain/types.hpp"

namespace bibo {

/// Conventional mean Earth radius.
inline constexpr double kEarthRadiusKm = 6371.0;

inline double deg_to_rad(double deg) { return deg * M_PI / 180.0; }

/// Great-circle distance in kilometers (haversine form).
inline double haversine_distance(const GeoPoint& a, const GeoPoint& b) {
  const double phi1 = deg_to_rad(a.lat);
  const double phi2 = deg_to_rad(b.lat);
  const double dphi = deg_to_rad(b.lat - a.lat);
  const double dlam = deg_to_rad(b.lon - a.lon);
  const double s = std::sin(dphi / 2.0);
  const double t = std::sin(dlam / 2.0);
  const double h = s * s + std::cos(phi1) * std::cos(phi2) * t * t;
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

inline double haversine_distance_m(const GeoPoint& a, const GeoPoint& b) {
  return haversine_distance(a, b) * 1000.0;
}

}  // namespace bibo
