#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "geostress/ingest.hpp"

namespace geostress {

inline constexpr double kEarthRadiusM = 6371000.0;

double haversine_m(GeoPoint a, GeoPoint b);

struct PolylineDistance {
  double meters = 0.0;
  std::size_t leg = 0;  // index of the nearest leg (vertex i to i + 1)
};

// Distance from p to the closest leg of the polyline, measured in an
// equirectangular projection centred on p. Adequate at walking-route scale.
PolylineDistance point_to_polyline_m(GeoPoint p, std::span<const GeoPoint> polyline);

struct SegmentAssignment {
  std::size_t fix_index = 0;
  std::optional<int> segment_id;
  double distance_m = 0.0;  // to the nearest segment, assigned or not
};

// Nearest segment per fix, kept only when within the route's corridor.
// Equal distances resolve to the lowest segment id.
std::vector<SegmentAssignment> assign_segments(const GpsTrack& track, const RouteMap& route);

// Speed into each fix from its predecessor; the first fix copies the second.
std::vector<double> derive_speed(const GpsTrack& track);

}  // namespace geostress
