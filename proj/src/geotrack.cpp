#include "geostress/geotrack.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "geostress/error.hpp"

namespace geostress {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

struct Xy {
  double x;
  double y;
};

// Local planar coordinates (metres) of q relative to origin.
Xy project(GeoPoint origin, GeoPoint q, double cos_lat) {
  return {kEarthRadiusM * (q.lon - origin.lon) * kDegToRad * cos_lat,
          kEarthRadiusM * (q.lat - origin.lat) * kDegToRad};
}

// Distance from the origin to segment [a, b].
double origin_to_leg(Xy a, Xy b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = 0.0;
  if (len2 > 0.0) t = std::clamp(-(a.x * dx + a.y * dy) / len2, 0.0, 1.0);
  return std::hypot(a.x + t * dx, a.y + t * dy);
}

}  // namespace

double haversine_m(GeoPoint a, GeoPoint b) {
  const double dlat = (b.lat - a.lat) * kDegToRad;
  const double dlon = (b.lon - a.lon) * kDegToRad;
  const double s1 = std::sin(dlat / 2.0);
  const double s2 = std::sin(dlon / 2.0);
  const double h = s1 * s1 + std::cos(a.lat * kDegToRad) * std::cos(b.lat * kDegToRad) * s2 * s2;
  return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(h)));
}

PolylineDistance point_to_polyline_m(GeoPoint p, std::span<const GeoPoint> polyline) {
  if (polyline.size() < 2) throw ValueError("point_to_polyline_m: polyline needs >= 2 vertices");
  const double cos_lat = std::cos(p.lat * kDegToRad);
  PolylineDistance best{std::numeric_limits<double>::infinity(), 0};
  Xy prev = project(p, polyline[0], cos_lat);
  for (std::size_t i = 0; i + 1 < polyline.size(); ++i) {
    const Xy next = project(p, polyline[i + 1], cos_lat);
    const double d = origin_to_leg(prev, next);
    if (d < best.meters) best = {d, i};
    prev = next;
  }
  return best;
}

std::vector<SegmentAssignment> assign_segments(const GpsTrack& track, const RouteMap& route) {
  if (route.segments.empty()) throw ValueError("assign_segments: route has no segments");
  std::vector<SegmentAssignment> out;
  out.reserve(track.size());
  for (std::size_t i = 0; i < track.size(); ++i) {
    const GeoPoint p = track.fixes[i].point();
    double best = std::numeric_limits<double>::infinity();
    int best_id = 0;
    for (const auto& seg : route.segments) {
      const double d = point_to_polyline_m(p, seg.polyline).meters;
      if (d < best || (d == best && seg.id < best_id)) {
        best = d;
        best_id = seg.id;
      }
    }
    SegmentAssignment a;
    a.fix_index = i;
    a.distance_m = best;
    if (best <= route.corridor_m) a.segment_id = best_id;
    out.push_back(a);
  }
  return out;
}

std::vector<double> derive_speed(const GpsTrack& track) {
  if (track.size() < 2) throw InsufficientDataError("derive_speed: track needs >= 2 fixes");
  std::vector<double> speed(track.size(), 0.0);
  for (std::size_t i = 1; i < track.size(); ++i) {
    const auto& a = track.fixes[i - 1];
    const auto& b = track.fixes[i];
    speed[i] = haversine_m(a.point(), b.point()) / (b.epoch - a.epoch);
  }
  speed[0] = speed[1];
  return speed;
}

}  // namespace geostress
