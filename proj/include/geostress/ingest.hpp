#pragma once

// Readers and writers for the on-disk formats consumed by the pipeline:
//
//   channel CSV   line 1: start epoch (UTC seconds), line 2: rate in Hz,
//                 then one sample per line
//   IBI CSV       line 1: session start epoch, then "offset_s,ibi_s" rows
//   GPS CSV       header "epoch,lat,lon", then one fix per row
//   route         GeoJSON FeatureCollection of LineString features with
//                 properties segment_id, name, environment
//   manifest      JSON study description (schema in README.md)
//
// All numbers are parsed and written locale-independently with '.' as the
// decimal separator. Writers emit the shortest representation that parses
// back to the identical double.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace geostress {

enum class ChannelKind { EDA, HR, TEMP, BVP, OTHER };

std::string_view to_string(ChannelKind kind);
ChannelKind channel_kind_from_string(std::string_view text);

// Uniformly sampled scalar channel. Sample i is taken at
// start_epoch + i / rate_hz. Parsed series are never empty; slices may be.
struct SampleSeries {
  ChannelKind kind = ChannelKind::OTHER;
  double start_epoch = 0.0;
  double rate_hz = 1.0;
  std::vector<double> values;

  double time_at(std::size_t i) const {
    return start_epoch + static_cast<double>(i) / rate_hz;
  }
  std::size_t size() const { return values.size(); }
  bool empty() const { return values.empty(); }

  bool operator==(const SampleSeries&) const = default;
};

// One heartbeat: its time and the interval since the previous beat.
// `suspect` marks intervals outside the physiological range (0.2, 3.0) s at
// ingestion; `gap_before` is set by cleaning when the successive pair ending
// at this beat must not be used.
struct Beat {
  double epoch = 0.0;
  double ibi_s = 0.0;
  bool gap_before = false;
  bool suspect = false;

  bool operator==(const Beat&) const = default;
};

struct IbiSeries {
  std::vector<Beat> beats;

  std::size_t size() const { return beats.size(); }
  bool empty() const { return beats.empty(); }
  std::size_t suspect_count() const;

  bool operator==(const IbiSeries&) const = default;
};

struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;

  bool operator==(const GeoPoint&) const = default;
};

struct GpsFix {
  double epoch = 0.0;
  double lat = 0.0;
  double lon = 0.0;

  GeoPoint point() const { return {lat, lon}; }
  bool operator==(const GpsFix&) const = default;
};

struct GpsTrack {
  std::vector<GpsFix> fixes;

  std::size_t size() const { return fixes.size(); }
  bool operator==(const GpsTrack&) const = default;
};

struct RouteSegment {
  int id = 0;
  std::string name;
  std::string environment;
  std::vector<GeoPoint> polyline;

  bool operator==(const RouteSegment&) const = default;
};

struct RouteMap {
  std::vector<RouteSegment> segments;
  double corridor_m = 25.0;

  const RouteSegment* find(int id) const;
  bool operator==(const RouteMap&) const = default;
};

struct ChannelRef {
  ChannelKind kind = ChannelKind::OTHER;
  std::filesystem::path path;

  bool operator==(const ChannelRef&) const = default;
};

struct ParticipantFiles {
  std::string id;
  std::vector<ChannelRef> channels;
  std::filesystem::path ibi;
  std::filesystem::path gps;
  // Start of the stressful crossing; when absent it is taken from the first
  // GPS fix assigned to the stress segment.
  std::optional<double> crossing_start_epoch;
  // Start of the neutral episode; when absent it is taken from the first GPS
  // fix assigned to the neutral segment.
  std::optional<double> neutral_start_epoch;

  const ChannelRef* channel(ChannelKind kind) const;
  bool operator==(const ParticipantFiles&) const = default;
};

struct StudyManifest {
  std::vector<ParticipantFiles> participants;
  std::filesystem::path route_path;
  RouteMap route;
  int stress_segment_id = 0;
  int neutral_segment_id = 0;
  double window_offset_s = 5.0;
  double window_duration_s = 30.0;
  std::map<int, double> subjective_rankings;

  bool operator==(const StudyManifest&) const = default;
};

SampleSeries parse_uniform_channel(std::istream& in, ChannelKind kind);
IbiSeries parse_ibi_file(std::istream& in);
GpsTrack parse_gps_track(std::istream& in);
RouteMap load_route(std::istream& in);

// Relative paths inside the manifest are resolved against base_dir. The route
// is loaded and every referenced segment id and data file is checked.
StudyManifest load_manifest(std::istream& in, const std::filesystem::path& base_dir);
StudyManifest load_manifest_file(const std::filesystem::path& path);

void write_uniform_channel(std::ostream& out, const SampleSeries& series);
// Offsets are written relative to session_start.
void write_ibi_file(std::ostream& out, double session_start, const IbiSeries& ibis);
void write_gps_track(std::ostream& out, const GpsTrack& track);
void write_route(std::ostream& out, const RouteMap& route);
// Paths under base_dir are written relative to it.
void write_manifest(std::ostream& out, const StudyManifest& manifest,
                    const std::filesystem::path& base_dir);

// Shortest round-trip decimal for a finite double.
std::string format_number(double value);
// Locale-independent strict parse of a whole field (surrounding blanks allowed).
std::optional<double> parse_number(std::string_view text);

}  // namespace geostress
