#include "geostress/ingest.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include <json.hpp>

#include "geostress/error.hpp"

namespace geostress {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kIbiPlausibleLow = 0.2;
constexpr double kIbiPlausibleHigh = 3.0;

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto next = line.find(sep, pos);
    if (next == std::string_view::npos) {
      out.push_back(line.substr(pos));
      break;
    }
    out.push_back(line.substr(pos, next - pos));
    pos = next + 1;
  }
  return out;
}

// Reads the next non-blank line. Returns false at end of stream.
bool next_line(std::istream& in, std::string& line, std::size_t& line_no) {
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) return true;
  }
  return false;
}

std::string at_line(std::size_t line_no) { return "line " + std::to_string(line_no); }

double require_number(std::string_view field, std::size_t line_no, const char* what) {
  const auto v = parse_number(field);
  if (!v) {
    throw ValueError(at_line(line_no) + ": " + what + " '" + std::string(trim(field)) +
                     "' is not a finite number");
  }
  return *v;
}

const json& require_member(const json& obj, const char* key, const std::string& context) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw FormatError(context + ": missing property '" + key + "'");
  }
  return obj.at(key);
}

json parse_json(std::istream& in, const char* what) {
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string(what) + ": " + e.what());
  }
}

}  // namespace

std::string_view to_string(ChannelKind kind) {
  switch (kind) {
    case ChannelKind::EDA: return "EDA";
    case ChannelKind::HR: return "HR";
    case ChannelKind::TEMP: return "TEMP";
    case ChannelKind::BVP: return "BVP";
    case ChannelKind::OTHER: return "OTHER";
  }
  return "OTHER";
}

ChannelKind channel_kind_from_string(std::string_view text) {
  static constexpr std::array kinds = {ChannelKind::EDA, ChannelKind::HR, ChannelKind::TEMP,
                                       ChannelKind::BVP, ChannelKind::OTHER};
  for (auto k : kinds) {
    if (to_string(k) == text) return k;
  }
  throw FormatError("unknown channel kind '" + std::string(text) + "'");
}

std::size_t IbiSeries::suspect_count() const {
  return static_cast<std::size_t>(
      std::count_if(beats.begin(), beats.end(), [](const Beat& b) { return b.suspect; }));
}

const RouteSegment* RouteMap::find(int id) const {
  for (const auto& s : segments) {
    if (s.id == id) return &s;
  }
  return nullptr;
}

const ChannelRef* ParticipantFiles::channel(ChannelKind kind) const {
  for (const auto& c : channels) {
    if (c.kind == kind) return &c;
  }
  return nullptr;
}

std::string format_number(double value) {
  // Plain decimals read better for epochs and coordinates; exponents only
  // when the fixed form would be long.
  std::array<char, 400> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value, std::chars_format::fixed);
  if (res.ec == std::errc{} && res.ptr - buf.data() <= 24) return std::string(buf.data(), res.ptr);
  res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), res.ptr);
}

std::optional<double> parse_number(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) return std::nullopt;
  if (!std::isfinite(v)) return std::nullopt;
  return v;
}

// ---------------------------------------------------------------- channels

SampleSeries parse_uniform_channel(std::istream& in, ChannelKind kind) {
  std::string line;
  std::size_t line_no = 0;
  SampleSeries out;
  out.kind = kind;

  if (!next_line(in, line, line_no)) throw FormatError("channel file: missing start epoch line");
  const auto start = parse_number(line);
  if (!start) throw FormatError(at_line(line_no) + ": malformed start epoch header");
  out.start_epoch = *start;

  if (!next_line(in, line, line_no)) throw FormatError("channel file: missing rate line");
  const auto rate = parse_number(line);
  if (!rate) throw FormatError(at_line(line_no) + ": malformed rate header");
  if (*rate <= 0.0) throw FormatError(at_line(line_no) + ": sampling rate must be > 0");
  out.rate_hz = *rate;

  while (next_line(in, line, line_no)) {
    const double v = require_number(line, line_no, "sample");
    if (kind == ChannelKind::EDA && v < 0.0) {
      throw ValueError(at_line(line_no) + ": negative skin conductance");
    }
    out.values.push_back(v);
  }
  if (out.values.empty()) throw FormatError("channel file: no samples");
  return out;
}

void write_uniform_channel(std::ostream& out, const SampleSeries& series) {
  out << format_number(series.start_epoch) << '\n' << format_number(series.rate_hz) << '\n';
  for (double v : series.values) out << format_number(v) << '\n';
}

// -------------------------------------------------------------------- IBIs

IbiSeries parse_ibi_file(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!next_line(in, line, line_no)) throw FormatError("IBI file: missing start epoch line");
  const auto start = parse_number(line);
  if (!start) throw FormatError(at_line(line_no) + ": malformed start epoch header");

  IbiSeries out;
  double prev_offset = 0.0;
  while (next_line(in, line, line_no)) {
    const auto fields = split(line, ',');
    if (fields.size() != 2) throw FormatError(at_line(line_no) + ": expected 'offset_s,ibi_s'");
    const double offset = require_number(fields[0], line_no, "offset");
    const double ibi = require_number(fields[1], line_no, "interval");
    if (ibi <= 0.0) throw ValueError(at_line(line_no) + ": interval must be positive");
    if (!out.beats.empty() && offset <= prev_offset) {
      throw OrderError(at_line(line_no) + ": beat offsets must be strictly increasing");
    }
    prev_offset = offset;
    Beat b;
    b.epoch = *start + offset;
    b.ibi_s = ibi;
    b.suspect = !(ibi > kIbiPlausibleLow && ibi < kIbiPlausibleHigh);
    out.beats.push_back(b);
  }
  return out;
}

void write_ibi_file(std::ostream& out, double session_start, const IbiSeries& ibis) {
  out << format_number(session_start) << '\n';
  for (const auto& b : ibis.beats) {
    out << format_number(b.epoch - session_start) << ',' << format_number(b.ibi_s) << '\n';
  }
}

// --------------------------------------------------------------------- GPS

GpsTrack parse_gps_track(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!next_line(in, line, line_no)) throw FormatError("GPS file: missing header");
  {
    const auto cols = split(trim(line), ',');
    if (cols.size() != 3 || trim(cols[0]) != "epoch" || trim(cols[1]) != "lat" ||
        trim(cols[2]) != "lon") {
      throw FormatError(at_line(line_no) + ": expected header 'epoch,lat,lon'");
    }
  }
  GpsTrack track;
  while (next_line(in, line, line_no)) {
    const auto fields = split(line, ',');
    if (fields.size() != 3) throw FormatError(at_line(line_no) + ": expected 3 columns");
    GpsFix fix;
    fix.epoch = require_number(fields[0], line_no, "epoch");
    fix.lat = require_number(fields[1], line_no, "latitude");
    fix.lon = require_number(fields[2], line_no, "longitude");
    if (fix.lat < -90.0 || fix.lat > 90.0) {
      throw ValueError(at_line(line_no) + ": latitude out of range [-90, 90]");
    }
    if (fix.lon < -180.0 || fix.lon > 180.0) {
      throw ValueError(at_line(line_no) + ": longitude out of range [-180, 180]");
    }
    if (!track.fixes.empty() && fix.epoch <= track.fixes.back().epoch) {
      throw OrderError(at_line(line_no) + ": epochs must be strictly increasing");
    }
    track.fixes.push_back(fix);
  }
  return track;
}

void write_gps_track(std::ostream& out, const GpsTrack& track) {
  out << "epoch,lat,lon\n";
  for (const auto& f : track.fixes) {
    out << format_number(f.epoch) << ',' << format_number(f.lat) << ',' << format_number(f.lon)
        << '\n';
  }
}

// ------------------------------------------------------------------- route

RouteMap load_route(std::istream& in) {
  const json doc = parse_json(in, "route");
  if (!doc.is_object() || doc.value("type", "") != "FeatureCollection") {
    throw FormatError("route: expected a GeoJSON FeatureCollection");
  }
  RouteMap route;
  if (doc.contains("corridor_m")) {
    const auto& c = doc.at("corridor_m");
    if (!c.is_number() || c.get<double>() <= 0.0) {
      throw ValueError("route: corridor_m must be a positive number");
    }
    route.corridor_m = c.get<double>();
  }
  const auto& features = require_member(doc, "features", "route");
  if (!features.is_array()) throw FormatError("route: 'features' must be an array");

  std::set<int> seen;
  for (std::size_t i = 0; i < features.size(); ++i) {
    const std::string ctx = "route feature " + std::to_string(i);
    const auto& f = features[i];
    const auto& props = require_member(f, "properties", ctx);
    const auto& geom = require_member(f, "geometry", ctx);
    if (!geom.is_object() || geom.value("type", "") != "LineString") {
      throw FormatError(ctx + ": geometry must be a LineString");
    }
    RouteSegment seg;
    const auto& id = require_member(props, "segment_id", ctx);
    if (!id.is_number_integer()) throw FormatError(ctx + ": segment_id must be an integer");
    seg.id = id.get<int>();
    const auto& name = require_member(props, "name", ctx);
    const auto& env = require_member(props, "environment", ctx);
    if (!name.is_string() || !env.is_string()) {
      throw FormatError(ctx + ": name and environment must be strings");
    }
    seg.name = name.get<std::string>();
    seg.environment = env.get<std::string>();

    const auto& coords = require_member(geom, "coordinates", ctx);
    if (!coords.is_array()) throw FormatError(ctx + ": coordinates must be an array");
    for (const auto& c : coords) {
      if (!c.is_array() || c.size() < 2 || !c[0].is_number() || !c[1].is_number()) {
        throw FormatError(ctx + ": malformed position");
      }
      // GeoJSON positions are [lon, lat].
      GeoPoint p{c[1].get<double>(), c[0].get<double>()};
      if (p.lat < -90.0 || p.lat > 90.0 || p.lon < -180.0 || p.lon > 180.0) {
        throw ValueError(ctx + ": coordinate out of range");
      }
      seg.polyline.push_back(p);
    }
    if (seg.polyline.size() < 2) {
      throw FormatError(ctx + ": LineString needs at least 2 positions");
    }
    if (!seen.insert(seg.id).second) {
      throw ValueError("route: duplicate segment_id " + std::to_string(seg.id));
    }
    route.segments.push_back(std::move(seg));
  }
  return route;
}

void write_route(std::ostream& out, const RouteMap& route) {
  // Written by hand so that coordinates keep their shortest round-trip form.
  out << "{\"type\":\"FeatureCollection\",\"corridor_m\":" << format_number(route.corridor_m)
      << ",\"features\":[";
  for (std::size_t i = 0; i < route.segments.size(); ++i) {
    const auto& s = route.segments[i];
    if (i) out << ',';
    out << "\n{\"type\":\"Feature\",\"properties\":{\"segment_id\":" << s.id
        << ",\"name\":" << json(s.name).dump() << ",\"environment\":" << json(s.environment).dump()
        << "},\"geometry\":{\"type\":\"LineString\",\"coordinates\":[";
    for (std::size_t k = 0; k < s.polyline.size(); ++k) {
      if (k) out << ',';
      out << '[' << format_number(s.polyline[k].lon) << ',' << format_number(s.polyline[k].lat)
          << ']';
    }
    out << "]}}";
  }
  out << "\n]}\n";
}

// ---------------------------------------------------------------- manifest

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

void require_file(const fs::path& p, const std::string& what) {
  std::error_code ec;
  if (!fs::is_regular_file(p, ec)) {
    throw ReferenceError(what + ": file not found: " + p.string());
  }
}

double number_member(const json& obj, const char* key, double fallback, const std::string& ctx) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number()) throw FormatError(ctx + ": '" + key + "' must be a number");
  return v.get<double>();
}

std::string relative_to(const fs::path& p, const fs::path& base) {
  if (base.empty()) return p.generic_string();
  const auto rel = p.lexically_relative(base);
  if (rel.empty() || *rel.begin() == "..") return p.generic_string();
  return rel.generic_string();
}

}  // namespace

StudyManifest load_manifest(std::istream& in, const fs::path& base_dir) {
  const json doc = parse_json(in, "manifest");
  if (!doc.is_object()) throw FormatError("manifest: expected a JSON object");

  StudyManifest m;
  const auto& route = require_member(doc, "route", "manifest");
  if (!route.is_string()) throw FormatError("manifest: 'route' must be a path string");
  m.route_path = resolve(base_dir, route.get<std::string>());
  require_file(m.route_path, "manifest route");
  {
    std::ifstream rf(m.route_path);
    m.route = load_route(rf);
  }

  const auto& stress = require_member(doc, "stress_event", "manifest");
  const auto& stress_id = require_member(stress, "segment_id", "manifest stress_event");
  if (!stress_id.is_number_integer()) throw FormatError("manifest: stress segment_id must be an integer");
  m.stress_segment_id = stress_id.get<int>();
  const auto& neutral_id = require_member(doc, "neutral_segment_id", "manifest");
  if (!neutral_id.is_number_integer()) throw FormatError("manifest: neutral_segment_id must be an integer");
  m.neutral_segment_id = neutral_id.get<int>();

  m.window_offset_s = number_member(doc, "window_offset_s", 5.0, "manifest");
  m.window_duration_s = number_member(doc, "window_duration_s", 30.0, "manifest");
  if (m.window_offset_s < 0.0) throw ValueError("manifest: window_offset_s must be >= 0");
  if (m.window_duration_s <= 0.0) throw ValueError("manifest: window_duration_s must be > 0");

  for (int id : {m.stress_segment_id, m.neutral_segment_id}) {
    if (!m.route.find(id)) {
      throw ReferenceError("manifest: segment " + std::to_string(id) + " is not in the route");
    }
  }

  if (doc.contains("subjective_rankings")) {
    const auto& r = doc.at("subjective_rankings");
    if (!r.is_object()) throw FormatError("manifest: subjective_rankings must be an object");
    for (const auto& [key, value] : r.items()) {
      const auto id = parse_number(key);
      if (!id || *id != std::floor(*id) || !value.is_number()) {
        throw FormatError("manifest: subjective_rankings entries must map segment id to number");
      }
      const int seg = static_cast<int>(*id);
      if (!m.route.find(seg)) {
        throw ReferenceError("manifest: ranking for unknown segment " + key);
      }
      m.subjective_rankings[seg] = value.get<double>();
    }
  }

  json crossings = json::object();
  if (stress.contains("crossing_start_epoch")) {
    crossings = stress.at("crossing_start_epoch");
    if (!crossings.is_object()) {
      throw FormatError("manifest: crossing_start_epoch must map participant id to epoch");
    }
  }
  json neutral_starts = json::object();
  if (doc.contains("neutral_start_epoch")) {
    neutral_starts = doc.at("neutral_start_epoch");
    if (!neutral_starts.is_object()) {
      throw FormatError("manifest: neutral_start_epoch must map participant id to epoch");
    }
  }

  const auto& parts = require_member(doc, "participants", "manifest");
  if (!parts.is_array() || parts.empty()) {
    throw FormatError("manifest: 'participants' must be a non-empty array");
  }
  std::set<std::string> ids;
  for (const auto& p : parts) {
    ParticipantFiles pf;
    const auto& id = require_member(p, "id", "manifest participant");
    if (!id.is_string() || id.get<std::string>().empty()) {
      throw FormatError("manifest: participant id must be a non-empty string");
    }
    pf.id = id.get<std::string>();
    const std::string ctx = "participant " + pf.id;
    if (!ids.insert(pf.id).second) throw ValueError("manifest: duplicate " + ctx);

    const auto& channels = require_member(p, "channels", ctx);
    if (!channels.is_array()) throw FormatError(ctx + ": 'channels' must be an array");
    for (const auto& c : channels) {
      const auto& kind = require_member(c, "kind", ctx + " channel");
      const auto& path = require_member(c, "path", ctx + " channel");
      if (!kind.is_string() || !path.is_string()) {
        throw FormatError(ctx + ": channel kind and path must be strings");
      }
      ChannelRef ref{channel_kind_from_string(kind.get<std::string>()),
                     resolve(base_dir, path.get<std::string>())};
      require_file(ref.path, ctx);
      pf.channels.push_back(std::move(ref));
    }
    const auto& ibi = require_member(p, "ibi", ctx);
    const auto& gps = require_member(p, "gps", ctx);
    if (!ibi.is_string() || !gps.is_string()) throw FormatError(ctx + ": ibi/gps must be paths");
    pf.ibi = resolve(base_dir, ibi.get<std::string>());
    pf.gps = resolve(base_dir, gps.get<std::string>());
    require_file(pf.ibi, ctx);
    require_file(pf.gps, ctx);

    if (crossings.contains(pf.id)) {
      const auto& v = crossings.at(pf.id);
      if (!v.is_number()) throw FormatError(ctx + ": crossing start must be a number");
      pf.crossing_start_epoch = v.get<double>();
    }
    if (neutral_starts.contains(pf.id)) {
      const auto& v = neutral_starts.at(pf.id);
      if (!v.is_number()) throw FormatError(ctx + ": neutral start must be a number");
      pf.neutral_start_epoch = v.get<double>();
    }
    m.participants.push_back(std::move(pf));
  }
  for (const auto& table : {crossings, neutral_starts}) {
    for (const auto& [key, value] : table.items()) {
      if (!ids.count(key)) throw ReferenceError("manifest: start epoch for unknown participant " + key);
    }
  }
  return m;
}

StudyManifest load_manifest_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ReferenceError("manifest: cannot open " + path.string());
  return load_manifest(in, path.parent_path());
}

void write_manifest(std::ostream& out, const StudyManifest& m, const fs::path& base_dir) {
  // ordered_json keeps the key order stable and human-readable.
  nlohmann::ordered_json doc;
  doc["route"] = relative_to(m.route_path, base_dir);
  nlohmann::ordered_json stress;
  stress["segment_id"] = m.stress_segment_id;
  nlohmann::ordered_json crossings = nlohmann::ordered_json::object();
  nlohmann::ordered_json neutral = nlohmann::ordered_json::object();
  for (const auto& p : m.participants) {
    if (p.crossing_start_epoch) crossings[p.id] = *p.crossing_start_epoch;
    if (p.neutral_start_epoch) neutral[p.id] = *p.neutral_start_epoch;
  }
  stress["crossing_start_epoch"] = crossings;
  doc["stress_event"] = stress;
  doc["neutral_segment_id"] = m.neutral_segment_id;
  if (!neutral.empty()) doc["neutral_start_epoch"] = neutral;
  doc["window_offset_s"] = m.window_offset_s;
  doc["window_duration_s"] = m.window_duration_s;
  if (!m.subjective_rankings.empty()) {
    nlohmann::ordered_json r = nlohmann::ordered_json::object();
    for (const auto& [id, score] : m.subjective_rankings) r[std::to_string(id)] = score;
    doc["subjective_rankings"] = r;
  }
  auto parts = nlohmann::ordered_json::array();
  for (const auto& p : m.participants) {
    nlohmann::ordered_json pj;
    pj["id"] = p.id;
    auto chans = nlohmann::ordered_json::array();
    for (const auto& c : p.channels) {
      chans.push_back({{"kind", std::string(to_string(c.kind))}, {"path", relative_to(c.path, base_dir)}});
    }
    pj["channels"] = chans;
    pj["ibi"] = relative_to(p.ibi, base_dir);
    pj["gps"] = relative_to(p.gps, base_dir);
    parts.push_back(pj);
  }
  doc["participants"] = parts;
  out << doc.dump(2) << '\n';
}

}  // namespace geostress
