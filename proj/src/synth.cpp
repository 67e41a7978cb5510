#include "geostress/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numbers>
#include <random>

#include <json.hpp>

#include "geostress/error.hpp"
#include "geostress/geotrack.hpp"

namespace geostress {

namespace fs = std::filesystem;

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kScrRiseS = 1.0;
constexpr double kScrDecayTau = 1.0;  // decays to 5% within 3 s of the peak
constexpr double kScrSupportS = kScrRiseS + 8.0 * kScrDecayTau;
constexpr double kLfHz = 0.1;
constexpr double kHfHz = 0.25;
constexpr double kTailS = 30.0;

// Distributions are written out by hand: the standard library's are not
// specified bit-for-bit, and datasets must be identical across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double exponential(double rate) { return -std::log1p(-uniform()) / rate; }
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

GeoPoint offset_m(GeoPoint p, double north_m, double east_m) {
  return {p.lat + north_m / kEarthRadiusM / kDegToRad,
          p.lon + east_m / (kEarthRadiusM * std::cos(p.lat * kDegToRad)) / kDegToRad};
}

GeoPoint step(GeoPoint p, double heading_deg, double dist_m) {
  const double h = heading_deg * kDegToRad;
  return offset_m(p, dist_m * std::cos(h), dist_m * std::sin(h));
}

// The route flattened into one polyline with cumulative distances.
struct Path {
  std::vector<GeoPoint> vertices;
  std::vector<double> cum_m;
  std::vector<double> segment_start_m;  // per route segment, in route order
  std::vector<double> segment_end_m;

  double length() const { return cum_m.back(); }

  GeoPoint at(double s) const {
    s = std::clamp(s, 0.0, length());
    auto it = std::upper_bound(cum_m.begin(), cum_m.end(), s);
    if (it == cum_m.end()) return vertices.back();
    const auto j = static_cast<std::size_t>(it - cum_m.begin());
    const double u = (s - cum_m[j - 1]) / (cum_m[j] - cum_m[j - 1]);
    return {vertices[j - 1].lat + u * (vertices[j].lat - vertices[j - 1].lat),
            vertices[j - 1].lon + u * (vertices[j].lon - vertices[j - 1].lon)};
  }
};

Path build_path(const RouteMap& route) {
  Path path;
  for (const auto& seg : route.segments) {
    for (std::size_t k = 0; k < seg.polyline.size(); ++k) {
      const GeoPoint v = seg.polyline[k];
      if (path.vertices.empty()) {
        path.vertices.push_back(v);
        path.cum_m.push_back(0.0);
      } else if (!(k == 0 && v == path.vertices.back())) {
        path.cum_m.push_back(path.cum_m.back() + haversine_m(path.vertices.back(), v));
        path.vertices.push_back(v);
      }
      if (k == 0) path.segment_start_m.push_back(path.cum_m.back());
    }
    path.segment_end_m.push_back(path.cum_m.back());
  }
  return path;
}

std::size_t segment_index(const RouteMap& route, int id) {
  for (std::size_t i = 0; i < route.segments.size(); ++i) {
    if (route.segments[i].id == id) return i;
  }
  throw ReferenceError("synth: segment " + std::to_string(id) + " is not in the route");
}

double scr_shape(double dt) {
  if (dt <= 0.0 || dt >= kScrSupportS) return 0.0;
  if (dt < kScrRiseS) return dt / kScrRiseS;
  return std::exp(-(dt - kScrRiseS) / kScrDecayTau);
}

std::size_t count_peaks(const std::vector<ScrEvent>& events, double start, double duration) {
  return static_cast<std::size_t>(std::count_if(events.begin(), events.end(), [&](const ScrEvent& e) {
    return e.peak_epoch >= start && e.peak_epoch < start + duration;
  }));
}

void write_file(const fs::path& p, const auto& writer) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ReferenceError("synth: cannot write " + p.string());
  writer(out);
  if (!out) throw ReferenceError("synth: write failed for " + p.string());
}

}  // namespace

RouteMap default_route() {
  struct Row {
    const char* name;
    const char* environment;
    double heading_deg;
    double length_m;
  };
  // Lengths keep every segment walkable in > 35 s at 1.4 m/s; headings stay
  // east-going so that no two non-adjacent segments come within a corridor.
  static constexpr Row rows[] = {
      {"central-station", "Central station (indoor)", 90, 80},
      {"busy-junction", "Busy junction", 60, 60},
      {"lombok-commercial", "Neighborhood commercial street (Lombok)", 90, 120},
      {"lombok-street", "Neighborhood street (Lombok)", 120, 100},
      {"canal", "Blue space 1 (canal)", 90, 120},
      {"blue-space-2", "Blue space 2", 45, 100},
      {"urban-park", "Green space (urban park)", 30, 150},
      {"street-2", "non-commercial street 2", 60, 100},
      {"pedestrian-street", "Pedestrians street", 90, 150},
      {"main-road", "Walk along a main road", 120, 120},
      {"road-crossing", "Road crossing", 150, 70},
      {"to-bus-station", "Walk to bus station", 120, 80},
      {"bus-ride", "Bus ride", 90, 200},
  };
  RouteMap route;
  route.corridor_m = 25.0;
  GeoPoint at{52.0894, 5.1100};
  int id = 1;
  for (const auto& r : rows) {
    RouteSegment seg;
    seg.id = id++;
    seg.name = r.name;
    seg.environment = r.environment;
    // Two legs with a slight bend.
    const GeoPoint mid = step(at, r.heading_deg - 10.0, r.length_m / 2.0);
    const GeoPoint end = step(mid, r.heading_deg + 10.0, r.length_m / 2.0);
    seg.polyline = {at, mid, end};
    route.segments.push_back(std::move(seg));
    at = end;
  }
  return route;
}

std::map<int, double> default_rankings() {
  return {{1, 6.73}, {2, 6.33}, {3, 5.27}, {5, 2.73}, {7, 1.20}, {8, 3.47}, {10, 5.27}, {13, 5.00}};
}

SynthSpec default_synth_spec() {
  SynthSpec s;
  s.route = default_route();
  s.subjective_rankings = default_rankings();
  return s;
}

void SynthSpec::validate() const {
  if (n_participants < 1) throw ValueError("synth spec: n_participants must be >= 1");
  if (route.segments.empty()) throw ValueError("synth spec: route is empty");
  if (!(walk_speed_mps > 0.0)) throw ValueError("synth spec: walk_speed_mps must be > 0");
  if (!(eda_rate_hz >= 1.0) || eda_rate_hz != std::floor(eda_rate_hz)) {
    throw ValueError("synth spec: eda_rate_hz must be a whole number >= 1");
  }
  if (!(baseline_eda_uS > 0.0)) throw ValueError("synth spec: baseline_eda_uS must be > 0");
  if (!(neutral_scr_rate_per_min >= 0.0) || !(stress_scr_rate_per_min >= 0.0)) {
    throw ValueError("synth spec: SCR rates must be >= 0");
  }
  if (!(scr_amp_min_uS > 0.0 && scr_amp_min_uS <= scr_amp_max_uS)) {
    throw ValueError("synth spec: SCR amplitude range must satisfy 0 < min <= max");
  }
  if (!(scr_min_gap_s >= 0.0)) throw ValueError("synth spec: scr_min_gap_s must be >= 0");
  if (!(base_ibi_ms > 300.0 && base_ibi_ms < 2000.0)) {
    throw ValueError("synth spec: base_ibi_ms must lie in (300, 2000)");
  }
  if (!(ibi_noise_ms >= 0.0 && lf_mod_ms >= 0.0 && hf_mod_ms >= 0.0 && stress_lf_mod_ms >= 0.0)) {
    throw ValueError("synth spec: IBI noise and modulation amplitudes must be >= 0");
  }
  if (!(gps_noise_m >= 0.0)) throw ValueError("synth spec: gps_noise_m must be >= 0");
  if (!(lead_in_s >= 0.0)) throw ValueError("synth spec: lead_in_s must be >= 0");
  if (!(window_offset_s >= 0.0)) throw ValueError("synth spec: window_offset_s must be >= 0");
  if (!(window_duration_s > 0.0)) throw ValueError("synth spec: window_duration_s must be > 0");
  segment_index(route, stress_segment_id);
  segment_index(route, neutral_segment_id);
}

SynthSpec parse_synth_spec(std::istream& in, const fs::path& base_dir) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("synth spec: ") + e.what());
  }
  if (!doc.is_object()) throw FormatError("synth spec: expected a JSON object");

  SynthSpec s = default_synth_spec();
  auto num = [&](const char* key, double& field) {
    if (!doc.contains(key)) return;
    if (!doc.at(key).is_number()) throw FormatError(std::string("synth spec: '") + key + "' must be a number");
    field = doc.at(key).get<double>();
  };
  auto integer = [&](const char* key, auto& field) {
    if (!doc.contains(key)) return;
    if (!doc.at(key).is_number_integer()) {
      throw FormatError(std::string("synth spec: '") + key + "' must be an integer");
    }
    field = doc.at(key).get<std::remove_reference_t<decltype(field)>>();
  };

  static const std::vector<std::string> known = {
      "seed", "n_participants", "route", "start_epoch", "lead_in_s", "walk_speed_mps",
      "baseline_eda_uS", "eda_drift_uS_per_min", "eda_rate_hz", "neutral_scr_rate_per_min",
      "stress_scr_rate_per_min", "scr_amp_range_uS", "scr_min_gap_s", "base_ibi_ms",
      "ibi_noise_ms", "lf_mod_ms", "hf_mod_ms", "stress_lf_mod_ms", "stress_segment_id",
      "neutral_segment_id", "gps_noise_m", "window_offset_s", "window_duration_s",
      "subjective_rankings"};
  for (const auto& [key, value] : doc.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw FormatError("synth spec: unknown key '" + key + "'");
    }
  }

  integer("seed", s.seed);
  integer("n_participants", s.n_participants);
  num("start_epoch", s.start_epoch);
  num("lead_in_s", s.lead_in_s);
  num("walk_speed_mps", s.walk_speed_mps);
  num("baseline_eda_uS", s.baseline_eda_uS);
  num("eda_drift_uS_per_min", s.eda_drift_uS_per_min);
  num("eda_rate_hz", s.eda_rate_hz);
  num("neutral_scr_rate_per_min", s.neutral_scr_rate_per_min);
  num("stress_scr_rate_per_min", s.stress_scr_rate_per_min);
  num("scr_min_gap_s", s.scr_min_gap_s);
  num("base_ibi_ms", s.base_ibi_ms);
  num("ibi_noise_ms", s.ibi_noise_ms);
  num("lf_mod_ms", s.lf_mod_ms);
  num("hf_mod_ms", s.hf_mod_ms);
  num("stress_lf_mod_ms", s.stress_lf_mod_ms);
  integer("stress_segment_id", s.stress_segment_id);
  integer("neutral_segment_id", s.neutral_segment_id);
  num("gps_noise_m", s.gps_noise_m);
  num("window_offset_s", s.window_offset_s);
  num("window_duration_s", s.window_duration_s);
  if (doc.contains("scr_amp_range_uS")) {
    const auto& r = doc.at("scr_amp_range_uS");
    if (!r.is_array() || r.size() != 2 || !r[0].is_number() || !r[1].is_number()) {
      throw FormatError("synth spec: scr_amp_range_uS must be [min, max]");
    }
    s.scr_amp_min_uS = r[0].get<double>();
    s.scr_amp_max_uS = r[1].get<double>();
  }
  if (doc.contains("route")) {
    if (!doc.at("route").is_string()) throw FormatError("synth spec: 'route' must be a path");
    fs::path p(doc.at("route").get<std::string>());
    if (p.is_relative()) p = base_dir / p;
    std::ifstream rf(p);
    if (!rf) throw ReferenceError("synth spec: route file not found: " + p.string());
    s.route = load_route(rf);
    s.subjective_rankings.clear();
  }
  if (doc.contains("subjective_rankings")) {
    const auto& r = doc.at("subjective_rankings");
    if (!r.is_object()) throw FormatError("synth spec: subjective_rankings must be an object");
    s.subjective_rankings.clear();
    for (const auto& [key, value] : r.items()) {
      const auto id = parse_number(key);
      if (!id || !value.is_number()) {
        throw FormatError("synth spec: subjective_rankings must map segment id to number");
      }
      s.subjective_rankings[static_cast<int>(*id)] = value.get<double>();
    }
  }
  s.validate();
  return s;
}

std::string participant_id(int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "P%02d", index + 1);
  return buf;
}

SyntheticParticipant simulate_participant(const SynthSpec& spec, int index) {
  spec.validate();
  Rng rng(splitmix64(spec.seed ^ splitmix64(static_cast<std::uint64_t>(index) + 1)));
  const Path path = build_path(spec.route);

  SyntheticParticipant p;
  p.id = participant_id(index);
  // Sessions are spaced two hours apart and start on whole seconds.
  p.session_start = spec.start_epoch + 7200.0 * index;
  const double t0 = p.session_start;
  const double walk_start = t0 + spec.lead_in_s;
  const double duration = std::ceil(spec.lead_in_s + path.length() / spec.walk_speed_mps + kTailS);

  const std::size_t stress_idx = segment_index(spec.route, spec.stress_segment_id);
  const std::size_t neutral_idx = segment_index(spec.route, spec.neutral_segment_id);
  const double stress_begin = walk_start + path.segment_start_m[stress_idx] / spec.walk_speed_mps;
  const double stress_end = walk_start + path.segment_end_m[stress_idx] / spec.walk_speed_mps;
  p.crossing_start_epoch = stress_begin;
  p.neutral_start_epoch = walk_start + path.segment_start_m[neutral_idx] / spec.walk_speed_mps;
  auto in_stress = [&](double t) { return t >= stress_begin && t < stress_end; };

  // GPS, 1 Hz.
  const auto n_fixes = static_cast<std::size_t>(duration) + 1;
  p.gps.fixes.reserve(n_fixes);
  for (std::size_t i = 0; i < n_fixes; ++i) {
    const double t = t0 + static_cast<double>(i);
    const GeoPoint on_route = path.at((t - walk_start) * spec.walk_speed_mps);
    const double north = spec.gps_noise_m * rng.normal();
    const double east = spec.gps_noise_m * rng.normal();
    const GeoPoint g = offset_m(on_route, north, east);
    p.gps.fixes.push_back({t, g.lat, g.lon});
  }

  // SCR onsets: Poisson process by thinning against the larger rate.
  const double max_rate = std::max(spec.neutral_scr_rate_per_min, spec.stress_scr_rate_per_min) / 60.0;
  if (max_rate > 0.0) {
    double t = t0;
    while (true) {
      t += rng.exponential(max_rate);
      if (t >= t0 + duration) break;
      const double rate =
          (in_stress(t) ? spec.stress_scr_rate_per_min : spec.neutral_scr_rate_per_min) / 60.0;
      const double accept = rng.uniform();
      if (accept * max_rate >= rate) continue;
      const double amp = rng.uniform(spec.scr_amp_min_uS, spec.scr_amp_max_uS);
      p.scrs.push_back({t, t + kScrRiseS, amp});
      t += spec.scr_min_gap_s;
    }
  }

  // EDA at eda_rate_hz.
  const double baseline = spec.baseline_eda_uS * rng.uniform(0.8, 1.2);
  p.eda.kind = ChannelKind::EDA;
  p.eda.start_epoch = t0;
  p.eda.rate_hz = spec.eda_rate_hz;
  const auto n_eda = static_cast<std::size_t>((duration + 1.0) * spec.eda_rate_hz);
  p.eda.values.resize(n_eda);
  for (std::size_t i = 0; i < n_eda; ++i) {
    const double t = p.eda.time_at(i);
    p.eda.values[i] = baseline + spec.eda_drift_uS_per_min * (t - t0) / 60.0;
  }
  for (const auto& e : p.scrs) {
    const auto first = static_cast<std::size_t>(std::ceil((e.onset_epoch - t0) * spec.eda_rate_hz));
    for (std::size_t i = first; i < n_eda; ++i) {
      const double dt = p.eda.time_at(i) - e.onset_epoch;
      if (dt >= kScrSupportS) break;
      p.eda.values[i] += e.amplitude_uS * scr_shape(dt);
    }
  }
  for (double& v : p.eda.values) v = std::max(v, 0.0);

  // Heartbeats.
  const double base_ibi = (spec.base_ibi_ms + rng.uniform(-50.0, 50.0)) / 1000.0;
  const double hf_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  double t = t0 + rng.uniform(0.3, 1.0);
  while (t < t0 + duration) {
    const double rel = t - t0;
    const double lf = (in_stress(t) ? spec.stress_lf_mod_ms : spec.lf_mod_ms) / 1000.0;
    double ibi = base_ibi + lf * std::sin(2.0 * std::numbers::pi * kLfHz * rel) +
                 spec.hf_mod_ms / 1000.0 * std::sin(2.0 * std::numbers::pi * kHfHz * rel + hf_phase) +
                 spec.ibi_noise_ms / 1000.0 * rng.normal();
    ibi = std::clamp(ibi, 0.35, 1.8);
    // Whole microseconds so the written offsets are short and exact.
    ibi = std::round(ibi * 1e6) / 1e6;
    const double beat = std::round((t + ibi - t0) * 1e6) / 1e6 + t0;
    if (beat >= t0 + duration) break;
    p.ibis.beats.push_back({beat, ibi, false, false});
    t = beat;
  }

  // HR at 1 Hz from the most recent beat.
  p.hr.kind = ChannelKind::HR;
  p.hr.start_epoch = t0;
  p.hr.rate_hz = 1.0;
  const auto n_hr = static_cast<std::size_t>(duration) + 1;
  p.hr.values.reserve(n_hr);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n_hr; ++i) {
    const double ti = p.hr.time_at(i);
    while (k + 1 < p.ibis.size() && p.ibis.beats[k + 1].epoch <= ti) ++k;
    const double ibi = p.ibis.empty() ? base_ibi : p.ibis.beats[k].ibi_s;
    p.hr.values.push_back(std::round(60.0 / ibi * 100.0) / 100.0);
  }

  const double off = spec.window_offset_s;
  const double dur = spec.window_duration_s;
  p.neutral_window = {p.neutral_start_epoch + off, dur,
                      count_peaks(p.scrs, p.neutral_start_epoch + off, dur)};
  p.crossing_window = {p.crossing_start_epoch + off, dur,
                       count_peaks(p.scrs, p.crossing_start_epoch + off, dur)};
  return p;
}

SynthOutput generate_cohort(const SynthSpec& spec, const fs::path& out_dir) {
  spec.validate();
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw ReferenceError("synth: cannot create " + out_dir.string() + ": " + ec.message());

  StudyManifest manifest;
  manifest.route_path = out_dir / "route.geojson";
  manifest.route = spec.route;
  manifest.stress_segment_id = spec.stress_segment_id;
  manifest.neutral_segment_id = spec.neutral_segment_id;
  manifest.window_offset_s = spec.window_offset_s;
  manifest.window_duration_s = spec.window_duration_s;
  manifest.subjective_rankings = spec.subjective_rankings;
  write_file(manifest.route_path, [&](std::ostream& o) { write_route(o, spec.route); });

  nlohmann::ordered_json truth;
  truth["seed"] = spec.seed;
  truth["scr_rise_s"] = kScrRiseS;
  truth["scr_decay_tau_s"] = kScrDecayTau;
  auto truth_parts = nlohmann::ordered_json::array();

  for (int i = 0; i < spec.n_participants; ++i) {
    const auto p = simulate_participant(spec, i);
    ParticipantFiles files;
    files.id = p.id;
    files.channels = {{ChannelKind::EDA, out_dir / (p.id + "_eda.csv")},
                      {ChannelKind::HR, out_dir / (p.id + "_hr.csv")}};
    files.ibi = out_dir / (p.id + "_ibi.csv");
    files.gps = out_dir / (p.id + "_gps.csv");
    files.crossing_start_epoch = p.crossing_start_epoch;

    write_file(files.channels[0].path, [&](std::ostream& o) { write_uniform_channel(o, p.eda); });
    write_file(files.channels[1].path, [&](std::ostream& o) { write_uniform_channel(o, p.hr); });
    write_file(files.ibi, [&](std::ostream& o) { write_ibi_file(o, p.session_start, p.ibis); });
    write_file(files.gps, [&](std::ostream& o) { write_gps_track(o, p.gps); });
    manifest.participants.push_back(std::move(files));

    nlohmann::ordered_json pj;
    pj["id"] = p.id;
    pj["session_start"] = p.session_start;
    pj["crossing_start_epoch"] = p.crossing_start_epoch;
    pj["neutral_start_epoch"] = p.neutral_start_epoch;
    auto window = [](const GroundTruthWindow& w) {
      nlohmann::ordered_json j;
      j["start_epoch"] = w.start_epoch;
      j["duration_s"] = w.duration_s;
      j["n_scr"] = w.n_scr;
      return j;
    };
    pj["windows"] = {{"neutral", window(p.neutral_window)}, {"crossing", window(p.crossing_window)}};
    auto events = nlohmann::ordered_json::array();
    for (const auto& e : p.scrs) {
      events.push_back({e.onset_epoch, e.peak_epoch, e.amplitude_uS});
    }
    pj["scr_events"] = events;  // [onset, peak, amplitude]
    truth_parts.push_back(pj);
  }
  truth["participants"] = truth_parts;

  SynthOutput out{out_dir / "manifest.json", out_dir / "ground_truth.json"};
  write_file(out.manifest, [&](std::ostream& o) { write_manifest(o, manifest, out_dir); });
  write_file(out.ground_truth, [&](std::ostream& o) { o << truth.dump(2) << '\n'; });
  return out;
}

}  // namespace geostress
