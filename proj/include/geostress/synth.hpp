#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "geostress/eda.hpp"
#include "geostress/ingest.hpp"

namespace geostress {

// Parameters of a synthetic walking study. Every participant walks the route
// in segment order; EDA is baseline + linear drift + SCR bumps arriving as a
// Poisson process whose rate switches while inside the stress segment; IBIs
// are a noisy baseline with LF (0.1 Hz) and HF (0.25 Hz) modulation, the LF
// amplitude also switching inside the stress segment.
struct SynthSpec {
  std::uint64_t seed = 1;
  int n_participants = 15;
  RouteMap route;
  double start_epoch = 1500000000.0;
  double lead_in_s = 30.0;  // standing at the first vertex before walking
  double walk_speed_mps = 1.4;
  double baseline_eda_uS = 2.0;
  double eda_drift_uS_per_min = 0.2;
  double eda_rate_hz = 4.0;
  double neutral_scr_rate_per_min = 2.0;
  double stress_scr_rate_per_min = 12.0;
  double scr_amp_min_uS = 0.2;
  double scr_amp_max_uS = 1.0;
  // Minimum onset-to-onset spacing; 0 gives a plain Poisson process.
  double scr_min_gap_s = 0.0;
  double base_ibi_ms = 800.0;
  double ibi_noise_ms = 15.0;
  double lf_mod_ms = 10.0;
  double hf_mod_ms = 25.0;
  double stress_lf_mod_ms = 40.0;
  int stress_segment_id = 11;
  int neutral_segment_id = 9;
  double gps_noise_m = 3.0;
  double window_offset_s = 5.0;
  double window_duration_s = 30.0;
  std::map<int, double> subjective_rankings;

  void validate() const;
};

// 13 connected segments labelled with urban walking environments (street,
// park, crossing, ...). Geometry is illustrative.
RouteMap default_route();
std::map<int, double> default_rankings();
SynthSpec default_synth_spec();

// Keys match the SynthSpec field names; "route" is an optional path to a
// route GeoJSON resolved against base_dir. Missing keys keep the defaults.
SynthSpec parse_synth_spec(std::istream& in, const std::filesystem::path& base_dir);

struct GroundTruthWindow {
  double start_epoch = 0.0;
  double duration_s = 0.0;
  std::size_t n_scr = 0;
};

struct SyntheticParticipant {
  std::string id;
  double session_start = 0.0;
  double crossing_start_epoch = 0.0;
  double neutral_start_epoch = 0.0;
  SampleSeries eda;
  SampleSeries hr;
  IbiSeries ibis;
  GpsTrack gps;
  std::vector<ScrEvent> scrs;  // injected responses, onset order
  GroundTruthWindow neutral_window;
  GroundTruthWindow crossing_window;
};

std::string participant_id(int index);

// Deterministic in (spec.seed, index) alone.
SyntheticParticipant simulate_participant(const SynthSpec& spec, int index);

struct SynthOutput {
  std::filesystem::path manifest;
  std::filesystem::path ground_truth;
};

// Writes route.geojson, manifest.json, ground_truth.json and four files per
// participant (EDA, HR, IBI, GPS) into out_dir.
SynthOutput generate_cohort(const SynthSpec& spec, const std::filesystem::path& out_dir);

}  // namespace geostress
