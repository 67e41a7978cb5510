#pragma once

// End-to-end pipeline behind the `analyze` and `synth` commands.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "geostress/eda.hpp"
#include "geostress/episodes.hpp"
#include "geostress/error.hpp"
#include "geostress/hrv.hpp"
#include "geostress/ingest.hpp"
#include "geostress/timealign.hpp"

namespace geostress {

struct RunConfig {
  std::filesystem::path manifest;
  std::filesystem::path out_dir;
  EdaConfig eda;
  HrvConfig hrv;
  std::optional<double> corridor_m;  // overrides the route's own
  double tolerance_s = kDefaultJoinTolerance;
  int jobs = 1;

  void validate() const;
};

// Applies overrides from a JSON config file. Recognised keys: corridor_m,
// tolerance_s, jobs, scr_threshold_uS, tonic_window_s, smooth_window_s,
// pnn_threshold_ms, lf_band_hz, hf_band_hz, interp_rate_hz, max_gap_s,
// ibi_bounds_s.
void apply_config_file(RunConfig& cfg, const std::filesystem::path& path);

struct ParticipantResult {
  std::string id;
  GeoSampleTrack track;
  std::vector<SegmentSummary> segments;
  ParticipantIndexTable indexes;
  std::optional<EpisodeWindow> neutral_window;
  std::optional<EpisodeWindow> crossing_window;
  std::size_t unmatched_eda = 0;
  std::size_t unmatched_hr = 0;
  bool hrv_short_window = false;
};

// Reads one participant's files and computes everything per participant.
// Throws on unreadable or malformed files; problems confined to one episode
// window are recorded in indexes.failure instead.
ParticipantResult analyze_participant(const ParticipantFiles& files, const StudyManifest& manifest,
                                      const RunConfig& cfg);

struct AnalysisReport {
  std::vector<ParticipantResult> participants;  // manifest order
  std::vector<SegmentSummary> segments;         // cohort table
  std::optional<CohortComparison> comparison;
  std::string notice;  // why the stats stage was skipped, if it was
  bool hrv_short_window = false;
};

// Raised when one or more participant files cannot be read or parsed.
class InputFilesError : public Error {
 public:
  InputFilesError(std::vector<std::string> diagnostics);
  const std::vector<std::string>& diagnostics() const { return diagnostics_; }

 private:
  std::vector<std::string> diagnostics_;
};

AnalysisReport run_analysis(const StudyManifest& manifest, const RunConfig& cfg);

void write_track_geojson(std::ostream& out, const GeoSampleTrack& track);
void write_segments_csv(std::ostream& out, const std::vector<SegmentSummary>& segments);
void write_stats_json(std::ostream& out, const AnalysisReport& report, const StudyManifest& manifest);

// Writes track_<id>.geojson, segments.csv and stats.json into out_dir. On
// failure every file written so far is removed.
void write_outputs(const AnalysisReport& report, const StudyManifest& manifest,
                   const std::filesystem::path& out_dir);

enum ExitCode : int { kExitOk = 0, kExitInputError = 1, kExitInternalError = 2 };

int cmd_analyze(const RunConfig& cfg, std::ostream& log);
int cmd_synth(const std::filesystem::path& spec_path, const std::filesystem::path& out_dir,
              std::ostream& log);

// Rounds to 6 significant digits, the precision of every derived number in
// the reports.
double round_sig6(double value);

}  // namespace geostress
