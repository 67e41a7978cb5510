#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "geostress/ingest.hpp"
#include "geostress/timealign.hpp"

namespace geostress {

struct EpisodeWindow {
  std::string label;
  double start_epoch = 0.0;
  double duration_s = 0.0;

  double end_epoch() const { return start_epoch + duration_s; }
};

inline constexpr double kCrossingOffsetS = 5.0;
inline constexpr double kCrossingDurationS = 30.0;

// [start + offset, start + offset + duration)
EpisodeWindow make_crossing_window(double crossing_start_epoch,
                                   double offset_s = kCrossingOffsetS,
                                   double duration_s = kCrossingDurationS,
                                   std::string label = "crossing");

struct SegmentSummary {
  int segment_id = 0;
  std::string environment;
  std::optional<double> mean_eda_uS;
  std::optional<double> mean_hr_bpm;
  std::optional<double> subjective_rank;
};

// Per-segment means of the attached EDA and HR over the rows assigned to
// each segment, in route order. Segments without rows are omitted.
std::vector<SegmentSummary> segment_summaries(const GeoSampleTrack& track, const RouteMap& route,
                                              const std::map<int, double>& rankings);

// Cohort table: each segment's value is the mean over participants that have
// one, so every participant weighs the same regardless of walking pace.
std::vector<SegmentSummary> cohort_segment_summaries(
    std::span<const std::vector<SegmentSummary>> per_participant, const RouteMap& route,
    const std::map<int, double>& rankings);

struct PairedTestResult {
  std::string index_name;
  std::size_t n = 0;
  double mean_neutral = 0.0;
  double mean_stress = 0.0;
  double t_stat = 0.0;
  std::size_t df = 0;
  double p_two_tailed = 1.0;
  double pct_expected = 0.0;
  // Set when the test is undefined for this index; t and p are then NaN.
  std::string note;
};

// Two-tailed p-value of Student's t with df degrees of freedom.
double t_to_p(double t, double df);

// Paired test on d_i = stress_i - neutral_i. All-zero differences give
// t = 0, p = 1; constant non-zero differences are degenerate.
PairedTestResult paired_t(std::span<const double> neutral, std::span<const double> stress);

// Index names in report row order.
inline constexpr std::array<std::string_view, 8> kEpisodeIndexes = {
    "nSCR", "AmpSum", "PhasicMax", "GlobalMean", "MaxDeflection", "SDNN", "pNN50", "LF/HF"};

struct EpisodeValues {
  std::optional<double> neutral;
  std::optional<double> stress;
};

struct ParticipantIndexTable {
  std::string participant_id;
  std::map<std::string, EpisodeValues> values;
  // Why the participant could not contribute, when known.
  std::string failure;
};

struct Exclusion {
  std::string participant_id;
  std::string reason;
};

struct CohortComparison {
  std::vector<PairedTestResult> results;
  std::vector<Exclusion> exclusions;
};

// One paired test per requested index, in kEpisodeIndexes order. A
// participant missing any value for any requested index is excluded from all
// of them.
CohortComparison compare_episodes(std::span<const ParticipantIndexTable> cohort,
                                  std::span<const std::string_view> indexes = kEpisodeIndexes);

}  // namespace geostress
