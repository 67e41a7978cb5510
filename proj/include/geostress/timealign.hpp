#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "geostress/ingest.hpp"

namespace geostress {

// One GPS fix enriched with the 1 Hz physiology and route context.
struct GeoSample {
  double epoch = 0.0;
  double lat = 0.0;
  double lon = 0.0;
  std::optional<double> eda_uS;
  std::optional<double> hr_bpm;
  std::optional<int> segment_id;
  std::optional<double> speed_mps;
};

struct GeoSampleTrack {
  std::vector<GeoSample> rows;
};

struct JoinResult {
  GeoSampleTrack track;
  // Fixes left without an EDA / HR sample.
  std::size_t unmatched_eda = 0;
  std::size_t unmatched_hr = 0;
};

inline constexpr double kDefaultJoinTolerance = 0.5;

// Block means of k consecutive samples; the output rate is rate / k and a
// trailing partial block is dropped.
SampleSeries downsample_mean(const SampleSeries& series, std::size_t k);

// For each fix, the index of the channel sample matched to it. Candidate
// pairs within tolerance are taken closest-first, so every sample is used at
// most once and each fix gets the nearest sample still available.
std::vector<std::optional<std::size_t>> match_samples(const std::vector<double>& fix_epochs,
                                                      const SampleSeries& channel,
                                                      double tolerance_s);

// Attaches 1 Hz EDA and HR values to GPS fixes. Channels must already be at
// 1 Hz; either may be empty.
JoinResult join_to_track(const GpsTrack& track, const SampleSeries& eda_1hz,
                         const SampleSeries& hr_1hz,
                         double tolerance_s = kDefaultJoinTolerance);

// Half-open windows [start, start + duration).
SampleSeries slice_window(const SampleSeries& series, double start_epoch, double duration_s);
IbiSeries slice_window(const IbiSeries& series, double start_epoch, double duration_s);

}  // namespace geostress
