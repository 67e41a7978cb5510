#pragma once

#include <cstddef>
#include <vector>

#include "geostress/ingest.hpp"

namespace geostress {

struct EdaConfig {
  double scr_threshold_uS = 0.1;
  double tonic_window_s = 8.0;
  double smooth_window_s = 0.5;

  void validate() const;
};

// tonic + phasic equals the smoothed input sample by sample.
struct EdaDecomposition {
  SampleSeries smoothed;
  SampleSeries tonic;
  SampleSeries phasic;
};

struct ScrEvent {
  double onset_epoch = 0.0;
  double peak_epoch = 0.0;
  double amplitude_uS = 0.0;
};

struct EdaIndexes {
  std::size_t nscr = 0;
  double amp_sum = 0.0;
  double phasic_max = 0.0;
  double global_mean = 0.0;
  double max_deflection = 0.0;
};

// Centred moving average, then a centred sliding median as the tonic level.
// Both windows shrink symmetrically near the ends of the series.
EdaDecomposition decompose(const SampleSeries& raw, const EdaConfig& cfg);

// Trough-to-peak responses of the phasic signal whose rise reaches the
// threshold, ordered by onset.
std::vector<ScrEvent> detect_scrs(const SampleSeries& phasic, double threshold_uS);

// Indexes for [start, start + duration). Responses are attributed to the
// window containing their peak.
EdaIndexes eda_indexes(const SampleSeries& raw, double start_epoch, double duration_s,
                       const EdaConfig& cfg);

// Same, reusing events detected over the whole recording.
EdaIndexes eda_indexes(const SampleSeries& raw, const std::vector<ScrEvent>& events,
                       double start_epoch, double duration_s);

}  // namespace geostress
