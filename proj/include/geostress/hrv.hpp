#pragma once

#include <cstddef>
#include <vector>

#include "geostress/ingest.hpp"

namespace geostress {

struct Band {
  double lo_hz = 0.0;
  double hi_hz = 0.0;
};

struct HrvConfig {
  double pnn_threshold_ms = 50.0;
  Band lf_band{0.04, 0.15};
  Band hf_band{0.15, 0.4};
  double interp_rate_hz = 4.0;
  double max_gap_s = 2.0;
  double ibi_min_s = 0.3;
  double ibi_max_s = 2.0;

  void validate() const;
};

struct Spectrum {
  std::vector<double> freqs_hz;
  std::vector<double> power;  // one-sided density, units^2 / Hz
};

struct HrvIndexes {
  double sdnn_ms = 0.0;
  double pnn50 = 0.0;
  double lf_hf = 0.0;
  std::size_t n_beats = 0;
  double coverage = 0.0;  // fraction of the window spanned by valid beats
  // LF/HF from windows under five minutes, or with poor coverage, is unstable.
  bool short_window = false;
};

// Drops beats whose interval is outside [ibi_min_s, ibi_max_s] and marks
// `gap_before` on a retained beat that follows a dropped beat or comes more
// than max_gap_s after its retained predecessor.
IbiSeries clean_ibis(const IbiSeries& ibis, const HrvConfig& cfg);

// Sample standard deviation (n - 1) of the intervals, in milliseconds.
double sdnn(const IbiSeries& ibis);

// Fraction of successive interval pairs differing by strictly more than the
// threshold. Pairs ending at a gap-flagged beat are skipped.
double pnn50(const IbiSeries& ibis, const HrvConfig& cfg);

// Intervals linearly interpolated on a uniform grid over the beat span, mean
// removed. Values are in seconds.
SampleSeries interpolate_ibis(const IbiSeries& ibis, const HrvConfig& cfg);

// Welch estimate: Hann window, segments of min(n, 256) samples with 50%
// overlap, per-segment mean removal, one-sided density.
Spectrum psd(const SampleSeries& series);

// Trapezoidal integral of the density over [lo, hi], with the density
// interpolated linearly at band edges that fall between grid points.
double band_power(const Spectrum& spectrum, Band band);

double lf_hf(const Spectrum& spectrum, const HrvConfig& cfg);

double mean_hr(const SampleSeries& hr, double start_epoch, double duration_s);

// All three HRV indexes for the beats in [start, start + duration).
HrvIndexes hrv_indexes(const IbiSeries& ibis, double start_epoch, double duration_s,
                       const HrvConfig& cfg);

}  // namespace geostress
