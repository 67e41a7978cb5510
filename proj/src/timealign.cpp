#include "geostress/timealign.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>

#include "geostress/error.hpp"

namespace geostress {

SampleSeries downsample_mean(const SampleSeries& series, std::size_t k) {
  if (k < 1) throw ValueError("downsample_mean: block size must be >= 1");
  if (series.size() < k) {
    throw InsufficientDataError("downsample_mean: series has " + std::to_string(series.size()) +
                                " samples, fewer than block size " + std::to_string(k));
  }
  SampleSeries out;
  out.kind = series.kind;
  out.start_epoch = series.start_epoch;
  out.rate_hz = series.rate_hz / static_cast<double>(k);
  const std::size_t blocks = series.size() / k;
  out.values.reserve(blocks);
  for (std::size_t b = 0; b < blocks; ++b) {
    double sum = 0.0;
    for (std::size_t i = b * k; i < (b + 1) * k; ++i) sum += series.values[i];
    out.values.push_back(sum / static_cast<double>(k));
  }
  return out;
}

std::vector<std::optional<std::size_t>> match_samples(const std::vector<double>& fix_epochs,
                                                      const SampleSeries& channel,
                                                      double tolerance_s) {
  std::vector<std::optional<std::size_t>> match(fix_epochs.size());
  if (channel.empty() || fix_epochs.empty()) return match;

  // (distance, fix, sample) for every pair within tolerance. Both sequences
  // are time ordered, so a sliding lower bound keeps this linear in practice.
  std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
  std::size_t lo = 0;
  for (std::size_t f = 0; f < fix_epochs.size(); ++f) {
    const double t = fix_epochs[f];
    while (lo < channel.size() && channel.time_at(lo) < t - tolerance_s) ++lo;
    for (std::size_t s = lo; s < channel.size(); ++s) {
      const double d = std::abs(channel.time_at(s) - t);
      if (channel.time_at(s) > t + tolerance_s) break;
      if (d <= tolerance_s) pairs.emplace_back(d, f, s);
    }
  }
  std::sort(pairs.begin(), pairs.end());

  std::vector<bool> used(channel.size(), false);
  for (const auto& [d, f, s] : pairs) {
    if (match[f] || used[s]) continue;
    match[f] = s;
    used[s] = true;
  }
  return match;
}

JoinResult join_to_track(const GpsTrack& track, const SampleSeries& eda_1hz,
                         const SampleSeries& hr_1hz, double tolerance_s) {
  for (const SampleSeries* ch : {&eda_1hz, &hr_1hz}) {
    if (!ch->empty() && ch->rate_hz != 1.0) {
      throw ValueError("join_to_track: channels must be resampled to 1 Hz first");
    }
  }
  std::vector<double> epochs;
  epochs.reserve(track.size());
  for (const auto& f : track.fixes) epochs.push_back(f.epoch);

  const auto eda_match = match_samples(epochs, eda_1hz, tolerance_s);
  const auto hr_match = match_samples(epochs, hr_1hz, tolerance_s);

  JoinResult out;
  out.track.rows.reserve(track.size());
  for (std::size_t i = 0; i < track.size(); ++i) {
    GeoSample row;
    row.epoch = track.fixes[i].epoch;
    row.lat = track.fixes[i].lat;
    row.lon = track.fixes[i].lon;
    if (eda_match[i]) {
      row.eda_uS = eda_1hz.values[*eda_match[i]];
    } else {
      ++out.unmatched_eda;
    }
    if (hr_match[i]) {
      row.hr_bpm = hr_1hz.values[*hr_match[i]];
    } else {
      ++out.unmatched_hr;
    }
    out.track.rows.push_back(row);
  }
  return out;
}

SampleSeries slice_window(const SampleSeries& series, double start_epoch, double duration_s) {
  if (!(duration_s > 0.0)) throw ValueError("slice_window: duration must be > 0");
  const double end = start_epoch + duration_s;
  SampleSeries out;
  out.kind = series.kind;
  out.rate_hz = series.rate_hz;
  out.start_epoch = start_epoch;

  std::size_t first = series.size();
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (series.time_at(i) >= start_epoch) {
      first = i;
      break;
    }
  }
  if (first == series.size() || series.time_at(first) >= end) return out;
  out.start_epoch = series.time_at(first);
  for (std::size_t i = first; i < series.size() && series.time_at(i) < end; ++i) {
    out.values.push_back(series.values[i]);
  }
  return out;
}

IbiSeries slice_window(const IbiSeries& series, double start_epoch, double duration_s) {
  if (!(duration_s > 0.0)) throw ValueError("slice_window: duration must be > 0");
  const double end = start_epoch + duration_s;
  IbiSeries out;
  for (const auto& b : series.beats) {
    if (b.epoch >= start_epoch && b.epoch < end) out.beats.push_back(b);
  }
  return out;
}

}  // namespace geostress
