#include "geostress/eda.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "geostress/error.hpp"
#include "geostress/timealign.hpp"

namespace geostress {

namespace {

// Half-width in samples of a centred window spanning roughly `seconds`.
std::size_t half_width(double seconds, double rate_hz) {
  return static_cast<std::size_t>(std::floor(seconds * rate_hz / 2.0));
}

std::vector<double> moving_average(const std::vector<double>& x, std::size_t h) {
  const std::size_t n = x.size();
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + x[i];
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = std::min({h, i, n - 1 - i});
    out[i] = (prefix[i + r + 1] - prefix[i - r]) / static_cast<double>(2 * r + 1);
  }
  return out;
}

std::vector<double> moving_median(const std::vector<double>& x, std::size_t h) {
  const std::size_t n = x.size();
  std::vector<double> out(n);
  std::vector<double> buf;
  buf.reserve(2 * h + 1);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = std::min({h, i, n - 1 - i});
    buf.assign(x.begin() + static_cast<std::ptrdiff_t>(i - r),
               x.begin() + static_cast<std::ptrdiff_t>(i + r + 1));
    auto mid = buf.begin() + static_cast<std::ptrdiff_t>(r);
    std::nth_element(buf.begin(), mid, buf.end());
    out[i] = *mid;
  }
  return out;
}

}  // namespace

void EdaConfig::validate() const {
  if (!(scr_threshold_uS > 0.0)) throw ValueError("EdaConfig: scr_threshold_uS must be > 0");
  if (!(tonic_window_s > 0.0)) throw ValueError("EdaConfig: tonic_window_s must be > 0");
  if (!(smooth_window_s > 0.0)) throw ValueError("EdaConfig: smooth_window_s must be > 0");
}

EdaDecomposition decompose(const SampleSeries& raw, const EdaConfig& cfg) {
  cfg.validate();
  if (raw.rate_hz < 1.0) throw ValueError("decompose: EDA rate must be >= 1 Hz");
  const double tonic_samples = cfg.tonic_window_s * raw.rate_hz;
  if (static_cast<double>(raw.size()) < tonic_samples) {
    throw InsufficientDataError("decompose: series of " + std::to_string(raw.size()) +
                                " samples is shorter than the tonic window");
  }

  EdaDecomposition d;
  d.smoothed = raw;
  d.smoothed.values = moving_average(raw.values, half_width(cfg.smooth_window_s, raw.rate_hz));
  d.tonic = raw;
  d.tonic.values = moving_median(d.smoothed.values, half_width(cfg.tonic_window_s, raw.rate_hz));
  d.phasic = raw;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    d.phasic.values[i] = d.smoothed.values[i] - d.tonic.values[i];
  }
  return d;
}

std::vector<ScrEvent> detect_scrs(const SampleSeries& phasic, double threshold_uS) {
  std::vector<ScrEvent> events;
  const auto& x = phasic.values;
  if (x.size() < 2) return events;

  int direction = 0;  // +1 rising, -1 falling, 0 not yet moved
  std::size_t trough = 0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    const double diff = x[i] - x[i - 1];
    if (diff > 0.0) {
      if (direction <= 0) trough = i - 1;
      direction = 1;
    } else if (diff < 0.0) {
      if (direction == 1) {
        const std::size_t peak = i - 1;
        const double amplitude = x[peak] - x[trough];
        if (amplitude >= threshold_uS) {
          events.push_back({phasic.time_at(trough), phasic.time_at(peak), amplitude});
        }
      }
      direction = -1;
    }
  }
  return events;
}

EdaIndexes eda_indexes(const SampleSeries& raw, const std::vector<ScrEvent>& events,
                       double start_epoch, double duration_s) {
  const SampleSeries window = slice_window(raw, start_epoch, duration_s);
  if (window.empty()) {
    throw InsufficientDataError("eda_indexes: window contains no EDA samples");
  }
  EdaIndexes idx;
  const double end = start_epoch + duration_s;
  for (const auto& e : events) {
    if (e.peak_epoch < start_epoch || e.peak_epoch >= end) continue;
    ++idx.nscr;
    idx.amp_sum += e.amplitude_uS;
    idx.phasic_max = std::max(idx.phasic_max, e.amplitude_uS);
  }
  double sum = 0.0;
  idx.max_deflection = window.values.front();
  for (double v : window.values) {
    sum += v;
    idx.max_deflection = std::max(idx.max_deflection, v);
  }
  idx.global_mean = std::min(sum / static_cast<double>(window.size()), idx.max_deflection);
  return idx;
}

EdaIndexes eda_indexes(const SampleSeries& raw, double start_epoch, double duration_s,
                       const EdaConfig& cfg) {
  const auto d = decompose(raw, cfg);
  return eda_indexes(raw, detect_scrs(d.phasic, cfg.scr_threshold_uS), start_epoch, duration_s);
}

}  // namespace geostress
