#include "geostress/hrv.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "geostress/error.hpp"
#include "geostress/timealign.hpp"

namespace geostress {

namespace {

constexpr std::size_t kMaxSegment = 256;
constexpr std::size_t kMinPsdLength = 64;
constexpr double kMinInterpSpan = 10.0;
constexpr double kShortWindow = 300.0;
constexpr double kLowCoverage = 0.8;
constexpr double kPnnSlackMs = 1e-6;

// Periodic Hann window.
std::vector<double> hann(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                static_cast<double>(n));
  }
  return w;
}

}  // namespace

void HrvConfig::validate() const {
  if (!(pnn_threshold_ms > 0.0)) throw ValueError("HrvConfig: pnn_threshold_ms must be > 0");
  if (!(lf_band.lo_hz >= 0.0 && lf_band.lo_hz < lf_band.hi_hz && lf_band.hi_hz <= hf_band.lo_hz &&
        hf_band.lo_hz < hf_band.hi_hz)) {
    throw ValueError("HrvConfig: LF and HF bands must be ordered and non-overlapping");
  }
  if (!(interp_rate_hz > 2.0 * hf_band.hi_hz)) {
    throw ValueError("HrvConfig: interp_rate_hz must exceed twice the HF upper edge");
  }
  if (!(max_gap_s > 0.0)) throw ValueError("HrvConfig: max_gap_s must be > 0");
  if (!(ibi_min_s > 0.0 && ibi_min_s < ibi_max_s)) {
    throw ValueError("HrvConfig: IBI bounds must satisfy 0 < min < max");
  }
}

IbiSeries clean_ibis(const IbiSeries& ibis, const HrvConfig& cfg) {
  IbiSeries out;
  bool dropped = false;
  for (const auto& b : ibis.beats) {
    if (b.ibi_s < cfg.ibi_min_s || b.ibi_s > cfg.ibi_max_s) {
      dropped = true;
      continue;
    }
    Beat kept = b;
    kept.gap_before = b.gap_before || dropped ||
                      (!out.empty() && b.epoch - out.beats.back().epoch > cfg.max_gap_s);
    out.beats.push_back(kept);
    dropped = false;
  }
  return out;
}

double sdnn(const IbiSeries& ibis) {
  const std::size_t n = ibis.size();
  if (n < 2) throw InsufficientDataError("sdnn: needs at least 2 beats");
  double mean = 0.0;
  for (const auto& b : ibis.beats) mean += b.ibi_s * 1000.0;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (const auto& b : ibis.beats) {
    const double d = b.ibi_s * 1000.0 - mean;
    ss += d * d;
  }
  return std::sqrt(ss / static_cast<double>(n - 1));
}

double pnn50(const IbiSeries& ibis, const HrvConfig& cfg) {
  if (ibis.size() < 2) throw InsufficientDataError("pnn50: needs at least 2 beats");
  std::size_t pairs = 0;
  std::size_t over = 0;
  for (std::size_t i = 1; i < ibis.size(); ++i) {
    if (ibis.beats[i].gap_before) continue;
    ++pairs;
    const double diff_ms = std::abs(ibis.beats[i].ibi_s * 1000.0 - ibis.beats[i - 1].ibi_s * 1000.0);
    // Far below the microsecond resolution of IBI files, so a difference of
    // exactly the threshold never counts because of binary rounding.
    if (diff_ms > cfg.pnn_threshold_ms + kPnnSlackMs) ++over;
  }
  if (pairs == 0) throw InsufficientDataError("pnn50: no valid successive pairs");
  return static_cast<double>(over) / static_cast<double>(pairs);
}

SampleSeries interpolate_ibis(const IbiSeries& ibis, const HrvConfig& cfg) {
  if (ibis.size() < 2) throw InsufficientDataError("interpolate_ibis: needs at least 2 beats");
  const double t0 = ibis.beats.front().epoch;
  const double span = ibis.beats.back().epoch - t0;
  if (span < kMinInterpSpan) {
    throw InsufficientDataError("interpolate_ibis: beats span " + std::to_string(span) +
                                " s, need at least 10 s");
  }
  SampleSeries out;
  out.kind = ChannelKind::OTHER;
  out.start_epoch = t0;
  out.rate_hz = cfg.interp_rate_hz;
  const auto n = static_cast<std::size_t>(std::floor(span * cfg.interp_rate_hz)) + 1;
  out.values.reserve(n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = out.time_at(i);
    while (k + 2 < ibis.size() && ibis.beats[k + 1].epoch <= t) ++k;
    const auto& a = ibis.beats[k];
    const auto& b = ibis.beats[k + 1];
    const double u = std::clamp((t - a.epoch) / (b.epoch - a.epoch), 0.0, 1.0);
    out.values.push_back(a.ibi_s + u * (b.ibi_s - a.ibi_s));
  }
  double mean = 0.0;
  for (double v : out.values) mean += v;
  mean /= static_cast<double>(out.values.size());
  for (double& v : out.values) v -= mean;
  return out;
}

Spectrum psd(const SampleSeries& series) {
  const std::size_t n = series.size();
  if (n < kMinPsdLength) {
    throw InsufficientDataError("psd: needs at least 64 samples, got " + std::to_string(n));
  }
  const std::size_t seg = std::min(n, kMaxSegment);
  const std::size_t step = std::max<std::size_t>(seg / 2, 1);
  const std::size_t nfreq = seg / 2 + 1;
  const double fs = series.rate_hz;

  const auto w = hann(seg);
  double wss = 0.0;
  for (double v : w) wss += v * v;

  // Twiddle table for the direct DFT; segments are at most 256 samples.
  std::vector<double> cos_t(seg), sin_t(seg);
  for (std::size_t i = 0; i < seg; ++i) {
    const double a = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(seg);
    cos_t[i] = std::cos(a);
    sin_t[i] = std::sin(a);
  }

  Spectrum out;
  out.freqs_hz.resize(nfreq);
  out.power.assign(nfreq, 0.0);
  for (std::size_t k = 0; k < nfreq; ++k) {
    out.freqs_hz[k] = static_cast<double>(k) * fs / static_cast<double>(seg);
  }

  std::vector<double> x(seg);
  std::size_t segments = 0;
  for (std::size_t start = 0; start + seg <= n; start += step) {
    double mean = 0.0;
    for (std::size_t i = 0; i < seg; ++i) mean += series.values[start + i];
    mean /= static_cast<double>(seg);
    for (std::size_t i = 0; i < seg; ++i) x[i] = (series.values[start + i] - mean) * w[i];
    for (std::size_t k = 0; k < nfreq; ++k) {
      double re = 0.0;
      double im = 0.0;
      std::size_t idx = 0;
      for (std::size_t i = 0; i < seg; ++i) {
        re += x[i] * cos_t[idx];
        im -= x[i] * sin_t[idx];
        idx += k;
        if (idx >= seg) idx -= seg;
      }
      out.power[k] += re * re + im * im;
    }
    ++segments;
  }

  const double scale = 1.0 / (fs * wss * static_cast<double>(segments));
  for (std::size_t k = 0; k < nfreq; ++k) {
    double p = out.power[k] * scale;
    const bool nyquist = (seg % 2 == 0) && k == nfreq - 1;
    if (k != 0 && !nyquist) p *= 2.0;
    out.power[k] = p;
  }
  return out;
}

double band_power(const Spectrum& spectrum, Band band) {
  const auto& f = spectrum.freqs_hz;
  const auto& p = spectrum.power;
  if (f.size() < 2 || f.size() != p.size()) throw ValueError("band_power: malformed spectrum");
  if (band.lo_hz < f.front() || band.hi_hz > f.back()) {
    throw InsufficientDataError("band_power: spectrum does not cover the band");
  }
  auto density_at = [&](double x) {
    auto it = std::upper_bound(f.begin(), f.end(), x);
    if (it == f.end()) return p.back();
    const auto j = static_cast<std::size_t>(it - f.begin());
    if (j == 0) return p.front();
    const double u = (x - f[j - 1]) / (f[j] - f[j - 1]);
    return p[j - 1] + u * (p[j] - p[j - 1]);
  };
  // Breakpoints: band edges plus every grid frequency strictly inside.
  std::vector<double> xs{band.lo_hz};
  for (double fk : f) {
    if (fk > band.lo_hz && fk < band.hi_hz) xs.push_back(fk);
  }
  xs.push_back(band.hi_hz);
  double total = 0.0;
  for (std::size_t i = 1; i < xs.size(); ++i) {
    total += 0.5 * (density_at(xs[i - 1]) + density_at(xs[i])) * (xs[i] - xs[i - 1]);
  }
  return total;
}

double lf_hf(const Spectrum& spectrum, const HrvConfig& cfg) {
  const double hf = band_power(spectrum, cfg.hf_band);
  if (!(hf > 0.0)) throw DegenerateError("lf_hf: HF band power is zero");
  return band_power(spectrum, cfg.lf_band) / hf;
}

double mean_hr(const SampleSeries& hr, double start_epoch, double duration_s) {
  const auto w = slice_window(hr, start_epoch, duration_s);
  if (w.empty()) throw InsufficientDataError("mean_hr: window contains no HR samples");
  double sum = 0.0;
  for (double v : w.values) sum += v;
  return sum / static_cast<double>(w.size());
}

HrvIndexes hrv_indexes(const IbiSeries& ibis, double start_epoch, double duration_s,
                       const HrvConfig& cfg) {
  cfg.validate();
  const auto clean = clean_ibis(slice_window(ibis, start_epoch, duration_s), cfg);
  HrvIndexes out;
  out.n_beats = clean.size();
  out.sdnn_ms = sdnn(clean);
  out.pnn50 = pnn50(clean, cfg);
  out.lf_hf = lf_hf(psd(interpolate_ibis(clean, cfg)), cfg);
  out.coverage = std::min(1.0, (clean.beats.back().epoch - clean.beats.front().epoch +
                                clean.beats.front().ibi_s) /
                                   duration_s);
  out.short_window = duration_s < kShortWindow || out.coverage < kLowCoverage;
  return out;
}

}  // namespace geostress
