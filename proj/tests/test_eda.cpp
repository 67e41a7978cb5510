#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "geostress/eda.hpp"
#include "geostress/error.hpp"
#include "test_util.hpp"

using namespace geostress;
using testutil::series;

namespace {

constexpr double kRate = 4.0;

std::vector<double> flat(double seconds, double level) {
  return std::vector<double>(static_cast<std::size_t>(seconds * kRate), level);
}

// Triangle of the given height and total width starting at t0 (seconds).
void add_triangle(std::vector<double>& v, double t0, double width, double height) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double u = (static_cast<double>(i) / kRate - t0) / width;
    if (u > 0.0 && u < 1.0) v[i] += height * (1.0 - std::abs(2.0 * u - 1.0));
  }
}

// Raised-cosine bump, flat enough at the top to survive light smoothing.
void add_hann(std::vector<double>& v, double t0, double width, double height) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double u = (static_cast<double>(i) / kRate - t0) / width;
    if (u > 0.0 && u < 1.0) v[i] += height * 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * u));
  }
}

// Direct centred moving average and sliding median, with windows shrinking
// symmetrically at the ends.
std::vector<double> oracle_average(const std::vector<double>& x, int h) {
  const int n = static_cast<int>(x.size());
  std::vector<double> out(x.size());
  for (int i = 0; i < n; ++i) {
    const int r = std::min({h, i, n - 1 - i});
    double s = 0.0;
    for (int j = i - r; j <= i + r; ++j) s += x[j];
    out[i] = s / (2 * r + 1);
  }
  return out;
}

std::vector<double> oracle_median(const std::vector<double>& x, int h) {
  const int n = static_cast<int>(x.size());
  std::vector<double> out(x.size());
  for (int i = 0; i < n; ++i) {
    const int r = std::min({h, i, n - 1 - i});
    std::vector<double> w(x.begin() + (i - r), x.begin() + (i + r + 1));
    std::sort(w.begin(), w.end());
    out[i] = w[w.size() / 2];
  }
  return out;
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

TEST_CASE("decompose: constant input") {
  const auto d = decompose(series(flat(60, 2.0), kRate), EdaConfig{});
  for (double v : d.tonic.values) CHECK(v == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(max_abs(d.phasic.values) < 1e-12);
  CHECK(d.tonic.rate_hz == kRate);
  CHECK(d.phasic.size() == 240);
}

TEST_CASE("decompose: slow ramp stays out of the phasic component") {
  std::vector<double> v(240);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 2.0 + 0.01 * static_cast<double>(i) / kRate;
  const auto d = decompose(series(v, kRate), EdaConfig{});

  const auto smooth = oracle_average(v, 1);
  const auto tonic = oracle_median(smooth, 16);
  double worst = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    CHECK(d.tonic.values[i] == doctest::Approx(tonic[i]).epsilon(1e-12));
    worst = std::max(worst, std::abs(smooth[i] - tonic[i]));
  }
  CHECK(worst < 0.05);
  CHECK(max_abs(d.phasic.values) < 0.05);
}

TEST_CASE("decompose matches the direct filters on random signals") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> noise(0.0, 0.2);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> v(100 + trial * 7);
    for (double& x : v) x = 3.0 + noise(rng);
    EdaConfig cfg;
    cfg.smooth_window_s = 0.5 + 0.25 * (trial % 4);
    cfg.tonic_window_s = 4.0 + trial % 5;
    const auto d = decompose(series(v, kRate), cfg);
    const auto smooth = oracle_average(v, static_cast<int>(cfg.smooth_window_s * kRate / 2));
    const auto tonic = oracle_median(smooth, static_cast<int>(cfg.tonic_window_s * kRate / 2));
    for (std::size_t i = 0; i < v.size(); ++i) {
      CHECK(d.smoothed.values[i] == doctest::Approx(smooth[i]).epsilon(1e-12));
      CHECK(d.tonic.values[i] == doctest::Approx(tonic[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("decompose: a short bump ends up in the phasic component") {
  auto v = flat(60, 2.0);
  add_triangle(v, 20.0, 2.0, 0.5);
  const auto d = decompose(series(v, kRate), EdaConfig{});
  const double peak = *std::max_element(d.phasic.values.begin(), d.phasic.values.end());
  CHECK(peak >= 0.4);
  CHECK(peak <= 0.5);
}

TEST_CASE("decompose: preconditions") {
  CHECK_THROWS_AS(decompose(series(flat(7, 2.0), kRate), EdaConfig{}), InsufficientDataError);
  CHECK_NOTHROW(decompose(series(flat(8, 2.0), kRate), EdaConfig{}));
  CHECK_THROWS_AS(decompose(series(std::vector<double>(100, 2.0), 0.5), EdaConfig{}), ValueError);
  EdaConfig bad;
  bad.scr_threshold_uS = 0.0;
  CHECK_THROWS_AS(decompose(series(flat(60, 2.0), kRate), bad), ValueError);
}

TEST_CASE("detect_scrs examples") {
  CHECK(detect_scrs(series(flat(30, 0.0), kRate), 0.1).empty());

  auto big = flat(30, 0.0);
  add_triangle(big, 10.0, 2.0, 0.5);
  const auto events = detect_scrs(series(big, kRate, 100.0), 0.1);
  REQUIRE(events.size() == 1);
  CHECK(events[0].amplitude_uS >= 0.4);
  CHECK(events[0].amplitude_uS <= 0.5);
  CHECK(events[0].onset_epoch == doctest::Approx(110.0));
  CHECK(events[0].peak_epoch == doctest::Approx(111.0));

  auto small = flat(30, 0.0);
  add_triangle(small, 10.0, 2.0, 0.05);
  CHECK(detect_scrs(series(small, kRate), 0.1).empty());
}

TEST_CASE("detect_scrs: plateaus and trough tracking") {
  // Rise, flat top, rise again, fall: one response from the first trough.
  const auto e = detect_scrs(series({0.0, 0.1, 0.2, 0.2, 0.3, 0.1, 0.0}, 1.0), 0.1);
  REQUIRE(e.size() == 1);
  CHECK(e[0].amplitude_uS == doctest::Approx(0.3));
  CHECK(e[0].onset_epoch == 0.0);
  CHECK(e[0].peak_epoch == 4.0);

  // A series that only rises has no completed peak.
  CHECK(detect_scrs(series({0.0, 0.5, 1.0}, 1.0), 0.1).empty());
  CHECK(detect_scrs(series({0.0}, 1.0), 0.1).empty());
}

TEST_CASE("eda_indexes examples") {
  const EdaConfig cfg;
  SUBCASE("constant") {
    const auto idx = eda_indexes(series(flat(60, 2.0), kRate, 1000.0), 1010.0, 30.0, cfg);
    CHECK(idx.nscr == 0);
    CHECK(idx.amp_sum == 0.0);
    CHECK(idx.phasic_max == 0.0);
    CHECK(idx.global_mean == doctest::Approx(2.0));
    CHECK(idx.max_deflection == 2.0);
  }
  SUBCASE("two bumps") {
    auto v = flat(60, 2.0);
    add_hann(v, 15.0, 3.0, 0.5);
    add_hann(v, 30.0, 3.0, 0.3);
    const auto raw = series(v, kRate, 1000.0);
    const auto idx = eda_indexes(raw, 1010.0, 30.0, cfg);
    CHECK(idx.nscr == 2);
    CHECK(std::abs(idx.amp_sum - 0.8) <= 0.1);
    CHECK(std::abs(idx.phasic_max - 0.5) <= 0.1);
    CHECK(std::abs(idx.max_deflection - 2.5) <= 0.1);

    EdaConfig high = cfg;
    high.scr_threshold_uS = 0.4;
    const auto hi = eda_indexes(raw, 1010.0, 30.0, high);
    CHECK(hi.nscr == 1);
    CHECK(std::abs(hi.phasic_max - 0.5) <= 0.1);

    // Peaks at 1016.5 and 1031.5: a window ending before the second peak
    // counts only the first.
    CHECK(eda_indexes(raw, 1010.0, 20.0, cfg).nscr == 1);
  }
  SUBCASE("empty window") {
    CHECK_THROWS_AS(eda_indexes(series(flat(60, 2.0), kRate, 1000.0), 5000.0, 30.0, cfg),
                    InsufficientDataError);
  }
}

TEST_CASE("events are attributed by peak time") {
  std::vector<ScrEvent> events = {{99.0, 101.0, 0.3}, {129.0, 130.0, 0.2}};
  const auto raw = series(std::vector<double>(200, 1.0), 1.0, 0.0);
  const auto idx = eda_indexes(raw, events, 100.0, 30.0);
  CHECK(idx.nscr == 1);
  CHECK(idx.amp_sum == doctest::Approx(0.3));
  CHECK(eda_indexes(raw, events, 101.0, 29.0).nscr == 1);
  CHECK(eda_indexes(raw, events, 101.0, 30.0).nscr == 2);
}

namespace {

std::vector<double> random_signal(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(n, 0.0);
  double level = 1.0 + 4.0 * u(rng);
  for (double& x : v) {
    level += 0.002 * (u(rng) - 0.4);
    x = level;
  }
  const int bumps = static_cast<int>(rng() % 12);
  for (int b = 0; b < bumps; ++b) {
    add_triangle(v, u(rng) * static_cast<double>(n) / kRate, 1.0 + 3.0 * u(rng), u(rng));
  }
  return v;
}

}  // namespace

TEST_CASE("decomposition identity and index invariants") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const auto raw = series(random_signal(rng, 400), kRate, 5000.0);
    const auto d = decompose(raw, EdaConfig{});
    REQUIRE(d.tonic.size() == raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
      CHECK(std::abs(d.tonic.values[i] + d.phasic.values[i] - d.smoothed.values[i]) < 1e-9);
    }

    const auto events = detect_scrs(d.phasic, 0.1);
    for (std::size_t i = 0; i < events.size(); ++i) {
      CHECK(events[i].onset_epoch < events[i].peak_epoch);
      CHECK(events[i].amplitude_uS >= 0.1);
      if (i > 0) CHECK(events[i - 1].peak_epoch <= events[i].onset_epoch);
    }

    const double start = 5000.0 + u(rng) * 60.0;
    const auto idx = eda_indexes(raw, events, start, 30.0);
    CHECK(idx.amp_sum >= 0.0);
    CHECK(idx.global_mean >= 0.0);
    CHECK(idx.global_mean <= idx.max_deflection);
    if (idx.nscr == 0) {
      CHECK(idx.amp_sum == 0.0);
      CHECK(idx.phasic_max == 0.0);
    } else {
      CHECK(idx.phasic_max <= idx.amp_sum);
    }
  }
}

TEST_CASE("additive shift invariance") {
  std::mt19937_64 rng(34);
  std::uniform_real_distribution<double> u(-1.0, 5.0);
  const EdaConfig cfg;
  for (int trial = 0; trial < 50; ++trial) {
    const auto v = random_signal(rng, 320);
    const double c = u(rng);
    auto shifted = v;
    for (double& x : shifted) x += c;
    const auto a = series(v, kRate, 0.0);
    const auto b = series(shifted, kRate, 0.0);
    const auto da = decompose(a, cfg);
    const auto db = decompose(b, cfg);
    for (std::size_t i = 0; i < v.size(); ++i) {
      CHECK(std::abs(db.tonic.values[i] - da.tonic.values[i] - c) < 1e-9);
      CHECK(std::abs(db.phasic.values[i] - da.phasic.values[i]) < 1e-9);
    }
    const auto ia = eda_indexes(a, 10.0, 60.0, cfg);
    const auto ib = eda_indexes(b, 10.0, 60.0, cfg);
    CHECK(ib.nscr == ia.nscr);
    CHECK(std::abs(ib.amp_sum - ia.amp_sum) < 1e-9);
    CHECK(std::abs(ib.phasic_max - ia.phasic_max) < 1e-9);
    CHECK(std::abs(ib.global_mean - ia.global_mean - c) < 1e-9);
    CHECK(std::abs(ib.max_deflection - ia.max_deflection - c) < 1e-9);
  }
}

TEST_CASE("nSCR and AmpSum do not increase with the threshold") {
  std::mt19937_64 rng(55);
  for (int trial = 0; trial < 50; ++trial) {
    const auto raw = series(random_signal(rng, 400), kRate);
    std::size_t last_n = SIZE_MAX;
    double last_sum = INFINITY;
    for (double th = 0.02; th <= 1.2; th += 0.02) {
      EdaConfig cfg;
      cfg.scr_threshold_uS = th;
      const auto idx = eda_indexes(raw, 0.0, 100.0, cfg);
      CHECK(idx.nscr <= last_n);
      CHECK(idx.amp_sum <= last_sum);
      last_n = idx.nscr;
      last_sum = idx.amp_sum;
    }
  }
}

TEST_CASE("k disjoint bumps above twice the threshold give nSCR = k") {
  std::mt19937_64 rng(89);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = static_cast<int>(trial % 11);
    auto v = flat(20.0 + 15.0 * k, 2.0);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += 0.003 * static_cast<double>(i) / kRate;
    for (int b = 0; b < k; ++b) {
      const double t0 = 10.0 + 15.0 * b + 3.0 * u(rng);
      const double amp = 0.2 + 0.8 * u(rng);
      if (trial % 2) {
        add_triangle(v, t0, 1.5 + u(rng), amp);
      } else {
        add_hann(v, t0, 1.5 + 1.5 * u(rng), amp);
      }
    }
    const auto raw = series(v, kRate, 0.0);
    const auto idx = eda_indexes(raw, 0.0, static_cast<double>(v.size()) / kRate, EdaConfig{});
    CHECK(idx.nscr == static_cast<std::size_t>(k));
  }
}
