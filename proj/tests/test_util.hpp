#pragma once

#include <cstdlib>
#include <filesystem>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "geostress/ingest.hpp"

namespace testutil {

inline std::istringstream lines(const std::vector<std::string>& rows) {
  std::string text;
  for (const auto& r : rows) text += r + "\n";
  return std::istringstream(text);
}

inline geostress::SampleSeries series(std::vector<double> values, double rate = 1.0,
                                      double start = 0.0,
                                      geostress::ChannelKind kind = geostress::ChannelKind::EDA) {
  geostress::SampleSeries s;
  s.kind = kind;
  s.rate_hz = rate;
  s.start_epoch = start;
  s.values = std::move(values);
  return s;
}

// IBI series from intervals in milliseconds, beats placed back to back.
inline geostress::IbiSeries ibis_ms(const std::vector<double>& ms, double start = 0.0) {
  geostress::IbiSeries out;
  double t = start;
  for (double v : ms) {
    t += v / 1000.0;
    out.beats.push_back({t, v / 1000.0, false, false});
  }
  return out;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("geostress_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testutil
