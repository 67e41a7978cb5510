#include "geostress/episodes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/special_functions/beta.hpp>

#include "geostress/error.hpp"

namespace geostress {

EpisodeWindow make_crossing_window(double crossing_start_epoch, double offset_s,
                                   double duration_s, std::string label) {
  if (!(duration_s > 0.0)) throw ValueError("episode window: duration must be > 0");
  if (!(offset_s >= 0.0)) throw ValueError("episode window: offset must be >= 0");
  return {std::move(label), crossing_start_epoch + offset_s, duration_s};
}

std::vector<SegmentSummary> segment_summaries(const GeoSampleTrack& track, const RouteMap& route,
                                              const std::map<int, double>& rankings) {
  struct Acc {
    double eda = 0.0;
    double hr = 0.0;
    std::size_t n_eda = 0;
    std::size_t n_hr = 0;
    std::size_t rows = 0;
  };
  std::map<int, Acc> acc;
  for (const auto& row : track.rows) {
    if (!row.segment_id) continue;
    auto& a = acc[*row.segment_id];
    ++a.rows;
    if (row.eda_uS) {
      a.eda += *row.eda_uS;
      ++a.n_eda;
    }
    if (row.hr_bpm) {
      a.hr += *row.hr_bpm;
      ++a.n_hr;
    }
  }
  std::vector<SegmentSummary> out;
  for (const auto& seg : route.segments) {
    const auto it = acc.find(seg.id);
    if (it == acc.end()) continue;
    const auto& a = it->second;
    SegmentSummary s;
    s.segment_id = seg.id;
    s.environment = seg.environment;
    if (a.n_eda) s.mean_eda_uS = a.eda / static_cast<double>(a.n_eda);
    if (a.n_hr) s.mean_hr_bpm = a.hr / static_cast<double>(a.n_hr);
    if (const auto r = rankings.find(seg.id); r != rankings.end()) s.subjective_rank = r->second;
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<SegmentSummary> cohort_segment_summaries(
    std::span<const std::vector<SegmentSummary>> per_participant, const RouteMap& route,
    const std::map<int, double>& rankings) {
  std::vector<SegmentSummary> out;
  for (const auto& seg : route.segments) {
    double eda = 0.0, hr = 0.0;
    std::size_t n_eda = 0, n_hr = 0;
    bool seen = false;
    for (const auto& table : per_participant) {
      for (const auto& s : table) {
        if (s.segment_id != seg.id) continue;
        seen = true;
        if (s.mean_eda_uS) {
          eda += *s.mean_eda_uS;
          ++n_eda;
        }
        if (s.mean_hr_bpm) {
          hr += *s.mean_hr_bpm;
          ++n_hr;
        }
      }
    }
    if (!seen) continue;
    SegmentSummary s;
    s.segment_id = seg.id;
    s.environment = seg.environment;
    if (n_eda) s.mean_eda_uS = eda / static_cast<double>(n_eda);
    if (n_hr) s.mean_hr_bpm = hr / static_cast<double>(n_hr);
    if (const auto r = rankings.find(seg.id); r != rankings.end()) s.subjective_rank = r->second;
    out.push_back(std::move(s));
  }
  return out;
}

double t_to_p(double t, double df) {
  if (!(df >= 1.0)) throw ValueError("t_to_p: degrees of freedom must be >= 1");
  if (!std::isfinite(t)) throw ValueError("t_to_p: t must be finite");
  if (t == 0.0) return 1.0;
  // P(|T| > t) = I_x(df/2, 1/2) with x = df / (df + t^2).
  const double x = df / (df + t * t);
  return std::clamp(boost::math::ibeta(df / 2.0, 0.5, x), 0.0, 1.0);
}

PairedTestResult paired_t(std::span<const double> neutral, std::span<const double> stress) {
  if (neutral.size() != stress.size()) {
    throw ValueError("paired_t: neutral and stress samples differ in length");
  }
  const std::size_t n = neutral.size();
  if (n < 2) throw InsufficientDataError("paired_t: needs at least 2 pairs");

  PairedTestResult r;
  r.n = n;
  r.df = n - 1;
  double sum_n = 0.0, sum_s = 0.0, sum_d = 0.0;
  std::size_t expected = 0;
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) {
    sum_n += neutral[i];
    sum_s += stress[i];
    d[i] = stress[i] - neutral[i];
    sum_d += d[i];
    if (stress[i] > neutral[i]) ++expected;
  }
  const double nn = static_cast<double>(n);
  r.mean_neutral = sum_n / nn;
  r.mean_stress = sum_s / nn;
  r.pct_expected = static_cast<double>(expected) / nn;

  const bool all_zero = std::all_of(d.begin(), d.end(), [](double v) { return v == 0.0; });
  if (all_zero) {
    r.t_stat = 0.0;
    r.p_two_tailed = 1.0;
    return r;
  }
  if (std::all_of(d.begin(), d.end(), [&](double v) { return v == d.front(); })) {
    throw DegenerateError("paired_t: differences have zero variance");
  }
  const double mean_d = sum_d / nn;
  double ss = 0.0;
  for (double v : d) ss += (v - mean_d) * (v - mean_d);
  const double sd = std::sqrt(ss / (nn - 1.0));
  r.t_stat = mean_d / (sd / std::sqrt(nn));
  r.p_two_tailed = t_to_p(r.t_stat, static_cast<double>(r.df));
  return r;
}

CohortComparison compare_episodes(std::span<const ParticipantIndexTable> cohort,
                                  std::span<const std::string_view> indexes) {
  // Requested indexes in canonical row order.
  std::vector<std::string> order;
  for (auto name : kEpisodeIndexes) {
    if (std::find(indexes.begin(), indexes.end(), name) != indexes.end()) {
      order.emplace_back(name);
    }
  }
  for (auto name : indexes) {
    if (std::find(kEpisodeIndexes.begin(), kEpisodeIndexes.end(), name) == kEpisodeIndexes.end()) {
      throw ValueError("compare_episodes: unknown index '" + std::string(name) + "'");
    }
  }

  CohortComparison out;
  std::vector<const ParticipantIndexTable*> complete;
  for (const auto& p : cohort) {
    std::string missing;
    for (const auto& name : order) {
      const auto it = p.values.find(name);
      const bool ok = it != p.values.end() && it->second.neutral && it->second.stress;
      if (!ok) {
        missing = name;
        break;
      }
    }
    if (missing.empty()) {
      complete.push_back(&p);
    } else {
      std::string reason = "missing " + missing;
      if (!p.failure.empty()) reason += ": " + p.failure;
      out.exclusions.push_back({p.participant_id, std::move(reason)});
    }
  }
  if (complete.size() < 2) {
    throw InsufficientDataError("compare_episodes: " + std::to_string(complete.size()) +
                                " complete participant(s), need at least 2");
  }

  for (const auto& name : order) {
    std::vector<double> neutral, stress;
    for (const auto* p : complete) {
      const auto& v = p->values.at(name);
      neutral.push_back(*v.neutral);
      stress.push_back(*v.stress);
    }
    PairedTestResult r;
    try {
      r = paired_t(neutral, stress);
    } catch (const DegenerateError& e) {
      r.n = neutral.size();
      r.df = r.n - 1;
      double sn = 0.0, ss = 0.0;
      std::size_t expected = 0;
      for (std::size_t i = 0; i < r.n; ++i) {
        sn += neutral[i];
        ss += stress[i];
        if (stress[i] > neutral[i]) ++expected;
      }
      r.mean_neutral = sn / static_cast<double>(r.n);
      r.mean_stress = ss / static_cast<double>(r.n);
      r.pct_expected = static_cast<double>(expected) / static_cast<double>(r.n);
      r.t_stat = std::numeric_limits<double>::quiet_NaN();
      r.p_two_tailed = std::numeric_limits<double>::quiet_NaN();
      r.note = e.what();
    }
    r.index_name = name;
    out.results.push_back(std::move(r));
  }
  return out;
}

}  // namespace geostress
