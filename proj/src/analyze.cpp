#include "geostress/analyze.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "geostress/geotrack.hpp"
#include "geostress/synth.hpp"

namespace geostress {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

template <typename Parse>
auto read_file(const fs::path& path, const char* what, Parse parse) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ReferenceError(std::string(what) + " file unreadable: " + path.string());
  try {
    return parse(in);
  } catch (const Error& e) {
    throw FormatError(std::string(what) + " file " + path.string() + ": " + e.what());
  }
}

// Brings a channel to 1 Hz by block means; its rate must be a whole number of Hz.
SampleSeries to_one_hz(const SampleSeries& s) {
  if (s.rate_hz < 1.0 || s.rate_hz != std::floor(s.rate_hz)) {
    throw ValueError(std::string(to_string(s.kind)) + " channel at " + format_number(s.rate_hz) +
                     " Hz cannot be aligned to the 1 Hz GPS clock");
  }
  return downsample_mean(s, static_cast<std::size_t>(s.rate_hz));
}

std::optional<double> first_entry(const GeoSampleTrack& track, int segment_id) {
  for (const auto& row : track.rows) {
    if (row.segment_id == segment_id) return row.epoch;
  }
  return std::nullopt;
}

void append_failure(std::string& failure, const std::string& message) {
  if (!failure.empty()) failure += "; ";
  failure += message;
}

std::string sig6_text(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

ojson number_or_null(std::optional<double> v) {
  if (!v || !std::isfinite(*v)) return nullptr;
  return round_sig6(*v);
}

}  // namespace

double round_sig6(double value) {
  if (!std::isfinite(value) || value == 0.0) return value;
  return std::strtod(sig6_text(value).c_str(), nullptr);
}

InputFilesError::InputFilesError(std::vector<std::string> diagnostics)
    : Error([&] {
        std::string msg = "unreadable input files:";
        for (const auto& d : diagnostics) msg += "\n  " + d;
        return msg;
      }()),
      diagnostics_(std::move(diagnostics)) {}

void RunConfig::validate() const {
  eda.validate();
  hrv.validate();
  if (corridor_m && !(*corridor_m > 0.0)) throw ValueError("corridor must be > 0 m");
  if (!(tolerance_s >= 0.0)) throw ValueError("join tolerance must be >= 0 s");
  if (jobs < 1) throw ValueError("jobs must be >= 1");
}

void apply_config_file(RunConfig& cfg, const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ReferenceError("config file not found: " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("config " + path.string() + ": " + e.what());
  }
  if (!doc.is_object()) throw FormatError("config: expected a JSON object");
  for (const auto& [key, value] : doc.items()) {
    auto number = [&]() {
      if (!value.is_number()) throw FormatError("config: '" + key + "' must be a number");
      return value.get<double>();
    };
    auto pair = [&]() {
      if (!value.is_array() || value.size() != 2 || !value[0].is_number() || !value[1].is_number()) {
        throw FormatError("config: '" + key + "' must be [low, high]");
      }
      return std::pair{value[0].get<double>(), value[1].get<double>()};
    };
    if (key == "corridor_m") {
      cfg.corridor_m = number();
    } else if (key == "tolerance_s") {
      cfg.tolerance_s = number();
    } else if (key == "jobs") {
      if (!value.is_number_integer()) throw FormatError("config: 'jobs' must be an integer");
      cfg.jobs = value.get<int>();
    } else if (key == "scr_threshold_uS") {
      cfg.eda.scr_threshold_uS = number();
    } else if (key == "tonic_window_s") {
      cfg.eda.tonic_window_s = number();
    } else if (key == "smooth_window_s") {
      cfg.eda.smooth_window_s = number();
    } else if (key == "pnn_threshold_ms") {
      cfg.hrv.pnn_threshold_ms = number();
    } else if (key == "lf_band_hz") {
      const auto [lo, hi] = pair();
      cfg.hrv.lf_band = {lo, hi};
    } else if (key == "hf_band_hz") {
      const auto [lo, hi] = pair();
      cfg.hrv.hf_band = {lo, hi};
    } else if (key == "interp_rate_hz") {
      cfg.hrv.interp_rate_hz = number();
    } else if (key == "max_gap_s") {
      cfg.hrv.max_gap_s = number();
    } else if (key == "ibi_bounds_s") {
      const auto [lo, hi] = pair();
      cfg.hrv.ibi_min_s = lo;
      cfg.hrv.ibi_max_s = hi;
    } else {
      throw FormatError("config: unknown key '" + key + "'");
    }
  }
}

ParticipantResult analyze_participant(const ParticipantFiles& files, const StudyManifest& manifest,
                                      const RunConfig& cfg) {
  ParticipantResult r;
  r.id = files.id;
  r.indexes.participant_id = files.id;

  const GpsTrack gps = read_file(files.gps, "GPS", [](std::istream& in) { return parse_gps_track(in); });
  const IbiSeries ibis = read_file(files.ibi, "IBI", [](std::istream& in) { return parse_ibi_file(in); });
  std::optional<SampleSeries> eda, hr;
  if (const auto* c = files.channel(ChannelKind::EDA)) {
    eda = read_file(c->path, "EDA", [](std::istream& in) { return parse_uniform_channel(in, ChannelKind::EDA); });
  }
  if (const auto* c = files.channel(ChannelKind::HR)) {
    hr = read_file(c->path, "HR", [](std::istream& in) { return parse_uniform_channel(in, ChannelKind::HR); });
  }
  if (gps.size() < 2) throw FormatError("GPS file " + files.gps.string() + ": fewer than 2 fixes");

  // Geo-enrichment: 1 Hz physiology onto fixes, then route overlay and speed.
  const SampleSeries eda_1hz = eda ? to_one_hz(*eda) : SampleSeries{};
  const SampleSeries hr_1hz = hr ? to_one_hz(*hr) : SampleSeries{};
  auto joined = join_to_track(gps, eda_1hz, hr_1hz, cfg.tolerance_s);
  r.unmatched_eda = joined.unmatched_eda;
  r.unmatched_hr = joined.unmatched_hr;
  r.track = std::move(joined.track);

  RouteMap route = manifest.route;
  if (cfg.corridor_m) route.corridor_m = *cfg.corridor_m;
  const auto assignment = assign_segments(gps, route);
  const auto speed = derive_speed(gps);
  for (std::size_t i = 0; i < r.track.rows.size(); ++i) {
    r.track.rows[i].segment_id = assignment[i].segment_id;
    r.track.rows[i].speed_mps = speed[i];
  }
  r.segments = segment_summaries(r.track, route, manifest.subjective_rankings);

  // Episode windows.
  auto& failure = r.indexes.failure;
  const auto crossing_start =
      files.crossing_start_epoch ? files.crossing_start_epoch : first_entry(r.track, manifest.stress_segment_id);
  const auto neutral_start =
      files.neutral_start_epoch ? files.neutral_start_epoch : first_entry(r.track, manifest.neutral_segment_id);
  if (crossing_start) {
    r.crossing_window = make_crossing_window(*crossing_start, manifest.window_offset_s,
                                             manifest.window_duration_s, "crossing");
  } else {
    append_failure(failure, "no fix in stress segment " + std::to_string(manifest.stress_segment_id));
  }
  if (neutral_start) {
    r.neutral_window = make_crossing_window(*neutral_start, manifest.window_offset_s,
                                            manifest.window_duration_s, "neutral");
  } else {
    append_failure(failure, "no fix in neutral segment " + std::to_string(manifest.neutral_segment_id));
  }

  auto& values = r.indexes.values;
  auto set = [&](const EpisodeWindow& w, const char* name, double v) {
    auto& slot = values[name];
    (w.label == "neutral" ? slot.neutral : slot.stress) = v;
  };

  std::vector<ScrEvent> events;
  bool have_events = false;
  if (eda) {
    try {
      const auto d = decompose(*eda, cfg.eda);
      events = detect_scrs(d.phasic, cfg.eda.scr_threshold_uS);
      have_events = true;
    } catch (const Error& e) {
      append_failure(failure, std::string("EDA: ") + e.what());
    }
  } else {
    append_failure(failure, "no EDA channel");
  }

  for (const auto* w : {&r.neutral_window, &r.crossing_window}) {
    if (!*w) continue;
    const EpisodeWindow& win = **w;
    if (have_events) {
      try {
        const auto idx = eda_indexes(*eda, events, win.start_epoch, win.duration_s);
        set(win, "nSCR", static_cast<double>(idx.nscr));
        set(win, "AmpSum", idx.amp_sum);
        set(win, "PhasicMax", idx.phasic_max);
        set(win, "GlobalMean", idx.global_mean);
        set(win, "MaxDeflection", idx.max_deflection);
      } catch (const Error& e) {
        append_failure(failure, win.label + " EDA: " + e.what());
      }
    }
    try {
      const auto h = hrv_indexes(ibis, win.start_epoch, win.duration_s, cfg.hrv);
      set(win, "SDNN", h.sdnn_ms);
      set(win, "pNN50", h.pnn50);
      set(win, "LF/HF", h.lf_hf);
      r.hrv_short_window = r.hrv_short_window || h.short_window;
    } catch (const Error& e) {
      append_failure(failure, win.label + " HRV: " + e.what());
    }
  }
  return r;
}

AnalysisReport run_analysis(const StudyManifest& manifest, const RunConfig& cfg) {
  cfg.validate();
  const std::size_t n = manifest.participants.size();
  std::vector<std::optional<ParticipantResult>> results(n);
  std::vector<std::string> diagnostics(n);
  std::vector<std::exception_ptr> internal(n);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        results[i] = analyze_participant(manifest.participants[i], manifest, cfg);
      } catch (const Error& e) {
        diagnostics[i] = manifest.participants[i].id + ": " + e.what();
      } catch (...) {
        internal[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(cfg.jobs), n);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  for (const auto& e : internal) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<std::string> failed;
  for (const auto& d : diagnostics) {
    if (!d.empty()) failed.push_back(d);
  }
  if (!failed.empty()) throw InputFilesError(std::move(failed));

  AnalysisReport report;
  std::vector<std::vector<SegmentSummary>> tables;
  std::vector<ParticipantIndexTable> cohort;
  for (auto& r : results) {
    tables.push_back(r->segments);
    cohort.push_back(r->indexes);
    report.hrv_short_window = report.hrv_short_window || r->hrv_short_window;
    report.participants.push_back(std::move(*r));
  }
  report.segments = cohort_segment_summaries(tables, manifest.route, manifest.subjective_rankings);

  if (n < 2) {
    report.notice = "insufficient cohort: " + std::to_string(n) +
                    " participant(s), paired tests need at least 2; stats stage skipped";
  } else {
    try {
      report.comparison = compare_episodes(cohort);
    } catch (const InsufficientDataError& e) {
      report.notice = std::string("insufficient cohort: ") + e.what() + "; stats stage skipped";
      CohortComparison partial;
      for (const auto& p : cohort) {
        if (!p.failure.empty()) partial.exclusions.push_back({p.participant_id, p.failure});
      }
      report.comparison = std::move(partial);
    }
  }
  return report;
}

void write_track_geojson(std::ostream& out, const GeoSampleTrack& track) {
  out << "{\"type\":\"FeatureCollection\",\"features\":[";
  for (std::size_t i = 0; i < track.rows.size(); ++i) {
    const auto& r = track.rows[i];
    auto opt = [](const std::optional<double>& v) {
      return v && std::isfinite(*v) ? sig6_text(*v) : std::string("null");
    };
    out << (i ? ",\n" : "\n") << "{\"type\":\"Feature\",\"geometry\":{\"type\":\"Point\",\"coordinates\":["
        << format_number(r.lon) << ',' << format_number(r.lat) << "]},\"properties\":{\"epoch\":"
        << format_number(r.epoch) << ",\"eda_uS\":" << opt(r.eda_uS) << ",\"hr_bpm\":" << opt(r.hr_bpm)
        << ",\"segment_id\":" << (r.segment_id ? std::to_string(*r.segment_id) : std::string("null"))
        << ",\"speed_mps\":" << opt(r.speed_mps) << "}}";
  }
  out << "\n]}\n";
}

void write_segments_csv(std::ostream& out, const std::vector<SegmentSummary>& segments) {
  auto opt = [](const std::optional<double>& v) { return v ? sig6_text(*v) : std::string(); };
  auto quote = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + "\"";
  };
  out << "segment_id,environment,eda_uS,hr_bpm,subjective_rank\n";
  for (const auto& s : segments) {
    out << s.segment_id << ',' << quote(s.environment) << ',' << opt(s.mean_eda_uS) << ','
        << opt(s.mean_hr_bpm) << ',' << opt(s.subjective_rank) << '\n';
  }
}

void write_stats_json(std::ostream& out, const AnalysisReport& report, const StudyManifest& manifest) {
  ojson doc;
  ojson window;
  window["stress_segment_id"] = manifest.stress_segment_id;
  window["neutral_segment_id"] = manifest.neutral_segment_id;
  window["offset_s"] = round_sig6(manifest.window_offset_s);
  window["duration_s"] = round_sig6(manifest.window_duration_s);
  doc["window"] = window;

  ojson cohort;
  cohort["participants"] = report.participants.size();
  auto excluded = ojson::array();
  if (report.comparison) {
    for (const auto& e : report.comparison->exclusions) {
      excluded.push_back({{"participant", e.participant_id}, {"reason", e.reason}});
    }
  }
  cohort["included"] = report.participants.size() - excluded.size();
  cohort["excluded"] = excluded;
  doc["cohort"] = cohort;

  auto results = ojson::array();
  if (report.comparison) {
    for (const auto& r : report.comparison->results) {
      ojson row;
      row["index"] = r.index_name;
      row["n"] = r.n;
      row["mean_neutral"] = number_or_null(r.mean_neutral);
      row["mean_stress"] = number_or_null(r.mean_stress);
      row["t"] = number_or_null(r.t_stat);
      row["df"] = r.df;
      row["p"] = number_or_null(r.p_two_tailed);
      row["pct_expected"] = number_or_null(r.pct_expected);
      if (!r.note.empty()) row["note"] = r.note;
      results.push_back(row);
    }
  }
  doc["results"] = results;

  auto warnings = ojson::array();
  if (report.hrv_short_window) {
    warnings.push_back("HRV indexes computed over windows shorter than 5 minutes or with low beat coverage are unstable");
  }
  for (const auto& p : report.participants) {
    if (p.unmatched_eda || p.unmatched_hr) {
      warnings.push_back(p.id + ": " + std::to_string(p.unmatched_eda) + " fixes without EDA, " +
                         std::to_string(p.unmatched_hr) + " without HR");
    }
  }
  doc["warnings"] = warnings;
  doc["notice"] = report.notice.empty() ? ojson(nullptr) : ojson(report.notice);

  auto parts = ojson::array();
  for (const auto& p : report.participants) {
    ojson pj;
    pj["id"] = p.id;
    auto window_json = [](const std::optional<EpisodeWindow>& w) -> ojson {
      if (!w) return nullptr;
      return {{"start_epoch", w->start_epoch}, {"duration_s", round_sig6(w->duration_s)}};
    };
    pj["neutral_window"] = window_json(p.neutral_window);
    pj["crossing_window"] = window_json(p.crossing_window);
    ojson neutral, stress;
    for (auto name : kEpisodeIndexes) {
      const auto it = p.indexes.values.find(std::string(name));
      const EpisodeValues v = it == p.indexes.values.end() ? EpisodeValues{} : it->second;
      neutral[std::string(name)] = number_or_null(v.neutral);
      stress[std::string(name)] = number_or_null(v.stress);
    }
    pj["neutral"] = neutral;
    pj["crossing"] = stress;
    if (!p.indexes.failure.empty()) pj["failure"] = p.indexes.failure;
    parts.push_back(pj);
  }
  doc["participants"] = parts;
  out << doc.dump(2) << '\n';
}

void write_outputs(const AnalysisReport& report, const StudyManifest& manifest, const fs::path& out_dir) {
  std::vector<fs::path> written;
  auto emit = [&](const fs::path& p, auto&& writer) {
    written.push_back(p);
    std::ofstream out(p, std::ios::binary);
    if (!out) throw ReferenceError("cannot write " + p.string());
    writer(out);
    out.flush();
    if (!out) throw ReferenceError("write failed: " + p.string());
  };
  try {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw ReferenceError("cannot create output directory " + out_dir.string());
    for (const auto& p : report.participants) {
      emit(out_dir / ("track_" + p.id + ".geojson"),
           [&](std::ostream& o) { write_track_geojson(o, p.track); });
    }
    emit(out_dir / "segments.csv", [&](std::ostream& o) { write_segments_csv(o, report.segments); });
    emit(out_dir / "stats.json", [&](std::ostream& o) { write_stats_json(o, report, manifest); });
  } catch (...) {
    for (const auto& p : written) {
      std::error_code ec;
      fs::remove(p, ec);
    }
    throw;
  }
}

int cmd_analyze(const RunConfig& cfg, std::ostream& log) {
  try {
    cfg.validate();
    const auto manifest = load_manifest_file(cfg.manifest);
    const auto report = run_analysis(manifest, cfg);
    write_outputs(report, manifest, cfg.out_dir);
    if (!report.notice.empty()) log << "notice: " << report.notice << '\n';
    if (report.comparison) {
      for (const auto& e : report.comparison->exclusions) {
        log << "excluded " << e.participant_id << ": " << e.reason << '\n';
      }
    }
    log << "wrote " << report.participants.size() << " track(s), segments.csv and stats.json to "
        << cfg.out_dir.string() << '\n';
    return kExitOk;
  } catch (const InputFilesError& e) {
    log << "error: " << e.what() << '\n';
    return kExitInputError;
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    return kExitInputError;
  } catch (const std::exception& e) {
    log << "internal error: " << e.what() << '\n';
    return kExitInternalError;
  }
}

int cmd_synth(const fs::path& spec_path, const fs::path& out_dir, std::ostream& log) {
  try {
    SynthSpec spec;
    if (spec_path.empty()) {
      spec = default_synth_spec();
    } else {
      std::ifstream in(spec_path);
      if (!in) throw ReferenceError("spec file not found: " + spec_path.string());
      spec = parse_synth_spec(in, spec_path.parent_path());
    }
    const auto out = generate_cohort(spec, out_dir);
    log << "wrote " << spec.n_participants << " participant(s); manifest " << out.manifest.string()
        << '\n';
    return kExitOk;
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    return kExitInputError;
  } catch (const std::exception& e) {
    log << "internal error: " << e.what() << '\n';
    return kExitInternalError;
  }
}

}  // namespace geostress
