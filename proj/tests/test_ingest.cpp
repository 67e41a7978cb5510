#include <doctest.h>

#include <bit>
#include <cmath>
#include <fstream>
#include <random>

#include "geostress/error.hpp"
#include "geostress/ingest.hpp"
#include "test_util.hpp"

using namespace geostress;
using testutil::lines;

#ifndef GEOSTRESS_TEST_DATA
#error "GEOSTRESS_TEST_DATA must point at tests/data"
#endif

namespace {

const std::filesystem::path kData = GEOSTRESS_TEST_DATA;

std::string two_segment_route(int id_a, int id_b) {
  return R"({"type":"FeatureCollection","features":[
    {"type":"Feature","properties":{"segment_id":)" + std::to_string(id_a) +
         R"(,"name":"a","environment":"green"},
     "geometry":{"type":"LineString","coordinates":[[5.0,52.0],[5.001,52.0]]}},
    {"type":"Feature","properties":{"segment_id":)" + std::to_string(id_b) +
         R"(,"name":"b","environment":"urban"},
     "geometry":{"type":"LineString","coordinates":[[5.01,52.0],[5.011,52.0]]}}]})";
}

void touch(const std::filesystem::path& p) { std::ofstream(p) << "x\n"; }

}  // namespace

TEST_CASE("channel CSV parses header and samples") {
  auto in = lines({"1500000000", "4", "1.0", "1.0", "1.0", "1.0"});
  const auto s = parse_uniform_channel(in, ChannelKind::EDA);
  CHECK(s.start_epoch == 1500000000.0);
  CHECK(s.rate_hz == 4.0);
  CHECK(s.values == std::vector<double>{1, 1, 1, 1});
  CHECK(s.time_at(3) == 1500000000.75);

  auto hr_in = lines({"1500000000", "1", "96.0"});
  const auto hr = parse_uniform_channel(hr_in, ChannelKind::HR);
  CHECK(hr.kind == ChannelKind::HR);
  CHECK(hr.size() == 1);
  CHECK(hr.values[0] == 96.0);
}

TEST_CASE("channel CSV rejects bad headers and values") {
  auto zero_rate = lines({"1500000000", "0", "1.0"});
  CHECK_THROWS_AS(parse_uniform_channel(zero_rate, ChannelKind::EDA), FormatError);
  auto neg_rate = lines({"1500000000", "-4", "1.0"});
  CHECK_THROWS_AS(parse_uniform_channel(neg_rate, ChannelKind::EDA), FormatError);
  auto bad_header = lines({"yesterday", "4", "1.0"});
  CHECK_THROWS_AS(parse_uniform_channel(bad_header, ChannelKind::EDA), FormatError);
  auto no_samples = lines({"1500000000", "4"});
  CHECK_THROWS_AS(parse_uniform_channel(no_samples, ChannelKind::EDA), FormatError);

  auto nan_value = lines({"1500000000", "4", "1.0", "nan"});
  try {
    parse_uniform_channel(nan_value, ChannelKind::EDA);
    FAIL("expected ValueError");
  } catch (const ValueError& e) {
    CHECK(std::string(e.what()).find("line 4") != std::string::npos);
  }
  auto text_value = lines({"1500000000", "4", "abc"});
  CHECK_THROWS_AS(parse_uniform_channel(text_value, ChannelKind::EDA), ValueError);
  auto comma_decimal = lines({"1500000000", "4", "1,5"});
  CHECK_THROWS_AS(parse_uniform_channel(comma_decimal, ChannelKind::EDA), ValueError);
  auto negative_eda = lines({"1500000000", "4", "-0.1"});
  CHECK_THROWS_AS(parse_uniform_channel(negative_eda, ChannelKind::EDA), ValueError);
}

TEST_CASE("IBI file parsing") {
  auto in = lines({"1500000000", "1.0,0.8", "1.8,0.8"});
  const auto ibis = parse_ibi_file(in);
  REQUIRE(ibis.size() == 2);
  CHECK(ibis.beats[0].epoch == 1500000001.0);
  CHECK(ibis.beats[1].epoch == 1500000001.8);
  CHECK(ibis.beats[0].ibi_s == 0.8);
  CHECK(ibis.suspect_count() == 0);

  auto decreasing = lines({"1500000000", "2.0,0.8", "1.0,0.8"});
  CHECK_THROWS_AS(parse_ibi_file(decreasing), OrderError);

  auto empty = lines({"1500000000"});
  CHECK(parse_ibi_file(empty).empty());

  // Implausible intervals are kept and flagged; cleaning happens later.
  auto odd = lines({"1500000000", "1.0,0.8", "5.0,4.0", "5.1,0.1"});
  const auto flagged = parse_ibi_file(odd);
  CHECK(flagged.size() == 3);
  CHECK(flagged.suspect_count() == 2);
  CHECK(flagged.beats[1].suspect);

  auto bad_cols = lines({"1500000000", "1.0"});
  CHECK_THROWS_AS(parse_ibi_file(bad_cols), FormatError);
  auto zero_ibi = lines({"1500000000", "1.0,0"});
  CHECK_THROWS_AS(parse_ibi_file(zero_ibi), ValueError);
}

TEST_CASE("GPS track parsing") {
  auto in = lines({"epoch,lat,lon", "0,0,0", "1,0,0.0001", "2,0,0.0002"});
  const auto track = parse_gps_track(in);
  CHECK(track.size() == 3);
  CHECK(track.fixes[2].lon == 0.0002);

  auto lat91 = lines({"epoch,lat,lon", "0,91,0"});
  try {
    parse_gps_track(lat91);
    FAIL("expected ValueError");
  } catch (const ValueError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  auto lon181 = lines({"epoch,lat,lon", "0,0,181"});
  CHECK_THROWS_AS(parse_gps_track(lon181), ValueError);
  auto dup = lines({"epoch,lat,lon", "5,0,0", "5,0,0"});
  CHECK_THROWS_AS(parse_gps_track(dup), OrderError);
  auto header = lines({"t,lat,lon", "5,0,0"});
  CHECK_THROWS_AS(parse_gps_track(header), FormatError);
}

TEST_CASE("route GeoJSON loading") {
  std::istringstream ok(two_segment_route(1, 2));
  const auto route = load_route(ok);
  REQUIRE(route.segments.size() == 2);
  CHECK(route.segments[0].polyline[0] == GeoPoint{52.0, 5.0});
  CHECK(route.find(2)->environment == "urban");
  CHECK(route.corridor_m == 25.0);

  std::istringstream dup(two_segment_route(1, 1));
  CHECK_THROWS_AS(load_route(dup), ValueError);

  std::istringstream short_line(R"({"type":"FeatureCollection","features":[
    {"type":"Feature","properties":{"segment_id":1,"name":"a","environment":"x"},
     "geometry":{"type":"LineString","coordinates":[[5.0,52.0]]}}]})");
  CHECK_THROWS_AS(load_route(short_line), FormatError);

  std::istringstream missing(R"({"type":"FeatureCollection","features":[
    {"type":"Feature","properties":{"segment_id":1,"name":"a"},
     "geometry":{"type":"LineString","coordinates":[[5.0,52.0],[5.1,52.0]]}}]})");
  CHECK_THROWS_AS(load_route(missing), FormatError);

  std::istringstream garbage("{not json");
  CHECK_THROWS_AS(load_route(garbage), FormatError);
}

TEST_CASE("13-segment route fixture follows the reference segment table") {
  std::ifstream in(kData / "route_13.geojson");
  REQUIRE(in);
  const auto route = load_route(in);
  REQUIRE(route.segments.size() == 13);
  const std::vector<std::string> expected = {
      "Central station (indoor)", "Busy junction", "Neighborhood commercial street (Lombok)",
      "Neighborhood street (Lombok)", "Blue space 1 (canal)", "Blue space 2",
      "Green space (urban park)", "non-commercial street 2", "Pedestrians street",
      "Walk along a main road", "Road crossing", "Walk to bus station", "Bus ride"};
  for (std::size_t i = 0; i < 13; ++i) {
    CHECK(route.segments[i].id == static_cast<int>(i + 1));
    CHECK(route.segments[i].environment == expected[i]);
  }
}

TEST_CASE("manifest loading and validation") {
  const auto dir = testutil::temp_dir("manifest");
  std::filesystem::copy_file(kData / "route_13.geojson", dir / "route.geojson");

  auto participant = [&](const std::string& id) {
    for (const char* suffix : {"_eda.csv", "_ibi.csv", "_gps.csv"}) touch(dir / (id + suffix));
    return R"({"id":")" + id + R"(","channels":[{"kind":"EDA","path":")" + id +
           R"(_eda.csv"}],"ibi":")" + id + R"(_ibi.csv","gps":")" + id + R"(_gps.csv"})";
  };
  auto manifest = [&](int neutral, int n) {
    std::string parts;
    for (int i = 0; i < n; ++i) parts += (i ? "," : "") + participant("P" + std::to_string(i + 1));
    return R"({"route":"route.geojson","stress_event":{"segment_id":11,
      "crossing_start_epoch":{"P1":1500000100.5}},"neutral_segment_id":)" +
           std::to_string(neutral) + R"(,"participants":[)" + parts + "]}";
  };

  SUBCASE("minimal single participant") {
    std::istringstream in(manifest(9, 1));
    const auto m = load_manifest(in, dir);
    CHECK(m.participants.size() == 1);
    CHECK(m.participants[0].crossing_start_epoch == 1500000100.5);
    CHECK(m.window_offset_s == 5.0);
    CHECK(m.window_duration_s == 30.0);
    CHECK(m.route.segments.size() == 13);
  }
  SUBCASE("fifteen participants with segment 9 as the neutral baseline") {
    std::istringstream in(manifest(9, 15));
    const auto m = load_manifest(in, dir);
    CHECK(m.participants.size() == 15);
    CHECK(m.neutral_segment_id == 9);
    CHECK(m.stress_segment_id == 11);
  }
  SUBCASE("dangling segment reference") {
    std::istringstream in(manifest(99, 1));
    CHECK_THROWS_AS(load_manifest(in, dir), ReferenceError);
  }
  SUBCASE("missing data file") {
    // participant() creates the files, so remove one after building the text.
    const std::string text = manifest(9, 1);
    std::filesystem::remove(dir / "P1_gps.csv");
    std::istringstream in(text);
    try {
      load_manifest(in, dir);
      FAIL("expected ReferenceError");
    } catch (const ReferenceError& e) {
      CHECK(std::string(e.what()).find("P1_gps.csv") != std::string::npos);
    }
  }
  SUBCASE("invalid window") {
    std::string text = manifest(9, 1);
    text.insert(text.size() - 1, R"(,"window_duration_s":0)");
    std::istringstream in(text);
    CHECK_THROWS_AS(load_manifest(in, dir), ValueError);
  }
}

// Parse -> write -> parse is the identity for every format, on random data.
TEST_CASE("round trips for all five formats") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto dir = testutil::temp_dir("roundtrip");

  for (int trial = 0; trial < 25; ++trial) {
    SampleSeries s = testutil::series({}, 1.0 + std::floor(u(rng) * 64), 1.5e9 + u(rng) * 1e6);
    for (int i = 0; i < 50; ++i) s.values.push_back(u(rng) * 20.0);
    std::stringstream cs;
    write_uniform_channel(cs, s);
    CHECK(parse_uniform_channel(cs, ChannelKind::EDA) == s);

    IbiSeries ibis;
    double t = 1.5e9;
    for (int i = 0; i < 40; ++i) {
      const double ibi = 0.25 + u(rng) * 2.5;
      t += ibi;
      ibis.beats.push_back({t, ibi, false, false});
    }
    std::stringstream is;
    write_ibi_file(is, 1.5e9, ibis);
    const auto back = parse_ibi_file(is);
    REQUIRE(back.size() == ibis.size());
    for (std::size_t i = 0; i < ibis.size(); ++i) {
      CHECK(back.beats[i].ibi_s == ibis.beats[i].ibi_s);
      // offset = epoch - start is rounded once; re-adding start recovers it to an ulp.
      CHECK(back.beats[i].epoch == doctest::Approx(ibis.beats[i].epoch).epsilon(1e-15));
    }
    std::stringstream is2;
    write_ibi_file(is2, 1.5e9, back);
    CHECK(parse_ibi_file(is2) == back);

    GpsTrack g;
    for (int i = 0; i < 30; ++i) g.fixes.push_back({1.5e9 + i, u(rng) * 180 - 90, u(rng) * 360 - 180});
    std::stringstream gs;
    write_gps_track(gs, g);
    CHECK(parse_gps_track(gs) == g);

    RouteMap r;
    r.corridor_m = 1.0 + u(rng) * 50;
    for (int id = 1; id <= 4; ++id) {
      RouteSegment seg{id, "seg \"" + std::to_string(id) + "\"", "env, " + std::to_string(trial), {}};
      for (int k = 0; k < 3; ++k) seg.polyline.push_back({u(rng) * 10 + 45, u(rng) * 10});
      r.segments.push_back(seg);
    }
    std::stringstream rs;
    write_route(rs, r);
    CHECK(load_route(rs) == r);
  }

  // Manifest round trip through real files.
  {
    std::ofstream(dir / "route.geojson") << two_segment_route(1, 2);
    for (const char* f : {"a_eda.csv", "a_hr.csv", "a_ibi.csv", "a_gps.csv"}) touch(dir / f);
    StudyManifest m;
    m.route_path = dir / "route.geojson";
    std::ifstream rf(m.route_path);
    m.route = load_route(rf);
    m.stress_segment_id = 2;
    m.neutral_segment_id = 1;
    m.window_offset_s = 2.5;
    m.window_duration_s = 20;
    m.subjective_rankings = {{1, 1.5}, {2, 6.25}};
    ParticipantFiles p;
    p.id = "a";
    p.channels = {{ChannelKind::EDA, dir / "a_eda.csv"}, {ChannelKind::HR, dir / "a_hr.csv"}};
    p.ibi = dir / "a_ibi.csv";
    p.gps = dir / "a_gps.csv";
    p.crossing_start_epoch = 1500000123.25;
    p.neutral_start_epoch = 1500000003.0;
    m.participants.push_back(p);
    std::stringstream ms;
    write_manifest(ms, m, dir);
    CHECK(load_manifest(ms, dir) == m);
  }
}

TEST_CASE("format_number is exact and readable") {
  CHECK(format_number(1500000000.0) == "1500000000");
  CHECK(format_number(1500000815.7141273) == "1500000815.7141273");
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(-2.5) == "-2.5");
  CHECK(format_number(1e-300) == "1e-300");

  std::mt19937_64 rng(13);
  std::uniform_int_distribution<std::uint64_t> bits;
  for (int i = 0; i < 20000; ++i) {
    const double v = std::bit_cast<double>(bits(rng));
    if (!std::isfinite(v)) continue;
    const auto text = format_number(v);
    CHECK(text.size() <= 24);
    CHECK(parse_number(text) == v);
  }
  CHECK_FALSE(parse_number("1,5").has_value());
  CHECK_FALSE(parse_number("nan").has_value());
  CHECK(parse_number(" +2.5 ") == 2.5);
}
