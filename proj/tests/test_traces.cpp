#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gridsim/error.hpp"
#include "gridsim/traces.hpp"
#include "support.hpp"

using namespace gridsim;
using namespace std::chrono;
using testing::TempDir;
using testing::write_file;

namespace {

std::string half_hourly_csv(std::size_t rows, const std::string& value, const std::string& col = "cf") {
    std::string text = "timestamp," + col + "\n";
    auto t = testing::jan1(2021);
    for (std::size_t i = 0; i < rows; ++i) {
        text += format_timestamp(t) + "," + value + "\n";
        t += kHalfHour;
    }
    return text;
}

double mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

TEST_CASE("timestamps parse in both separators and round trip") {
    const auto a = parse_timestamp("2020-02-29T13:30");
    const auto b = parse_timestamp("2020-02-29 13:30:00");
    CHECK(a == b);
    CHECK(parse_timestamp("2020-02-29T13:30:00Z") == a);
    CHECK(format_timestamp(a) == "2020-02-29T13:30:00");
    CHECK_THROWS_AS(parse_timestamp("2020-02-30T00:00"), TraceError);
    CHECK_THROWS_AS(parse_timestamp("yesterday"), TraceError);
}

TEST_CASE("load_trace_csv reads a constant half-hourly column") {
    TempDir dir;
    write_file(dir / "t.csv", half_hourly_csv(48, "0.5"));
    const auto lt = load_trace_csv(dir / "t.csv", "cf");
    REQUIRE(lt.series.size() == 48);
    CHECK(lt.clamped == 0);
    CHECK(std::all_of(lt.series.values.begin(), lt.series.values.end(), [](double v) { return v == 0.5; }));
    CHECK(lt.series.start == testing::jan1(2021));
}

TEST_CASE("hourly file is rejected unless resampling is requested") {
    TempDir dir;
    write_file(dir / "h.csv", "timestamp,cf\n2021-01-01T00:00,0.0\n2021-01-01T01:00,1.0\n");
    try {
        load_trace_csv(dir / "h.csv", "cf");
        FAIL("expected TraceError");
    } catch (const TraceError& e) {
        CHECK(std::string(e.what()).find("step is 60 min, expected 30 (resample first)") != std::string::npos);
    }
    const auto lt = load_trace_csv(dir / "h.csv", "cf", SeriesKind::CapacityFactor, true);
    CHECK(lt.series.values == std::vector<double>{0.0, 0.5, 1.0, 1.0});
}

TEST_CASE("capacity factor slightly above one is clamped and counted") {
    TempDir dir;
    write_file(dir / "t.csv", "timestamp,cf\n2021-01-01T00:00,1.03\n2021-01-01T00:30,0.2\n");
    const auto lt = load_trace_csv(dir / "t.csv", "cf");
    CHECK(lt.clamped == 1);
    CHECK(lt.series.values[0] == 1.0);
    CHECK(lt.series.values[1] == 0.2);

    write_file(dir / "bad.csv", "timestamp,cf\n2021-01-01T00:00,30\n2021-01-01T00:30,0.2\n");
    CHECK_THROWS_AS(load_trace_csv(dir / "bad.csv", "cf"), TraceError);
    // Power traces are not clamped.
    CHECK(load_trace_csv(dir / "bad.csv", "cf", SeriesKind::Power).series.values[0] == 30.0);
}

TEST_CASE("gaps and bad cells are reported with their location") {
    TempDir dir;
    write_file(dir / "gap.csv",
               "timestamp,cf\n2021-01-01T00:00,0.1\n2021-01-01T00:30,0.1\n2021-01-01T01:30,0.1\n");
    try {
        load_trace_csv(dir / "gap.csv", "cf");
        FAIL("expected TraceError");
    } catch (const TraceError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("gap at row 4") != std::string::npos);
        CHECK(msg.find("2021-01-01T00:30:00") != std::string::npos);
    }
    write_file(dir / "nan.csv", "timestamp,cf\n2021-01-01T00:00,0.1\n2021-01-01T00:30,abc\n");
    try {
        load_trace_csv(dir / "nan.csv", "cf");
        FAIL("expected TraceError");
    } catch (const TraceError& e) {
        CHECK(std::string(e.what()).find("row 3") != std::string::npos);
    }
    CHECK_THROWS_AS(load_trace_csv(dir / "nan.csv", "other"), TraceError);
}

TEST_CASE("resample_half_hourly") {
    TimeSeries hourly{testing::jan1(2021), minutes{60}, {0.0, 1.0}};
    CHECK(resample_half_hourly(hourly).values == std::vector<double>{0.0, 0.5, 1.0, 1.0});

    TimeSeries flat{testing::jan1(2021), minutes{120}, std::vector<double>(5, 0.37)};
    const auto r = resample_half_hourly(flat);
    CHECK(r.size() == 20);
    CHECK(std::all_of(r.values.begin(), r.values.end(), [](double v) { return v == doctest::Approx(0.37); }));

    const auto half = testing::constant(0.2, 7);
    CHECK(resample_half_hourly(half).values == half.values);

    TimeSeries odd{testing::jan1(2021), minutes{45}, {0.0, 1.0}};
    CHECK_THROWS_AS(resample_half_hourly(odd), TraceError);
}

TEST_CASE("synthetic solar over a year") {
    const std::size_t n = 365 * kIntervalsPerDay;
    SynthSpec spec{SynthKind::Solar, 42, testing::jan1(2021), n, 0.30, 1.0, 0.3};
    const auto ts = synth_trace(spec);
    REQUIRE(ts.size() == n);
    const double m = mean(ts.values);
    CHECK(m >= 0.294);
    CHECK(m <= 0.306);
    for (std::size_t t = 0; t < n; ++t) {
        const double h = static_cast<double>(t % kIntervalsPerDay) * kIntervalHours;
        if (h < spec.daylight_start_h || h >= spec.daylight_end_h) REQUIRE(ts.values[t] == 0.0);
        REQUIRE(ts.values[t] >= 0.0);
        REQUIRE(ts.values[t] <= 1.0);
    }
    CHECK(synth_trace(spec).values == ts.values);
}

TEST_CASE("synthetic wind without noise or shape is constant") {
    SynthSpec spec{SynthKind::Wind, 3, testing::jan1(2021), 96, 0.41, 0.0, 0.0};
    const auto ts = synth_trace(spec);
    for (double v : ts.values) CHECK(v == doctest::Approx(0.41).epsilon(1e-12));
}

TEST_CASE("opposite loadings on a shared factor anti-correlate") {
    const std::size_t n = 60 * kIntervalsPerDay;
    const auto f = synth_factor(9, n, 0.995);
    SynthSpec a{SynthKind::Wind, 1, testing::jan1(2021), n, 0.4, 0.0, 0.8};
    a.common_factor = f;
    a.common_loading = 0.85;
    SynthSpec b = a;
    b.seed = 2;
    b.common_loading = -0.85;
    const auto x = synth_trace(a).values;
    const auto y = synth_trace(b).values;
    const double mx = mean(x), my = mean(y);
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    CHECK(sxy / std::sqrt(sxx * syy) < -0.3);
}

TEST_CASE("align checks horizon, start and step") {
    auto ok = align({{"a", testing::constant(1, 48)}, {"b", testing::constant(2, 48)}});
    CHECK(ok.size() == 2);
    CHECK(ok.horizon() == 48);
    CHECK(ok.at("b").values[0] == 2);
    CHECK_THROWS_AS(ok.at("c"), TraceError);

    try {
        align({{"a", testing::constant(1, 48)}, {"b", testing::constant(2, 50)}});
        FAIL("expected TraceError");
    } catch (const TraceError& e) {
        CHECK(std::string(e.what()).find("'b'") != std::string::npos);
    }
    try {
        align({});
        FAIL("expected TraceError");
    } catch (const TraceError& e) {
        CHECK(std::string(e.what()) == "no traces");
    }
    CHECK_THROWS_AS(align({{"a", testing::constant(1, 4)}, {"b", testing::constant(1, 4, testing::jan1(2022))}}),
                    TraceError);
}

TEST_CASE("decade calendar has 175,344 half-hours") {
    CHECK(interval_count(2020y / January / 1, 2029y / December / 31) == 175344);
    CHECK(interval_count(2021y / January / 1, 2021y / December / 31) == 17520);
    CHECK(interval_count(2020y / January / 1, 2020y / December / 31) == 17568);

    const auto cal = Calendar::build(testing::jan1(2020), 175344);
    CHECK(cal.years.size() == 10);
    CHECK(cal.years.front() == 2020);
    CHECK(cal.years.back() == 2029);
    CHECK(cal.year_index[17567] == 0);
    CHECK(cal.year_index[17568] == 1);
    CHECK(cal.slot[17568] == 0);
    CHECK(cal.day_of_year[17567] == 365);
}

TEST_CASE("profile csv accepts slot or timestamp index") {
    TempDir dir;
    std::string text = "slot,p\n";
    for (int i = 0; i < 48; ++i) text += std::to_string(i) + "," + std::to_string(1.0 / 48) + "\n";
    write_file(dir / "p.csv", text);
    const auto ps = read_profile_csv(dir / "p.csv");
    REQUIRE(ps.count("p"));
    CHECK(ps.at("p").size() == 48);
}
