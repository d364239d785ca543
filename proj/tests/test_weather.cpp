#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "skyroute/rng.hpp"
#include "skyroute/weather.hpp"

using namespace skyroute;

namespace {

const net::BoundingBox kBox{-38.4, -37.6, 144.4, 145.6};

wx::WeatherRecord record_for(const std::string& station, Timestamp t) {
    wx::WeatherRecord r;
    r.station = station;
    r.timestamp = t;
    r.temperature_c = 15.0;
    r.cloud_cover = 0.2;
    r.wind_speed_ms = 5.0;
    r.wind_bearing = 90.0;
    r.humidity = 0.6;
    r.pressure_hpa = 1013.0;
    r.dew_point_c = 7.0;
    r.visibility_km = 10.0;
    return r;
}

wx::DeviationStats uniform_stats(const std::vector<std::string>& stations, double sigma) {
    wx::DeviationStats stats;
    for (const std::string& s : stations)
        for (std::size_t a = 0; a < wx::kAttrCount; ++a)
            stats.set(s, static_cast<wx::Attr>(a), {0.0, sigma, 100});
    return stats;
}

wx::ForecastSeries series_with_errors(const std::string& station, wx::Attr attr,
                                      const std::vector<double>& errors) {
    wx::ForecastSeries s;
    s.station = station;
    s.target = 3600;
    s.actual = record_for(station, 3600);
    int lead = 1;
    for (double e : errors) {
        wx::WeatherRecord f = s.actual;
        f.set(attr, f.get(attr) + e);
        s.forecasts[lead++] = f;
    }
    return s;
}

} // namespace

TEST_CASE("deviation stats: forecasts equal to actuals give zero mean and sigma") {
    std::vector<wx::ForecastSeries> series{series_with_errors("E", wx::Attr::Temperature, {0, 0, 0})};
    const wx::DeviationStats stats = wx::compute_deviation_stats(series);
    for (std::size_t a = 0; a < wx::kAttrCount; ++a) {
        CHECK(stats.get("E", static_cast<wx::Attr>(a)).mean_error == 0.0);
        CHECK(stats.get("E", static_cast<wx::Attr>(a)).std_error == 0.0);
    }
    CHECK(stats.get("E", wx::Attr::Temperature).n == 3);
}

TEST_CASE("deviation stats: errors +1 and -1 give mean 0 and population sigma 1") {
    std::vector<wx::ForecastSeries> series{series_with_errors("E", wx::Attr::Visibility, {1.0, -1.0})};
    const wx::DeviationStats stats = wx::compute_deviation_stats(series);
    CHECK(stats.get("E", wx::Attr::Visibility).mean_error == doctest::Approx(0.0));
    CHECK(stats.get("E", wx::Attr::Visibility).std_error == doctest::Approx(1.0));
}

TEST_CASE("deviation stats reject empty input") {
    CHECK_THROWS_AS(wx::compute_deviation_stats({}), DataError);
}

TEST_CASE("wind bearing deviations wrap around north") {
    wx::ForecastSeries s;
    s.station = "E";
    s.target = 3600;
    s.actual = record_for("E", 3600);
    s.actual.wind_bearing = 350.0;
    wx::WeatherRecord f = s.actual;
    f.wind_bearing = 10.0; // 20 degrees clockwise of 350, not 340 away
    s.forecasts[1] = f;
    const wx::DeviationStats stats = wx::compute_deviation_stats({s});
    CHECK(stats.get("E", wx::Attr::WindBearing).mean_error == doctest::Approx(20.0));
}

TEST_CASE("generator with a zero error model emits forecasts equal to actuals") {
    const net::SkywayNetwork n = net::generate_network(3, 3, kBox, 21);
    const std::vector<wx::TimeRange> ranges{{0, 24 * 3600}};
    const wx::GeneratedWeather gw =
        wx::generate_weather(n, ranges, wx::ErrorModel::zero(), 5, 24);
    CHECK(gw.actual_records.size() == 3 * 24);
    CHECK(gw.forecasts.size() == 24 * gw.actual_records.size());
    for (std::size_t i = 0; i < 200; ++i) {
        const wx::ForecastRecord& f = gw.forecasts[i * 7 % gw.forecasts.size()];
        const wx::WeatherRecord& a = gw.actuals.get(f.record.station, f.record.timestamp);
        for (std::size_t k = 0; k < wx::kAttrCount; ++k)
            CHECK(f.record.get(static_cast<wx::Attr>(k)) == a.get(static_cast<wx::Attr>(k)));
    }
}

TEST_CASE("generator recovers a configured bias through the deviation stats") {
    const net::SkywayNetwork n = net::generate_network(4, 4, kBox, 33);
    const std::vector<wx::TimeRange> ranges{{0, 9 * 24 * 3600}};
    wx::ErrorModel model = wx::ErrorModel::zero();
    model.attrs[static_cast<std::size_t>(wx::Attr::Visibility)] = {+2.0, 0.5};
    const wx::GeneratedWeather gw = wx::generate_weather(n, ranges, model, 17, 24);
    const wx::DeviationStats stats =
        wx::compute_deviation_stats(wx::pair_series(gw.actual_records, gw.forecasts));
    for (const net::Station& st : n.stations()) {
        const wx::AttrStats& vis = stats.get(st.id, wx::Attr::Visibility);
        // recovered bias within 3 sigma / sqrt(n) of the configured +2 km
        const double bound = 3.0 * vis.std_error / std::sqrt(static_cast<double>(vis.n));
        CHECK(std::abs(vis.mean_error - 2.0) <= bound);
        CHECK(stats.get(st.id, wx::Attr::Temperature).mean_error == 0.0);
    }
}

TEST_CASE("default error model bias directions match the measured behaviour") {
    const net::SkywayNetwork n = net::generate_network(4, 4, kBox, 8);
    const std::vector<wx::TimeRange> ranges{{0, 6 * 24 * 3600}};
    const wx::GeneratedWeather gw =
        wx::generate_weather(n, ranges, wx::ErrorModel::default_model(), 23, 24);
    const wx::DeviationStats stats =
        wx::compute_deviation_stats(wx::pair_series(gw.actual_records, gw.forecasts));
    for (const net::Station& st : n.stations()) {
        CHECK(stats.get(st.id, wx::Attr::Visibility).mean_error > 0.0);
        CHECK(stats.get(st.id, wx::Attr::WindSpeed).mean_error > 0.0);
        CHECK(stats.get(st.id, wx::Attr::Temperature).mean_error > 0.0);
        CHECK(stats.get(st.id, wx::Attr::DewPoint).mean_error < 0.0);
        CHECK(std::abs(stats.get(st.id, wx::Attr::Humidity).mean_error) < 0.02);
        CHECK(std::abs(stats.get(st.id, wx::Attr::CloudCover).mean_error) < 0.02);
    }
}

TEST_CASE("small-network weather volume lands at the dataset scale") {
    const net::SkywayNetwork n = net::generate_network(38, 64, kBox, 7);
    std::vector<wx::TimeRange> ranges{
        {timestamp_from_civil(2017, 11, 1), timestamp_from_civil(2017, 11, 10)},
        {timestamp_from_civil(2018, 5, 1), timestamp_from_civil(2018, 5, 10)}};
    const wx::GeneratedWeather gw =
        wx::generate_weather(n, ranges, wx::ErrorModel::default_model(), 7, 24);
    // 38 stations x 2 x 216 hourly records, within 5% of the 16,000 target
    CHECK(gw.actual_records.size() == 38 * 2 * 216);
    CHECK(std::abs(static_cast<double>(gw.actual_records.size()) - 16000.0) < 0.05 * 16000.0);
    CHECK(gw.forecasts.size() == 24 * gw.actual_records.size());
}

TEST_CASE("generation is deterministic and order-independent per seed") {
    const net::SkywayNetwork n = net::generate_network(5, 6, kBox, 2);
    const std::vector<wx::TimeRange> ranges{{7200, 7200 + 48 * 3600}};
    const wx::GeneratedWeather a =
        wx::generate_weather(n, ranges, wx::ErrorModel::default_model(), 99, 24);
    const wx::GeneratedWeather b =
        wx::generate_weather(n, ranges, wx::ErrorModel::default_model(), 99, 24);
    REQUIRE(a.actual_records.size() == b.actual_records.size());
    for (std::size_t i = 0; i < a.actual_records.size(); ++i)
        for (std::size_t k = 0; k < wx::kAttrCount; ++k)
            CHECK(a.actual_records[i].get(static_cast<wx::Attr>(k)) ==
                  b.actual_records[i].get(static_cast<wx::Attr>(k)));
}

TEST_CASE("certainty margin with k = 0 is the identity") {
    Rng rng(31);
    const wx::DeviationStats stats = uniform_stats({"E"}, 1.5);
    for (int i = 0; i < 500; ++i) {
        wx::WeatherRecord r = record_for("E", 3600);
        r.temperature_c = rng.uniform(-30.0, 50.0);
        r.cloud_cover = rng.uniform(0.0, 1.0);
        r.wind_speed_ms = rng.uniform(0.0, 20.0);
        r.wind_bearing = rng.uniform(0.0, 360.0);
        r.humidity = rng.uniform(0.0, 1.0);
        r.dew_point_c = rng.uniform(-10.0, 30.0);
        r.visibility_km = rng.uniform(0.0, 15.0);
        const wx::WeatherRecord adj =
            wx::adjust_with_cm(r, stats, wx::CertaintyMargin::pessimistic(0.0));
        for (std::size_t k = 0; k < wx::kAttrCount; ++k)
            CHECK(adj.get(static_cast<wx::Attr>(k)) == r.get(static_cast<wx::Attr>(k)));
    }
}

TEST_CASE("certainty margin arithmetic on wind and visibility") {
    const wx::DeviationStats stats = uniform_stats({"E"}, 1.0);
    wx::WeatherRecord r = record_for("E", 3600);
    r.wind_speed_ms = 5.0;
    r.visibility_km = 6.0;
    const wx::WeatherRecord adj =
        wx::adjust_with_cm(r, stats, wx::CertaintyMargin::pessimistic(2.0));
    CHECK(adj.wind_speed_ms == doctest::Approx(7.0));
    CHECK(adj.visibility_km == doctest::Approx(4.0)); // now below the 5 km gate
    // dew point is hedged upward, humidity and cloud cover stay put
    CHECK(adj.dew_point_c == doctest::Approx(9.0));
    CHECK(adj.humidity == r.humidity);
    CHECK(adj.cloud_cover == r.cloud_cover);
}

TEST_CASE("temperature hedges toward the nearer operating limit") {
    const wx::DeviationStats stats = uniform_stats({"E"}, 1.0);
    wx::WeatherRecord warm = record_for("E", 3600);
    warm.temperature_c = 30.0; // closer to +45
    CHECK(wx::adjust_with_cm(warm, stats, wx::CertaintyMargin::pessimistic(2.0)).temperature_c ==
          doctest::Approx(32.0));
    wx::WeatherRecord cold = record_for("E", 3600);
    cold.temperature_c = -10.0; // closer to -20
    CHECK(wx::adjust_with_cm(cold, stats, wx::CertaintyMargin::pessimistic(2.0)).temperature_c ==
          doctest::Approx(-12.0));
}

TEST_CASE("certainty margin is monotone in k for positively hedged attributes") {
    const wx::DeviationStats stats = uniform_stats({"E"}, 0.8);
    wx::WeatherRecord r = record_for("E", 3600);
    double last = 0.0;
    bool first = true;
    for (double k : {0.0, 1.0, 2.0, 3.0, 5.0, 10.0, 20.0}) {
        const double v =
            wx::adjust_with_cm(r, stats, wx::CertaintyMargin::pessimistic(k)).wind_speed_ms;
        if (!first) CHECK(v >= last);
        last = v;
        first = false;
    }
}

TEST_CASE("adjustment clamps back into the attribute ranges") {
    const wx::DeviationStats stats = uniform_stats({"E"}, 5.0);
    wx::WeatherRecord r = record_for("E", 3600);
    r.visibility_km = 2.0;
    const wx::WeatherRecord adj =
        wx::adjust_with_cm(r, stats, wx::CertaintyMargin::pessimistic(3.0));
    CHECK(adj.visibility_km == 0.0); // 2 - 15 clamped at zero
}

TEST_CASE("adjustment requires stats for the record's station") {
    const wx::DeviationStats stats = uniform_stats({"E"}, 1.0);
    wx::WeatherRecord r = record_for("X", 3600);
    CHECK_THROWS_AS(wx::adjust_with_cm(r, stats, wx::CertaintyMargin::pessimistic(1.0)),
                    DataError);
}

TEST_CASE("pair averaging uses the circular mean for wind bearing") {
    wx::WeatherRecord a = record_for("A", 3600);
    wx::WeatherRecord b = record_for("B", 3600);
    a.wind_bearing = 350.0;
    b.wind_bearing = 10.0;
    CHECK(wx::average_records(a, b).wind_bearing == doctest::Approx(0.0).epsilon(1e-9));
    a.temperature_c = 10.0;
    b.temperature_c = 20.0;
    CHECK(wx::average_records(a, b).temperature_c == doctest::Approx(15.0));
}

TEST_CASE("weather csv round trips") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "skyroute_wx_test";
    fs::create_directories(dir);
    const net::SkywayNetwork n = net::generate_network(3, 3, kBox, 4);
    const wx::GeneratedWeather gw = wx::generate_weather(
        n, {{0, 12 * 3600}}, wx::ErrorModel::default_model(), 77, 4);

    const std::string actuals = (dir / "weather_actual.csv").string();
    const std::string forecasts = (dir / "weather_forecast.csv").string();
    wx::write_actuals_csv(gw.actual_records, actuals, "test");
    wx::write_forecasts_csv(gw.forecasts, forecasts, "test");

    const auto a = wx::load_actuals_csv(actuals);
    const auto f = wx::load_forecasts_csv(forecasts);
    REQUIRE(a.size() == gw.actual_records.size());
    REQUIRE(f.size() == gw.forecasts.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].station == gw.actual_records[i].station);
        CHECK(a[i].timestamp == gw.actual_records[i].timestamp);
        for (std::size_t k = 0; k < wx::kAttrCount; ++k)
            CHECK(a[i].get(static_cast<wx::Attr>(k)) ==
                  gw.actual_records[i].get(static_cast<wx::Attr>(k)));
    }
    CHECK(f[0].lead_hours == gw.forecasts[0].lead_hours);
    fs::remove_all(dir);
}

TEST_CASE("error model json round trips") {
    const wx::ErrorModel m = wx::ErrorModel::default_model();
    const wx::ErrorModel back = wx::ErrorModel::from_json(m.to_json());
    for (std::size_t i = 0; i < wx::kAttrCount; ++i) {
        CHECK(back.attrs[i].bias == m.attrs[i].bias);
        CHECK(back.attrs[i].sigma == m.attrs[i].sigma);
    }
}

TEST_CASE("weather store lookups are hour-floored and missing data throws") {
    wx::WeatherStore store;
    store.add(record_for("E", 7200));
    CHECK(store.get("E", 7200 + 1799).timestamp == 7200);
    CHECK(store.try_get("E", 10800) == nullptr);
    CHECK_THROWS_AS(store.get("E", 10800), DataError);
    CHECK_THROWS_AS(store.get("Q", 7200), DataError);
}
