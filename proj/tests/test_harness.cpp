#include <doctest.h>

#include <filesystem>
#include <set>

#include "skyroute/harness.hpp"

using namespace skyroute;

namespace {

harness::ExperimentConfig tiny_config() {
    harness::ExperimentConfig cfg;
    cfg.seed = 404;
    cfg.stations = 16;
    cfg.skyways = 24;
    cfg.time_ranges = {{timestamp_from_civil(2017, 11, 1), timestamp_from_civil(2017, 11, 3)}};
    cfg.services = 400;
    cfg.pdrs = 40;
    cfg.window_min = 30.0;
    return cfg;
}

} // namespace

TEST_CASE("experiment config round trips through json and hashes stably") {
    harness::ExperimentConfig cfg = tiny_config();
    const harness::ExperimentConfig back = harness::ExperimentConfig::from_json(cfg.to_json());
    CHECK(back.to_json() == cfg.to_json());
    CHECK(back.hash() == cfg.hash());
    CHECK(cfg.hash().size() == 16);

    harness::ExperimentConfig other = cfg;
    other.seed = 405;
    CHECK(other.hash() != cfg.hash());
}

TEST_CASE("generated requests are deterministic and inside their bounds") {
    const net::SkywayNetwork n =
        net::generate_network(20, 30, {-38.4, -37.6, 144.4, 145.6}, 12);
    harness::ExperimentConfig cfg = tiny_config();
    cfg.pdrs = 100;

    const auto a = harness::generate_pdrs(n, cfg);
    const auto b = harness::generate_pdrs(n, cfg);
    REQUIRE(a.size() == 100);

    const auto majors = n.major_station_ids();
    const std::set<std::string> major_set(majors.begin(), majors.end());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].pickup_station != a[i].dropoff_station);
        CHECK(major_set.count(a[i].pickup_station) == 1);
        CHECK(major_set.count(a[i].dropoff_station) == 1);
        CHECK(a[i].weight_kg >= cfg.pdr_weight_min);
        CHECK(a[i].weight_kg <= cfg.pdr_weight_max);
        CHECK(a[i].request_time <= a[i].pickup_time);
        CHECK(a[i].pickup_time >= cfg.time_ranges[0].start);
        CHECK(a[i].pickup_time < cfg.time_ranges[0].end);
        CHECK(a[i].pickup_station == b[i].pickup_station);
        CHECK(a[i].pickup_time == b[i].pickup_time);
    }
    // sorted by request time, ties by id
    for (std::size_t i = 1; i < a.size(); ++i) {
        CHECK(a[i - 1].request_time <= a[i].request_time);
        if (a[i - 1].request_time == a[i].request_time) CHECK(a[i - 1].id < a[i].id);
    }

    harness::ExperimentConfig all = cfg;
    all.pdr_endpoints = "all";
    CHECK(harness::generate_pdrs(n, all).size() == 100);
    all.pdr_endpoints = "nearby";
    CHECK_THROWS_AS(harness::generate_pdrs(n, all), DataError);
}

TEST_CASE("pdr csv round trips") {
    namespace fs = std::filesystem;
    const net::SkywayNetwork n =
        net::generate_network(12, 18, {-38.4, -37.6, 144.4, 145.6}, 12);
    harness::ExperimentConfig cfg = tiny_config();
    cfg.pdrs = 25;
    const auto pdrs = harness::generate_pdrs(n, cfg);

    const fs::path dir = fs::temp_directory_path() / "skyroute_harness_test";
    fs::create_directories(dir);
    const std::string path = (dir / "pdrs.csv").string();
    composer::write_pdrs_csv(pdrs, path, "test");
    const auto back = composer::load_pdrs_csv(path);
    REQUIRE(back.size() == pdrs.size());
    for (std::size_t i = 0; i < pdrs.size(); ++i) {
        CHECK(back[i].id == pdrs[i].id);
        CHECK(back[i].pickup_time == pdrs[i].pickup_time);
        CHECK(back[i].weight_kg == doctest::Approx(pdrs[i].weight_kg).epsilon(1e-12));
    }
    fs::remove_all(dir);
}

TEST_CASE("deviation report on a zero-error corpus is all zeros") {
    const net::SkywayNetwork n = net::generate_network(4, 4, {-38.4, -37.6, 144.4, 145.6}, 2);
    const wx::GeneratedWeather gw =
        wx::generate_weather(n, {{0, 48 * 3600}}, wx::ErrorModel::zero(), 6, 12);
    const harness::DeviationReport report =
        harness::deviation_report(gw.actual_records, gw.forecasts);
    CHECK(report.unpaired == 0);
    for (const auto& row : report.per_lead) {
        CHECK(row.mean_error == 0.0);
        CHECK(row.std_error == 0.0);
    }
}

TEST_CASE("deviation report recovers the configured bias signs and counts unpaired rows") {
    const net::SkywayNetwork n = net::generate_network(4, 4, {-38.4, -37.6, 144.4, 145.6}, 2);
    const wx::GeneratedWeather gw =
        wx::generate_weather(n, {{0, 5 * 24 * 3600}}, wx::ErrorModel::default_model(), 6, 24);

    std::vector<wx::ForecastRecord> forecasts = gw.forecasts;
    wx::ForecastRecord orphan = forecasts.front();
    orphan.record.timestamp += 365 * kSecondsPerDay; // no matching actual
    forecasts.push_back(orphan);

    const harness::DeviationReport report =
        harness::deviation_report(gw.actual_records, forecasts);
    CHECK(report.unpaired == 1);
    for (const net::Station& st : n.stations())
        CHECK(report.per_station.get(st.id, wx::Attr::Visibility).mean_error > 0.0);

    const std::string lead_csv = harness::deviation_lead_csv(report, "deadbeef");
    CHECK(lead_csv.find("# config=deadbeef") == 0);
    CHECK(lead_csv.find("lead_hours,attribute,mean_error,std_error,n") != std::string::npos);
    const std::string station_csv = harness::deviation_station_csv(report, "deadbeef");
    CHECK(station_csv.find("visibility_km") != std::string::npos);
}

TEST_CASE("cm sweep: the CM2 row is exactly zero against itself") {
    harness::ExperimentConfig cfg = tiny_config();
    cfg.cm_sweep = {2.0};
    const harness::Pipeline p = harness::build_pipeline(cfg);
    const auto rows = harness::cm_sweep(p, cfg);
    REQUIRE(rows.size() == 2); // CM2 and the weather-blind row
    CHECK(rows[0].label == "CM2");
    CHECK(rows[0].distance_error_pct == 0.0);
    CHECK(rows[0].duration_error_pct == 0.0);
    CHECK(rows[0].length_error_pct == 0.0);
    CHECK(rows[1].label == "dijkstra");

    const std::string csv = harness::cm_sweep_to_csv(rows, cfg.hash());
    CHECK(csv.find("label,cm_k,distance_error_pct") != std::string::npos);
    CHECK(csv.find("CM2,2,0,0,0,") != std::string::npos);
}

TEST_CASE("pipeline assembly is reproducible end to end") {
    harness::ExperimentConfig cfg = tiny_config();
    const harness::Pipeline a = harness::build_pipeline(cfg);
    const harness::Pipeline b = harness::build_pipeline(cfg);
    CHECK(a.network.to_json() == b.network.to_json());
    REQUIRE(a.services.size() == b.services.size());
    for (std::size_t i = 0; i < a.services.size(); ++i) {
        CHECK(a.services[i].path == b.services[i].path);
        CHECK(a.services[i].start_time == b.services[i].start_time);
    }
    REQUIRE(a.movements.size() == b.movements.size());
    CHECK(a.movements[5].arrival_time == b.movements[5].arrival_time);
}

TEST_CASE("comparison csv carries one row per measure") {
    composer::PlannerComparison cmp;
    cmp.counts = {10, 5, 1};
    cmp.distances = {9, 4, 3};
    cmp.durations = {8, 6, 2};
    const std::string csv = harness::comparison_to_csv(cmp, "cafe");
    CHECK(csv.find("service_counts,10,5,1") != std::string::npos);
    CHECK(csv.find("distances,9,4,3") != std::string::npos);
    CHECK(csv.find("flying_durations,8,6,2") != std::string::npos);
}
