#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "skyroute/composer.hpp"
#include "skyroute/predictor.hpp"

namespace skyroute::harness {

// Defaults describe the reference small dataset: a 38-station corridor with
// 30,476 scheduled services over the two nine-day windows.
struct ExperimentConfig {
    std::uint64_t seed = 22;
    unsigned jobs = 1;
    std::string out_dir = "out";

    // network: generated unless both files are given
    std::size_t stations = 38;
    std::size_t skyways = 64;
    net::BoundingBox bbox{-38.0175, -37.9825, 144.1, 145.9};
    std::string stations_file;
    std::string skyways_file;

    std::string fleet_file; // empty: built-in reference fleet

    std::vector<wx::TimeRange> time_ranges; // default: the two nine-day windows
    std::string error_model_file;           // empty: default biased model
    int forecast_leads = 24;

    std::size_t services = 30476;
    double walk_greediness = -2.0; // outside [-1, 1]: library default

    std::size_t pdrs = 500;
    std::string pdr_endpoints = "majors"; // or "all"
    double pdr_weight_min = 0.05;
    double pdr_weight_max = 2.3;

    double window_min = 60.0;
    double cm_k = 2.0;
    std::vector<double> cm_sweep{1, 2, 3, 4, 5, 10, 15, 20};

    static ExperimentConfig from_json(const std::string& text);
    std::string to_json() const;
    std::string hash() const; // embedded in artifact header lines
};

std::vector<wx::TimeRange> default_time_ranges();

// Random requests over the configured station pool: uniform endpoints,
// uniform pickup minute over the ranges, request time up to six hours
// before pickup, weight uniform in the configured band.
std::vector<composer::DeliveryRequest> generate_pdrs(const net::SkywayNetwork& net,
                                                     const ExperimentConfig& cfg);

// Everything the experiment driver needs, built in-memory from one config.
struct Pipeline {
    net::SkywayNetwork network;
    aero::Fleet fleet;
    wx::GeneratedWeather weather;
    wx::DeviationStats stats;
    std::vector<sched::Service> services;
    std::vector<sched::Movement> movements;
    composer::ServiceStore store;
    std::vector<composer::DeliveryRequest> pdrs;
};

Pipeline build_pipeline(const ExperimentConfig& cfg);

// Compose a whole batch, results in request order. Composition is pure
// against the read-only stores, so the batch fans out across `jobs` workers.
std::vector<composer::ComposeResult> compose_batch(
    const std::vector<composer::DeliveryRequest>& pdrs, const net::SkywayNetwork& net,
    const composer::ServiceStore& store, const planner::CostContext& ctx, double window_min,
    unsigned jobs);

struct CmSweepRow {
    std::string label; // "CM1".."CM20" or "dijkstra"
    double cm_k = 0.0;
    double distance_error_pct = 0.0;
    double duration_error_pct = 0.0;
    double length_error_pct = 0.0;
    std::size_t failures = 0; // PDRs that failed to compose under this row's planner
};

// Re-runs composition per CM value on the fixed PDR batch and reports the
// share of PDRs whose composite distance / duration / selection count
// deviates from the CM2 baseline, plus the weather-blind row. `max_pdrs`
// optionally truncates the batch (0 = all).
std::vector<CmSweepRow> cm_sweep(const Pipeline& p, const ExperimentConfig& cfg,
                                 std::size_t max_pdrs = 0);

std::string cm_sweep_to_csv(const std::vector<CmSweepRow>& rows, const std::string& config_hash);

struct DeviationReport {
    wx::DeviationStats per_station;
    // pooled across stations, per lead hour and attribute
    struct LeadRow {
        int lead_hours = 0;
        wx::Attr attr = wx::Attr::Temperature;
        double mean_error = 0.0;
        double std_error = 0.0;
        std::size_t n = 0;
    };
    std::vector<LeadRow> per_lead;
    std::size_t unpaired = 0;
};

DeviationReport deviation_report(const std::vector<wx::WeatherRecord>& actuals,
                                 const std::vector<wx::ForecastRecord>& forecasts);

std::string deviation_station_csv(const DeviationReport& r, const std::string& config_hash);
std::string deviation_lead_csv(const DeviationReport& r, const std::string& config_hash);

std::string comparison_to_csv(const composer::PlannerComparison& cmp,
                              const std::string& config_hash);

} // namespace skyroute::harness
