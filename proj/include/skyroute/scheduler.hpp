#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "skyroute/aero.hpp"
#include "skyroute/network.hpp"
#include "skyroute/planner.hpp"
#include "skyroute/timeutil.hpp"
#include "skyroute/weather.hpp"

namespace skyroute::sched {

// A scheduled delivery itinerary: a drone flying a fixed simple path between
// two major stations. Scheduled durations ignore weather; the simulation
// below produces the weather-adjusted timeline.
struct Service {
    std::int64_t id = 0;
    std::string drone;
    std::string source;
    std::string destination;
    std::vector<std::string> path; // stations, source first
    double total_distance_km = 0.0;
    double flying_duration_min = 0.0;
    double maintenance_min = 0.0;
    Timestamp start_time = 0;
    int skyway_count = 0;
};

struct Movement {
    std::int64_t service_id = 0;
    int segment_index = 0; // 1-based
    std::string source;
    std::string destination;
    double flying_duration_min = 0.0;
    Timestamp arrival_time = 0;
    int total_skyways = 0;
};

enum class StartTimeDistribution { Uniform, Gaussian };

struct ServiceGenOptions {
    // Per-step probability that the sampling walk hops toward the
    // destination (positive) or away from it (negative) instead of drifting
    // uniformly. Loop-erased either way; 0 is the pure random walk, values
    // near 1 give near-shortest paths.
    double walk_greediness = 0.0;
    // A non-backtracking walk (never immediately reversing the last hop
    // unless stuck) wanders farther before its loops are erased, giving the
    // longer multi-leg itineraries the reference datasets show.
    bool non_backtracking = true;
    std::size_t max_walk_steps_factor = 200; // cap = factor * n_stations per attempt
    std::size_t max_attempts_per_service = 200;
    // Start minutes are uniform over the ranges by default; the gaussian
    // variant clusters them mid-range (sigma = a quarter of the span).
    StartTimeDistribution start_times = StartTimeDistribution::Uniform;
};

// Deterministic per seed. Each service draws a random ordered major pair, a
// loop-erased random walk between them, a fleet drone (re-drawn when a
// segment exceeds the drone's battery budget) and a start minute uniform
// over the configured ranges.
std::vector<Service> generate_services(const net::SkywayNetwork& net, const aero::Fleet& fleet,
                                       std::size_t n_services,
                                       const std::vector<wx::TimeRange>& ranges,
                                       std::uint64_t seed, const ServiceGenOptions& opts = {});

struct MaintenancePlan {
    std::vector<std::size_t> stop_stations; // positions in the path hosting a battery swap
    double total_min = 0.0;
};

// Greedy battery budgeting: a swap is inserted at the first station where
// the accumulated flying time plus the next segment would exceed the
// drone's flight time. Throws DataError when a single segment alone does.
MaintenancePlan maintenance_schedule(const std::vector<double>& segment_durations_min,
                                     const aero::DroneType& drone);

// Scheduled still-air durations per path segment for the given drone.
std::vector<double> scheduled_segment_durations(const net::SkywayNetwork& net,
                                                const std::vector<std::string>& path,
                                                const aero::DroneType& drone);

// Walk every service through CM-adjusted weather, emitting one Movement per
// segment with cumulative arrival timestamps (maintenance stops included).
// Scheduled services fly regardless of gate conditions; the weather shows up
// in the per-segment durations.
std::vector<Movement> simulate_movements(const std::vector<Service>& services,
                                         const net::SkywayNetwork& net, const aero::Fleet& fleet,
                                         const wx::WeatherStore& weather,
                                         const wx::DeviationStats& stats,
                                         const wx::CertaintyMargin& cm,
                                         aero::AirspeedMode mode = aero::AirspeedMode::AlongTrackOnly,
                                         unsigned jobs = 1);

const aero::DroneType& fleet_drone(const aero::Fleet& fleet, const std::string& name);

void write_services_csv(const std::vector<Service>& services, const std::string& path,
                        const std::string& header_comment = {});
std::vector<Service> load_services_csv(const std::string& path);

void write_movements_csv(const std::vector<Movement>& movements, const std::string& path,
                         const std::string& header_comment = {});
std::vector<Movement> load_movements_csv(const std::string& path);

} // namespace skyroute::sched
