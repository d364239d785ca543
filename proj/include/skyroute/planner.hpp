#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "skyroute/aero.hpp"
#include "skyroute/network.hpp"
#include "skyroute/timeutil.hpp"
#include "skyroute/weather.hpp"

namespace skyroute::planner {

struct SegmentLeg {
    std::int64_t skyway_id = 0;
    std::string from;
    std::string to;
    double distance_km = 0.0;
    double duration_min = 0.0;
    double ground_speed_kmh = 0.0;
    bool weather_checked = true; // false on the distance-only baseline
};

struct Route {
    std::vector<std::string> stations; // size = segments + 1 (just {src} when src == dst)
    std::vector<std::int64_t> skyways;
    double total_distance_km = 0.0;
    double total_duration_min = 0.0;
    std::vector<SegmentLeg> per_segment;

    std::size_t segment_count() const { return skyways.size(); }
    std::string to_json() const;
};

struct CostContext {
    const wx::WeatherStore* weather = nullptr;
    const wx::DeviationStats* stats = nullptr;
    wx::CertaintyMargin cm = wx::CertaintyMargin::pessimistic(2.0);
    aero::DroneType gate_drone;                            // capability envelope for the gate
    double speed_kmh = 77.4;                               // still-air planning speed (fleet mean)
    aero::AirspeedMode mode = aero::AirspeedMode::AlongTrackOnly;
    double min_ground_speed_kmh = 1.0;
    // Sample edge weather at the estimated per-edge departure time instead
    // of one pickup-hour snapshot. Off by default: snapshot planning is the
    // reference semantics.
    bool propagate_time = false;

    static CostContext for_fleet(const wx::WeatherStore& weather, const wx::DeviationStats& stats,
                                 const wx::CertaintyMargin& cm, const aero::Fleet& fleet);
};

struct EdgeEval {
    bool flyable = false;
    aero::FlyReason reason = aero::FlyReason::None;
    double duration_min = 0.0;
    double ground_speed_kmh = 0.0;
};

// Evaluate one skyway traversal leaving `from_station` at `pickup_time`:
// endpoint weather averaged, CM applied, gate checked, then duration over
// the wind-adjusted ground speed. Throws DataError when weather is missing.
EdgeEval edge_cost(const net::Skyway& skyway, const std::string& from_station,
                   Timestamp pickup_time, const CostContext& ctx);

struct SearchTrace {
    struct Expansion {
        std::string node;
        double g = 0.0;
        double h = 0.0;
    };
    std::vector<Expansion> expansions;
};

// Minimum total duration over CM-adjusted edge costs. Blocked edges are
// never expanded. Ties break on fewer segments, then the lexicographically
// smallest station sequence, so plans are reproducible everywhere.
// Returns nullopt when no flyable path exists.
std::optional<Route> plan_astar(const net::SkywayNetwork& net, const std::string& src,
                                const std::string& dst, Timestamp pickup_time,
                                const CostContext& ctx, SearchTrace* trace = nullptr);

// Weather-blind baseline: minimizes raw distance, reports durations post hoc
// at the given still-air speed.
std::optional<Route> plan_dijkstra_baseline(const net::SkywayNetwork& net, const std::string& src,
                                            const std::string& dst, double speed_kmh);

} // namespace skyroute::planner
