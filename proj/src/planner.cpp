#include "skyroute/planner.hpp"

#include <algorithm>
#include <limits>
#include <queue>

#include <nlohmann/json.hpp>

namespace skyroute::planner {

std::string Route::to_json() const {
    nlohmann::ordered_json j;
    j["stations"] = stations;
    j["skyways"] = skyways;
    j["distance_km"] = total_distance_km;
    j["duration_min"] = total_duration_min;
    j["segments"] = nlohmann::ordered_json::array();
    for (const SegmentLeg& s : per_segment) {
        j["segments"].push_back({{"skyway", s.skyway_id},
                                 {"from", s.from},
                                 {"to", s.to},
                                 {"distance_km", s.distance_km},
                                 {"duration_min", s.duration_min},
                                 {"ground_speed_kmh", s.ground_speed_kmh},
                                 {"weather_checked", s.weather_checked}});
    }
    return j.dump();
}

CostContext CostContext::for_fleet(const wx::WeatherStore& weather, const wx::DeviationStats& stats,
                                   const wx::CertaintyMargin& cm, const aero::Fleet& fleet) {
    CostContext ctx;
    ctx.weather = &weather;
    ctx.stats = &stats;
    ctx.cm = cm;
    ctx.gate_drone = aero::fleet_envelope(fleet);
    ctx.speed_kmh = aero::fleet_mean_speed_kmh(fleet);
    return ctx;
}

EdgeEval edge_cost(const net::Skyway& skyway, const std::string& from_station,
                   Timestamp pickup_time, const CostContext& ctx) {
    if (!ctx.weather || !ctx.stats) throw DataError("edge_cost: cost context not initialized");
    if (from_station != skyway.source && from_station != skyway.destination)
        throw DataError("edge_cost: station " + from_station + " is not an endpoint of skyway " +
                        std::to_string(skyway.id));

    const wx::WeatherRecord& wa = ctx.weather->get(skyway.source, pickup_time);
    const wx::WeatherRecord& wb = ctx.weather->get(skyway.destination, pickup_time);
    wx::WeatherRecord pair = wx::average_records(wa, wb);
    // Stats are keyed per station; the pair lookup borrows the from-side key.
    pair.station = from_station;
    const wx::WeatherRecord adjusted = wx::adjust_with_cm(pair, *ctx.stats, ctx.cm);

    EdgeEval eval;
    const aero::Flyability fly = aero::is_flyable(adjusted, ctx.gate_drone);
    if (!fly) {
        eval.flyable = false;
        eval.reason = fly.reason;
        return eval;
    }

    const geo::Bearing track =
        from_station == skyway.source ? skyway.bearing : skyway.bearing.reversed();
    const aero::WindDecomposition wind = aero::decompose_wind(
        aero::ms_to_kmh(adjusted.wind_speed_ms), geo::Bearing::from_degrees(adjusted.wind_bearing),
        track);
    const auto ground =
        aero::drone_airspeed(ctx.speed_kmh, wind, ctx.mode, ctx.min_ground_speed_kmh);
    if (!ground) {
        eval.flyable = false;
        eval.reason = aero::FlyReason::Wind;
        return eval;
    }

    eval.flyable = true;
    eval.ground_speed_kmh = *ground;
    eval.duration_min = aero::flight_duration_min(skyway.distance_km, *ground);
    return eval;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct NodeState {
    double g = kInf;
    std::size_t hops = 0;
    std::size_t parent = SIZE_MAX;      // predecessor station index
    std::size_t parent_edge = SIZE_MAX; // skyway index used to reach this node
    double leg_duration = 0.0;
    double leg_speed = 0.0;
};

std::vector<std::size_t> reconstruct_indices(const std::vector<NodeState>& state, std::size_t v) {
    std::vector<std::size_t> path;
    for (std::size_t u = v; u != SIZE_MAX; u = state[u].parent) path.push_back(u);
    std::reverse(path.begin(), path.end());
    return path;
}

// Station-id sequence comparison for exact cost ties.
bool path_less(const net::SkywayNetwork& net, const std::vector<NodeState>& state,
               std::size_t via_u, std::size_t v) {
    std::vector<std::size_t> candidate = reconstruct_indices(state, via_u);
    candidate.push_back(v);
    std::vector<std::size_t> incumbent = reconstruct_indices(state, v);
    const std::size_t n = std::min(candidate.size(), incumbent.size());
    for (std::size_t i = 0; i < n; ++i) {
        const std::string& a = net.stations()[candidate[i]].id;
        const std::string& b = net.stations()[incumbent[i]].id;
        if (a != b) return a < b;
    }
    return candidate.size() < incumbent.size();
}

Route build_route(const net::SkywayNetwork& net, const std::vector<NodeState>& state,
                  std::size_t dst, bool weather_checked) {
    Route route;
    const std::vector<std::size_t> path = reconstruct_indices(state, dst);
    for (std::size_t idx : path) route.stations.push_back(net.stations()[idx].id);
    for (std::size_t i = 1; i < path.size(); ++i) {
        const NodeState& ns = state[path[i]];
        const net::Skyway& sw = net.skyways()[ns.parent_edge];
        SegmentLeg leg;
        leg.skyway_id = sw.id;
        leg.from = net.stations()[path[i - 1]].id;
        leg.to = net.stations()[path[i]].id;
        leg.distance_km = sw.distance_km;
        leg.duration_min = ns.leg_duration;
        leg.ground_speed_kmh = ns.leg_speed;
        leg.weather_checked = weather_checked;
        route.skyways.push_back(sw.id);
        route.total_distance_km += leg.distance_km;
        route.total_duration_min += leg.duration_min;
        route.per_segment.push_back(std::move(leg));
    }
    return route;
}

struct QueueEntry {
    double f;
    double g;
    std::size_t node;
    bool operator>(const QueueEntry& o) const {
        if (f != o.f) return f > o.f;
        return g > o.g;
    }
};

} // namespace

std::optional<Route> plan_astar(const net::SkywayNetwork& net, const std::string& src,
                                const std::string& dst, Timestamp pickup_time,
                                const CostContext& ctx, SearchTrace* trace) {
    const std::size_t s = net.station_index(src);
    const std::size_t d = net.station_index(dst);
    if (s == d) {
        Route r;
        r.stations.push_back(src);
        return r;
    }

    // Ground speed on any flyable edge is bounded by planning speed plus the
    // gate's wind ceiling, so great-circle time at that ceiling never
    // overestimates the remaining cost.
    const double h_speed = ctx.speed_kmh + ctx.gate_drone.max_wind_kmh;
    const geo::GeoPoint goal = net.stations()[d].location;
    auto heuristic = [&](std::size_t node) {
        return geo::haversine_km(net.stations()[node].location, goal) / h_speed * 60.0;
    };

    std::vector<NodeState> state(net.stations().size());
    state[s].g = 0.0;

    std::priority_queue<QueueEntry, std::vector<QueueEntry>, std::greater<QueueEntry>> open;
    open.push({heuristic(s), 0.0, s});

    while (!open.empty()) {
        const QueueEntry top = open.top();
        open.pop();
        const std::size_t u = top.node;
        if (top.g > state[u].g) continue; // stale entry
        if (trace) trace->expansions.push_back({net.stations()[u].id, state[u].g, heuristic(u)});
        if (u == d) break;

        const Timestamp when =
            ctx.propagate_time ? add_minutes(pickup_time, state[u].g) : pickup_time;
        for (std::size_t ei : net.incident(u)) {
            const net::Skyway& sw = net.skyways()[ei];
            const std::size_t v = net.station_index(sw.source) == u
                                      ? net.station_index(sw.destination)
                                      : net.station_index(sw.source);
            const EdgeEval eval = edge_cost(sw, net.stations()[u].id, when, ctx);
            if (!eval.flyable) continue;

            const double g_new = state[u].g + eval.duration_min;
            const std::size_t hops_new = state[u].hops + 1;
            bool improve = g_new < state[v].g;
            if (!improve && g_new == state[v].g) {
                if (hops_new < state[v].hops) improve = true;
                else if (hops_new == state[v].hops && path_less(net, state, u, v)) improve = true;
            }
            if (!improve) continue;

            state[v].g = g_new;
            state[v].hops = hops_new;
            state[v].parent = u;
            state[v].parent_edge = ei;
            state[v].leg_duration = eval.duration_min;
            state[v].leg_speed = eval.ground_speed_kmh;
            open.push({g_new + heuristic(v), g_new, v});
        }
    }

    if (state[d].g == kInf) return std::nullopt;
    return build_route(net, state, d, /*weather_checked=*/true);
}

std::optional<Route> plan_dijkstra_baseline(const net::SkywayNetwork& net, const std::string& src,
                                            const std::string& dst, double speed_kmh) {
    if (!(speed_kmh > 0.0)) throw DataError("plan_dijkstra_baseline: speed must be positive");
    const std::size_t s = net.station_index(src);
    const std::size_t d = net.station_index(dst);
    if (s == d) {
        Route r;
        r.stations.push_back(src);
        return r;
    }

    std::vector<NodeState> state(net.stations().size());
    state[s].g = 0.0;
    std::priority_queue<QueueEntry, std::vector<QueueEntry>, std::greater<QueueEntry>> open;
    open.push({0.0, 0.0, s});

    while (!open.empty()) {
        const QueueEntry top = open.top();
        open.pop();
        const std::size_t u = top.node;
        if (top.g > state[u].g) continue;
        if (u == d) break;

        for (std::size_t ei : net.incident(u)) {
            const net::Skyway& sw = net.skyways()[ei];
            const std::size_t v = net.station_index(sw.source) == u
                                      ? net.station_index(sw.destination)
                                      : net.station_index(sw.source);
            const double g_new = state[u].g + sw.distance_km;
            const std::size_t hops_new = state[u].hops + 1;
            bool improve = g_new < state[v].g;
            if (!improve && g_new == state[v].g) {
                if (hops_new < state[v].hops) improve = true;
                else if (hops_new == state[v].hops && path_less(net, state, u, v)) improve = true;
            }
            if (!improve) continue;

            state[v].g = g_new;
            state[v].hops = hops_new;
            state[v].parent = u;
            state[v].parent_edge = ei;
            state[v].leg_duration = aero::flight_duration_min(sw.distance_km, speed_kmh);
            state[v].leg_speed = speed_kmh;
            open.push({g_new, g_new, v});
        }
    }

    if (state[d].g == kInf) return std::nullopt;
    Route route = build_route(net, state, d, /*weather_checked=*/false);
    return route;
}

} // namespace skyroute::planner
