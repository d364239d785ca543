#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "skyroute/planner.hpp"
#include "skyroute/scheduler.hpp"

namespace skyroute::composer {

// Package delivery request.
struct DeliveryRequest {
    std::int64_t id = 0;
    std::string pickup_station;
    Timestamp pickup_time = 0;
    std::string dropoff_station;
    double weight_kg = 0.0;
    Timestamp request_time = 0;

    void validate() const;
};

struct TemporalDomain {
    Timestamp start = 0;
    Timestamp end = 0; // start + window

    bool contains(Timestamp t) const { return t >= start && t <= end; }
};

// One scheduled traversal of a directed segment by a service.
struct Candidate {
    std::int64_t service_id = 0;
    int segment_index = 0; // 1-based within the service path
    Timestamp departure = 0;
    Timestamp arrival = 0;
    double flying_duration_min = 0.0;
    double payload_kg = 0.0;
    double maintenance_min = 0.0; // the drone's swap duration
};

// Movements indexed by directed segment and sorted by departure, plus
// per-service timelines for continuation lookups.
class ServiceStore {
public:
    ServiceStore() = default;
    ServiceStore(const std::vector<sched::Service>& services,
                 const std::vector<sched::Movement>& movements, const aero::Fleet& fleet);

    // All candidates ever flying from->to, ascending by departure.
    const std::vector<Candidate>& on_segment(const std::string& from, const std::string& to) const;

    // Candidates departing within the domain (no weight filter).
    std::vector<Candidate> in_domain(const std::string& from, const std::string& to,
                                     const TemporalDomain& domain) const;

    // The same service's next movement, if it continues from->to right after
    // `segment_index`.
    std::optional<Candidate> continuation(std::int64_t service_id, int segment_index,
                                          const std::string& from, const std::string& to) const;

    std::size_t service_count() const { return services_.size(); }

private:
    std::unordered_map<std::string, std::vector<Candidate>> by_segment_;
    std::unordered_map<std::int64_t, std::vector<Candidate>> by_service_;
    std::unordered_map<std::int64_t, sched::Service> services_;
};

// Spatial, temporal and weight filters applied in sequence; the result is
// ascending by departure.
std::vector<Candidate> candidate_services(const ServiceStore& store, const std::string& from,
                                          const std::string& to, const TemporalDomain& domain,
                                          double weight_kg);

struct Selection {
    int segment = 0; // 1-based within the route
    std::string from;
    std::string to;
    std::int64_t service_id = 0;
    Timestamp departure = 0;
    Timestamp arrival = 0;
    bool repeat = false;          // same service continuing from the previous segment
    double flying_duration_min = 0.0;
    double maintenance_charged_min = 0.0; // handling time added to the clock before departure
};

struct CompositePlan {
    std::int64_t pdr_id = 0;
    planner::Route route;
    std::vector<Selection> selections;
    double total_distance_km = 0.0;
    double total_duration_min = 0.0; // flying plus maintenance, waiting excluded
    std::size_t service_count = 0;   // selections including consecutive repeats

    std::string to_json() const;
};

enum class ComposeStatus {
    Ok = 0,
    NoRoute,     // planner found no flyable path
    NoCandidate, // a segment had no admissible service
};

const char* to_string(ComposeStatus s);

struct ComposeResult {
    ComposeStatus status = ComposeStatus::Ok;
    CompositePlan plan;        // valid when status == Ok
    int failed_segment = 0;    // 1-based, for NoCandidate
    std::string failed_from;
    std::string failed_to;

    bool ok() const { return status == ComposeStatus::Ok; }
    std::string to_json() const; // plan JSON or a labeled failure object
};

// Everything the selection step knew at decision time; consumed by the
// predictive composer's feature extraction.
struct SelectionContext {
    const DeliveryRequest* pdr = nullptr;
    const planner::Route* route = nullptr;
    int segment = 0; // 1-based
    std::string from;
    std::string to;
    Timestamp clock = 0; // search clock (handling time already added)
    std::size_t spatial_count = 0;
    std::size_t temporal_count = 0;
    std::size_t weight_count = 0;
    std::vector<Candidate> admissible; // weight-passing, ascending by departure
    std::size_t chosen = 0;            // index into admissible
    bool repeat = false;
};

using SelectionSink = std::function<void(const SelectionContext&)>;

// Plan the route at the pickup time, then walk its segments with a rolling
// clock, picking the time-nearest admissible service per segment. A service
// whose path continues onto the next segment is reused (a repeat) without a
// new search. Hand-offs charge the leaving drone's maintenance time before
// the next search window opens.
ComposeResult compose(const DeliveryRequest& pdr, const net::SkywayNetwork& net,
                      const ServiceStore& store, const planner::CostContext& ctx,
                      double window_min, const SelectionSink& sink = {});

// Same selection machinery over a precomputed route (used for the
// weather-blind baseline and by the latency benchmark).
ComposeResult compose_over_route(const DeliveryRequest& pdr, const planner::Route& route,
                                 const ServiceStore& store, double window_min,
                                 const SelectionSink& sink = {});

// Stable ascending order by request time, ties by id.
void sort_pdrs(std::vector<DeliveryRequest>& requests);

struct PlannerComparisonRow {
    std::int64_t pdr_id = 0;
    ComposeResult astar;
    ComposeResult dijkstra;
};

struct Tally {
    std::size_t equal = 0;
    std::size_t astar_more = 0;
    std::size_t dijkstra_more = 0;
};

struct PlannerComparison {
    std::vector<PlannerComparisonRow> rows;
    Tally counts;    // selection counts
    Tally distances;
    Tally durations;
    std::size_t failures = 0; // rows where either side failed (excluded from tallies)
};

PlannerComparison compare_planners(const std::vector<DeliveryRequest>& pdrs,
                                   const net::SkywayNetwork& net, const ServiceStore& store,
                                   const planner::CostContext& ctx, double window_min);

void write_pdrs_csv(const std::vector<DeliveryRequest>& pdrs, const std::string& path,
                    const std::string& header_comment = {});
std::vector<DeliveryRequest> load_pdrs_csv(const std::string& path);

} // namespace skyroute::composer
