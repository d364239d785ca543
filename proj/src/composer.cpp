#include "skyroute/composer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "skyroute/csv.hpp"

namespace skyroute::composer {

namespace {

std::string segment_key(const std::string& from, const std::string& to) {
    return from + ">" + to;
}

const std::vector<Candidate> kNoCandidates;

} // namespace

void DeliveryRequest::validate() const {
    if (pickup_station.empty() || dropoff_station.empty())
        throw DataError("request " + std::to_string(id) + ": empty station id");
    if (pickup_station == dropoff_station)
        throw DataError("request " + std::to_string(id) + ": pickup equals dropoff");
    if (!(weight_kg > 0.0))
        throw DataError("request " + std::to_string(id) + ": weight must be positive");
    if (request_time > pickup_time)
        throw DataError("request " + std::to_string(id) + ": request time after pickup time");
}

ServiceStore::ServiceStore(const std::vector<sched::Service>& services,
                           const std::vector<sched::Movement>& movements,
                           const aero::Fleet& fleet) {
    for (const sched::Service& s : services) {
        if (!services_.emplace(s.id, s).second)
            throw DataError("duplicate service id: " + std::to_string(s.id));
    }

    for (const sched::Movement& m : movements) {
        auto svc = services_.find(m.service_id);
        if (svc == services_.end())
            throw DataError("movement references unknown service " + std::to_string(m.service_id));
        const aero::DroneType& drone = sched::fleet_drone(fleet, svc->second.drone);

        Candidate c;
        c.service_id = m.service_id;
        c.segment_index = m.segment_index;
        c.arrival = m.arrival_time;
        c.departure = m.arrival_time - static_cast<Timestamp>(std::llround(
                                           m.flying_duration_min * 60.0));
        c.flying_duration_min = m.flying_duration_min;
        c.payload_kg = drone.payload_kg;
        c.maintenance_min = drone.maintenance_min;
        by_segment_[segment_key(m.source, m.destination)].push_back(c);
        by_service_[m.service_id].push_back(c);
    }

    for (auto& [key, v] : by_segment_) {
        (void)key;
        std::sort(v.begin(), v.end(), [](const Candidate& a, const Candidate& b) {
            if (a.departure != b.departure) return a.departure < b.departure;
            if (a.service_id != b.service_id) return a.service_id < b.service_id;
            return a.segment_index < b.segment_index;
        });
    }
    for (auto& [id, v] : by_service_) {
        (void)id;
        std::sort(v.begin(), v.end(), [](const Candidate& a, const Candidate& b) {
            return a.segment_index < b.segment_index;
        });
    }
}

const std::vector<Candidate>& ServiceStore::on_segment(const std::string& from,
                                                       const std::string& to) const {
    auto it = by_segment_.find(segment_key(from, to));
    return it == by_segment_.end() ? kNoCandidates : it->second;
}

std::vector<Candidate> ServiceStore::in_domain(const std::string& from, const std::string& to,
                                               const TemporalDomain& domain) const {
    const std::vector<Candidate>& all = on_segment(from, to);
    auto lo = std::lower_bound(all.begin(), all.end(), domain.start,
                               [](const Candidate& c, Timestamp t) { return c.departure < t; });
    std::vector<Candidate> out;
    for (auto it = lo; it != all.end() && it->departure <= domain.end; ++it) out.push_back(*it);
    return out;
}

std::optional<Candidate> ServiceStore::continuation(std::int64_t service_id, int segment_index,
                                                    const std::string& from,
                                                    const std::string& to) const {
    auto it = by_service_.find(service_id);
    if (it == by_service_.end()) return std::nullopt;
    const std::vector<Candidate>& moves = it->second;
    const int next_index = segment_index + 1;
    if (next_index < 1 || static_cast<std::size_t>(next_index) > moves.size()) return std::nullopt;
    const Candidate& next = moves[static_cast<std::size_t>(next_index) - 1];

    const sched::Service& svc = services_.at(service_id);
    // path[k-1] -> path[k] is the service's segment k
    if (svc.path[static_cast<std::size_t>(next_index) - 1] != from ||
        svc.path[static_cast<std::size_t>(next_index)] != to)
        return std::nullopt;
    return next;
}

std::vector<Candidate> candidate_services(const ServiceStore& store, const std::string& from,
                                          const std::string& to, const TemporalDomain& domain,
                                          double weight_kg) {
    std::vector<Candidate> pool = store.in_domain(from, to, domain);
    std::vector<Candidate> out;
    out.reserve(pool.size());
    for (const Candidate& c : pool)
        if (c.payload_kg >= weight_kg) out.push_back(c);
    return out;
}

const char* to_string(ComposeStatus s) {
    switch (s) {
        case ComposeStatus::Ok: return "ok";
        case ComposeStatus::NoRoute: return "no_route";
        case ComposeStatus::NoCandidate: return "no_candidate";
    }
    return "unknown";
}

std::string CompositePlan::to_json() const {
    nlohmann::ordered_json j;
    j["pdr"] = pdr_id;
    j["status"] = "ok";
    j["stations"] = route.stations;
    j["skyways"] = route.skyways;
    j["distance_km"] = total_distance_km;
    j["duration_min"] = total_duration_min;
    j["service_count"] = service_count;
    j["selections"] = nlohmann::ordered_json::array();
    for (const Selection& s : selections) {
        j["selections"].push_back({{"segment", s.segment},
                                   {"from", s.from},
                                   {"to", s.to},
                                   {"service", s.service_id},
                                   {"departure", format_iso8601(s.departure)},
                                   {"arrival", format_iso8601(s.arrival)},
                                   {"repeat", s.repeat}});
    }
    return j.dump();
}

std::string ComposeResult::to_json() const {
    if (ok()) return plan.to_json();
    nlohmann::ordered_json j;
    j["pdr"] = plan.pdr_id;
    j["status"] = to_string(status);
    if (status == ComposeStatus::NoCandidate) {
        j["segment"] = failed_segment;
        j["from"] = failed_from;
        j["to"] = failed_to;
    }
    return j.dump();
}

ComposeResult compose_over_route(const DeliveryRequest& pdr, const planner::Route& route,
                                 const ServiceStore& store, double window_min,
                                 const SelectionSink& sink) {
    ComposeResult result;
    result.plan.pdr_id = pdr.id;
    result.plan.route = route;
    result.plan.total_distance_km = route.total_distance_km;

    const Timestamp window_s = static_cast<Timestamp>(std::llround(window_min * 60.0));
    Timestamp clock = pdr.pickup_time;
    double duration = 0.0;

    bool have_prev = false;
    std::int64_t prev_service = 0;
    int prev_service_segment = 0;      // segment index within the previous service's path
    double prev_maintenance_min = 0.0; // the previous drone's swap duration

    for (std::size_t seg = 0; seg + 1 < route.stations.size(); ++seg) {
        const std::string& from = route.stations[seg];
        const std::string& to = route.stations[seg + 1];

        Selection sel;
        sel.segment = static_cast<int>(seg) + 1;
        sel.from = from;
        sel.to = to;

        std::optional<Candidate> reuse;
        if (have_prev) reuse = store.continuation(prev_service, prev_service_segment, from, to);

        if (reuse) {
            // The package stays on the drone; the gap to the next departure
            // is the service's own scheduled stop, if any.
            const Candidate& c = *reuse;
            sel.service_id = c.service_id;
            sel.departure = c.departure;
            sel.arrival = c.arrival;
            sel.repeat = true;
            sel.flying_duration_min = c.flying_duration_min;
            sel.maintenance_charged_min = static_cast<double>(c.departure - clock) / 60.0;

            if (sink) {
                SelectionContext ctx;
                ctx.pdr = &pdr;
                ctx.route = &route;
                ctx.segment = sel.segment;
                ctx.from = from;
                ctx.to = to;
                ctx.clock = c.departure;
                ctx.spatial_count = store.on_segment(from, to).size();
                ctx.temporal_count = 1;
                ctx.weight_count = c.payload_kg >= pdr.weight_kg ? 1 : 0;
                ctx.admissible = {c};
                ctx.chosen = 0;
                ctx.repeat = true;
                sink(ctx);
            }

            duration += sel.flying_duration_min + sel.maintenance_charged_min;
            clock = c.arrival;
            prev_service = c.service_id;
            prev_service_segment = c.segment_index;
            prev_maintenance_min = c.maintenance_min;
            result.plan.selections.push_back(std::move(sel));
            continue;
        }

        // Hand-off: the leaving drone's swap time passes before the package
        // is ready for the next departure.
        const double handling = have_prev ? prev_maintenance_min : 0.0;
        const Timestamp search_start = add_minutes(clock, handling);
        const TemporalDomain domain{search_start, search_start + window_s};

        const std::vector<Candidate> pool = store.in_domain(from, to, domain);
        std::vector<Candidate> admissible;
        admissible.reserve(pool.size());
        for (const Candidate& c : pool)
            if (c.payload_kg >= pdr.weight_kg) admissible.push_back(c);

        if (admissible.empty()) {
            result.status = ComposeStatus::NoCandidate;
            result.failed_segment = sel.segment;
            result.failed_from = from;
            result.failed_to = to;
            return result;
        }

        const Candidate& c = admissible.front(); // time-nearest: smallest departure >= clock
        sel.service_id = c.service_id;
        sel.departure = c.departure;
        sel.arrival = c.arrival;
        sel.repeat = false;
        sel.flying_duration_min = c.flying_duration_min;
        sel.maintenance_charged_min = handling;

        if (sink) {
            SelectionContext ctx;
            ctx.pdr = &pdr;
            ctx.route = &route;
            ctx.segment = sel.segment;
            ctx.from = from;
            ctx.to = to;
            ctx.clock = search_start;
            ctx.spatial_count = store.on_segment(from, to).size();
            ctx.temporal_count = pool.size();
            ctx.weight_count = admissible.size();
            ctx.admissible = admissible;
            ctx.chosen = 0;
            ctx.repeat = false;
            sink(ctx);
        }

        duration += sel.flying_duration_min + handling;
        clock = c.arrival;
        have_prev = true;
        prev_service = c.service_id;
        prev_service_segment = c.segment_index;
        prev_maintenance_min = c.maintenance_min;
        result.plan.selections.push_back(std::move(sel));
    }

    result.plan.total_duration_min = duration;
    result.plan.service_count = result.plan.selections.size();
    return result;
}

ComposeResult compose(const DeliveryRequest& pdr, const net::SkywayNetwork& net,
                      const ServiceStore& store, const planner::CostContext& ctx,
                      double window_min, const SelectionSink& sink) {
    pdr.validate();
    std::optional<planner::Route> route =
        planner::plan_astar(net, pdr.pickup_station, pdr.dropoff_station, pdr.pickup_time, ctx);
    if (!route) {
        ComposeResult r;
        r.status = ComposeStatus::NoRoute;
        r.plan.pdr_id = pdr.id;
        return r;
    }
    return compose_over_route(pdr, *route, store, window_min, sink);
}

void sort_pdrs(std::vector<DeliveryRequest>& requests) {
    std::stable_sort(requests.begin(), requests.end(),
                     [](const DeliveryRequest& a, const DeliveryRequest& b) {
                         if (a.request_time != b.request_time)
                             return a.request_time < b.request_time;
                         return a.id < b.id;
                     });
}

namespace {

void tally_measure(Tally& t, double a, double d) {
    if (std::abs(a - d) <= 1e-9)
        ++t.equal;
    else if (a > d)
        ++t.astar_more;
    else
        ++t.dijkstra_more;
}

} // namespace

PlannerComparison compare_planners(const std::vector<DeliveryRequest>& pdrs,
                                   const net::SkywayNetwork& net, const ServiceStore& store,
                                   const planner::CostContext& ctx, double window_min) {
    PlannerComparison out;
    for (const DeliveryRequest& pdr : pdrs) {
        PlannerComparisonRow row;
        row.pdr_id = pdr.id;
        row.astar = compose(pdr, net, store, ctx, window_min);

        std::optional<planner::Route> droute =
            planner::plan_dijkstra_baseline(net, pdr.pickup_station, pdr.dropoff_station,
                                            ctx.speed_kmh);
        if (!droute) {
            row.dijkstra.status = ComposeStatus::NoRoute;
            row.dijkstra.plan.pdr_id = pdr.id;
        } else {
            row.dijkstra = compose_over_route(pdr, *droute, store, window_min);
        }

        if (row.astar.ok() && row.dijkstra.ok()) {
            tally_measure(out.counts, static_cast<double>(row.astar.plan.service_count),
                          static_cast<double>(row.dijkstra.plan.service_count));
            tally_measure(out.distances, row.astar.plan.total_distance_km,
                          row.dijkstra.plan.total_distance_km);
            tally_measure(out.durations, row.astar.plan.total_duration_min,
                          row.dijkstra.plan.total_duration_min);
        } else {
            ++out.failures;
        }
        out.rows.push_back(std::move(row));
    }
    return out;
}

void write_pdrs_csv(const std::vector<DeliveryRequest>& pdrs, const std::string& path,
                    const std::string& header_comment) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    if (!header_comment.empty()) out << "# " << header_comment << "\n";
    out << "id,pickup_station,pickup_time,dropoff_station,weight_kg,request_time\n";
    for (const DeliveryRequest& p : pdrs) {
        out << p.id << ',' << p.pickup_station << ',' << format_iso8601(p.pickup_time) << ','
            << p.dropoff_station << ',' << format_double(p.weight_kg) << ','
            << format_iso8601(p.request_time) << '\n';
    }
}

std::vector<DeliveryRequest> load_pdrs_csv(const std::string& path) {
    CsvReader reader(path, {"id", "pickup_station", "pickup_time", "dropoff_station", "weight_kg",
                            "request_time"});
    std::vector<DeliveryRequest> out;
    std::vector<std::string> f;
    while (reader.next(f)) {
        DeliveryRequest p;
        p.id = parse_int(f[0], path, reader.line_number());
        p.pickup_station = f[1];
        p.pickup_time = parse_iso8601(f[2]);
        p.dropoff_station = f[3];
        p.weight_kg = parse_double(f[4], path, reader.line_number());
        p.request_time = parse_iso8601(f[5]);
        p.validate();
        out.push_back(std::move(p));
    }
    return out;
}

} // namespace skyroute::composer
