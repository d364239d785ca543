#include <doctest.h>

#include <limits>

#include "skyroute/composer.hpp"

using namespace skyroute;

namespace {

// Hand-built timetable fixture over the detour graph:
//
//   A --- B --- D --- C      plus a direct A --- C corridor
//
// Services are constructed movement by movement so departure times are
// exact and easy to reason about.
struct Fixture {
    net::SkywayNetwork network;
    aero::Fleet fleet = aero::default_fleet();
    std::vector<sched::Service> services;
    std::vector<sched::Movement> movements;
    wx::WeatherStore weather;
    wx::DeviationStats stats;

    static constexpr Timestamp kBase = 1000000800; // an arbitrary aligned hour

    Fixture() : network(make_network()) {
        for (const net::Station& s : network.stations()) {
            for (int h = -1; h < 8; ++h) {
                wx::WeatherRecord r;
                r.station = s.id;
                r.timestamp = floor_hour(kBase) + h * kSecondsPerHour;
                r.temperature_c = 20.0;
                r.cloud_cover = 0.1;
                r.wind_speed_ms = 0.0;
                r.wind_bearing = 0.0;
                r.humidity = 0.6;
                r.pressure_hpa = 1013.0;
                r.dew_point_c = 7.0;
                r.visibility_km = s.id == "A" ? 4.0 : (s.id == "C" ? 5.8 : 7.0);
                weather.add(r);
            }
            for (std::size_t a = 0; a < wx::kAttrCount; ++a)
                stats.set(s.id, static_cast<wx::Attr>(a), {0.0, 0.0, 1});
        }
    }

    static net::SkywayNetwork make_network() {
        std::vector<net::Station> stations{
            {"A", {-38.00, 145.00}, true},
            {"B", {-37.95, 145.06}, false},
            {"C", {-38.00, 145.20}, true},
            {"D", {-37.95, 145.14}, false},
        };
        std::vector<std::pair<std::string, std::string>> edges{
            {"A", "C"}, {"A", "B"}, {"B", "D"}, {"D", "C"}};
        std::vector<net::Skyway> skyways;
        std::int64_t id = 1;
        for (const auto& [a, b] : edges) {
            const auto loc = [&](const std::string& s) {
                for (const auto& st : stations)
                    if (st.id == s) return st.location;
                throw DataError("bad fixture station");
            };
            net::Skyway sw;
            sw.id = id++;
            sw.source = a;
            sw.destination = b;
            sw.distance_km = geo::haversine_km(loc(a), loc(b));
            sw.bearing = geo::compass_bearing(loc(a), loc(b));
            skyways.push_back(sw);
        }
        return net::SkywayNetwork(stations, skyways);
    }

    // Adds a service flying `path`, departing each segment at the given
    // offsets (minutes after kBase), each leg taking `leg_min` minutes.
    void add_service(std::int64_t id, const std::string& drone,
                     const std::vector<std::string>& path,
                     const std::vector<double>& departs_min, double leg_min = 6.0) {
        REQUIRE(path.size() == departs_min.size() + 1);
        sched::Service svc;
        svc.id = id;
        svc.drone = drone;
        svc.source = path.front();
        svc.destination = path.back();
        svc.path = path;
        svc.skyway_count = static_cast<int>(path.size()) - 1;
        svc.start_time = add_minutes(kBase, departs_min.front());
        const aero::DroneType& d = sched::fleet_drone(fleet, drone);
        for (std::size_t i = 0; i + 1 < path.size(); ++i) {
            sched::Movement m;
            m.service_id = id;
            m.segment_index = static_cast<int>(i) + 1;
            m.source = path[i];
            m.destination = path[i + 1];
            m.flying_duration_min = leg_min;
            m.arrival_time = add_minutes(kBase, departs_min[i] + leg_min);
            m.total_skyways = svc.skyway_count;
            movements.push_back(m);
        }
        svc.flying_duration_min = leg_min * static_cast<double>(svc.skyway_count);
        svc.total_distance_km = svc.flying_duration_min / 60.0 * d.speed_kmh;
        services.push_back(svc);
    }

    composer::ServiceStore store() const { return composer::ServiceStore(services, movements, fleet); }

    planner::CostContext ctx() const {
        return planner::CostContext::for_fleet(weather, stats,
                                               wx::CertaintyMargin::pessimistic(0.0), fleet);
    }

    composer::DeliveryRequest pdr(const std::string& from, const std::string& to, double kg,
                                  double pickup_offset_min = 0.0) const {
        composer::DeliveryRequest p;
        p.id = 1;
        p.pickup_station = from;
        p.dropoff_station = to;
        p.weight_kg = kg;
        p.pickup_time = add_minutes(kBase, pickup_offset_min);
        p.request_time = p.pickup_time - 600;
        return p;
    }
};

// Post-hoc checker, independent of the selection loop: every selection must
// ride its segment, respect the window from the rolling clock, carry the
// weight, and depart no earlier than the previous arrival.
void verify_plan(const Fixture& fx, const composer::CompositePlan& plan,
                 const composer::DeliveryRequest& pdr, const composer::ServiceStore& store,
                 double window_min) {
    REQUIRE(plan.selections.size() == plan.route.segment_count());
    Timestamp clock = pdr.pickup_time;
    double prev_maintenance = 0.0;
    std::int64_t prev_service = -1;
    Timestamp prev_departure = std::numeric_limits<Timestamp>::min();
    for (std::size_t i = 0; i < plan.selections.size(); ++i) {
        const composer::Selection& sel = plan.selections[i];
        CHECK(sel.from == plan.route.stations[i]);
        CHECK(sel.to == plan.route.stations[i + 1]);

        // spatial: the chosen service really flies this directed segment
        bool found = false;
        const aero::DroneType* drone = nullptr;
        for (const composer::Candidate& c : store.on_segment(sel.from, sel.to)) {
            if (c.service_id == sel.service_id && c.departure == sel.departure) {
                found = true;
                for (const sched::Service& s : fx.services)
                    if (s.id == c.service_id) drone = &sched::fleet_drone(fx.fleet, s.drone);
            }
        }
        CHECK(found);
        REQUIRE(drone != nullptr);

        // weight-aware
        CHECK(drone->payload_kg >= pdr.weight_kg);

        // temporal: inside the window, or an explicit continuation
        if (!sel.repeat) {
            const Timestamp start = add_minutes(clock, i == 0 ? 0.0 : prev_maintenance);
            CHECK(sel.departure >= start);
            CHECK(sel.departure <= add_minutes(start, window_min));
        } else {
            CHECK(sel.service_id == prev_service);
        }
        CHECK(sel.departure >= prev_departure);
        prev_departure = sel.departure;
        clock = sel.arrival;
        prev_maintenance = drone->maintenance_min;
        prev_service = sel.service_id;
    }
}

} // namespace

TEST_CASE("pdr validation catches bad requests") {
    Fixture fx;
    composer::DeliveryRequest p = fx.pdr("A", "A", 1.0);
    CHECK_THROWS_AS(p.validate(), DataError);
    p = fx.pdr("A", "C", 0.0);
    CHECK_THROWS_AS(p.validate(), DataError);
    p = fx.pdr("A", "C", 1.0);
    p.request_time = p.pickup_time + 60;
    CHECK_THROWS_AS(p.validate(), DataError);
}

TEST_CASE("pdr sorting is stable, ascending by request time then id") {
    std::vector<composer::DeliveryRequest> empty;
    composer::sort_pdrs(empty);
    CHECK(empty.empty());

    composer::DeliveryRequest a;
    a.id = 7;
    a.request_time = 100;
    composer::DeliveryRequest b;
    b.id = 3;
    b.request_time = 100;
    composer::DeliveryRequest c;
    c.id = 9;
    c.request_time = 50;
    std::vector<composer::DeliveryRequest> v{a, b, c};
    composer::sort_pdrs(v);
    CHECK(v[0].id == 9);
    CHECK(v[1].id == 3);
    CHECK(v[2].id == 7);

    // already sorted input is untouched
    std::vector<composer::DeliveryRequest> sorted{c, b, a};
    composer::sort_pdrs(sorted);
    CHECK(sorted[0].id == 9);
    CHECK(sorted[1].id == 3);
    CHECK(sorted[2].id == 7);
}

TEST_CASE("candidate filters: spatial, temporal, weight, sorted by departure") {
    Fixture fx;
    // S2 departs at +10, S3 at +20 (inside a 30-minute domain), S4 at +45 (outside)
    fx.add_service(2, "M200", {"A", "B"}, {10.0});
    fx.add_service(3, "M200", {"A", "B"}, {20.0});
    fx.add_service(4, "M200", {"A", "B"}, {45.0});
    // opposite direction and different segment never match
    fx.add_service(5, "M200", {"B", "A"}, {12.0});
    fx.add_service(6, "M200", {"B", "D"}, {15.0});
    const composer::ServiceStore store = fx.store();

    const composer::TemporalDomain domain{Fixture::kBase, add_minutes(Fixture::kBase, 30.0)};
    const auto got = composer::candidate_services(store, "A", "B", domain, 1.0);
    REQUIRE(got.size() == 2);
    CHECK(got[0].service_id == 2);
    CHECK(got[1].service_id == 3);
    CHECK(got[0].departure <= got[1].departure);

    // an empty segment is a valid result
    CHECK(composer::candidate_services(store, "D", "A", domain, 1.0).empty());

    // weight-aware: a 0.6 kg package filters out the P4 but keeps the M200
    Fixture heavy;
    heavy.add_service(2, "P4-PRO", {"A", "B"}, {10.0});
    heavy.add_service(3, "M200", {"A", "B"}, {20.0});
    const auto kept = composer::candidate_services(heavy.store(), "A", "B", domain, 0.6);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].service_id == 3);
}

TEST_CASE("single-segment request with exactly one admissible service") {
    Fixture fx;
    fx.add_service(2, "M200", {"A", "B"}, {10.0});
    const auto res = composer::compose(fx.pdr("A", "B", 1.0), fx.network, fx.store(), fx.ctx(),
                                       15.0);
    REQUIRE(res.ok());
    REQUIRE(res.plan.selections.size() == 1);
    CHECK(res.plan.selections[0].service_id == 2);
    CHECK(res.plan.service_count == 1);
}

TEST_CASE("composition fails with the segment named when the domain is empty") {
    Fixture fx;
    fx.add_service(2, "M200", {"A", "B"}, {40.0}); // outside the 15-minute window
    const auto res = composer::compose(fx.pdr("A", "B", 1.0), fx.network, fx.store(), fx.ctx(),
                                       15.0);
    CHECK(!res.ok());
    CHECK(res.status == composer::ComposeStatus::NoCandidate);
    CHECK(res.failed_segment == 1);
    CHECK(res.failed_from == "A");
    CHECK(res.failed_to == "B");
    const std::string j = res.to_json();
    CHECK(j.find("no_candidate") != std::string::npos);
}

TEST_CASE("the blocked direct corridor composes over the detour with handoffs") {
    Fixture fx;
    // one service per detour leg, timed to chain with the drones' swap times
    fx.add_service(2, "M200", {"A", "B"}, {1.0});
    fx.add_service(3, "M200", {"B", "D"}, {25.0});
    fx.add_service(4, "M200", {"D", "C"}, {50.0});
    // and a direct A->C service for the weather-blind baseline
    fx.add_service(9, "M200", {"A", "C"}, {2.0}, 13.0);

    const auto res = composer::compose(fx.pdr("A", "C", 1.25), fx.network, fx.store(), fx.ctx(),
                                       30.0);
    REQUIRE(res.ok());
    CHECK(res.plan.route.stations == std::vector<std::string>{"A", "B", "D", "C"});
    REQUIRE(res.plan.selections.size() == 3);
    CHECK(res.plan.selections[0].service_id == 2);
    CHECK(res.plan.selections[1].service_id == 3);
    CHECK(res.plan.selections[2].service_id == 4);
    CHECK(res.plan.service_count == 3);
    verify_plan(fx, res.plan, fx.pdr("A", "C", 1.25), fx.store(), 30.0);

    // duration mixes flying and the hand-off maintenance, never the waiting
    const double flying = 3 * 6.0;
    const double handoffs = 2 * 15.0; // two M200 hand-offs
    CHECK(res.plan.total_duration_min == doctest::Approx(flying + handoffs));
}

TEST_CASE("a service continuing along the route is reused as a repeat") {
    Fixture fx;
    // one through-service A->B->D->C, 6-minute legs, immediate turnarounds
    fx.add_service(2, "M200", {"A", "B", "D", "C"}, {0.0, 6.0, 12.0});
    const auto res =
        composer::compose(fx.pdr("A", "C", 1.0), fx.network, fx.store(), fx.ctx(), 15.0);
    REQUIRE(res.ok());
    REQUIRE(res.plan.selections.size() == 3);
    CHECK(res.plan.selections[0].repeat == false);
    CHECK(res.plan.selections[1].repeat == true);
    CHECK(res.plan.selections[2].repeat == true);
    for (const auto& sel : res.plan.selections) CHECK(sel.service_id == 2);
    // repeats still count toward the composite length
    CHECK(res.plan.service_count == 3);
    // through-carriage charges no hand-off time on back-to-back legs
    CHECK(res.plan.total_duration_min == doctest::Approx(18.0));
}

TEST_CASE("the time-nearest admissible candidate wins") {
    Fixture fx;
    fx.add_service(2, "M200", {"A", "B"}, {9.0});
    fx.add_service(3, "M200", {"A", "B"}, {4.0});
    fx.add_service(4, "M200", {"A", "B"}, {13.0});
    const auto res = composer::compose(fx.pdr("A", "B", 1.0), fx.network, fx.store(), fx.ctx(),
                                       15.0);
    REQUIRE(res.ok());
    CHECK(res.plan.selections[0].service_id == 3);
}

TEST_CASE("selections respect the rolling clock") {
    Fixture fx;
    fx.add_service(2, "P4-PRO", {"A", "B"}, {2.0});
    fx.add_service(3, "P4-PRO", {"B", "D"}, {20.0});
    fx.add_service(4, "P4-PRO", {"D", "C"}, {40.0});
    const composer::DeliveryRequest p = fx.pdr("A", "C", 0.4);
    const auto res = composer::compose(p, fx.network, fx.store(), fx.ctx(), 20.0);
    REQUIRE(res.ok());
    verify_plan(fx, res.plan, p, fx.store(), 20.0);
    CHECK(res.plan.selections[0].departure <= res.plan.selections[1].departure);
    CHECK(res.plan.selections[1].departure <= res.plan.selections[2].departure);
}

TEST_CASE("composition is deterministic") {
    Fixture fx;
    fx.add_service(2, "M200", {"A", "B", "D", "C"}, {0.0, 9.0, 30.0});
    fx.add_service(3, "M200", {"B", "D"}, {9.0});
    const auto r1 = composer::compose(fx.pdr("A", "C", 1.0), fx.network, fx.store(), fx.ctx(), 25.0);
    const auto r2 = composer::compose(fx.pdr("A", "C", 1.0), fx.network, fx.store(), fx.ctx(), 25.0);
    CHECK(r1.to_json() == r2.to_json());
}

TEST_CASE("no-route failures are first-class results") {
    Fixture fx;
    fx.add_service(2, "M200", {"A", "B"}, {0.0});
    // shut every corridor with fog
    wx::WeatherStore fog;
    for (const net::Station& s : fx.network.stations()) {
        for (int h = -1; h < 4; ++h) {
            wx::WeatherRecord r;
            r.station = s.id;
            r.timestamp = floor_hour(Fixture::kBase) + h * kSecondsPerHour;
            r.temperature_c = 20.0;
            r.cloud_cover = 0.1;
            r.humidity = 0.6;
            r.dew_point_c = 7.0;
            r.visibility_km = 0.5;
            r.pressure_hpa = 1013.0;
            fog.add(r);
        }
    }
    planner::CostContext ctx = fx.ctx();
    ctx.weather = &fog;
    const auto res = composer::compose(fx.pdr("A", "C", 1.0), fx.network, fx.store(), ctx, 15.0);
    CHECK(!res.ok());
    CHECK(res.status == composer::ComposeStatus::NoRoute);
    CHECK(res.to_json().find("no_route") != std::string::npos);
}

TEST_CASE("planner comparison tallies equal and divergent compositions") {
    Fixture fx;
    // services covering both the detour and the direct corridor
    fx.add_service(2, "M200", {"A", "B", "D", "C"}, {0.0, 9.0, 35.0});
    fx.add_service(3, "M200", {"A", "C"}, {2.0}, 13.0);
    fx.add_service(4, "M200", {"C", "A"}, {2.0}, 13.0);
    fx.add_service(5, "M200", {"C", "D", "B", "A"}, {0.0, 9.0, 35.0});

    std::vector<composer::DeliveryRequest> pdrs{fx.pdr("A", "C", 1.0), fx.pdr("C", "A", 1.0)};
    pdrs[1].id = 2;
    const composer::PlannerComparison cmp =
        composer::compare_planners(pdrs, fx.network, fx.store(), fx.ctx(), 40.0);
    REQUIRE(cmp.rows.size() == 2);
    for (const auto& row : cmp.rows) {
        REQUIRE(row.astar.ok());
        REQUIRE(row.dijkstra.ok());
        // uncertainty-aware composition takes the long way around
        CHECK(row.astar.plan.service_count > row.dijkstra.plan.service_count);
        CHECK(row.astar.plan.total_distance_km > row.dijkstra.plan.total_distance_km);
    }
    CHECK(cmp.counts.astar_more == 2);
    CHECK(cmp.distances.astar_more == 2);
    CHECK(cmp.failures == 0);
}

TEST_CASE("weight safety: every selected drone carries the package") {
    Fixture fx;
    fx.add_service(2, "P4-PRO", {"A", "B"}, {1.0});
    fx.add_service(3, "M200", {"A", "B"}, {5.0});
    // heavy package: the earlier P4 departure is inadmissible
    const auto res = composer::compose(fx.pdr("A", "B", 2.0), fx.network, fx.store(), fx.ctx(),
                                       15.0);
    REQUIRE(res.ok());
    CHECK(res.plan.selections[0].service_id == 3);
}
