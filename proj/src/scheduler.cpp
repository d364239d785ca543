#include "skyroute/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <thread>
#include <unordered_map>

#include "skyroute/csv.hpp"
#include "skyroute/rng.hpp"

namespace skyroute::sched {

namespace {

const net::Skyway& skyway_between(const net::SkywayNetwork& net, const std::string& a,
                                  const std::string& b) {
    for (const auto& [sw, other] : net.neighbors(a))
        if (other->id == b) return *sw;
    throw DataError("no skyway between " + a + " and " + b);
}

// Loop-erased walk from src to dst. Each step drifts to a uniform random
// neighbor, except that with probability |greediness| it hops to the
// neighbor closest to the destination (greediness > 0) or farthest from it
// (greediness < 0). With non_backtracking set the walk never immediately
// reverses its last hop unless that is the only way out.
std::vector<std::string> sample_path(const net::SkywayNetwork& net, const std::string& src,
                                     const std::string& dst, Rng& rng,
                                     const ServiceGenOptions& opts, std::size_t max_steps) {
    const geo::GeoPoint goal = net.station(dst).location;
    std::vector<std::string> path{src};
    std::unordered_map<std::string, std::size_t> position{{src, 0}};

    std::string current = src;
    std::string previous;
    std::vector<const net::Station*> options;
    for (std::size_t step = 0; step < max_steps; ++step) {
        const auto neighbors = net.neighbors(current);
        if (neighbors.empty()) return {};

        options.clear();
        for (const auto& [sw, other] : neighbors) {
            (void)sw;
            if (opts.non_backtracking && other->id == previous && neighbors.size() > 1) continue;
            options.push_back(other);
        }
        if (options.empty())
            for (const auto& [sw, other] : neighbors) {
                (void)sw;
                options.push_back(other);
            }

        std::string next;
        if (rng.uniform01() < std::abs(opts.walk_greediness)) {
            const bool toward = opts.walk_greediness > 0.0;
            double best = toward ? std::numeric_limits<double>::max() : -1.0;
            for (const net::Station* other : options) {
                const double d = geo::haversine_km(other->location, goal);
                const bool better = toward ? d < best : d > best;
                if (better || (d == best && other->id < next)) {
                    best = d;
                    next = other->id;
                }
            }
        } else {
            next = options[rng.uniform_int(options.size())]->id;
        }

        auto seen = position.find(next);
        if (seen != position.end()) {
            // erase the loop
            for (std::size_t i = seen->second + 1; i < path.size(); ++i) position.erase(path[i]);
            path.resize(seen->second + 1);
        } else {
            position.emplace(next, path.size());
            path.push_back(next);
        }
        previous = current;
        current = next;
        if (current == dst) return path;
    }
    return {};
}

} // namespace

const aero::DroneType& fleet_drone(const aero::Fleet& fleet, const std::string& name) {
    for (const aero::DroneType& d : fleet)
        if (d.name == name) return d;
    throw DataError("unknown drone type: " + name);
}

std::vector<double> scheduled_segment_durations(const net::SkywayNetwork& net,
                                                const std::vector<std::string>& path,
                                                const aero::DroneType& drone) {
    std::vector<double> out;
    out.reserve(path.size() > 0 ? path.size() - 1 : 0);
    for (std::size_t i = 1; i < path.size(); ++i) {
        const net::Skyway& sw = skyway_between(net, path[i - 1], path[i]);
        out.push_back(aero::flight_duration_min(sw.distance_km, drone.speed_kmh));
    }
    return out;
}

MaintenancePlan maintenance_schedule(const std::vector<double>& segment_durations_min,
                                     const aero::DroneType& drone) {
    constexpr double kEps = 1e-9;
    for (double d : segment_durations_min)
        if (d > drone.flight_time_min + kEps)
            throw DataError("segment of " + format_double(d) + " min exceeds " + drone.name +
                            " flight time (" + format_double(drone.flight_time_min) + " min)");

    MaintenancePlan plan;
    double since_swap = 0.0;
    for (std::size_t i = 0; i < segment_durations_min.size(); ++i) {
        if (since_swap + segment_durations_min[i] > drone.flight_time_min + kEps) {
            plan.stop_stations.push_back(i); // swap at path[i] before flying segment i
            plan.total_min += drone.maintenance_min;
            since_swap = 0.0;
        }
        since_swap += segment_durations_min[i];
    }
    return plan;
}

std::vector<Service> generate_services(const net::SkywayNetwork& net, const aero::Fleet& fleet,
                                       std::size_t n_services,
                                       const std::vector<wx::TimeRange>& ranges,
                                       std::uint64_t seed, const ServiceGenOptions& opts) {
    const std::vector<std::string> majors = net.major_station_ids();
    if (majors.size() < 2) throw DataError("generate_services: need at least 2 major stations");
    if (ranges.empty()) throw DataError("generate_services: no time ranges");
    if (fleet.empty()) throw DataError("generate_services: empty fleet");

    std::vector<Timestamp> range_starts;
    std::vector<std::int64_t> range_minutes;
    std::int64_t total_minutes = 0;
    for (const wx::TimeRange& r : ranges) {
        if (!(r.end > r.start)) throw DataError("generate_services: empty time range");
        range_starts.push_back(r.start);
        range_minutes.push_back((r.end - r.start) / 60);
        total_minutes += range_minutes.back();
    }

    Rng rng(mix_seed(seed, "services"));
    const std::size_t max_steps = opts.max_walk_steps_factor * net.stations().size() + 256;

    std::vector<Service> services;
    services.reserve(n_services);
    for (std::size_t k = 0; k < n_services; ++k) {
        Service svc;
        bool done = false;
        for (std::size_t attempt = 0; attempt < opts.max_attempts_per_service && !done; ++attempt) {
            const std::size_t si = rng.uniform_int(majors.size());
            std::size_t di = rng.uniform_int(majors.size() - 1);
            if (di >= si) ++di;
            const std::string& src = majors[si];
            const std::string& dst = majors[di];

            const std::vector<std::string> path =
                sample_path(net, src, dst, rng, opts, max_steps);
            if (path.size() < 2) continue;

            const aero::DroneType& drone = fleet[rng.uniform_int(fleet.size())];
            std::vector<double> durations;
            try {
                durations = scheduled_segment_durations(net, path, drone);
            } catch (const DataError&) {
                continue;
            }
            const double longest = *std::max_element(durations.begin(), durations.end());
            if (longest > drone.flight_time_min + 1e-9) continue; // leg exceeds battery budget

            double dist = 0.0;
            for (std::size_t i = 1; i < path.size(); ++i)
                dist += skyway_between(net, path[i - 1], path[i]).distance_km;

            svc.id = static_cast<std::int64_t>(k) + 1;
            svc.drone = drone.name;
            svc.source = src;
            svc.destination = dst;
            svc.path = path;
            svc.total_distance_km = dist;
            svc.flying_duration_min = aero::flight_duration_min(dist, drone.speed_kmh);
            svc.maintenance_min = maintenance_schedule(durations, drone).total_min;
            svc.skyway_count = static_cast<int>(path.size()) - 1;

            // start minute over the union of the ranges
            if (opts.start_times == StartTimeDistribution::Uniform) {
                std::int64_t m = static_cast<std::int64_t>(rng.uniform_int(
                    static_cast<std::uint64_t>(total_minutes)));
                for (std::size_t r = 0; r < range_starts.size(); ++r) {
                    if (m < range_minutes[r]) {
                        svc.start_time = range_starts[r] + m * 60;
                        break;
                    }
                    m -= range_minutes[r];
                }
            } else {
                const std::size_t r = rng.uniform_int(range_starts.size());
                const double span = static_cast<double>(range_minutes[r]);
                const double m = std::clamp(rng.gaussian(span / 2.0, span / 4.0), 0.0, span - 1.0);
                svc.start_time = range_starts[r] + static_cast<std::int64_t>(m) * 60;
            }
            done = true;
        }
        if (!done)
            throw DataError("generate_services: no feasible itinerary found (service " +
                            std::to_string(k + 1) + ")");
        services.push_back(std::move(svc));
    }
    return services;
}

namespace {

void simulate_one(const Service& svc, const net::SkywayNetwork& net, const aero::Fleet& fleet,
                  const wx::WeatherStore& weather, const wx::DeviationStats& stats,
                  const wx::CertaintyMargin& cm, aero::AirspeedMode mode,
                  std::vector<Movement>& out) {
    const aero::DroneType& drone = fleet_drone(fleet, svc.drone);

    const std::vector<double> scheduled = scheduled_segment_durations(net, svc.path, drone);
    const MaintenancePlan plan = maintenance_schedule(scheduled, drone);

    Timestamp clock = svc.start_time;
    for (std::size_t i = 1; i < svc.path.size(); ++i) {
        const net::Skyway& sw = skyway_between(net, svc.path[i - 1], svc.path[i]);

        if (std::find(plan.stop_stations.begin(), plan.stop_stations.end(), i - 1) !=
            plan.stop_stations.end())
            clock = add_minutes(clock, drone.maintenance_min);

        const wx::WeatherRecord& wa = weather.get(sw.source, clock);
        const wx::WeatherRecord& wb = weather.get(sw.destination, clock);
        wx::WeatherRecord pair = wx::average_records(wa, wb);
        pair.station = svc.path[i - 1];
        const wx::WeatherRecord adjusted = wx::adjust_with_cm(pair, stats, cm);

        const geo::Bearing track =
            svc.path[i - 1] == sw.source ? sw.bearing : sw.bearing.reversed();
        const aero::WindDecomposition wind =
            aero::decompose_wind(aero::ms_to_kmh(adjusted.wind_speed_ms),
                                 geo::Bearing::from_degrees(adjusted.wind_bearing), track);
        // Scheduled services fly regardless of the gate; the floor keeps
        // untraversable wind-triangle cases finite.
        const double ground = drone_airspeed(drone.speed_kmh, wind, mode, 1.0).value_or(1.0);

        Movement mv;
        mv.service_id = svc.id;
        mv.segment_index = static_cast<int>(i);
        mv.source = svc.path[i - 1];
        mv.destination = svc.path[i];
        mv.flying_duration_min = aero::flight_duration_min(sw.distance_km, ground);
        mv.arrival_time = add_minutes(clock, mv.flying_duration_min);
        mv.total_skyways = svc.skyway_count;
        clock = mv.arrival_time;
        out.push_back(std::move(mv));
    }
}

} // namespace

std::vector<Movement> simulate_movements(const std::vector<Service>& services,
                                         const net::SkywayNetwork& net, const aero::Fleet& fleet,
                                         const wx::WeatherStore& weather,
                                         const wx::DeviationStats& stats,
                                         const wx::CertaintyMargin& cm, aero::AirspeedMode mode,
                                         unsigned jobs) {
    std::vector<std::vector<Movement>> per_service(services.size());
    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i)
            simulate_one(services[i], net, fleet, weather, stats, cm, mode, per_service[i]);
    };

    if (jobs <= 1 || services.size() < 2) {
        work(0, services.size());
    } else {
        const unsigned n_threads = std::min<unsigned>(jobs, std::thread::hardware_concurrency());
        std::vector<std::thread> threads;
        const std::size_t chunk = (services.size() + n_threads - 1) / n_threads;
        for (unsigned t = 0; t < n_threads; ++t) {
            const std::size_t b = t * chunk;
            const std::size_t e = std::min(services.size(), b + chunk);
            if (b < e) threads.emplace_back(work, b, e);
        }
        for (auto& th : threads) th.join();
    }

    std::vector<Movement> out;
    std::size_t total = 0;
    for (const auto& v : per_service) total += v.size();
    out.reserve(total);
    for (auto& v : per_service) out.insert(out.end(), v.begin(), v.end());
    return out;
}

namespace {

std::string join_path(const std::vector<std::string>& path) {
    std::string s;
    for (std::size_t i = 0; i < path.size(); ++i) s += (i ? "-" : "") + path[i];
    return s;
}

std::vector<std::string> split_path(const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = s.find('-', start);
        if (pos == std::string::npos) {
            out.push_back(s.substr(start));
            break;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

} // namespace

void write_services_csv(const std::vector<Service>& services, const std::string& path,
                        const std::string& header_comment) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    if (!header_comment.empty()) out << "# " << header_comment << "\n";
    out << "id,drone,source,destination,total_distance_km,flying_duration_min,maintenance_min,"
           "start_time,skyway_count,path\n";
    for (const Service& s : services) {
        out << s.id << ',' << s.drone << ',' << s.source << ',' << s.destination << ','
            << format_double(s.total_distance_km) << ',' << format_double(s.flying_duration_min)
            << ',' << format_double(s.maintenance_min) << ',' << format_iso8601(s.start_time)
            << ',' << s.skyway_count << ',' << join_path(s.path) << '\n';
    }
}

std::vector<Service> load_services_csv(const std::string& path) {
    CsvReader reader(path, {"id", "drone", "source", "destination", "total_distance_km",
                            "flying_duration_min", "maintenance_min", "start_time", "skyway_count",
                            "path"});
    std::vector<Service> out;
    std::vector<std::string> f;
    while (reader.next(f)) {
        Service s;
        s.id = parse_int(f[0], path, reader.line_number());
        s.drone = f[1];
        s.source = f[2];
        s.destination = f[3];
        s.total_distance_km = parse_double(f[4], path, reader.line_number());
        s.flying_duration_min = parse_double(f[5], path, reader.line_number());
        s.maintenance_min = parse_double(f[6], path, reader.line_number());
        s.start_time = parse_iso8601(f[7]);
        s.skyway_count = static_cast<int>(parse_int(f[8], path, reader.line_number()));
        s.path = split_path(f[9]);
        if (static_cast<int>(s.path.size()) != s.skyway_count + 1)
            throw ParseError(path, reader.line_number(), "skyway_count does not match path length");
        out.push_back(std::move(s));
    }
    return out;
}

void write_movements_csv(const std::vector<Movement>& movements, const std::string& path,
                         const std::string& header_comment) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    if (!header_comment.empty()) out << "# " << header_comment << "\n";
    out << "service_id,flying_duration_min,arrival_time,source,destination,skyway_number,"
           "total_skyways\n";
    for (const Movement& m : movements) {
        out << m.service_id << ',' << format_double(m.flying_duration_min) << ','
            << format_iso8601(m.arrival_time) << ',' << m.source << ',' << m.destination << ','
            << m.segment_index << ',' << m.total_skyways << '\n';
    }
}

std::vector<Movement> load_movements_csv(const std::string& path) {
    CsvReader reader(path, {"service_id", "flying_duration_min", "arrival_time", "source",
                            "destination", "skyway_number", "total_skyways"});
    std::vector<Movement> out;
    std::vector<std::string> f;
    while (reader.next(f)) {
        Movement m;
        m.service_id = parse_int(f[0], path, reader.line_number());
        m.flying_duration_min = parse_double(f[1], path, reader.line_number());
        m.arrival_time = parse_iso8601(f[2]);
        m.source = f[3];
        m.destination = f[4];
        m.segment_index = static_cast<int>(parse_int(f[5], path, reader.line_number()));
        m.total_skyways = static_cast<int>(parse_int(f[6], path, reader.line_number()));
        out.push_back(std::move(m));
    }
    return out;
}

} // namespace skyroute::sched
