#include "skyroute/network.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "skyroute/csv.hpp"
#include "skyroute/rng.hpp"

namespace skyroute::net {

namespace {

void warn_to(const std::function<void(const std::string&)>& warn, const std::string& msg) {
    if (warn) warn(msg);
}

// A, B, ..., Z, AA, AB, ... (spreadsheet style) for major stations.
std::string letter_name(std::size_t i) {
    std::string s;
    ++i;
    while (i > 0) {
        --i;
        s.insert(s.begin(), static_cast<char>('A' + i % 26));
        i /= 26;
    }
    return s;
}

} // namespace

SkywayNetwork::SkywayNetwork(std::vector<Station> stations, std::vector<Skyway> skyways,
                             std::function<void(const std::string&)> warn)
    : stations_(std::move(stations)), skyways_(std::move(skyways)) {
    station_index_.reserve(stations_.size());
    for (std::size_t i = 0; i < stations_.size(); ++i) {
        const Station& st = stations_[i];
        geo::require_valid(st.location, ("station " + st.id).c_str());
        if (!station_index_.emplace(st.id, i).second)
            throw DataError("duplicate station id: " + st.id);
    }

    adjacency_.assign(stations_.size(), {});
    skyway_index_.reserve(skyways_.size());
    for (std::size_t i = 0; i < skyways_.size(); ++i) {
        const Skyway& sw = skyways_[i];
        auto src = station_index_.find(sw.source);
        if (src == station_index_.end())
            throw DataError("skyway " + std::to_string(sw.id) + ": unknown station '" + sw.source + "'");
        auto dst = station_index_.find(sw.destination);
        if (dst == station_index_.end())
            throw DataError("skyway " + std::to_string(sw.id) + ": unknown station '" + sw.destination + "'");
        if (sw.source == sw.destination)
            throw DataError("skyway " + std::to_string(sw.id) + ": self loop at '" + sw.source + "'");
        if (!(sw.distance_km > 0.0))
            throw DataError("skyway " + std::to_string(sw.id) + ": non-positive distance");
        if (!skyway_index_.emplace(sw.id, i).second)
            throw DataError("duplicate skyway id: " + std::to_string(sw.id));
        adjacency_[src->second].push_back(i);
        adjacency_[dst->second].push_back(i);

        const double hav = geo::haversine_km(stations_[src->second].location,
                                             stations_[dst->second].location);
        if (hav > 0.0 && std::abs(sw.distance_km - hav) / hav > 0.01)
            warn_to(warn, "skyway " + std::to_string(sw.id) + " (" + sw.source + "-" +
                              sw.destination + "): stored distance " + format_double(sw.distance_km) +
                              " km differs from haversine " + format_double(hav) + " km by >1%");
    }

    // Connectivity is a warning, not an error: a disconnected network still
    // answers queries, routes across components just fail.
    if (!stations_.empty()) {
        std::vector<char> seen(stations_.size(), 0);
        std::deque<std::size_t> queue{0};
        seen[0] = 1;
        std::size_t count = 1;
        while (!queue.empty()) {
            const std::size_t u = queue.front();
            queue.pop_front();
            for (std::size_t e : adjacency_[u]) {
                const Skyway& sw = skyways_[e];
                const std::size_t v = station_index_.at(sw.source) == u
                                          ? station_index_.at(sw.destination)
                                          : station_index_.at(sw.source);
                if (!seen[v]) {
                    seen[v] = 1;
                    ++count;
                    queue.push_back(v);
                }
            }
        }
        connected_ = count == stations_.size();
        if (!connected_)
            warn_to(warn, "network is disconnected: " + std::to_string(stations_.size() - count) +
                              " of " + std::to_string(stations_.size()) +
                              " stations unreachable from '" + stations_[0].id + "'");
    }
}

const Station& SkywayNetwork::station(const std::string& id) const {
    auto it = station_index_.find(id);
    if (it == station_index_.end()) throw DataError("unknown station id: " + id);
    return stations_[it->second];
}

std::size_t SkywayNetwork::station_index(const std::string& id) const {
    auto it = station_index_.find(id);
    if (it == station_index_.end()) throw DataError("unknown station id: " + id);
    return it->second;
}

const Skyway& SkywayNetwork::skyway(std::int64_t id) const {
    auto it = skyway_index_.find(id);
    if (it == skyway_index_.end()) throw DataError("unknown skyway id: " + std::to_string(id));
    return skyways_[it->second];
}

std::vector<std::pair<const Skyway*, const Station*>>
SkywayNetwork::neighbors(const std::string& id) const {
    const std::size_t si = station_index(id);
    std::vector<std::pair<const Skyway*, const Station*>> out;
    out.reserve(adjacency_[si].size());
    for (std::size_t e : adjacency_[si]) {
        const Skyway& sw = skyways_[e];
        const std::string& other = sw.source == id ? sw.destination : sw.source;
        out.emplace_back(&sw, &stations_[station_index_.at(other)]);
    }
    return out;
}

std::vector<std::string> SkywayNetwork::major_station_ids() const {
    std::vector<std::string> out;
    for (const Station& st : stations_)
        if (st.is_major) out.push_back(st.id);
    return out;
}

std::string SkywayNetwork::to_json(const std::string& config_hash) const {
    nlohmann::ordered_json j;
    if (!config_hash.empty()) j["config"] = config_hash;
    j["stations"] = nlohmann::ordered_json::array();
    for (const Station& st : stations_) {
        j["stations"].push_back({{"id", st.id},
                                 {"lat", st.location.lat},
                                 {"lon", st.location.lon},
                                 {"is_major", st.is_major}});
    }
    j["skyways"] = nlohmann::ordered_json::array();
    for (const Skyway& sw : skyways_) {
        j["skyways"].push_back({{"id", sw.id},
                                {"source", sw.source},
                                {"destination", sw.destination},
                                {"distance_km", sw.distance_km},
                                {"compass_bearing", sw.bearing.degrees}});
    }
    return j.dump(2) + "\n";
}

SkywayNetwork SkywayNetwork::from_json(const std::string& text,
                                       std::function<void(const std::string&)> warn) {
    nlohmann::json j = nlohmann::json::parse(text);
    std::vector<Station> stations;
    for (const auto& s : j.at("stations"))
        stations.push_back(Station{s.at("id").get<std::string>(),
                                   {s.at("lat").get<double>(), s.at("lon").get<double>()},
                                   s.at("is_major").get<bool>()});
    std::vector<Skyway> skyways;
    for (const auto& s : j.at("skyways"))
        skyways.push_back(Skyway{s.at("id").get<std::int64_t>(), s.at("source").get<std::string>(),
                                 s.at("destination").get<std::string>(),
                                 s.at("distance_km").get<double>(),
                                 geo::Bearing::from_degrees(s.at("compass_bearing").get<double>())});
    return SkywayNetwork(std::move(stations), std::move(skyways), std::move(warn));
}

SkywayNetwork load_network(const std::string& stations_file, const std::string& skyways_file,
                           std::function<void(const std::string&)> warn) {
    std::vector<Station> stations;
    {
        CsvReader reader(stations_file, {"id", "lat", "lon", "is_major"});
        std::vector<std::string> f;
        while (reader.next(f)) {
            Station st;
            st.id = f[0];
            if (st.id.empty())
                throw ParseError(stations_file, reader.line_number(), "empty station id");
            if (st.id.find('-') != std::string::npos)
                throw ParseError(stations_file, reader.line_number(),
                                 "station id '" + st.id + "' must not contain '-'");
            st.location.lat = parse_double(f[1], stations_file, reader.line_number());
            st.location.lon = parse_double(f[2], stations_file, reader.line_number());
            if (!geo::valid(st.location))
                throw ParseError(stations_file, reader.line_number(),
                                 "coordinates out of range for station '" + st.id + "'");
            if (f[3] == "1" || f[3] == "true")
                st.is_major = true;
            else if (f[3] == "0" || f[3] == "false")
                st.is_major = false;
            else
                throw ParseError(stations_file, reader.line_number(),
                                 "invalid is_major '" + f[3] + "' (want 0/1/true/false)");
            stations.push_back(std::move(st));
        }
    }

    std::vector<Skyway> skyways;
    {
        CsvReader reader(skyways_file, {"id", "source", "destination", "distance_km", "compass_bearing"});
        std::vector<std::string> f;
        while (reader.next(f)) {
            Skyway sw;
            sw.id = parse_int(f[0], skyways_file, reader.line_number());
            sw.source = f[1];
            sw.destination = f[2];
            sw.distance_km = parse_double(f[3], skyways_file, reader.line_number());
            sw.bearing = geo::Bearing::from_degrees(
                parse_double(f[4], skyways_file, reader.line_number()));
            skyways.push_back(std::move(sw));
        }
    }

    return SkywayNetwork(std::move(stations), std::move(skyways), std::move(warn));
}

SkywayNetwork generate_network(std::size_t n_stations, std::size_t n_skyways,
                               const BoundingBox& bbox, std::uint64_t seed,
                               const GeneratorOptions& opts) {
    if (n_stations < 2) throw DataError("generate_network: need at least 2 stations");
    if (n_skyways + 1 < n_stations)
        throw DataError("generate_network: infeasible parameters (n_skyways < n_stations - 1)");
    if (!(bbox.lat_max > bbox.lat_min) || !(bbox.lon_max > bbox.lon_min))
        throw DataError("generate_network: empty bounding box");

    Rng rng(mix_seed(seed, "network"));

    std::vector<geo::GeoPoint> points(n_stations);
    for (auto& p : points) {
        p.lat = rng.uniform(bbox.lat_min, bbox.lat_max);
        p.lon = rng.uniform(bbox.lon_min, bbox.lon_max);
    }

    const std::size_t n_major =
        std::max<std::size_t>(2, static_cast<std::size_t>(std::llround(
                                     static_cast<double>(n_stations) * opts.major_fraction)));

    // Major stations are the network's service endpoints; pick them spread
    // across the region (farthest-point sampling seeded at the station
    // nearest the centroid).
    std::vector<char> is_major(n_stations, 0);
    {
        geo::GeoPoint centroid{0.0, 0.0};
        for (const auto& p : points) {
            centroid.lat += p.lat / static_cast<double>(n_stations);
            centroid.lon += p.lon / static_cast<double>(n_stations);
        }
        std::size_t first = 0;
        double best = std::numeric_limits<double>::max();
        for (std::size_t i = 0; i < n_stations; ++i) {
            const double d = geo::haversine_km(points[i], centroid);
            if (d < best) {
                best = d;
                first = i;
            }
        }
        std::vector<double> min_dist(n_stations, std::numeric_limits<double>::max());
        std::size_t current = first;
        is_major[current] = 1;
        for (std::size_t k = 1; k < n_major; ++k) {
            std::size_t far = 0;
            double far_dist = -1.0;
            for (std::size_t i = 0; i < n_stations; ++i) {
                min_dist[i] = std::min(min_dist[i], geo::haversine_km(points[i], points[current]));
                if (!is_major[i] && min_dist[i] > far_dist) {
                    far_dist = min_dist[i];
                    far = i;
                }
            }
            is_major[far] = 1;
            current = far;
        }
    }

    std::vector<Station> stations(n_stations);
    {
        std::size_t major_seq = 0, minor_seq = n_major;
        for (std::size_t i = 0; i < n_stations; ++i) {
            stations[i].location = points[i];
            stations[i].is_major = is_major[i] != 0;
            stations[i].id = is_major[i] ? letter_name(major_seq++)
                                         : opts.minor_prefix + std::to_string(++minor_seq);
        }
    }

    // Euclidean spanning tree (Prim) keeps edges geometrically local.
    std::vector<Skyway> skyways;
    skyways.reserve(n_skyways);
    std::vector<std::unordered_set<std::size_t>> linked(n_stations);
    auto add_edge = [&](std::size_t a, std::size_t b) {
        Skyway sw;
        sw.id = static_cast<std::int64_t>(skyways.size()) + 1;
        sw.source = stations[a].id;
        sw.destination = stations[b].id;
        sw.distance_km = geo::haversine_km(points[a], points[b]);
        sw.bearing = geo::compass_bearing(points[a], points[b]);
        skyways.push_back(std::move(sw));
        linked[a].insert(b);
        linked[b].insert(a);
    };

    {
        std::vector<char> in_tree(n_stations, 0);
        std::vector<double> best(n_stations, std::numeric_limits<double>::max());
        std::vector<std::size_t> parent(n_stations, 0);
        in_tree[0] = 1;
        for (std::size_t i = 1; i < n_stations; ++i) {
            best[i] = geo::haversine_km(points[0], points[i]);
            parent[i] = 0;
        }
        for (std::size_t step = 1; step < n_stations; ++step) {
            std::size_t next = 0;
            double next_dist = std::numeric_limits<double>::max();
            for (std::size_t i = 0; i < n_stations; ++i)
                if (!in_tree[i] && best[i] < next_dist) {
                    next_dist = best[i];
                    next = i;
                }
            in_tree[next] = 1;
            add_edge(parent[next], next);
            for (std::size_t i = 0; i < n_stations; ++i) {
                if (in_tree[i]) continue;
                const double d = geo::haversine_km(points[next], points[i]);
                if (d < best[i]) {
                    best[i] = d;
                    parent[i] = next;
                }
            }
        }
    }

    // Extra skyways: random station, linked to its nearest not-yet-adjacent
    // neighbor. Keeps the graph planar-ish rather than sprouting long chords.
    std::size_t attempts = 0;
    const std::size_t max_attempts = 64 * n_skyways + 1024;
    while (skyways.size() < n_skyways) {
        if (++attempts > max_attempts)
            throw DataError("generate_network: could not place all extra skyways (graph saturated)");
        const std::size_t a = static_cast<std::size_t>(rng.uniform_int(n_stations));
        std::size_t nearest = n_stations;
        double nearest_dist = std::numeric_limits<double>::max();
        for (std::size_t b = 0; b < n_stations; ++b) {
            if (b == a || linked[a].count(b)) continue;
            const double d = geo::haversine_km(points[a], points[b]);
            if (d < nearest_dist) {
                nearest_dist = d;
                nearest = b;
            }
        }
        if (nearest == n_stations) continue;
        add_edge(a, nearest);
    }

    return SkywayNetwork(std::move(stations), std::move(skyways));
}

void write_network_csv(const SkywayNetwork& net, const std::string& stations_file,
                       const std::string& skyways_file, const std::string& header_comment) {
    {
        std::ofstream out(stations_file);
        if (!out) throw DataError("cannot write file: " + stations_file);
        if (!header_comment.empty()) out << "# " << header_comment << "\n";
        out << "id,lat,lon,is_major\n";
        for (const Station& st : net.stations())
            out << st.id << ',' << format_double(st.location.lat) << ','
                << format_double(st.location.lon) << ',' << (st.is_major ? 1 : 0) << '\n';
    }
    {
        std::ofstream out(skyways_file);
        if (!out) throw DataError("cannot write file: " + skyways_file);
        if (!header_comment.empty()) out << "# " << header_comment << "\n";
        out << "id,source,destination,distance_km,compass_bearing\n";
        for (const Skyway& sw : net.skyways())
            out << sw.id << ',' << sw.source << ',' << sw.destination << ','
                << format_double(sw.distance_km) << ',' << format_double(sw.bearing.degrees)
                << '\n';
    }
}

} // namespace skyroute::net
