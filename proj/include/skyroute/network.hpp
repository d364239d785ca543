#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "skyroute/geo.hpp"

namespace skyroute::net {

struct Station {
    std::string id;
    geo::GeoPoint location;
    bool is_major = false;
};

// A fixed air corridor between two stations. Stored with the source->dest
// bearing; traversal is allowed in both directions (reverse uses
// bearing + 180 mod 360).
struct Skyway {
    std::int64_t id = 0;
    std::string source;
    std::string destination;
    double distance_km = 0.0;
    geo::Bearing bearing;
};

struct BoundingBox {
    double lat_min = 0.0;
    double lat_max = 0.0;
    double lon_min = 0.0;
    double lon_max = 0.0;
};

class SkywayNetwork {
public:
    SkywayNetwork() = default;
    SkywayNetwork(std::vector<Station> stations, std::vector<Skyway> skyways,
                  std::function<void(const std::string&)> warn = {});

    const std::vector<Station>& stations() const { return stations_; }
    const std::vector<Skyway>& skyways() const { return skyways_; }

    bool has_station(const std::string& id) const { return station_index_.count(id) != 0; }
    const Station& station(const std::string& id) const;
    std::size_t station_index(const std::string& id) const;

    const Skyway& skyway(std::int64_t id) const;

    // All skyways incident to the station, paired with the opposite endpoint.
    // Throws DataError for an unknown station id.
    std::vector<std::pair<const Skyway*, const Station*>> neighbors(const std::string& id) const;

    // Indices into skyways() of edges incident to station index si.
    const std::vector<std::size_t>& incident(std::size_t si) const { return adjacency_[si]; }

    std::vector<std::string> major_station_ids() const;

    bool is_connected() const { return connected_; }

    std::string to_json(const std::string& config_hash = {}) const;
    static SkywayNetwork from_json(const std::string& text,
                                   std::function<void(const std::string&)> warn = {});

private:
    std::vector<Station> stations_;
    std::vector<Skyway> skyways_;
    std::unordered_map<std::string, std::size_t> station_index_;
    std::unordered_map<std::int64_t, std::size_t> skyway_index_;
    std::vector<std::vector<std::size_t>> adjacency_;
    bool connected_ = true;
};

// CSV schemas: stations.csv `id,lat,lon,is_major`, skyways.csv
// `id,source,destination,distance_km,compass_bearing`. Stored distances and
// bearings are kept as loaded; discrepancies beyond 1% / 1 degree against
// the haversine values are reported through `warn`.
SkywayNetwork load_network(const std::string& stations_file, const std::string& skyways_file,
                           std::function<void(const std::string&)> warn = {});

struct GeneratorOptions {
    double major_fraction = 5.0 / 38.0; // the small network fixes 5 majors out of 38
    std::string minor_prefix = "DS_";
};

// Deterministic random network: stations uniform in bbox, edges form a
// Euclidean spanning tree plus nearest-neighbor extras, distances/bearings
// from the geo module. Requires n_skyways >= n_stations - 1.
SkywayNetwork generate_network(std::size_t n_stations, std::size_t n_skyways,
                               const BoundingBox& bbox, std::uint64_t seed,
                               const GeneratorOptions& opts = {});

void write_network_csv(const SkywayNetwork& net, const std::string& stations_file,
                       const std::string& skyways_file, const std::string& header_comment = {});

} // namespace skyroute::net
