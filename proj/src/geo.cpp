#include "skyroute/geo.hpp"

namespace skyroute::geo {

double haversine_km(const GeoPoint& a, const GeoPoint& b) {
    require_valid(a, "haversine_km");
    require_valid(b, "haversine_km");

    const double lat1 = a.lat * kDegToRad;
    const double lat2 = b.lat * kDegToRad;
    const double dlat = (b.lat - a.lat) * kDegToRad;
    const double dlon = (b.lon - a.lon) * kDegToRad;

    const double sl = std::sin(dlat / 2.0);
    const double so = std::sin(dlon / 2.0);
    const double h = sl * sl + std::cos(lat1) * std::cos(lat2) * so * so;
    return 2.0 * kEarthRadiusKm * std::atan2(std::sqrt(h), std::sqrt(1.0 - h));
}

Bearing compass_bearing(const GeoPoint& a, const GeoPoint& b) {
    require_valid(a, "compass_bearing");
    require_valid(b, "compass_bearing");
    if (a == b) throw DataError("compass_bearing: coincident points");

    const double lat1 = a.lat * kDegToRad;
    const double lat2 = b.lat * kDegToRad;
    const double dlon = (b.lon - a.lon) * kDegToRad;

    const double y = std::sin(dlon) * std::cos(lat2);
    const double x = std::cos(lat1) * std::sin(lat2) - std::sin(lat1) * std::cos(lat2) * std::cos(dlon);
    return Bearing::from_degrees(std::atan2(y, x) * kRadToDeg);
}

} // namespace skyroute::geo
