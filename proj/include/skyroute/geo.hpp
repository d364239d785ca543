#pragma once

#include <cmath>

#include "skyroute/errors.hpp"

namespace skyroute::geo {

constexpr double kPi = 3.14159265358979323846;
constexpr double kDegToRad = kPi / 180.0;
constexpr double kRadToDeg = 180.0 / kPi;

// Mean Earth radius (IUGG). The networks span tens of km, where the
// spherical-vs-ellipsoidal discrepancy is far below weather-induced
// uncertainty.
constexpr double kEarthRadiusKm = 6371.0088;

// Compass degrees normalized to [0, 360).
inline double normalize_bearing(double deg) {
    double b = std::fmod(deg, 360.0);
    if (b < 0.0) b += 360.0;
    if (b == 360.0) b = 0.0; // fmod can yield -0.0 -> 360.0 after the add
    return b;
}

struct Bearing {
    double degrees = 0.0; // always in [0, 360)

    static Bearing from_degrees(double deg) { return Bearing{normalize_bearing(deg)}; }
    Bearing reversed() const { return from_degrees(degrees + 180.0); }
};

struct GeoPoint {
    double lat = 0.0; // degrees, [-90, 90]
    double lon = 0.0; // degrees, [-180, 180]

    bool operator==(const GeoPoint& o) const { return lat == o.lat && lon == o.lon; }
};

inline bool valid(const GeoPoint& p) {
    return std::isfinite(p.lat) && std::isfinite(p.lon) && p.lat >= -90.0 && p.lat <= 90.0 &&
           p.lon >= -180.0 && p.lon <= 180.0;
}

inline void require_valid(const GeoPoint& p, const char* what) {
    if (!valid(p)) throw DataError(std::string(what) + ": coordinates out of range");
}

// Great-circle distance in km.
double haversine_km(const GeoPoint& a, const GeoPoint& b);

// Initial great-circle bearing from a toward b. Throws DataError when the
// points coincide (bearing undefined).
Bearing compass_bearing(const GeoPoint& a, const GeoPoint& b);

} // namespace skyroute::geo
