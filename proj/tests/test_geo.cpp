#include <doctest.h>

#include "skyroute/geo.hpp"
#include "skyroute/rng.hpp"

using namespace skyroute;
using geo::GeoPoint;

namespace {

GeoPoint random_point(Rng& rng) {
    // keep away from the poles where bearings degenerate
    return {rng.uniform(-80.0, 80.0), rng.uniform(-180.0, 180.0)};
}

} // namespace

TEST_CASE("haversine identity and closed-form anchors") {
    const GeoPoint a{-37.8, 144.9};
    CHECK(geo::haversine_km(a, a) == 0.0);

    // one degree of longitude on the equator: 2*pi*R/360
    const double one_degree = 2.0 * geo::kPi * geo::kEarthRadiusKm / 360.0;
    CHECK(geo::haversine_km({0.0, 10.0}, {0.0, 11.0}) == doctest::Approx(one_degree).epsilon(1e-9));
    CHECK(geo::haversine_km({0.0, 10.0}, {0.0, 11.0}) == doctest::Approx(111.19).epsilon(1e-4));

    // antipodal points: half the great circle
    CHECK(geo::haversine_km({0.0, 0.0}, {0.0, 180.0}) ==
          doctest::Approx(geo::kPi * geo::kEarthRadiusKm).epsilon(1e-9));
    CHECK(geo::haversine_km({0.0, 0.0}, {0.0, 180.0}) == doctest::Approx(20015.1).epsilon(1e-5));
}

TEST_CASE("haversine symmetry and triangle inequality") {
    Rng rng(2024);
    for (int i = 0; i < 2000; ++i) {
        const GeoPoint a = random_point(rng);
        const GeoPoint b = random_point(rng);
        const GeoPoint c = random_point(rng);
        const double ab = geo::haversine_km(a, b);
        const double ba = geo::haversine_km(b, a);
        CHECK(ab == ba);
        CHECK(ab >= 0.0);
        CHECK(geo::haversine_km(a, c) <= ab + geo::haversine_km(b, c) + 1e-9);
    }
}

TEST_CASE("haversine rejects invalid points") {
    CHECK_THROWS_AS(geo::haversine_km({91.0, 0.0}, {0.0, 0.0}), DataError);
    CHECK_THROWS_AS(geo::haversine_km({0.0, 181.0}, {0.0, 0.0}), DataError);
}

TEST_CASE("compass bearing axis cases and oracle value") {
    CHECK(geo::compass_bearing({10.0, 20.0}, {11.0, 20.0}).degrees == doctest::Approx(0.0));
    CHECK(geo::compass_bearing({0.0, 20.0}, {0.0, 21.0}).degrees == doctest::Approx(90.0));
    CHECK(geo::compass_bearing({11.0, 20.0}, {10.0, 20.0}).degrees == doctest::Approx(180.0));
    CHECK(geo::compass_bearing({0.0, 21.0}, {0.0, 20.0}).degrees == doctest::Approx(270.0));

    // spherical-bearing oracle: atan2(sin dl cos lat2, cos lat1 sin lat2 - sin lat1 cos lat2 cos dl)
    const double lat2 = 1.0 * geo::kDegToRad, dl = 1.0 * geo::kDegToRad;
    const double oracle =
        std::atan2(std::sin(dl) * std::cos(lat2), std::sin(lat2)) * geo::kRadToDeg;
    const double got = geo::compass_bearing({0.0, 0.0}, {1.0, 1.0}).degrees;
    CHECK(got == doctest::Approx(oracle).epsilon(1e-12));
    CHECK(got == doctest::Approx(44.996).epsilon(2e-4));
}

TEST_CASE("compass bearing rejects coincident points") {
    CHECK_THROWS_AS(geo::compass_bearing({1.0, 2.0}, {1.0, 2.0}), DataError);
}

TEST_CASE("reverse bearing differs by 180 on the equator and shared meridians") {
    Rng rng(99);
    for (int i = 0; i < 200; ++i) {
        // shared meridian
        const double lon = rng.uniform(-180.0, 180.0);
        const double lat1 = rng.uniform(-80.0, 80.0);
        double lat2 = rng.uniform(-80.0, 80.0);
        if (lat1 == lat2) lat2 += 1.0;
        const double fwd = geo::compass_bearing({lat1, lon}, {lat2, lon}).degrees;
        const double rev = geo::compass_bearing({lat2, lon}, {lat1, lon}).degrees;
        CHECK(geo::normalize_bearing(rev - fwd) == doctest::Approx(180.0));

        // equator
        const double l1 = rng.uniform(-90.0, 90.0);
        const double l2 = l1 + rng.uniform(1.0, 60.0);
        const double f = geo::compass_bearing({0.0, l1}, {0.0, l2}).degrees;
        const double r = geo::compass_bearing({0.0, l2}, {0.0, l1}).degrees;
        CHECK(geo::normalize_bearing(r - f) == doctest::Approx(180.0));
    }
}

TEST_CASE("bearing normalization wraps into [0, 360)") {
    CHECK(geo::normalize_bearing(-90.0) == 270.0);
    CHECK(geo::normalize_bearing(360.0) == 0.0);
    CHECK(geo::normalize_bearing(725.0) == doctest::Approx(5.0));
    CHECK(geo::Bearing::from_degrees(6.0).reversed().degrees == doctest::Approx(186.0));
    CHECK(geo::Bearing::from_degrees(270.0).reversed().degrees == doctest::Approx(90.0));
}
