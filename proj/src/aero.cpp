#include "skyroute/aero.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

namespace skyroute::aero {

void DroneType::validate() const {
    if (name.empty()) throw DataError("drone without a name");
    auto positive = [&](double v, const char* field) {
        if (!(v > 0.0))
            throw DataError("drone " + name + ": " + field + " must be positive");
    };
    positive(flight_time_min, "flight_time_min");
    positive(speed_kmh, "speed_kmh");
    positive(base_weight_kg, "base_weight_kg");
    positive(max_takeoff_kg, "max_takeoff_kg");
    positive(payload_kg, "payload_kg");
    positive(battery_mah, "battery_mah");
    positive(max_wind_kmh, "max_wind_kmh");
    positive(maintenance_min, "maintenance_min");
    if (!(temp_min_c < temp_max_c))
        throw DataError("drone " + name + ": temp_min_c must be below temp_max_c");
    if (payload_kg > max_takeoff_kg - base_weight_kg + 1e-9)
        throw DataError("drone " + name + ": payload exceeds max takeoff minus base weight");
}

Fleet default_fleet() {
    DroneType p4;
    p4.name = "P4-PRO";
    p4.flight_time_min = 30.0;
    p4.speed_kmh = 72.0;
    p4.base_weight_kg = 1.388;
    p4.max_takeoff_kg = 1.888;
    p4.payload_kg = 0.50;
    p4.battery_mah = 5870.0;
    p4.max_wind_kmh = 29.0; // rated 29-38 km/h; the conservative end
    p4.temp_min_c = 0.0;
    p4.temp_max_c = 40.0;
    p4.maintenance_min = 5.0;

    DroneType m200;
    m200.name = "M200";
    m200.flight_time_min = 38.0;
    m200.speed_kmh = 82.8;
    m200.base_weight_kg = 3.80;
    m200.max_takeoff_kg = 6.14;
    m200.payload_kg = 2.34;
    m200.battery_mah = 7660.0;
    m200.max_wind_kmh = 43.2;
    m200.temp_min_c = -20.0;
    m200.temp_max_c = 45.0;
    m200.maintenance_min = 15.0;

    Fleet fleet{p4, m200};
    for (const DroneType& d : fleet) d.validate();
    return fleet;
}

Fleet load_fleet_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    Fleet fleet;
    for (const auto& e : j) {
        DroneType d;
        d.name = e.at("name").get<std::string>();
        d.flight_time_min = e.at("flight_time_min").get<double>();
        d.speed_kmh = e.at("speed_kmh").get<double>();
        d.base_weight_kg = e.at("base_weight_kg").get<double>();
        d.max_takeoff_kg = e.at("max_takeoff_kg").get<double>();
        d.payload_kg = e.at("payload_kg").get<double>();
        d.battery_mah = e.at("battery_mah").get<double>();
        d.max_wind_kmh = e.at("max_wind_kmh").get<double>();
        d.temp_min_c = e.at("temp_min_c").get<double>();
        d.temp_max_c = e.at("temp_max_c").get<double>();
        d.maintenance_min = e.at("maintenance_min").get<double>();
        d.validate();
        fleet.push_back(std::move(d));
    }
    if (fleet.empty()) throw DataError("fleet file contains no drones");
    return fleet;
}

std::string fleet_to_json(const Fleet& fleet) {
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (const DroneType& d : fleet) {
        j.push_back({{"name", d.name},
                     {"flight_time_min", d.flight_time_min},
                     {"speed_kmh", d.speed_kmh},
                     {"base_weight_kg", d.base_weight_kg},
                     {"max_takeoff_kg", d.max_takeoff_kg},
                     {"payload_kg", d.payload_kg},
                     {"battery_mah", d.battery_mah},
                     {"max_wind_kmh", d.max_wind_kmh},
                     {"temp_min_c", d.temp_min_c},
                     {"temp_max_c", d.temp_max_c},
                     {"maintenance_min", d.maintenance_min}});
    }
    return j.dump(2) + "\n";
}

double fleet_mean_speed_kmh(const Fleet& fleet) {
    if (fleet.empty()) throw DataError("empty fleet");
    double sum = 0.0;
    for (const DroneType& d : fleet) sum += d.speed_kmh;
    return sum / static_cast<double>(fleet.size());
}

DroneType fleet_envelope(const Fleet& fleet) {
    if (fleet.empty()) throw DataError("empty fleet");
    DroneType env = fleet.front();
    env.name = "fleet-envelope";
    env.speed_kmh = fleet_mean_speed_kmh(fleet);
    for (const DroneType& d : fleet) {
        env.max_wind_kmh = std::max(env.max_wind_kmh, d.max_wind_kmh);
        env.temp_min_c = std::min(env.temp_min_c, d.temp_min_c);
        env.temp_max_c = std::max(env.temp_max_c, d.temp_max_c);
        env.flight_time_min = std::max(env.flight_time_min, d.flight_time_min);
        env.payload_kg = std::max(env.payload_kg, d.payload_kg);
    }
    return env;
}

WindDecomposition decompose_wind(double wind_speed_kmh, geo::Bearing wind_bearing,
                                 geo::Bearing track_bearing) {
    if (wind_speed_kmh < 0.0) throw DataError("negative wind speed");
    WindDecomposition w;
    w.theta_deg = geo::normalize_bearing(wind_bearing.degrees - track_bearing.degrees);
    const double theta = w.theta_deg * geo::kDegToRad;
    // theta = 0: wind from dead ahead, so the along-track component opposes
    // the drone.
    w.along_track_kmh = -wind_speed_kmh * std::cos(theta);
    w.crosswind_kmh = wind_speed_kmh * std::abs(std::sin(theta));
    return w;
}

std::optional<double> drone_airspeed(double drone_speed_kmh, const WindDecomposition& wind,
                                     AirspeedMode mode, double min_ground_speed_kmh) {
    if (!(drone_speed_kmh > 0.0)) throw DataError("drone speed must be positive");
    double ground = 0.0;
    switch (mode) {
        case AirspeedMode::AlongTrackOnly:
            ground = drone_speed_kmh + wind.along_track_kmh;
            break;
        case AirspeedMode::WindTriangle: {
            if (wind.crosswind_kmh > drone_speed_kmh) return std::nullopt;
            const double forward = std::sqrt(drone_speed_kmh * drone_speed_kmh -
                                             wind.crosswind_kmh * wind.crosswind_kmh);
            ground = forward + wind.along_track_kmh;
            break;
        }
    }
    return std::max(ground, min_ground_speed_kmh);
}

double flight_duration_min(double distance_km, double ground_speed_kmh) {
    if (distance_km < 0.0) throw DataError("negative distance");
    if (!(ground_speed_kmh > 0.0)) throw DataError("non-positive ground speed");
    return distance_km / ground_speed_kmh * 60.0;
}

const char* to_string(FlyReason r) {
    switch (r) {
        case FlyReason::None: return "none";
        case FlyReason::CloudCover: return "cloud_cover";
        case FlyReason::Temperature: return "temperature";
        case FlyReason::Visibility: return "visibility";
        case FlyReason::Humidity: return "humidity";
        case FlyReason::DewPoint: return "dew_point";
        case FlyReason::Wind: return "wind";
    }
    return "unknown";
}

Flyability is_flyable(const wx::WeatherRecord& adjusted, const DroneType& drone) {
    if (!(adjusted.cloud_cover < kMaxCloudCover)) return {false, FlyReason::CloudCover};
    if (!(adjusted.temperature_c > drone.temp_min_c && adjusted.temperature_c < drone.temp_max_c))
        return {false, FlyReason::Temperature};
    if (!(adjusted.visibility_km > kMinVisibilityKm)) return {false, FlyReason::Visibility};
    if (!(adjusted.humidity < kMaxHumidity)) return {false, FlyReason::Humidity};
    if (!(adjusted.dew_point_c < kMaxDewPointC)) return {false, FlyReason::DewPoint};
    if (!(ms_to_kmh(adjusted.wind_speed_ms) <= drone.max_wind_kmh)) return {false, FlyReason::Wind};
    return {true, FlyReason::None};
}

} // namespace skyroute::aero
