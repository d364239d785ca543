#pragma once

#include <optional>
#include <string>
#include <vector>

#include "skyroute/geo.hpp"
#include "skyroute/weather.hpp"

namespace skyroute::aero {

struct DroneType {
    std::string name;
    double flight_time_min = 0.0; // battery budget per leg chain
    double speed_kmh = 0.0;
    double base_weight_kg = 0.0;
    double max_takeoff_kg = 0.0;
    double payload_kg = 0.0;
    double battery_mah = 0.0;
    double max_wind_kmh = 0.0;
    double temp_min_c = 0.0;
    double temp_max_c = 0.0;
    double maintenance_min = 0.0; // battery hot-swap duration

    void validate() const;
};

using Fleet = std::vector<DroneType>;

// The two reference drones the datasets are built with.
Fleet default_fleet();

Fleet load_fleet_json(const std::string& text);
std::string fleet_to_json(const Fleet& fleet);

// Still-air speed used before a concrete drone is chosen: the fleet mean.
double fleet_mean_speed_kmh(const Fleet& fleet);

// Capability envelope used when planning routes drone-agnostically: widest
// temperature range and the strongest wind resistance in the fleet (an edge
// is kept if any drone could fly it).
DroneType fleet_envelope(const Fleet& fleet);

// theta is the wind bearing relative to the track bearing; theta = 0 means
// the wind blows from dead ahead (headwind), theta = 180 dead astern.
struct WindDecomposition {
    double along_track_kmh = 0.0; // signed, positive = tailwind
    double crosswind_kmh = 0.0;   // >= 0
    double theta_deg = 0.0;       // [0, 360)
};

WindDecomposition decompose_wind(double wind_speed_kmh, geo::Bearing wind_bearing,
                                 geo::Bearing track_bearing);

constexpr double ms_to_kmh(double wind_speed_ms) { return wind_speed_ms * 3.6; }

enum class AirspeedMode {
    // Ground speed = drone speed + along-track component; crosswind ignored
    // for speed and only limits flyability.
    AlongTrackOnly,
    // Ground speed = sqrt(drone^2 - cross^2) + along-track: the drone crabs
    // into the crosswind to hold the track.
    WindTriangle,
};

// Effective ground speed along the track, floored at `min_ground_speed_kmh`
// so durations stay finite. Returns nullopt in WindTriangle mode when the
// crosswind exceeds what the drone can counter.
std::optional<double> drone_airspeed(double drone_speed_kmh, const WindDecomposition& wind,
                                     AirspeedMode mode, double min_ground_speed_kmh = 1.0);

double flight_duration_min(double distance_km, double ground_speed_kmh);

enum class FlyReason {
    None = 0,
    CloudCover,
    Temperature,
    Visibility,
    Humidity,
    DewPoint,
    Wind,
};

const char* to_string(FlyReason r);

struct Flyability {
    bool ok = true;
    FlyReason reason = FlyReason::None;

    explicit operator bool() const { return ok; }
};

// Weather gate over a CM-adjusted record. All conditions must hold; the
// first violated one (in gate order) is reported.
//   cloud cover < 0.5, temp within the drone's operating range (strict),
//   visibility > 5 km, humidity < 0.9, dew point < 21 C, wind (km/h) within
//   the drone's rated resistance.
Flyability is_flyable(const wx::WeatherRecord& adjusted, const DroneType& drone);

constexpr double kMaxCloudCover = 0.5;
constexpr double kMinVisibilityKm = 5.0;
constexpr double kMaxHumidity = 0.9;
constexpr double kMaxDewPointC = 21.0;

} // namespace skyroute::aero
