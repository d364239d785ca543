#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "skyroute/geo.hpp"
#include "skyroute/network.hpp"
#include "skyroute/timeutil.hpp"

namespace skyroute::wx {

// The eight measured attributes, in CSV column order.
enum class Attr : std::size_t {
    Temperature = 0,
    CloudCover,
    WindSpeed,
    WindBearing,
    Humidity,
    Pressure,
    DewPoint,
    Visibility,
};

constexpr std::size_t kAttrCount = 8;
extern const std::array<const char*, kAttrCount> kAttrNames;

Attr attr_from_name(const std::string& name);

struct WeatherRecord {
    std::string station;
    Timestamp timestamp = 0; // UTC, hour-aligned
    double temperature_c = 0.0;
    double cloud_cover = 0.0;  // fraction [0,1]
    double wind_speed_ms = 0.0;
    double wind_bearing = 0.0; // compass degrees [0,360)
    double humidity = 0.0;     // fraction [0,1]
    double pressure_hpa = 1013.25;
    double dew_point_c = 0.0;
    double visibility_km = 10.0;

    double get(Attr a) const;
    void set(Attr a, double v);
};

// Re-clamp a record to its type invariants after any arithmetic on it.
void clamp_record(WeatherRecord& r);

// Attribute-wise mean of two station records; wind bearing uses the
// circular mean so that e.g. 350 and 10 average to 0, not 180.
WeatherRecord average_records(const WeatherRecord& a, const WeatherRecord& b);

// One historical forecast for (station, target hour) issued `lead_hours`
// (1..24) before the target.
struct ForecastRecord {
    int lead_hours = 0;
    WeatherRecord record;
};

struct ForecastSeries {
    std::string station;
    Timestamp target = 0;
    std::map<int, WeatherRecord> forecasts; // lead hour -> forecast, at most 24
    WeatherRecord actual;
};

struct AttrStats {
    double mean_error = 0.0; // mean of (forecast - actual)
    double std_error = 0.0;  // population standard deviation
    std::size_t n = 0;
};

class DeviationStats {
public:
    void set(const std::string& station, Attr a, const AttrStats& s);
    bool covers(const std::string& station) const;
    const AttrStats& get(const std::string& station, Attr a) const; // throws if missing

    const std::unordered_map<std::string, std::array<AttrStats, kAttrCount>>& all() const {
        return per_station_;
    }

private:
    std::unordered_map<std::string, std::array<AttrStats, kAttrCount>> per_station_;
};

// Pooled mean / population sigma of (forecast - actual) per station and
// attribute, across leads and timestamps. Wind-bearing differences are
// wrapped to (-180, 180]. Throws DataError on empty input or a series
// without forecasts.
DeviationStats compute_deviation_stats(const std::vector<ForecastSeries>& series);

// Forecast hedge: attribute value is shifted by sign * k * sigma. The signs
// follow the measured forecast biases and the gate directions: wind up,
// visibility down, dew point up; temperature moves toward the nearer
// operating limit; humidity and cloud cover are left untouched (their
// forecast errors hover around zero).
struct CertaintyMargin {
    double k = 2.0;
    std::array<int, kAttrCount> signs{};
    bool temperature_toward_limit = true;
    double temp_limit_lo = -20.0;
    double temp_limit_hi = 45.0;

    static CertaintyMargin pessimistic(double k);
};

WeatherRecord adjust_with_cm(const WeatherRecord& record, const DeviationStats& stats,
                             const CertaintyMargin& cm);

// Hour-indexed actual weather, write-once then read-only.
class WeatherStore {
public:
    void add(const WeatherRecord& r);
    const WeatherRecord* try_get(const std::string& station, Timestamp t) const;
    const WeatherRecord& get(const std::string& station, Timestamp t) const; // throws
    std::size_t size() const { return count_; }

private:
    std::unordered_map<std::string, std::unordered_map<Timestamp, WeatherRecord>> by_station_;
    std::size_t count_ = 0;
};

struct AttrErrorModel {
    double bias = 0.0;
    double sigma = 0.0;
};

struct ErrorModel {
    std::array<AttrErrorModel, kAttrCount> attrs{};

    // Bias signs match the measured forecast-vs-actual behaviour:
    // visibility, wind speed and temperature forecasts run high, dew point
    // runs low, humidity and cloud cover are unbiased.
    static ErrorModel default_model();
    static ErrorModel zero();

    std::string to_json() const;
    static ErrorModel from_json(const std::string& text);
};

struct TimeRange {
    Timestamp start = 0; // inclusive, hour-aligned
    Timestamp end = 0;   // exclusive
};

struct GeneratedWeather {
    WeatherStore actuals;
    std::vector<WeatherRecord> actual_records; // generation order, for serialization
    std::vector<ForecastRecord> forecasts;     // aligned 24-lead blocks per actual when leads > 0
};

// Deterministic synthetic weather: hourly actuals per station from seasonal
// and diurnal sinusoids plus seeded noise; per actual, `leads` forecasts at
// lead h with error bias + gaussian(0, sigma * sqrt(h / 24)).
GeneratedWeather generate_weather(const net::SkywayNetwork& net,
                                  const std::vector<TimeRange>& ranges,
                                  const ErrorModel& model, std::uint64_t seed, int leads = 24);

void write_actuals_csv(const std::vector<WeatherRecord>& records, const std::string& path,
                       const std::string& header_comment = {});
void write_forecasts_csv(const std::vector<ForecastRecord>& records, const std::string& path,
                         const std::string& header_comment = {});
std::vector<WeatherRecord> load_actuals_csv(const std::string& path);
std::vector<ForecastRecord> load_forecasts_csv(const std::string& path);

// Group flat forecast rows with their actuals; forecasts whose actual is
// missing are dropped and counted in `unpaired`.
std::vector<ForecastSeries> pair_series(const std::vector<WeatherRecord>& actuals,
                                        const std::vector<ForecastRecord>& forecasts,
                                        std::size_t* unpaired = nullptr);

} // namespace skyroute::wx
