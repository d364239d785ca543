#include "skyroute/weather.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "skyroute/csv.hpp"
#include "skyroute/rng.hpp"

namespace skyroute::wx {

const std::array<const char*, kAttrCount> kAttrNames = {
    "temperature_c", "cloud_cover", "wind_speed_ms", "wind_bearing",
    "humidity",      "pressure_hpa", "dew_point_c",  "visibility_km",
};

Attr attr_from_name(const std::string& name) {
    for (std::size_t i = 0; i < kAttrCount; ++i)
        if (name == kAttrNames[i]) return static_cast<Attr>(i);
    throw DataError("unknown weather attribute: " + name);
}

double WeatherRecord::get(Attr a) const {
    switch (a) {
        case Attr::Temperature: return temperature_c;
        case Attr::CloudCover: return cloud_cover;
        case Attr::WindSpeed: return wind_speed_ms;
        case Attr::WindBearing: return wind_bearing;
        case Attr::Humidity: return humidity;
        case Attr::Pressure: return pressure_hpa;
        case Attr::DewPoint: return dew_point_c;
        case Attr::Visibility: return visibility_km;
    }
    throw DataError("invalid attribute");
}

void WeatherRecord::set(Attr a, double v) {
    switch (a) {
        case Attr::Temperature: temperature_c = v; return;
        case Attr::CloudCover: cloud_cover = v; return;
        case Attr::WindSpeed: wind_speed_ms = v; return;
        case Attr::WindBearing: wind_bearing = v; return;
        case Attr::Humidity: humidity = v; return;
        case Attr::Pressure: pressure_hpa = v; return;
        case Attr::DewPoint: dew_point_c = v; return;
        case Attr::Visibility: visibility_km = v; return;
    }
    throw DataError("invalid attribute");
}

void clamp_record(WeatherRecord& r) {
    r.cloud_cover = std::clamp(r.cloud_cover, 0.0, 1.0);
    r.humidity = std::clamp(r.humidity, 0.0, 1.0);
    r.wind_speed_ms = std::max(0.0, r.wind_speed_ms);
    r.visibility_km = std::max(0.0, r.visibility_km);
    r.pressure_hpa = std::max(0.0, r.pressure_hpa);
    r.wind_bearing = geo::normalize_bearing(r.wind_bearing);
}

WeatherRecord average_records(const WeatherRecord& a, const WeatherRecord& b) {
    WeatherRecord out = a;
    out.temperature_c = (a.temperature_c + b.temperature_c) / 2.0;
    out.cloud_cover = (a.cloud_cover + b.cloud_cover) / 2.0;
    out.wind_speed_ms = (a.wind_speed_ms + b.wind_speed_ms) / 2.0;
    out.humidity = (a.humidity + b.humidity) / 2.0;
    out.pressure_hpa = (a.pressure_hpa + b.pressure_hpa) / 2.0;
    out.dew_point_c = (a.dew_point_c + b.dew_point_c) / 2.0;
    out.visibility_km = (a.visibility_km + b.visibility_km) / 2.0;

    const double ba = a.wind_bearing * geo::kDegToRad;
    const double bb = b.wind_bearing * geo::kDegToRad;
    const double y = (std::sin(ba) + std::sin(bb)) / 2.0;
    const double x = (std::cos(ba) + std::cos(bb)) / 2.0;
    out.wind_bearing = (x == 0.0 && y == 0.0)
                           ? a.wind_bearing // directly opposed winds: keep one endpoint
                           : geo::normalize_bearing(std::atan2(y, x) * geo::kRadToDeg);
    return out;
}

void DeviationStats::set(const std::string& station, Attr a, const AttrStats& s) {
    per_station_[station][static_cast<std::size_t>(a)] = s;
}

bool DeviationStats::covers(const std::string& station) const {
    return per_station_.count(station) != 0;
}

const AttrStats& DeviationStats::get(const std::string& station, Attr a) const {
    auto it = per_station_.find(station);
    if (it == per_station_.end()) throw DataError("no deviation stats for station: " + station);
    return it->second[static_cast<std::size_t>(a)];
}

namespace {

double attr_error(Attr a, double forecast, double actual) {
    double d = forecast - actual;
    if (a == Attr::WindBearing) {
        // shortest signed angular difference, in (-180, 180]
        d = std::fmod(d, 360.0);
        if (d <= -180.0) d += 360.0;
        if (d > 180.0) d -= 360.0;
    }
    return d;
}

} // namespace

DeviationStats compute_deviation_stats(const std::vector<ForecastSeries>& series) {
    if (series.empty()) throw DataError("compute_deviation_stats: empty input");

    struct Accum {
        double sum = 0.0;
        double sum_sq = 0.0;
        std::size_t n = 0;
    };
    std::unordered_map<std::string, std::array<Accum, kAttrCount>> acc;

    for (const ForecastSeries& s : series) {
        if (s.forecasts.empty())
            throw DataError("compute_deviation_stats: series without forecasts for station " +
                            s.station);
        if (s.forecasts.size() > 24)
            throw DataError("compute_deviation_stats: more than 24 leads for station " + s.station);
        auto& a = acc[s.station];
        for (const auto& [lead, rec] : s.forecasts) {
            (void)lead;
            for (std::size_t i = 0; i < kAttrCount; ++i) {
                const Attr attr = static_cast<Attr>(i);
                const double d = attr_error(attr, rec.get(attr), s.actual.get(attr));
                a[i].sum += d;
                a[i].sum_sq += d * d;
                ++a[i].n;
            }
        }
    }

    DeviationStats out;
    for (const auto& [station, arr] : acc) {
        for (std::size_t i = 0; i < kAttrCount; ++i) {
            AttrStats st;
            st.n = arr[i].n;
            st.mean_error = arr[i].sum / static_cast<double>(arr[i].n);
            const double var =
                std::max(0.0, arr[i].sum_sq / static_cast<double>(arr[i].n) -
                                  st.mean_error * st.mean_error);
            st.std_error = std::sqrt(var);
            out.set(station, static_cast<Attr>(i), st);
        }
    }
    return out;
}

CertaintyMargin CertaintyMargin::pessimistic(double k) {
    CertaintyMargin cm;
    cm.k = k;
    cm.signs.fill(0);
    cm.signs[static_cast<std::size_t>(Attr::WindSpeed)] = +1;
    cm.signs[static_cast<std::size_t>(Attr::Visibility)] = -1;
    cm.signs[static_cast<std::size_t>(Attr::DewPoint)] = +1;
    cm.temperature_toward_limit = true;
    return cm;
}

WeatherRecord adjust_with_cm(const WeatherRecord& record, const DeviationStats& stats,
                             const CertaintyMargin& cm) {
    if (cm.k < 0.0) throw DataError("certainty margin k must be non-negative");
    if (!stats.covers(record.station))
        throw DataError("no deviation stats for station: " + record.station);

    WeatherRecord out = record;
    for (std::size_t i = 0; i < kAttrCount; ++i) {
        const Attr a = static_cast<Attr>(i);
        int sign = cm.signs[i];
        if (a == Attr::Temperature && cm.temperature_toward_limit) {
            const double up = std::abs(cm.temp_limit_hi - record.temperature_c);
            const double down = std::abs(record.temperature_c - cm.temp_limit_lo);
            sign = up <= down ? +1 : -1;
        }
        if (sign == 0) continue;
        const double sigma = stats.get(record.station, a).std_error;
        out.set(a, out.get(a) + static_cast<double>(sign) * cm.k * sigma);
    }
    clamp_record(out);
    return out;
}

void WeatherStore::add(const WeatherRecord& r) {
    auto [it, inserted] = by_station_[r.station].emplace(floor_hour(r.timestamp), r);
    (void)it;
    if (inserted) ++count_;
}

const WeatherRecord* WeatherStore::try_get(const std::string& station, Timestamp t) const {
    auto it = by_station_.find(station);
    if (it == by_station_.end()) return nullptr;
    auto jt = it->second.find(floor_hour(t));
    return jt == it->second.end() ? nullptr : &jt->second;
}

const WeatherRecord& WeatherStore::get(const std::string& station, Timestamp t) const {
    const WeatherRecord* r = try_get(station, t);
    if (!r)
        throw DataError("missing weather for station " + station + " at " +
                        format_iso8601(floor_hour(t)));
    return *r;
}

ErrorModel ErrorModel::default_model() {
    ErrorModel m;
    m.attrs[static_cast<std::size_t>(Attr::Temperature)] = {+0.8, 1.2};
    m.attrs[static_cast<std::size_t>(Attr::CloudCover)] = {0.0, 0.08};
    m.attrs[static_cast<std::size_t>(Attr::WindSpeed)] = {+0.5, 0.9};
    m.attrs[static_cast<std::size_t>(Attr::WindBearing)] = {0.0, 15.0};
    m.attrs[static_cast<std::size_t>(Attr::Humidity)] = {0.0, 0.05};
    m.attrs[static_cast<std::size_t>(Attr::Pressure)] = {0.0, 1.5};
    m.attrs[static_cast<std::size_t>(Attr::DewPoint)] = {-0.7, 1.0};
    m.attrs[static_cast<std::size_t>(Attr::Visibility)] = {+1.2, 0.9};
    return m;
}

ErrorModel ErrorModel::zero() { return ErrorModel{}; }

std::string ErrorModel::to_json() const {
    nlohmann::ordered_json j;
    for (std::size_t i = 0; i < kAttrCount; ++i)
        j[kAttrNames[i]] = {{"bias", attrs[i].bias}, {"sigma", attrs[i].sigma}};
    return j.dump(2) + "\n";
}

ErrorModel ErrorModel::from_json(const std::string& text) {
    ErrorModel m;
    nlohmann::json j = nlohmann::json::parse(text);
    for (auto it = j.begin(); it != j.end(); ++it) {
        const Attr a = attr_from_name(it.key());
        AttrErrorModel& e = m.attrs[static_cast<std::size_t>(a)];
        e.bias = it.value().at("bias").get<double>();
        e.sigma = it.value().at("sigma").get<double>();
        if (e.sigma < 0.0) throw DataError("error model sigma must be >= 0 for " + it.key());
    }
    return m;
}

namespace {

struct StationClimate {
    double temp_base;
    double temp_diurnal;
    double cloud_base;
    double wind_base;
    double wind_prevailing;
    double humidity_base;
    double visibility_base;
    double phase;
};

StationClimate station_climate(std::uint64_t seed, const std::string& station) {
    Rng rng(mix_seed(seed, "climate|" + station));
    StationClimate c;
    c.temp_base = 9.0 + rng.uniform01() * 6.0;
    c.temp_diurnal = 4.0 + rng.uniform01() * 3.0;
    c.cloud_base = 0.18 + rng.uniform01() * 0.22;
    c.wind_base = 2.5 + rng.uniform01() * 2.0;
    c.wind_prevailing = rng.uniform01() * 360.0;
    c.humidity_base = 0.48 + rng.uniform01() * 0.18;
    c.visibility_base = 10.8 + rng.uniform01() * 2.2;
    c.phase = rng.uniform01();
    return c;
}

// Conditions sit mostly inside the flight gates; the margins narrow on bad
// hours so widening the certainty margin starts shutting corridors.
WeatherRecord synth_actual(const StationClimate& c, const std::string& station, Timestamp t,
                           Rng& rng) {
    const double two_pi = 2.0 * geo::kPi;
    const double day_frac = static_cast<double>((t % kSecondsPerDay)) / kSecondsPerDay;
    const double year_frac =
        static_cast<double>((t % (365 * kSecondsPerDay))) / (365.0 * kSecondsPerDay);
    const double season = std::sin(two_pi * (year_frac + c.phase * 0.1));

    WeatherRecord r;
    r.station = station;
    r.timestamp = t;
    r.temperature_c = c.temp_base + 6.0 * season +
                      c.temp_diurnal * std::sin(two_pi * (day_frac - 0.42)) + rng.gaussian(0.0, 1.2);
    r.humidity = c.humidity_base + 0.14 * std::sin(two_pi * (day_frac + 0.08)) +
                 rng.gaussian(0.0, 0.07);
    r.dew_point_c = r.temperature_c - (1.0 - std::clamp(r.humidity, 0.0, 1.0)) * 22.0 +
                    rng.gaussian(0.0, 0.8);
    r.cloud_cover = c.cloud_base + 0.14 * std::sin(two_pi * (day_frac + c.phase)) +
                    0.06 * season + rng.gaussian(0.0, 0.1);
    r.wind_speed_ms = c.wind_base + 1.2 * std::sin(two_pi * (day_frac - 0.2)) +
                      rng.gaussian(0.0, 1.1);
    r.wind_bearing = c.wind_prevailing + 40.0 * std::sin(two_pi * day_frac) +
                     rng.gaussian(0.0, 25.0);
    r.pressure_hpa = 1013.0 - 6.0 * season + rng.gaussian(0.0, 3.0);
    r.visibility_km = c.visibility_base + 1.4 * std::sin(two_pi * (day_frac - 0.3)) +
                      rng.gaussian(0.0, 1.0);
    clamp_record(r);
    return r;
}

} // namespace

GeneratedWeather generate_weather(const net::SkywayNetwork& net,
                                  const std::vector<TimeRange>& ranges, const ErrorModel& model,
                                  std::uint64_t seed, int leads) {
    if (ranges.empty()) throw DataError("generate_weather: no time ranges");
    for (const TimeRange& r : ranges)
        if (!(r.end > r.start)) throw DataError("generate_weather: empty time range");
    if (leads < 0 || leads > 24) throw DataError("generate_weather: leads must be in [0, 24]");

    GeneratedWeather out;
    for (const net::Station& st : net.stations()) {
        const StationClimate climate = station_climate(seed, st.id);
        for (const TimeRange& range : ranges) {
            for (Timestamp t = floor_hour(range.start); t < range.end; t += kSecondsPerHour) {
                // One stream per (station, hour): generation order never
                // affects record contents.
                Rng rng(mix_seed(seed, "wx|" + st.id + "|" + std::to_string(t)));
                const WeatherRecord actual = synth_actual(climate, st.id, t, rng);
                out.actuals.add(actual);
                out.actual_records.push_back(actual);
                for (int lead = 1; lead <= leads; ++lead) {
                    const double lead_scale = std::sqrt(static_cast<double>(lead) / 24.0);
                    WeatherRecord f = actual;
                    for (std::size_t i = 0; i < kAttrCount; ++i) {
                        const AttrErrorModel& e = model.attrs[i];
                        if (e.bias == 0.0 && e.sigma == 0.0) continue;
                        const double err = e.bias + rng.gaussian(0.0, e.sigma * lead_scale);
                        f.set(static_cast<Attr>(i), f.get(static_cast<Attr>(i)) + err);
                    }
                    clamp_record(f);
                    out.forecasts.push_back(ForecastRecord{lead, f});
                }
            }
        }
    }
    return out;
}

namespace {

const std::vector<std::string> kActualHeader = {
    "station",  "timestamp_iso8601", "temperature_c", "cloud_cover",  "wind_speed_ms",
    "wind_bearing", "humidity",      "pressure_hpa",  "dew_point_c",  "visibility_km"};

void write_record_fields(std::ofstream& out, const WeatherRecord& r) {
    out << r.station << ',' << format_iso8601(r.timestamp) << ',' << format_double(r.temperature_c)
        << ',' << format_double(r.cloud_cover) << ',' << format_double(r.wind_speed_ms) << ','
        << format_double(r.wind_bearing) << ',' << format_double(r.humidity) << ','
        << format_double(r.pressure_hpa) << ',' << format_double(r.dew_point_c) << ','
        << format_double(r.visibility_km);
}

WeatherRecord parse_record_fields(const std::vector<std::string>& f, const std::string& path,
                                  std::size_t line) {
    WeatherRecord r;
    r.station = f[0];
    r.timestamp = parse_iso8601(f[1]);
    r.temperature_c = parse_double(f[2], path, line);
    r.cloud_cover = parse_double(f[3], path, line);
    r.wind_speed_ms = parse_double(f[4], path, line);
    r.wind_bearing = parse_double(f[5], path, line);
    r.humidity = parse_double(f[6], path, line);
    r.pressure_hpa = parse_double(f[7], path, line);
    r.dew_point_c = parse_double(f[8], path, line);
    r.visibility_km = parse_double(f[9], path, line);
    if (r.cloud_cover < 0.0 || r.cloud_cover > 1.0 || r.humidity < 0.0 || r.humidity > 1.0 ||
        r.wind_speed_ms < 0.0 || r.visibility_km < 0.0)
        throw ParseError(path, line, "weather record violates attribute ranges");
    return r;
}

} // namespace

void write_actuals_csv(const std::vector<WeatherRecord>& records, const std::string& path,
                       const std::string& header_comment) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    if (!header_comment.empty()) out << "# " << header_comment << "\n";
    for (std::size_t i = 0; i < kActualHeader.size(); ++i)
        out << (i ? "," : "") << kActualHeader[i];
    out << '\n';
    for (const WeatherRecord& r : records) {
        write_record_fields(out, r);
        out << '\n';
    }
}

void write_forecasts_csv(const std::vector<ForecastRecord>& records, const std::string& path,
                         const std::string& header_comment) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    if (!header_comment.empty()) out << "# " << header_comment << "\n";
    for (std::size_t i = 0; i < kActualHeader.size(); ++i)
        out << (i ? "," : "") << kActualHeader[i];
    out << ",lead_hours\n";
    for (const ForecastRecord& r : records) {
        write_record_fields(out, r.record);
        out << ',' << r.lead_hours << '\n';
    }
}

std::vector<WeatherRecord> load_actuals_csv(const std::string& path) {
    CsvReader reader(path, kActualHeader);
    std::vector<WeatherRecord> out;
    std::vector<std::string> f;
    while (reader.next(f)) out.push_back(parse_record_fields(f, path, reader.line_number()));
    return out;
}

std::vector<ForecastRecord> load_forecasts_csv(const std::string& path) {
    std::vector<std::string> header = kActualHeader;
    header.push_back("lead_hours");
    CsvReader reader(path, header);
    std::vector<ForecastRecord> out;
    std::vector<std::string> f;
    while (reader.next(f)) {
        ForecastRecord fr;
        fr.record = parse_record_fields(f, path, reader.line_number());
        fr.lead_hours =
            static_cast<int>(parse_int(f[10], path, reader.line_number()));
        if (fr.lead_hours < 1 || fr.lead_hours > 24)
            throw ParseError(path, reader.line_number(), "lead_hours out of range 1..24");
        out.push_back(std::move(fr));
    }
    return out;
}

std::vector<ForecastSeries> pair_series(const std::vector<WeatherRecord>& actuals,
                                        const std::vector<ForecastRecord>& forecasts,
                                        std::size_t* unpaired) {
    std::map<std::pair<std::string, Timestamp>, ForecastSeries> grouped;
    for (const WeatherRecord& a : actuals) {
        ForecastSeries& s = grouped[{a.station, a.timestamp}];
        s.station = a.station;
        s.target = a.timestamp;
        s.actual = a;
    }
    std::size_t dropped = 0;
    for (const ForecastRecord& f : forecasts) {
        auto it = grouped.find({f.record.station, f.record.timestamp});
        if (it == grouped.end()) {
            ++dropped;
            continue;
        }
        it->second.forecasts[f.lead_hours] = f.record;
    }
    if (unpaired) *unpaired = dropped;

    std::vector<ForecastSeries> out;
    out.reserve(grouped.size());
    for (auto& [key, s] : grouped) {
        (void)key;
        if (!s.forecasts.empty()) out.push_back(std::move(s));
    }
    return out;
}

} // namespace skyroute::wx
