#include "skyroute/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "skyroute/csv.hpp"
#include "skyroute/rng.hpp"

namespace skyroute::harness {

std::vector<wx::TimeRange> default_time_ranges() {
    return {
        {timestamp_from_civil(2017, 11, 1), timestamp_from_civil(2017, 11, 10)},
        {timestamp_from_civil(2018, 5, 1), timestamp_from_civil(2018, 5, 10)},
    };
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
    ExperimentConfig cfg;
    cfg.time_ranges = default_time_ranges();
    nlohmann::json j = nlohmann::json::parse(text);
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("jobs")) cfg.jobs = j["jobs"].get<unsigned>();
    if (j.contains("out_dir")) cfg.out_dir = j["out_dir"].get<std::string>();
    if (j.contains("stations")) cfg.stations = j["stations"].get<std::size_t>();
    if (j.contains("skyways")) cfg.skyways = j["skyways"].get<std::size_t>();
    if (j.contains("bbox")) {
        const auto b = j["bbox"].get<std::vector<double>>();
        if (b.size() != 4) throw DataError("config bbox must be [lat_min, lat_max, lon_min, lon_max]");
        cfg.bbox = {b[0], b[1], b[2], b[3]};
    }
    if (j.contains("stations_file")) cfg.stations_file = j["stations_file"].get<std::string>();
    if (j.contains("skyways_file")) cfg.skyways_file = j["skyways_file"].get<std::string>();
    if (j.contains("fleet_file")) cfg.fleet_file = j["fleet_file"].get<std::string>();
    if (j.contains("time_ranges")) {
        cfg.time_ranges.clear();
        for (const auto& r : j["time_ranges"]) {
            if (!r.is_array() || r.size() != 2)
                throw DataError("config time_ranges entries must be [start, end]");
            cfg.time_ranges.push_back({parse_iso8601(r[0].get<std::string>()),
                                       parse_iso8601(r[1].get<std::string>())});
        }
    }
    if (j.contains("error_model_file"))
        cfg.error_model_file = j["error_model_file"].get<std::string>();
    if (j.contains("forecast_leads")) cfg.forecast_leads = j["forecast_leads"].get<int>();
    if (j.contains("services")) cfg.services = j["services"].get<std::size_t>();
    if (j.contains("walk_greediness")) cfg.walk_greediness = j["walk_greediness"].get<double>();
    if (j.contains("pdrs")) cfg.pdrs = j["pdrs"].get<std::size_t>();
    if (j.contains("pdr_endpoints")) cfg.pdr_endpoints = j["pdr_endpoints"].get<std::string>();
    if (j.contains("pdr_weight_min")) cfg.pdr_weight_min = j["pdr_weight_min"].get<double>();
    if (j.contains("pdr_weight_max")) cfg.pdr_weight_max = j["pdr_weight_max"].get<double>();
    if (j.contains("window_min")) cfg.window_min = j["window_min"].get<double>();
    if (j.contains("cm")) cfg.cm_k = j["cm"].get<double>();
    if (j.contains("cm_sweep")) cfg.cm_sweep = j["cm_sweep"].get<std::vector<double>>();
    return cfg;
}

std::string ExperimentConfig::to_json() const {
    nlohmann::ordered_json j;
    j["seed"] = seed;
    j["jobs"] = jobs;
    j["out_dir"] = out_dir;
    j["stations"] = stations;
    j["skyways"] = skyways;
    j["bbox"] = {bbox.lat_min, bbox.lat_max, bbox.lon_min, bbox.lon_max};
    if (!stations_file.empty()) j["stations_file"] = stations_file;
    if (!skyways_file.empty()) j["skyways_file"] = skyways_file;
    if (!fleet_file.empty()) j["fleet_file"] = fleet_file;
    j["time_ranges"] = nlohmann::ordered_json::array();
    for (const wx::TimeRange& r : time_ranges)
        j["time_ranges"].push_back({format_iso8601(r.start), format_iso8601(r.end)});
    if (!error_model_file.empty()) j["error_model_file"] = error_model_file;
    j["forecast_leads"] = forecast_leads;
    j["services"] = services;
    j["walk_greediness"] = walk_greediness;
    j["pdrs"] = pdrs;
    j["pdr_endpoints"] = pdr_endpoints;
    j["pdr_weight_min"] = pdr_weight_min;
    j["pdr_weight_max"] = pdr_weight_max;
    j["window_min"] = window_min;
    j["cm"] = cm_k;
    j["cm_sweep"] = cm_sweep;
    return j.dump();
}

std::string ExperimentConfig::hash() const {
    // identifies the experiment inputs; where artifacts land and how many
    // workers ran never changes the results
    ExperimentConfig canonical = *this;
    canonical.out_dir.clear();
    canonical.jobs = 1;
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(canonical.to_json())));
    return buf;
}

std::vector<composer::DeliveryRequest> generate_pdrs(const net::SkywayNetwork& net,
                                                     const ExperimentConfig& cfg) {
    std::vector<std::string> pool;
    if (cfg.pdr_endpoints == "majors") {
        pool = net.major_station_ids();
    } else if (cfg.pdr_endpoints == "all") {
        for (const net::Station& s : net.stations()) pool.push_back(s.id);
    } else {
        throw DataError("pdr_endpoints must be 'majors' or 'all'");
    }
    if (pool.size() < 2) throw DataError("generate_pdrs: need at least 2 endpoint stations");
    if (!(cfg.pdr_weight_max >= cfg.pdr_weight_min) || !(cfg.pdr_weight_min > 0.0))
        throw DataError("generate_pdrs: invalid weight band");

    std::vector<Timestamp> starts;
    std::vector<std::int64_t> minutes;
    std::int64_t total_minutes = 0;
    for (const wx::TimeRange& r : cfg.time_ranges) {
        starts.push_back(r.start);
        minutes.push_back((r.end - r.start) / 60);
        total_minutes += minutes.back();
    }

    Rng rng(mix_seed(cfg.seed, "pdrs"));
    std::vector<composer::DeliveryRequest> out;
    out.reserve(cfg.pdrs);
    for (std::size_t i = 0; i < cfg.pdrs; ++i) {
        composer::DeliveryRequest p;
        p.id = static_cast<std::int64_t>(i) + 1;
        const std::size_t a = rng.uniform_int(pool.size());
        std::size_t b = rng.uniform_int(pool.size() - 1);
        if (b >= a) ++b;
        p.pickup_station = pool[a];
        p.dropoff_station = pool[b];
        p.weight_kg = rng.uniform(cfg.pdr_weight_min, cfg.pdr_weight_max);

        std::int64_t m = static_cast<std::int64_t>(
            rng.uniform_int(static_cast<std::uint64_t>(total_minutes)));
        for (std::size_t r = 0; r < starts.size(); ++r) {
            if (m < minutes[r]) {
                p.pickup_time = starts[r] + m * 60;
                break;
            }
            m -= minutes[r];
        }
        p.request_time = p.pickup_time - static_cast<Timestamp>(rng.uniform_int(360)) * 60;
        p.validate();
        out.push_back(std::move(p));
    }
    composer::sort_pdrs(out);
    return out;
}

Pipeline build_pipeline(const ExperimentConfig& cfg) {
    Pipeline p;

    if (!cfg.stations_file.empty() && !cfg.skyways_file.empty()) {
        p.network = net::load_network(cfg.stations_file, cfg.skyways_file);
    } else {
        p.network = net::generate_network(cfg.stations, cfg.skyways, cfg.bbox, cfg.seed);
    }

    if (cfg.fleet_file.empty()) {
        p.fleet = aero::default_fleet();
    } else {
        std::ifstream in(cfg.fleet_file);
        if (!in) throw DataError("cannot open fleet file: " + cfg.fleet_file);
        std::stringstream ss;
        ss << in.rdbuf();
        p.fleet = aero::load_fleet_json(ss.str());
    }

    wx::ErrorModel model = wx::ErrorModel::default_model();
    if (!cfg.error_model_file.empty()) {
        std::ifstream in(cfg.error_model_file);
        if (!in) throw DataError("cannot open error model file: " + cfg.error_model_file);
        std::stringstream ss;
        ss << in.rdbuf();
        model = wx::ErrorModel::from_json(ss.str());
    }

    const std::vector<wx::TimeRange> ranges =
        cfg.time_ranges.empty() ? default_time_ranges() : cfg.time_ranges;

    sched::ServiceGenOptions gen_opts;
    if (cfg.walk_greediness >= -1.0 && cfg.walk_greediness <= 1.0)
        gen_opts.walk_greediness = cfg.walk_greediness;
    p.services = sched::generate_services(p.network, p.fleet, cfg.services, ranges, cfg.seed,
                                          gen_opts);

    // Itineraries starting near a range end keep flying past it (and bad
    // wind slows them further); cover them with a padded weather window.
    double longest_min = 0.0;
    for (const sched::Service& s : p.services)
        longest_min = std::max(longest_min, s.flying_duration_min + s.maintenance_min);
    const Timestamp pad =
        (static_cast<Timestamp>(longest_min * 3.0 / 60.0) + 4) * kSecondsPerHour;
    std::vector<wx::TimeRange> padded = ranges;
    for (wx::TimeRange& r : padded) r.end += pad;

    p.weather = wx::generate_weather(p.network, padded, model, cfg.seed, cfg.forecast_leads);
    p.stats = wx::compute_deviation_stats(
        wx::pair_series(p.weather.actual_records, p.weather.forecasts));

    p.movements = sched::simulate_movements(p.services, p.network, p.fleet, p.weather.actuals,
                                            p.stats, wx::CertaintyMargin::pessimistic(cfg.cm_k),
                                            aero::AirspeedMode::AlongTrackOnly, cfg.jobs);
    p.store = composer::ServiceStore(p.services, p.movements, p.fleet);
    p.pdrs = generate_pdrs(p.network, cfg);
    return p;
}

std::vector<composer::ComposeResult> compose_batch(
    const std::vector<composer::DeliveryRequest>& pdrs, const net::SkywayNetwork& net,
    const composer::ServiceStore& store, const planner::CostContext& ctx, double window_min,
    unsigned jobs) {
    std::vector<composer::ComposeResult> out(pdrs.size());
    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i)
            out[i] = composer::compose(pdrs[i], net, store, ctx, window_min);
    };
    if (jobs <= 1 || pdrs.size() < 2) {
        work(0, pdrs.size());
        return out;
    }
    const unsigned n_threads =
        std::min<unsigned>(jobs, std::max(1u, std::thread::hardware_concurrency()));
    std::vector<std::thread> threads;
    const std::size_t chunk = (pdrs.size() + n_threads - 1) / n_threads;
    for (unsigned t = 0; t < n_threads; ++t) {
        const std::size_t b = t * chunk;
        const std::size_t e = std::min(pdrs.size(), b + chunk);
        if (b < e) threads.emplace_back(work, b, e);
    }
    for (auto& th : threads) th.join();
    return out;
}

namespace {

struct Outcome {
    bool ok = false;
    double count = 0.0;
    double distance = 0.0;
    double duration = 0.0;
};

Outcome outcome_of(const composer::ComposeResult& r) {
    Outcome o;
    o.ok = r.ok();
    if (o.ok) {
        o.count = static_cast<double>(r.plan.service_count);
        o.distance = r.plan.total_distance_km;
        o.duration = r.plan.total_duration_min;
    }
    return o;
}

// A PDR "differs" in a measure when either side failed while the other
// composed, or the composed values disagree beyond tolerance.
void accumulate_diff(const Outcome& base, const Outcome& other, std::size_t& dist,
                     std::size_t& dur, std::size_t& len) {
    if (base.ok != other.ok) {
        ++dist;
        ++dur;
        ++len;
        return;
    }
    if (!base.ok) return; // both failed: nothing measurable differs
    if (std::abs(base.distance - other.distance) > 1e-9) ++dist;
    if (std::abs(base.duration - other.duration) > 1e-9) ++dur;
    if (std::abs(base.count - other.count) > 1e-9) ++len;
}

} // namespace

std::vector<CmSweepRow> cm_sweep(const Pipeline& p, const ExperimentConfig& cfg,
                                 std::size_t max_pdrs) {
    if (p.pdrs.empty()) throw DataError("cm_sweep: no PDRs");
    for (double k : cfg.cm_sweep)
        if (k < 0.0) throw DataError("cm_sweep: negative CM value");
    const std::size_t n_pdrs =
        max_pdrs == 0 ? p.pdrs.size() : std::min(max_pdrs, p.pdrs.size());

    auto compose_all = [&](const planner::CostContext& ctx) {
        std::vector<Outcome> out;
        out.reserve(n_pdrs);
        for (std::size_t i = 0; i < n_pdrs; ++i)
            out.push_back(outcome_of(composer::compose(p.pdrs[i], p.network, p.store, ctx,
                                                       cfg.window_min)));
        return out;
    };

    const planner::CostContext base_ctx = planner::CostContext::for_fleet(
        p.weather.actuals, p.stats, wx::CertaintyMargin::pessimistic(2.0), p.fleet);
    const std::vector<Outcome> baseline = compose_all(base_ctx);

    std::vector<CmSweepRow> rows;
    for (double k : cfg.cm_sweep) {
        planner::CostContext ctx = base_ctx;
        ctx.cm = wx::CertaintyMargin::pessimistic(k);
        const std::vector<Outcome> run = k == 2.0 ? baseline : compose_all(ctx);

        CmSweepRow row;
        row.cm_k = k;
        {
            std::ostringstream label;
            label << "CM" << k;
            row.label = label.str();
        }
        std::size_t dist = 0, dur = 0, len = 0;
        for (std::size_t i = 0; i < run.size(); ++i) {
            accumulate_diff(baseline[i], run[i], dist, dur, len);
            row.failures += static_cast<std::size_t>(!run[i].ok);
        }
        const double n = static_cast<double>(run.size());
        row.distance_error_pct = 100.0 * static_cast<double>(dist) / n;
        row.duration_error_pct = 100.0 * static_cast<double>(dur) / n;
        row.length_error_pct = 100.0 * static_cast<double>(len) / n;
        rows.push_back(std::move(row));
    }

    // weather-blind row: distance-optimal routes, same composition machinery
    {
        CmSweepRow row;
        row.label = "dijkstra";
        row.cm_k = -1.0;
        std::size_t dist = 0, dur = 0, len = 0;
        for (std::size_t i = 0; i < n_pdrs; ++i) {
            const composer::DeliveryRequest& pdr = p.pdrs[i];
            composer::ComposeResult res;
            std::optional<planner::Route> route = planner::plan_dijkstra_baseline(
                p.network, pdr.pickup_station, pdr.dropoff_station, base_ctx.speed_kmh);
            if (!route) {
                res.status = composer::ComposeStatus::NoRoute;
            } else {
                res = composer::compose_over_route(pdr, *route, p.store, cfg.window_min);
            }
            const Outcome o = outcome_of(res);
            accumulate_diff(baseline[i], o, dist, dur, len);
            row.failures += static_cast<std::size_t>(!o.ok);
        }
        const double n = static_cast<double>(n_pdrs);
        row.distance_error_pct = 100.0 * static_cast<double>(dist) / n;
        row.duration_error_pct = 100.0 * static_cast<double>(dur) / n;
        row.length_error_pct = 100.0 * static_cast<double>(len) / n;
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string cm_sweep_to_csv(const std::vector<CmSweepRow>& rows, const std::string& config_hash) {
    std::string s = "# config=" + config_hash + "\n";
    s += "label,cm_k,distance_error_pct,duration_error_pct,length_error_pct,failed_pdrs\n";
    for (const CmSweepRow& r : rows) {
        s += r.label + "," + (r.cm_k < 0.0 ? std::string("") : format_double(r.cm_k)) + "," +
             format_double(r.distance_error_pct) + "," + format_double(r.duration_error_pct) +
             "," + format_double(r.length_error_pct) + "," + std::to_string(r.failures) + "\n";
    }
    return s;
}

DeviationReport deviation_report(const std::vector<wx::WeatherRecord>& actuals,
                                 const std::vector<wx::ForecastRecord>& forecasts) {
    DeviationReport report;
    const std::vector<wx::ForecastSeries> series =
        wx::pair_series(actuals, forecasts, &report.unpaired);
    if (series.empty()) throw DataError("deviation_report: no paired forecast/actual data");
    report.per_station = wx::compute_deviation_stats(series);

    struct Accum {
        double sum = 0.0, sum_sq = 0.0;
        std::size_t n = 0;
    };
    std::map<std::pair<int, std::size_t>, Accum> acc;
    for (const wx::ForecastSeries& s : series) {
        for (const auto& [lead, rec] : s.forecasts) {
            for (std::size_t a = 0; a < wx::kAttrCount; ++a) {
                double d = rec.get(static_cast<wx::Attr>(a)) - s.actual.get(static_cast<wx::Attr>(a));
                if (static_cast<wx::Attr>(a) == wx::Attr::WindBearing) {
                    d = std::fmod(d, 360.0);
                    if (d <= -180.0) d += 360.0;
                    if (d > 180.0) d -= 360.0;
                }
                Accum& v = acc[{lead, a}];
                v.sum += d;
                v.sum_sq += d * d;
                ++v.n;
            }
        }
    }
    for (const auto& [key, v] : acc) {
        DeviationReport::LeadRow row;
        row.lead_hours = key.first;
        row.attr = static_cast<wx::Attr>(key.second);
        row.mean_error = v.sum / static_cast<double>(v.n);
        row.std_error = std::sqrt(
            std::max(0.0, v.sum_sq / static_cast<double>(v.n) - row.mean_error * row.mean_error));
        row.n = v.n;
        report.per_lead.push_back(row);
    }
    return report;
}

std::string deviation_station_csv(const DeviationReport& r, const std::string& config_hash) {
    std::string s = "# config=" + config_hash + "\n";
    s += "station,attribute,mean_error,std_error,n\n";
    std::vector<std::string> stations;
    for (const auto& [station, arr] : r.per_station.all()) {
        (void)arr;
        stations.push_back(station);
    }
    std::sort(stations.begin(), stations.end());
    for (const std::string& station : stations) {
        for (std::size_t a = 0; a < wx::kAttrCount; ++a) {
            const wx::AttrStats& st = r.per_station.get(station, static_cast<wx::Attr>(a));
            s += station + "," + wx::kAttrNames[a] + "," + format_double(st.mean_error) + "," +
                 format_double(st.std_error) + "," + std::to_string(st.n) + "\n";
        }
    }
    return s;
}

std::string deviation_lead_csv(const DeviationReport& r, const std::string& config_hash) {
    std::string s = "# config=" + config_hash + "\n";
    s += "lead_hours,attribute,mean_error,std_error,n\n";
    for (const auto& row : r.per_lead) {
        s += std::to_string(row.lead_hours) + "," +
             wx::kAttrNames[static_cast<std::size_t>(row.attr)] + "," +
             format_double(row.mean_error) + "," + format_double(row.std_error) + "," +
             std::to_string(row.n) + "\n";
    }
    return s;
}

std::string comparison_to_csv(const composer::PlannerComparison& cmp,
                              const std::string& config_hash) {
    std::string s = "# config=" + config_hash + "\n";
    s += "measure,equal,astar_more,dijkstra_more\n";
    auto line = [&](const char* name, const composer::Tally& t) {
        s += std::string(name) + "," + std::to_string(t.equal) + "," +
             std::to_string(t.astar_more) + "," + std::to_string(t.dijkstra_more) + "\n";
    };
    line("service_counts", cmp.counts);
    line("distances", cmp.distances);
    line("flying_durations", cmp.durations);
    return s;
}

} // namespace skyroute::harness
