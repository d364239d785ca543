// Command-line driver: dataset generation, planning, composition and the
// experiment reports, all reading/writing the CSV and JSON formats described
// in the README.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "skyroute/csv.hpp"
#include "skyroute/harness.hpp"

namespace fs = std::filesystem;
using namespace skyroute;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitPipeline = 3;

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spill(const std::string& path, const std::string& text) {
    fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    out << text;
}

struct GlobalOpts {
    std::string config_file;
    std::string out_dir;
    bool seed_set = false;
    std::uint64_t seed = 0;
    unsigned jobs = 0;

    harness::ExperimentConfig load() const {
        harness::ExperimentConfig cfg;
        cfg.time_ranges = harness::default_time_ranges();
        if (!config_file.empty()) cfg = harness::ExperimentConfig::from_json(slurp(config_file));
        if (seed_set) cfg.seed = seed;
        if (jobs) cfg.jobs = jobs;
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        return cfg;
    }
};

std::string out_path(const harness::ExperimentConfig& cfg, const std::string& name) {
    fs::create_directories(cfg.out_dir);
    return (fs::path(cfg.out_dir) / name).string();
}

void warn_line(const std::string& msg) { std::cerr << "warning: " << msg << "\n"; }

net::SkywayNetwork load_net_files(const std::string& stations, const std::string& skyways) {
    return net::load_network(stations, skyways, warn_line);
}

aero::Fleet fleet_from(const harness::ExperimentConfig& cfg) {
    if (cfg.fleet_file.empty()) return aero::default_fleet();
    return aero::load_fleet_json(slurp(cfg.fleet_file));
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"skyroute: drone delivery planning and composition over a skyway network"};
    app.require_subcommand(1);
    app.fallthrough(); // global flags may follow the subcommand

    GlobalOpts g;
    app.add_option("--config", g.config_file, "experiment config JSON");
    app.add_option("--out", g.out_dir, "output directory (default 'out')");
    app.add_option("--seed", g.seed, "seed override")->each([&](const std::string&) {
        g.seed_set = true;
    });
    app.add_option("--jobs", g.jobs, "worker threads for simulation");

    // ---- gen-network ----
    auto* gen_network = app.add_subcommand("gen-network", "generate a random skyway network");
    std::size_t arg_stations = 38, arg_skyways = 64;
    std::vector<double> arg_bbox;
    gen_network->add_option("--stations", arg_stations, "station count");
    gen_network->add_option("--skyways", arg_skyways, "skyway count");
    gen_network->add_option("--bbox", arg_bbox, "lat_min lat_max lon_min lon_max")->expected(4);

    // ---- gen-weather ----
    auto* gen_weather = app.add_subcommand("gen-weather", "generate synthetic weather");
    std::string arg_stations_file, arg_skyways_file, arg_error_model;
    int arg_leads = -1;
    gen_weather->add_option("--stations-file", arg_stations_file, "stations.csv");
    gen_weather->add_option("--skyways-file", arg_skyways_file, "skyways.csv");
    gen_weather->add_option("--error-model", arg_error_model, "error model JSON");
    gen_weather->add_option("--leads", arg_leads, "forecast leads per actual (0-24)");
    int arg_pad_hours = 12;
    gen_weather->add_option("--pad-hours", arg_pad_hours,
                            "extra hours past each range end so late services stay covered");

    // ---- gen-services ----
    auto* gen_services = app.add_subcommand("gen-services", "generate scheduled services");
    std::size_t arg_count = 0;
    gen_services->add_option("--stations-file", arg_stations_file, "stations.csv");
    gen_services->add_option("--skyways-file", arg_skyways_file, "skyways.csv");
    gen_services->add_option("--count", arg_count, "service count");

    // ---- simulate ----
    auto* simulate = app.add_subcommand("simulate", "simulate service movements under weather");
    std::string arg_services, arg_actuals, arg_forecasts;
    double arg_cm = -1.0;
    simulate->add_option("--stations-file", arg_stations_file, "stations.csv");
    simulate->add_option("--skyways-file", arg_skyways_file, "skyways.csv");
    simulate->add_option("--services", arg_services, "services.csv");
    simulate->add_option("--weather", arg_actuals, "weather_actual.csv");
    simulate->add_option("--forecasts", arg_forecasts, "weather_forecast.csv");
    simulate->add_option("--cm", arg_cm, "certainty margin k");

    // ---- plan ----
    auto* plan = app.add_subcommand("plan", "plan one route");
    std::string arg_src, arg_dst, arg_time;
    bool arg_baseline = false;
    plan->add_option("--src", arg_src, "source station")->required();
    plan->add_option("--dst", arg_dst, "destination station")->required();
    plan->add_option("--time", arg_time, "pickup time (ISO 8601)");
    plan->add_flag("--baseline", arg_baseline, "distance-only baseline planner");

    // ---- compose ----
    auto* compose = app.add_subcommand("compose", "compose services for delivery requests");
    std::string arg_pdrs_file, arg_features_out;
    std::size_t arg_gen_pdrs = 0;
    compose->add_option("--pdrs", arg_pdrs_file, "pdrs.csv (generated when --gen-pdrs is given)");
    compose->add_option("--gen-pdrs", arg_gen_pdrs, "generate this many requests first");
    compose->add_option("--features", arg_features_out, "also emit labeled features.csv");

    // ---- compare ----
    app.add_subcommand("compare", "compose the PDR batch under A* and the distance baseline");

    // ---- cm-sweep ----
    auto* cm_sweep_cmd = app.add_subcommand("cm-sweep", "error rates vs the CM2 baseline");
    std::vector<double> arg_cms;
    cm_sweep_cmd->add_option("--cms", arg_cms, "CM values")->delimiter(',');

    // ---- deviations ----
    auto* deviations = app.add_subcommand("deviations", "forecast deviation report");
    deviations->add_option("--weather", arg_actuals, "weather_actual.csv")->required();
    deviations->add_option("--forecasts", arg_forecasts, "weather_forecast.csv")->required();

    // ---- train ----
    auto* train_cmd = app.add_subcommand("train", "train a selection classifier");
    std::string arg_features_in, arg_classifier = "lr", arg_feature_set = "X5", arg_model_out;
    int arg_folds = 10;
    train_cmd->add_option("--features", arg_features_in, "features.csv")->required();
    train_cmd->add_option("--classifier", arg_classifier, "sgd | svm | lr | gnb");
    train_cmd->add_option("--feature-set", arg_feature_set, "X1..X5");
    train_cmd->add_option("--folds", arg_folds, "cross-validation folds");
    train_cmd->add_option("--model", arg_model_out, "model.json output path");

    // ---- predict ----
    auto* predict_cmd = app.add_subcommand("predict", "replay selections with a trained model");
    std::string arg_model_in;
    predict_cmd->add_option("--features", arg_features_in, "features.csv")->required();
    predict_cmd->add_option("--model", arg_model_in, "model.json")->required();

    // ---- bench ----
    app.add_subcommand("bench", "latency of spatiotemporal vs predictive composition");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        harness::ExperimentConfig cfg = g.load();
        const std::string tag = "config=" + cfg.hash();

        if (gen_network->parsed()) {
            cfg.stations = arg_stations;
            cfg.skyways = arg_skyways;
            if (!arg_bbox.empty())
                cfg.bbox = {arg_bbox[0], arg_bbox[1], arg_bbox[2], arg_bbox[3]};
            const net::SkywayNetwork network =
                net::generate_network(cfg.stations, cfg.skyways, cfg.bbox, cfg.seed);
            net::write_network_csv(network, out_path(cfg, "stations.csv"),
                                   out_path(cfg, "skyways.csv"), tag);
            spill(out_path(cfg, "network.json"), network.to_json(cfg.hash()));
            std::cout << "stations=" << network.stations().size()
                      << " skyways=" << network.skyways().size()
                      << " connected=" << (network.is_connected() ? "yes" : "no") << "\n";
            return kExitOk;
        }

        if (gen_weather->parsed()) {
            if (!arg_stations_file.empty()) cfg.stations_file = arg_stations_file;
            if (!arg_skyways_file.empty()) cfg.skyways_file = arg_skyways_file;
            if (!arg_error_model.empty()) cfg.error_model_file = arg_error_model;
            if (arg_leads >= 0) cfg.forecast_leads = arg_leads;
            if (cfg.stations_file.empty() || cfg.skyways_file.empty())
                throw DataError("gen-weather needs --stations-file and --skyways-file");
            const net::SkywayNetwork network = load_net_files(cfg.stations_file, cfg.skyways_file);
            wx::ErrorModel model = cfg.error_model_file.empty()
                                       ? wx::ErrorModel::default_model()
                                       : wx::ErrorModel::from_json(slurp(cfg.error_model_file));
            std::vector<wx::TimeRange> padded = cfg.time_ranges;
            for (wx::TimeRange& r : padded) r.end += arg_pad_hours * kSecondsPerHour;
            const wx::GeneratedWeather gw =
                wx::generate_weather(network, padded, model, cfg.seed, cfg.forecast_leads);
            wx::write_actuals_csv(gw.actual_records, out_path(cfg, "weather_actual.csv"), tag);
            wx::write_forecasts_csv(gw.forecasts, out_path(cfg, "weather_forecast.csv"), tag);
            std::cout << "actuals=" << gw.actual_records.size()
                      << " forecasts=" << gw.forecasts.size() << "\n";
            return kExitOk;
        }

        if (gen_services->parsed()) {
            if (!arg_stations_file.empty()) cfg.stations_file = arg_stations_file;
            if (!arg_skyways_file.empty()) cfg.skyways_file = arg_skyways_file;
            if (arg_count) cfg.services = arg_count;
            if (cfg.stations_file.empty() || cfg.skyways_file.empty())
                throw DataError("gen-services needs --stations-file and --skyways-file");
            const net::SkywayNetwork network = load_net_files(cfg.stations_file, cfg.skyways_file);
            sched::ServiceGenOptions opts;
            if (cfg.walk_greediness >= -1.0 && cfg.walk_greediness <= 1.0)
                opts.walk_greediness = cfg.walk_greediness;
            const std::vector<sched::Service> services = sched::generate_services(
                network, fleet_from(cfg), cfg.services, cfg.time_ranges, cfg.seed, opts);
            sched::write_services_csv(services, out_path(cfg, "services.csv"), tag);
            std::size_t segments = 0;
            for (const auto& s : services) segments += static_cast<std::size_t>(s.skyway_count);
            std::cout << "services=" << services.size() << " segments=" << segments << "\n";
            return kExitOk;
        }

        if (simulate->parsed()) {
            if (!arg_stations_file.empty()) cfg.stations_file = arg_stations_file;
            if (!arg_skyways_file.empty()) cfg.skyways_file = arg_skyways_file;
            if (arg_cm >= 0.0) cfg.cm_k = arg_cm;
            if (cfg.stations_file.empty() || cfg.skyways_file.empty() || arg_services.empty() ||
                arg_actuals.empty() || arg_forecasts.empty())
                throw DataError(
                    "simulate needs --stations-file, --skyways-file, --services, --weather and "
                    "--forecasts");
            const net::SkywayNetwork network = load_net_files(cfg.stations_file, cfg.skyways_file);
            const aero::Fleet fleet = fleet_from(cfg);
            const std::vector<sched::Service> services = sched::load_services_csv(arg_services);
            const std::vector<wx::WeatherRecord> actual_rows = wx::load_actuals_csv(arg_actuals);
            wx::WeatherStore store;
            for (const auto& r : actual_rows) store.add(r);
            const wx::DeviationStats stats = wx::compute_deviation_stats(
                wx::pair_series(actual_rows, wx::load_forecasts_csv(arg_forecasts)));
            const std::vector<sched::Movement> movements = sched::simulate_movements(
                services, network, fleet, store, stats, wx::CertaintyMargin::pessimistic(cfg.cm_k),
                aero::AirspeedMode::AlongTrackOnly, cfg.jobs);
            sched::write_movements_csv(movements, out_path(cfg, "movements.csv"), tag);
            std::cout << "movements=" << movements.size() << "\n";
            return kExitOk;
        }

        // The remaining commands run on the in-memory pipeline assembled
        // from the experiment config.
        if (plan->parsed()) {
            harness::Pipeline p = harness::build_pipeline(cfg);
            const Timestamp when =
                arg_time.empty() ? cfg.time_ranges.front().start : parse_iso8601(arg_time);
            std::optional<planner::Route> route;
            if (arg_baseline) {
                route = planner::plan_dijkstra_baseline(p.network, arg_src, arg_dst,
                                                        aero::fleet_mean_speed_kmh(p.fleet));
            } else {
                const planner::CostContext ctx = planner::CostContext::for_fleet(
                    p.weather.actuals, p.stats, wx::CertaintyMargin::pessimistic(cfg.cm_k),
                    p.fleet);
                route = planner::plan_astar(p.network, arg_src, arg_dst, when, ctx);
            }
            if (!route) {
                std::cerr << "error: no route from " << arg_src << " to " << arg_dst << "\n";
                return kExitPipeline;
            }
            std::cout << route->to_json() << "\n";
            return kExitOk;
        }

        if (compose->parsed()) {
            harness::Pipeline p = harness::build_pipeline(cfg);
            std::vector<composer::DeliveryRequest> pdrs;
            if (arg_gen_pdrs > 0) {
                cfg.pdrs = arg_gen_pdrs;
                pdrs = harness::generate_pdrs(p.network, cfg);
                composer::write_pdrs_csv(pdrs, out_path(cfg, "pdrs.csv"), tag);
            } else if (!arg_pdrs_file.empty()) {
                pdrs = composer::load_pdrs_csv(arg_pdrs_file);
                composer::sort_pdrs(pdrs);
            } else {
                throw DataError("compose needs --pdrs or --gen-pdrs");
            }

            const planner::CostContext ctx = planner::CostContext::for_fleet(
                p.weather.actuals, p.stats, wx::CertaintyMargin::pessimistic(cfg.cm_k), p.fleet);

            ml::CorpusBuilder corpus(p.network, p.weather.actuals, p.stats, ctx.cm);
            const composer::SelectionSink sink =
                arg_features_out.empty() ? composer::SelectionSink{} : corpus.sink();

            std::ostringstream plans;
            plans << "{\"config\":\"" << cfg.hash() << "\"}\n";
            std::size_t composed = 0;
            if (sink) {
                // feature extraction shares one corpus; keep the walk serial
                for (const composer::DeliveryRequest& pdr : pdrs) {
                    const composer::ComposeResult res =
                        composer::compose(pdr, p.network, p.store, ctx, cfg.window_min, sink);
                    composed += static_cast<std::size_t>(res.ok());
                    plans << res.to_json() << "\n";
                }
            } else {
                const std::vector<composer::ComposeResult> results = harness::compose_batch(
                    pdrs, p.network, p.store, ctx, cfg.window_min, cfg.jobs);
                for (const composer::ComposeResult& res : results) {
                    composed += static_cast<std::size_t>(res.ok());
                    plans << res.to_json() << "\n";
                }
            }
            spill(out_path(cfg, "plans.jsonl"), plans.str());
            if (!arg_features_out.empty())
                ml::write_features_csv(corpus.corpus(), arg_features_out, tag);
            std::cout << "pdrs=" << pdrs.size() << " composed=" << composed << "\n";
            return kExitOk;
        }

        if (app.get_subcommand("compare")->parsed()) {
            harness::Pipeline p = harness::build_pipeline(cfg);
            const planner::CostContext ctx = planner::CostContext::for_fleet(
                p.weather.actuals, p.stats, wx::CertaintyMargin::pessimistic(cfg.cm_k), p.fleet);
            const composer::PlannerComparison cmp =
                composer::compare_planners(p.pdrs, p.network, p.store, ctx, cfg.window_min);
            spill(out_path(cfg, "planner_tally.csv"), harness::comparison_to_csv(cmp, cfg.hash()));
            std::ostringstream rows;
            rows << "# config=" << cfg.hash() << "\n";
            rows << "pdr_id,astar_status,astar_count,astar_distance_km,astar_duration_min,"
                    "dijkstra_status,dijkstra_count,dijkstra_distance_km,dijkstra_duration_min\n";
            for (const auto& row : cmp.rows) {
                auto side = [&](const composer::ComposeResult& r) {
                    std::ostringstream s;
                    s << composer::to_string(r.status) << ",";
                    if (r.ok())
                        s << r.plan.service_count << "," << format_double(r.plan.total_distance_km)
                          << "," << format_double(r.plan.total_duration_min);
                    else
                        s << ",,";
                    return s.str();
                };
                rows << row.pdr_id << "," << side(row.astar) << "," << side(row.dijkstra) << "\n";
            }
            spill(out_path(cfg, "planner_comparison.csv"), rows.str());
            std::cout << "pdrs=" << cmp.rows.size() << " failures=" << cmp.failures << "\n";
            return kExitOk;
        }

        if (cm_sweep_cmd->parsed()) {
            if (!arg_cms.empty()) cfg.cm_sweep = arg_cms;
            harness::Pipeline p = harness::build_pipeline(cfg);
            const std::vector<harness::CmSweepRow> rows = harness::cm_sweep(p, cfg);
            spill(out_path(cfg, "cm_sweep.csv"), harness::cm_sweep_to_csv(rows, cfg.hash()));
            for (const auto& r : rows)
                std::cout << r.label << " dist=" << r.distance_error_pct
                          << "% dur=" << r.duration_error_pct << "% len=" << r.length_error_pct
                          << "% failures=" << r.failures << "\n";
            return kExitOk;
        }

        if (deviations->parsed()) {
            const std::vector<wx::WeatherRecord> actual_rows = wx::load_actuals_csv(arg_actuals);
            const harness::DeviationReport report =
                harness::deviation_report(actual_rows, wx::load_forecasts_csv(arg_forecasts));
            spill(out_path(cfg, "deviations_station.csv"),
                  harness::deviation_station_csv(report, cfg.hash()));
            spill(out_path(cfg, "deviations_lead.csv"),
                  harness::deviation_lead_csv(report, cfg.hash()));
            std::cout << "stations=" << report.per_station.all().size()
                      << " unpaired_skipped=" << report.unpaired << "\n";
            return kExitOk;
        }

        if (train_cmd->parsed()) {
            const ml::Corpus corpus = ml::load_features_csv(arg_features_in);
            const ml::TrainReport report =
                ml::train(corpus, ml::model_kind_from_name(arg_classifier),
                          ml::feature_set_from_name(arg_feature_set), arg_folds, cfg.seed);
            const std::string model_path =
                arg_model_out.empty() ? out_path(cfg, "model.json") : arg_model_out;
            spill(model_path, report.final_model.to_json(cfg.hash()));
            std::cout << "events=" << report.events << " rows=" << report.rows
                      << " cv_segment_accuracy=" << report.cv_segment_accuracy
                      << " cv_candidate_accuracy=" << report.cv_candidate_accuracy << "\n";
            return kExitOk;
        }

        if (predict_cmd->parsed()) {
            const ml::Corpus corpus = ml::load_features_csv(arg_features_in);
            const ml::TrainedModel model = ml::TrainedModel::from_json(slurp(arg_model_in));
            std::size_t events = 0, agree = 0;
            std::size_t begin = 0;
            std::ostringstream outrows;
            outrows << "# config=" << cfg.hash() << "\n";
            outrows << "event_id,predicted_service,label_service,agree\n";
            for (std::size_t i = 1; i <= corpus.size(); ++i) {
                if (i == corpus.size() || corpus[i].event_id != corpus[begin].event_id) {
                    std::vector<ml::ScoredCandidate> cands;
                    std::int64_t label_service = -1;
                    for (std::size_t r = begin; r < i; ++r) {
                        cands.push_back({corpus[r].service_id, corpus[r].departure,
                                         &corpus[r].features});
                        if (corpus[r].label) label_service = corpus[r].service_id;
                    }
                    const std::int64_t chosen = ml::predict_select(model, cands);
                    ++events;
                    agree += static_cast<std::size_t>(chosen == label_service);
                    outrows << corpus[begin].event_id << "," << chosen << "," << label_service
                            << "," << (chosen == label_service ? 1 : 0) << "\n";
                    begin = i;
                }
            }
            spill(out_path(cfg, "predictions.csv"), outrows.str());
            std::cout << "events=" << events << " agreement="
                      << (events ? static_cast<double>(agree) / static_cast<double>(events) : 0.0)
                      << "\n";
            return kExitOk;
        }

        if (app.get_subcommand("bench")->parsed()) {
            harness::Pipeline p = harness::build_pipeline(cfg);
            const planner::CostContext ctx = planner::CostContext::for_fleet(
                p.weather.actuals, p.stats, wx::CertaintyMargin::pessimistic(cfg.cm_k), p.fleet);

            ml::CorpusBuilder builder(p.network, p.weather.actuals, p.stats, ctx.cm);
            const composer::SelectionSink sink = builder.sink();
            for (const composer::DeliveryRequest& pdr : p.pdrs)
                composer::compose(pdr, p.network, p.store, ctx, cfg.window_min, sink);
            const ml::Corpus corpus = builder.take();
            if (corpus.empty()) throw DataError("bench: no selections to train on");

            const ml::TrainReport report = ml::train(corpus, ml::ModelKind::LogisticRegression,
                                                     ml::FeatureSet::X5, 10, cfg.seed);
            const ml::LatencyReport latency = ml::benchmark_latency(
                p.pdrs, p.network, p.store, ctx, cfg.window_min, report.final_model, corpus);
            spill(out_path(cfg, "bench.csv"),
                  "# config=" + cfg.hash() + "\n" + latency.to_csv());
            std::cout << "selections=" << latency.selections
                      << " composer_mean_us=" << latency.composer_mean_us
                      << " predictor_mean_us=" << latency.predictor_mean_us
                      << " planning_mean_us=" << latency.planning_mean_us << "\n";
            return kExitOk;
        }

        std::cerr << "error: unknown subcommand\n";
        return kExitUsage;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitPipeline;
    }
}
