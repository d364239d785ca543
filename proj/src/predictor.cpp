#include "skyroute/predictor.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "skyroute/csv.hpp"
#include "skyroute/rng.hpp"

namespace skyroute::ml {

const char* to_string(FeatureSet s) {
    switch (s) {
        case FeatureSet::X1: return "X1";
        case FeatureSet::X2: return "X2";
        case FeatureSet::X3: return "X3";
        case FeatureSet::X4: return "X4";
        case FeatureSet::X5: return "X5";
    }
    return "?";
}

FeatureSet feature_set_from_name(const std::string& name) {
    for (FeatureSet s :
         {FeatureSet::X1, FeatureSet::X2, FeatureSet::X3, FeatureSet::X4, FeatureSet::X5})
        if (name == to_string(s)) return s;
    throw DataError("unknown feature set: " + name);
}

const char* to_string(ModelKind k) {
    switch (k) {
        case ModelKind::SgdLogistic: return "sgd";
        case ModelKind::LinearSvm: return "svm";
        case ModelKind::LogisticRegression: return "lr";
        case ModelKind::GaussianNB: return "gnb";
    }
    return "?";
}

ModelKind model_kind_from_name(const std::string& name) {
    for (ModelKind k : {ModelKind::SgdLogistic, ModelKind::LinearSvm,
                        ModelKind::LogisticRegression, ModelKind::GaussianNB})
        if (name == to_string(k)) return k;
    throw DataError("unknown classifier: " + name + " (want sgd, svm, lr or gnb)");
}

const std::vector<std::string>& full_feature_names() {
    static const std::vector<std::string> names = {
        // request block
        "pdr_pickup_lat", "pdr_pickup_lon", "pdr_dropoff_lat", "pdr_dropoff_lon",
        "pdr_weight_kg", "pdr_pickup_hour", "pdr_request_hour",
        // segment block
        "seg_source_lat", "seg_source_lon", "seg_dest_lat", "seg_dest_lon", "seg_distance_km",
        "seg_bearing_deg", "seg_index", "route_segments",
        // weather block (CM-adjusted, at the segment source)
        "wx_temperature_c", "wx_cloud_cover", "wx_wind_speed_ms", "wx_wind_bearing",
        "wx_humidity", "wx_pressure_hpa", "wx_dew_point_c", "wx_visibility_km",
        // spatiotemporal block
        "st_spatial_count", "st_temporal_count", "st_weight_count", "st_slack_min"};
    return names;
}

const std::vector<std::size_t>& feature_indices(FeatureSet set) {
    static const auto make_range = [](std::size_t a, std::size_t b) {
        std::vector<std::size_t> v;
        for (std::size_t i = a; i < b; ++i) v.push_back(i);
        return v;
    };
    static const std::vector<std::size_t> x1 = make_range(0, kPdrBlock);
    static const std::vector<std::size_t> x2 = make_range(0, kPdrBlock + kSegmentBlock);
    static const std::vector<std::size_t> x3 =
        make_range(0, kPdrBlock + kSegmentBlock + kWeatherBlock);
    static const std::vector<std::size_t> x4 = [] {
        std::vector<std::size_t> v = make_range(0, kPdrBlock + kSegmentBlock);
        for (std::size_t i = kPdrBlock + kSegmentBlock + kWeatherBlock; i < kFullFeatureCount; ++i)
            v.push_back(i);
        return v;
    }();
    static const std::vector<std::size_t> x5 = make_range(0, kFullFeatureCount);
    switch (set) {
        case FeatureSet::X1: return x1;
        case FeatureSet::X2: return x2;
        case FeatureSet::X3: return x3;
        case FeatureSet::X4: return x4;
        case FeatureSet::X5: return x5;
    }
    return x5;
}

FullFeatures extract_features(const composer::DeliveryRequest& pdr,
                              const geo::GeoPoint& pickup_loc, const geo::GeoPoint& dropoff_loc,
                              const SegmentContext& seg,
                              const wx::WeatherRecord& adjusted_source,
                              const AvailabilityCounts& counts) {
    FullFeatures f{};
    std::size_t i = 0;
    f[i++] = pickup_loc.lat;
    f[i++] = pickup_loc.lon;
    f[i++] = dropoff_loc.lat;
    f[i++] = dropoff_loc.lon;
    f[i++] = pdr.weight_kg;
    f[i++] = static_cast<double>(pdr.pickup_time) / 3600.0;
    f[i++] = static_cast<double>(pdr.request_time) / 3600.0;

    f[i++] = seg.source_loc.lat;
    f[i++] = seg.source_loc.lon;
    f[i++] = seg.dest_loc.lat;
    f[i++] = seg.dest_loc.lon;
    f[i++] = seg.distance_km;
    f[i++] = seg.bearing_deg;
    f[i++] = static_cast<double>(seg.segment_index);
    f[i++] = static_cast<double>(seg.route_segments);

    for (std::size_t a = 0; a < wx::kAttrCount; ++a)
        f[i++] = adjusted_source.get(static_cast<wx::Attr>(a));

    f[i++] = static_cast<double>(counts.spatial);
    f[i++] = static_cast<double>(counts.temporal);
    f[i++] = static_cast<double>(counts.weight);
    f[i++] = counts.slack_min;
    return f;
}

CorpusBuilder::CorpusBuilder(const net::SkywayNetwork& net, const wx::WeatherStore& weather,
                             const wx::DeviationStats& stats, const wx::CertaintyMargin& cm)
    : net_(net), weather_(weather), stats_(stats), cm_(cm) {}

composer::SelectionSink CorpusBuilder::sink() {
    return [this](const composer::SelectionContext& ctx) {
        const std::int64_t event = next_event_++;

        const net::Station& src = net_.station(ctx.from);
        const net::Station& dst = net_.station(ctx.to);
        const net::Station& pickup = net_.station(ctx.pdr->pickup_station);
        const net::Station& dropoff = net_.station(ctx.pdr->dropoff_station);

        SegmentContext seg;
        seg.source_loc = src.location;
        seg.dest_loc = dst.location;
        seg.segment_index = ctx.segment;
        seg.route_segments = static_cast<int>(ctx.route->segment_count());
        const planner::SegmentLeg& leg = ctx.route->per_segment[ctx.segment - 1];
        seg.distance_km = leg.distance_km;
        const net::Skyway& sw = net_.skyway(leg.skyway_id);
        seg.bearing_deg =
            ctx.from == sw.source ? sw.bearing.degrees : sw.bearing.reversed().degrees;

        wx::WeatherRecord source_wx = weather_.get(ctx.from, ctx.clock);
        const wx::WeatherRecord adjusted = wx::adjust_with_cm(source_wx, stats_, cm_);

        for (std::size_t k = 0; k < ctx.admissible.size(); ++k) {
            const composer::Candidate& c = ctx.admissible[k];
            AvailabilityCounts counts;
            counts.spatial = ctx.spatial_count;
            counts.temporal = ctx.temporal_count;
            counts.weight = ctx.weight_count;
            counts.slack_min = static_cast<double>(c.departure - ctx.clock) / 60.0;

            FeatureRow row;
            row.pdr_id = ctx.pdr->id;
            row.event_id = event;
            row.service_id = c.service_id;
            row.departure = c.departure;
            row.label = k == ctx.chosen ? 1 : 0;
            row.features = extract_features(*ctx.pdr, pickup.location, dropoff.location, seg,
                                            adjusted, counts);
            corpus_.push_back(std::move(row));
        }
    };
}

void write_features_csv(const Corpus& corpus, const std::string& path,
                        const std::string& header_comment) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    if (!header_comment.empty()) out << "# " << header_comment << "\n";
    out << "pdr_id,event_id,service_id,departure,label";
    for (const std::string& n : full_feature_names()) out << ',' << n;
    out << '\n';
    for (const FeatureRow& r : corpus) {
        out << r.pdr_id << ',' << r.event_id << ',' << r.service_id << ','
            << format_iso8601(r.departure) << ',' << r.label;
        for (double v : r.features) out << ',' << format_double(v);
        out << '\n';
    }
}

Corpus load_features_csv(const std::string& path) {
    std::vector<std::string> header = {"pdr_id", "event_id", "service_id", "departure", "label"};
    for (const std::string& n : full_feature_names()) header.push_back(n);
    CsvReader reader(path, header);
    Corpus out;
    std::vector<std::string> f;
    while (reader.next(f)) {
        FeatureRow r;
        r.pdr_id = parse_int(f[0], path, reader.line_number());
        r.event_id = parse_int(f[1], path, reader.line_number());
        r.service_id = parse_int(f[2], path, reader.line_number());
        r.departure = parse_iso8601(f[3]);
        r.label = static_cast<int>(parse_int(f[4], path, reader.line_number()));
        for (std::size_t i = 0; i < kFullFeatureCount; ++i)
            r.features[i] = parse_double(f[5 + i], path, reader.line_number());
        out.push_back(std::move(r));
    }
    return out;
}

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

struct EventGroup {
    std::vector<std::size_t> rows;
};

std::vector<EventGroup> group_events(const Corpus& corpus) {
    std::unordered_map<std::int64_t, std::size_t> index;
    std::vector<EventGroup> events;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        auto [it, inserted] = index.emplace(corpus[i].event_id, events.size());
        if (inserted) events.emplace_back();
        events[it->second].rows.push_back(i);
    }
    return events;
}

std::vector<std::vector<double>> slice_features(const Corpus& corpus,
                                                const std::vector<std::size_t>& idx) {
    std::vector<std::vector<double>> x(corpus.size(), std::vector<double>(idx.size()));
    for (std::size_t i = 0; i < corpus.size(); ++i)
        for (std::size_t j = 0; j < idx.size(); ++j) x[i][j] = corpus[i].features[idx[j]];
    return x;
}

void fit_normalization(const std::vector<std::vector<double>>& x,
                       const std::vector<std::size_t>& rows, std::vector<double>& mean,
                       std::vector<double>& stdev) {
    const std::size_t dim = x.empty() ? 0 : x[0].size();
    mean.assign(dim, 0.0);
    stdev.assign(dim, 1.0);
    if (rows.empty()) return;
    for (std::size_t r : rows)
        for (std::size_t j = 0; j < dim; ++j) mean[j] += x[r][j];
    for (std::size_t j = 0; j < dim; ++j) mean[j] /= static_cast<double>(rows.size());
    std::vector<double> var(dim, 0.0);
    for (std::size_t r : rows)
        for (std::size_t j = 0; j < dim; ++j) {
            const double d = x[r][j] - mean[j];
            var[j] += d * d;
        }
    for (std::size_t j = 0; j < dim; ++j) {
        var[j] /= static_cast<double>(rows.size());
        stdev[j] = var[j] > 1e-24 ? std::sqrt(var[j]) : 1.0;
    }
}

std::vector<double> normalized(const std::vector<double>& x, const std::vector<double>& mean,
                               const std::vector<double>& stdev) {
    std::vector<double> z(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) z[j] = (x[j] - mean[j]) / stdev[j];
    return z;
}

constexpr double kSgdStep = 0.01;
constexpr int kSgdEpochs = 20;
constexpr int kLrMaxIterations = 500;
constexpr double kLrTolerance = 1e-6;
constexpr double kGnbVarianceFloor = 1e-9;

void train_sgd(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
               const std::vector<std::size_t>& rows, bool hinge, std::uint64_t seed,
               std::vector<double>& w, double& b) {
    // width from a training row: rows outside the fold may be empty slots
    const std::size_t dim = rows.empty() ? 0 : x[rows.front()].size();
    w.assign(dim, 0.0);
    b = 0.0;
    std::vector<std::size_t> order(rows);
    Rng rng(seed);
    for (int epoch = 0; epoch < kSgdEpochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t r : order) {
            double z = b;
            for (std::size_t j = 0; j < dim; ++j) z += w[j] * x[r][j];
            if (hinge) {
                const double ys = y[r] ? 1.0 : -1.0;
                if (ys * z < 1.0) {
                    for (std::size_t j = 0; j < dim; ++j) w[j] += kSgdStep * ys * x[r][j];
                    b += kSgdStep * ys;
                }
            } else {
                const double g = sigmoid(z) - static_cast<double>(y[r]);
                for (std::size_t j = 0; j < dim; ++j) w[j] -= kSgdStep * g * x[r][j];
                b -= kSgdStep * g;
            }
        }
    }
}

void loss_and_grad_rows(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                        const std::vector<std::size_t>& rows, const std::vector<double>& w,
                        double b, double& loss, std::vector<double>& gw, double& gb) {
    const std::size_t dim = w.size();
    loss = 0.0;
    gw.assign(dim, 0.0);
    gb = 0.0;
    const double inv_n = 1.0 / static_cast<double>(rows.size());
    for (std::size_t r : rows) {
        double z = b;
        for (std::size_t j = 0; j < dim; ++j) z += w[j] * x[r][j];
        const double p = sigmoid(z);
        // numerically stable log-loss: log(1 + exp(-|z|)) + max(z,0) - z*y
        const double log1pexp = std::log1p(std::exp(-std::abs(z))) + std::max(z, 0.0);
        loss += (log1pexp - z * static_cast<double>(y[r])) * inv_n;
        const double g = (p - static_cast<double>(y[r])) * inv_n;
        for (std::size_t j = 0; j < dim; ++j) gw[j] += g * x[r][j];
        gb += g;
    }
}

void train_lr(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
              const std::vector<std::size_t>& rows, std::vector<double>& w, double& b) {
    const std::size_t dim = rows.empty() ? 0 : x[rows.front()].size();
    w.assign(dim, 0.0);
    b = 0.0;
    double loss;
    std::vector<double> gw;
    double gb;
    loss_and_grad_rows(x, y, rows, w, b, loss, gw, gb);
    for (int iter = 0; iter < kLrMaxIterations; ++iter) {
        double gmax = std::abs(gb);
        for (double g : gw) gmax = std::max(gmax, std::abs(g));
        if (gmax < kLrTolerance) break;

        // backtracking step on the full-batch gradient
        double step = 4.0;
        std::vector<double> w_try(dim);
        bool accepted = false;
        for (int half = 0; half < 40 && !accepted; ++half) {
            for (std::size_t j = 0; j < dim; ++j) w_try[j] = w[j] - step * gw[j];
            const double b_try = b - step * gb;
            double loss_try;
            std::vector<double> gw_try;
            double gb_try;
            loss_and_grad_rows(x, y, rows, w_try, b_try, loss_try, gw_try, gb_try);
            if (loss_try <= loss) {
                w = w_try;
                b = b_try;
                loss = loss_try;
                gw = std::move(gw_try);
                gb = gb_try;
                accepted = true;
            } else {
                step *= 0.5;
            }
        }
        if (!accepted) break; // gradient step no longer improves: converged numerically
    }
}

void train_gnb(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
               const std::vector<std::size_t>& rows, TrainedModel& m) {
    const std::size_t dim = x.empty() ? 0 : x[0].size();
    std::size_t n1 = 0;
    for (std::size_t r : rows) n1 += static_cast<std::size_t>(y[r]);
    const std::size_t n0 = rows.size() - n1;
    if (n0 == 0 || n1 == 0) throw DataError("train: single-class dataset");

    m.mu0.assign(dim, 0.0);
    m.mu1.assign(dim, 0.0);
    m.var0.assign(dim, 0.0);
    m.var1.assign(dim, 0.0);
    for (std::size_t r : rows) {
        auto& mu = y[r] ? m.mu1 : m.mu0;
        for (std::size_t j = 0; j < dim; ++j) mu[j] += x[r][j];
    }
    for (std::size_t j = 0; j < dim; ++j) {
        m.mu0[j] /= static_cast<double>(n0);
        m.mu1[j] /= static_cast<double>(n1);
    }
    for (std::size_t r : rows) {
        auto& mu = y[r] ? m.mu1 : m.mu0;
        auto& var = y[r] ? m.var1 : m.var0;
        for (std::size_t j = 0; j < dim; ++j) {
            const double d = x[r][j] - mu[j];
            var[j] += d * d;
        }
    }
    for (std::size_t j = 0; j < dim; ++j) {
        m.var0[j] = std::max(m.var0[j] / static_cast<double>(n0), kGnbVarianceFloor);
        m.var1[j] = std::max(m.var1[j] / static_cast<double>(n1), kGnbVarianceFloor);
    }
    m.log_prior0 = std::log(static_cast<double>(n0) / static_cast<double>(rows.size()));
    m.log_prior1 = std::log(static_cast<double>(n1) / static_cast<double>(rows.size()));
}

TrainedModel fit_rows(const Corpus& corpus, const std::vector<std::vector<double>>& x,
                      const std::vector<int>& y, const std::vector<std::size_t>& rows,
                      ModelKind kind, FeatureSet set, std::uint64_t seed) {
    if (rows.size() < 2) throw DataError("train: fold smaller than 2 samples");
    (void)corpus;
    std::size_t n1 = 0;
    for (std::size_t r : rows) n1 += static_cast<std::size_t>(y[r]);
    if (n1 == 0 || n1 == rows.size()) throw DataError("train: single-class dataset");

    TrainedModel m;
    m.kind = kind;
    m.set = set;
    const std::size_t dim = x.empty() ? 0 : x[0].size();

    if (kind == ModelKind::GaussianNB) {
        // GNB models raw per-feature gaussians; z-scaling would be folded
        // into the fitted parameters anyway.
        m.norm_mean.assign(dim, 0.0);
        m.norm_std.assign(dim, 1.0);
        train_gnb(x, y, rows, m);
        return m;
    }

    fit_normalization(x, rows, m.norm_mean, m.norm_std);
    std::vector<std::vector<double>> xz(x.size());
    for (std::size_t r : rows) xz[r] = normalized(x[r], m.norm_mean, m.norm_std);

    switch (kind) {
        case ModelKind::SgdLogistic:
            train_sgd(xz, y, rows, /*hinge=*/false, seed, m.weights, m.bias);
            break;
        case ModelKind::LinearSvm:
            train_sgd(xz, y, rows, /*hinge=*/true, seed, m.weights, m.bias);
            break;
        case ModelKind::LogisticRegression:
            train_lr(xz, y, rows, m.weights, m.bias);
            break;
        case ModelKind::GaussianNB:
            break;
    }
    return m;
}

} // namespace

std::pair<double, double> TrainedModel::posterior(const FullFeatures& x) const {
    const std::vector<std::size_t>& idx = feature_indices(set);
    if (kind == ModelKind::GaussianNB) {
        double l0 = log_prior0, l1 = log_prior1;
        for (std::size_t j = 0; j < idx.size(); ++j) {
            const double v = x[idx[j]];
            const double d0 = v - mu0[j];
            const double d1 = v - mu1[j];
            l0 += -0.5 * (std::log(2.0 * geo::kPi * var0[j]) + d0 * d0 / var0[j]);
            l1 += -0.5 * (std::log(2.0 * geo::kPi * var1[j]) + d1 * d1 / var1[j]);
        }
        // normalized in log space
        const double m = std::max(l0, l1);
        const double e0 = std::exp(l0 - m);
        const double e1 = std::exp(l1 - m);
        return {e0 / (e0 + e1), e1 / (e0 + e1)};
    }
    double z = bias;
    for (std::size_t j = 0; j < idx.size(); ++j)
        z += weights[j] * (x[idx[j]] - norm_mean[j]) / norm_std[j];
    const double p1 = sigmoid(z);
    return {1.0 - p1, p1};
}

double TrainedModel::score(const FullFeatures& x) const { return posterior(x).second; }

std::string TrainedModel::to_json(const std::string& config_hash) const {
    nlohmann::ordered_json j;
    if (!config_hash.empty()) j["config"] = config_hash;
    j["kind"] = to_string(kind);
    j["feature_set"] = to_string(set);
    const std::vector<std::size_t>& idx = feature_indices(set);
    std::vector<std::string> names;
    for (std::size_t i : idx) names.push_back(full_feature_names()[i]);
    j["features"] = names;
    j["norm_mean"] = norm_mean;
    j["norm_std"] = norm_std;
    if (kind == ModelKind::GaussianNB) {
        j["log_prior0"] = log_prior0;
        j["log_prior1"] = log_prior1;
        j["mu0"] = mu0;
        j["var0"] = var0;
        j["mu1"] = mu1;
        j["var1"] = var1;
    } else {
        j["weights"] = weights;
        j["bias"] = bias;
    }
    return j.dump(2) + "\n";
}

TrainedModel TrainedModel::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    TrainedModel m;
    m.kind = model_kind_from_name(j.at("kind").get<std::string>());
    m.set = feature_set_from_name(j.at("feature_set").get<std::string>());
    m.norm_mean = j.at("norm_mean").get<std::vector<double>>();
    m.norm_std = j.at("norm_std").get<std::vector<double>>();
    if (m.kind == ModelKind::GaussianNB) {
        m.log_prior0 = j.at("log_prior0").get<double>();
        m.log_prior1 = j.at("log_prior1").get<double>();
        m.mu0 = j.at("mu0").get<std::vector<double>>();
        m.var0 = j.at("var0").get<std::vector<double>>();
        m.mu1 = j.at("mu1").get<std::vector<double>>();
        m.var1 = j.at("var1").get<std::vector<double>>();
    } else {
        m.weights = j.at("weights").get<std::vector<double>>();
        m.bias = j.at("bias").get<double>();
    }
    return m;
}

void logistic_loss_grad(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                        const std::vector<double>& w, double b, double& loss,
                        std::vector<double>& grad_w, double& grad_b) {
    std::vector<std::size_t> rows(x.size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    loss_and_grad_rows(x, y, rows, w, b, loss, grad_w, grad_b);
}

std::vector<int> fold_assignment(std::size_t n_events, int folds, std::uint64_t seed) {
    std::vector<std::size_t> order(n_events);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(mix_seed(seed, "folds"));
    rng.shuffle(order);
    std::vector<int> fold_of_event(n_events);
    for (std::size_t i = 0; i < order.size(); ++i)
        fold_of_event[order[i]] = static_cast<int>(i % static_cast<std::size_t>(folds));
    return fold_of_event;
}

TrainReport train(const Corpus& corpus, ModelKind kind, FeatureSet set, int folds,
                  std::uint64_t seed) {
    if (folds < 2) throw DataError("train: need at least 2 folds");
    if (corpus.empty()) throw DataError("train: empty corpus");

    std::size_t positives = 0;
    for (const FeatureRow& r : corpus) positives += static_cast<std::size_t>(r.label != 0);
    if (positives == 0 || positives == corpus.size())
        throw DataError("train: single-class dataset");

    const std::vector<std::size_t>& idx = feature_indices(set);
    const std::vector<std::vector<double>> x = slice_features(corpus, idx);
    std::vector<int> y(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) y[i] = corpus[i].label ? 1 : 0;

    std::vector<EventGroup> events = group_events(corpus);
    if (static_cast<std::size_t>(folds) > events.size())
        throw DataError("train: more folds than selection events");

    const std::vector<int> fold_of_event = fold_assignment(events.size(), folds, seed);

    TrainReport report;
    report.events = events.size();
    report.rows = corpus.size();

    std::size_t correct_events = 0;
    std::size_t correct_rows = 0;
    for (int fold = 0; fold < folds; ++fold) {
        std::vector<std::size_t> train_rows;
        std::vector<std::size_t> test_events;
        for (std::size_t e = 0; e < events.size(); ++e) {
            if (fold_of_event[e] == fold) {
                test_events.push_back(e);
            } else {
                train_rows.insert(train_rows.end(), events[e].rows.begin(), events[e].rows.end());
            }
        }

        const TrainedModel model =
            fit_rows(corpus, x, y, train_rows, kind, set, mix_seed(seed, "sgd-fold") + fold);

        std::size_t fold_correct = 0;
        for (std::size_t e : test_events) {
            const EventGroup& ev = events[e];
            double best = -std::numeric_limits<double>::infinity();
            std::size_t best_row = corpus.size();
            bool tie = false;
            for (std::size_t r : ev.rows) {
                const double s = model.score(corpus[r].features);
                if (s > best) {
                    best = s;
                    best_row = r;
                    tie = false;
                } else if (s == best) {
                    tie = true;
                }
                const int predicted = s >= 0.5 ? 1 : 0;
                correct_rows += static_cast<std::size_t>(predicted == y[r]);
            }
            // a non-unique argmax has not selected anything
            if (!tie && best_row < corpus.size() && y[best_row] == 1) ++fold_correct;
        }
        correct_events += fold_correct;
        report.fold_segment_accuracy.push_back(
            test_events.empty() ? 0.0
                                : static_cast<double>(fold_correct) /
                                      static_cast<double>(test_events.size()));
        report.fold_models.push_back(model);
    }

    report.cv_segment_accuracy =
        static_cast<double>(correct_events) / static_cast<double>(events.size());
    report.cv_candidate_accuracy =
        static_cast<double>(correct_rows) / static_cast<double>(corpus.size());

    std::vector<std::size_t> all_rows(corpus.size());
    std::iota(all_rows.begin(), all_rows.end(), std::size_t{0});
    report.final_model = fit_rows(corpus, x, y, all_rows, kind, set, mix_seed(seed, "sgd-final"));
    return report;
}

std::int64_t predict_select(const TrainedModel& model,
                            const std::vector<ScoredCandidate>& candidates) {
    if (candidates.empty()) throw DataError("predict_select: no candidates");
    double best = -std::numeric_limits<double>::infinity();
    const ScoredCandidate* chosen = nullptr;
    for (const ScoredCandidate& c : candidates) {
        if (!c.features) throw DataError("predict_select: candidate without features");
        const double s = model.score(*c.features);
        if (!chosen || s > best ||
            (s == best && (c.departure < chosen->departure ||
                           (c.departure == chosen->departure &&
                            c.service_id < chosen->service_id)))) {
            best = s;
            chosen = &c;
        }
    }
    return chosen->service_id;
}

std::string LatencyReport::to_csv() const {
    std::string s = "path,selections,mean_us,p95_us\n";
    s += "spatiotemporal," + std::to_string(selections) + "," + format_double(composer_mean_us) +
         "," + format_double(composer_p95_us) + "\n";
    s += "predictive," + std::to_string(selections) + "," + format_double(predictor_mean_us) +
         "," + format_double(predictor_p95_us) + "\n";
    s += "route_planning_per_pdr," + std::to_string(pdrs) + "," +
         format_double(planning_mean_us) + ",\n";
    return s;
}

LatencyReport benchmark_latency(const std::vector<composer::DeliveryRequest>& pdrs,
                                const net::SkywayNetwork& net,
                                const composer::ServiceStore& store,
                                const planner::CostContext& ctx, double window_min,
                                const TrainedModel& model, const Corpus& corpus) {
    using Clock = std::chrono::steady_clock;
    LatencyReport report;
    report.pdrs = pdrs.size();
    if (pdrs.empty()) return report;

    // corpus rows grouped per pdr, in event order
    std::unordered_map<std::int64_t, std::vector<std::pair<std::size_t, std::size_t>>> events_of;
    {
        std::size_t begin = 0;
        for (std::size_t i = 1; i <= corpus.size(); ++i) {
            if (i == corpus.size() || corpus[i].event_id != corpus[begin].event_id) {
                events_of[corpus[begin].pdr_id].emplace_back(begin, i);
                begin = i;
            }
        }
    }

    std::vector<double> planning_us;
    std::vector<double> composer_us;  // per selection
    std::vector<double> predictor_us; // per selection
    std::size_t agreement = 0;

    for (const composer::DeliveryRequest& pdr : pdrs) {
        const auto t0 = Clock::now();
        std::optional<planner::Route> route =
            planner::plan_astar(net, pdr.pickup_station, pdr.dropoff_station, pdr.pickup_time, ctx);
        const auto t1 = Clock::now();
        planning_us.push_back(std::chrono::duration<double, std::micro>(t1 - t0).count());
        if (!route || route->segment_count() == 0) continue;

        const auto t2 = Clock::now();
        const composer::ComposeResult res =
            composer::compose_over_route(pdr, *route, store, window_min);
        const auto t3 = Clock::now();
        if (!res.ok()) continue;
        const std::size_t n_sel = res.plan.selections.size();
        const double per_sel_c =
            std::chrono::duration<double, std::micro>(t3 - t2).count() / static_cast<double>(n_sel);

        auto it = events_of.find(pdr.id);
        if (it == events_of.end() || it->second.empty()) continue;
        const auto& spans = it->second;

        std::vector<std::int64_t> predicted;
        predicted.reserve(spans.size());
        const auto t4 = Clock::now();
        for (const auto& [begin, end] : spans) {
            double best = -std::numeric_limits<double>::infinity();
            std::size_t best_row = corpus.size();
            for (std::size_t r = begin; r < end; ++r) {
                const double s = model.score(corpus[r].features);
                if (s > best ||
                    (s == best && best_row < corpus.size() &&
                     corpus[r].departure < corpus[best_row].departure)) {
                    best = s;
                    best_row = r;
                }
            }
            predicted.push_back(corpus[best_row].service_id);
        }
        const auto t5 = Clock::now();
        const double per_sel_p =
            std::chrono::duration<double, std::micro>(t5 - t4).count() /
            static_cast<double>(spans.size());

        for (std::size_t k = 0; k < n_sel; ++k) composer_us.push_back(per_sel_c);
        for (std::size_t k = 0; k < spans.size(); ++k) predictor_us.push_back(per_sel_p);
        report.selections += n_sel;

        for (std::size_t k = 0; k < std::min(spans.size(), n_sel); ++k)
            agreement += static_cast<std::size_t>(predicted[k] ==
                                                  res.plan.selections[k].service_id);
    }

    auto mean = [](const std::vector<double>& v) {
        if (v.empty()) return 0.0;
        return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    };
    auto p95 = [](std::vector<double> v) {
        if (v.empty()) return 0.0;
        std::sort(v.begin(), v.end());
        return v[static_cast<std::size_t>(0.95 * static_cast<double>(v.size() - 1))];
    };

    report.planning_mean_us = mean(planning_us);
    report.composer_mean_us = mean(composer_us);
    report.composer_p95_us = p95(composer_us);
    report.predictor_mean_us = mean(predictor_us);
    report.predictor_p95_us = p95(predictor_us);
    report.agreement = agreement;

    if (report.selections > 0 && !(report.predictor_mean_us < report.composer_mean_us))
        throw DataError("benchmark: predictive path was not faster per selection (" +
                        format_double(report.predictor_mean_us) + " us vs " +
                        format_double(report.composer_mean_us) + " us)");
    return report;
}

} // namespace skyroute::ml
