#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "skyroute/composer.hpp"

namespace skyroute::ml {

// Cumulative feature blocks extracted per candidate selection:
//   request (7), segment (8), weather at the segment source (8),
//   spatiotemporal availability (4). The named sets slice the full vector.
constexpr std::size_t kPdrBlock = 7;
constexpr std::size_t kSegmentBlock = 8;
constexpr std::size_t kWeatherBlock = 8;
constexpr std::size_t kSpatioTemporalBlock = 4;
constexpr std::size_t kFullFeatureCount =
    kPdrBlock + kSegmentBlock + kWeatherBlock + kSpatioTemporalBlock;

using FullFeatures = std::array<double, kFullFeatureCount>;

enum class FeatureSet { X1, X2, X3, X4, X5 };

const char* to_string(FeatureSet s);
FeatureSet feature_set_from_name(const std::string& name);
const std::vector<std::string>& full_feature_names();
const std::vector<std::size_t>& feature_indices(FeatureSet set);

struct SegmentContext {
    geo::GeoPoint source_loc;
    geo::GeoPoint dest_loc;
    double distance_km = 0.0;
    double bearing_deg = 0.0; // direction of travel
    int segment_index = 0;    // 1-based within the route
    int route_segments = 0;
};

struct AvailabilityCounts {
    std::size_t spatial = 0;  // services ever flying this directed segment
    std::size_t temporal = 0; // of those, departing within the domain
    std::size_t weight = 0;   // of those, able to carry the package
    double slack_min = 0.0;   // candidate departure minus clock
};

FullFeatures extract_features(const composer::DeliveryRequest& pdr,
                              const geo::GeoPoint& pickup_loc, const geo::GeoPoint& dropoff_loc,
                              const SegmentContext& seg,
                              const wx::WeatherRecord& adjusted_source,
                              const AvailabilityCounts& counts);

struct FeatureRow {
    std::int64_t pdr_id = 0;
    std::int64_t event_id = 0; // selection-event ordinal; the grouping key
    std::int64_t service_id = 0;
    Timestamp departure = 0;
    int label = 0; // 1 when this candidate was the composer's choice
    FullFeatures features{};
};

using Corpus = std::vector<FeatureRow>;

void write_features_csv(const Corpus& corpus, const std::string& path,
                        const std::string& header_comment = {});
Corpus load_features_csv(const std::string& path);

// Builds labeled rows while the composer runs: wrap the returned sink into
// compose(). One event per composed segment, one row per admissible
// candidate; the weather block is sampled at the segment source at the
// rolling-clock hour.
class CorpusBuilder {
public:
    CorpusBuilder(const net::SkywayNetwork& net, const wx::WeatherStore& weather,
                  const wx::DeviationStats& stats, const wx::CertaintyMargin& cm);

    composer::SelectionSink sink();
    const Corpus& corpus() const { return corpus_; }
    Corpus take() { return std::move(corpus_); }

private:
    const net::SkywayNetwork& net_;
    const wx::WeatherStore& weather_;
    const wx::DeviationStats& stats_;
    const wx::CertaintyMargin& cm_;
    Corpus corpus_;
    std::int64_t next_event_ = 0;
};

enum class ModelKind { SgdLogistic, LinearSvm, LogisticRegression, GaussianNB };

const char* to_string(ModelKind k);
ModelKind model_kind_from_name(const std::string& name);

struct TrainedModel {
    ModelKind kind = ModelKind::LogisticRegression;
    FeatureSet set = FeatureSet::X5;

    // z-normalization fitted on the training rows (identity for GNB)
    std::vector<double> norm_mean;
    std::vector<double> norm_std;

    // linear kinds
    std::vector<double> weights;
    double bias = 0.0;

    // gaussian naive bayes
    double log_prior0 = 0.0;
    double log_prior1 = 0.0;
    std::vector<double> mu0, var0, mu1, var1;

    // Selection score in [0, 1]; ranks candidates and thresholds at 0.5.
    double score(const FullFeatures& x) const;

    // Normalized class posteriors {p0, p1}; for the linear kinds this is the
    // sigmoid pair.
    std::pair<double, double> posterior(const FullFeatures& x) const;

    std::string to_json(const std::string& config_hash = {}) const;
    static TrainedModel from_json(const std::string& text);
};

// Round-robin fold assignment over a seeded shuffle of the event ordinals;
// labels are never consulted.
std::vector<int> fold_assignment(std::size_t n_events, int folds, std::uint64_t seed);

struct TrainReport {
    std::vector<TrainedModel> fold_models;
    TrainedModel final_model; // refit on the whole corpus
    double cv_segment_accuracy = 0.0;   // argmax candidate equals the composer's choice
    double cv_candidate_accuracy = 0.0; // per-row 0.5-threshold accuracy
    std::vector<double> fold_segment_accuracy;
    std::size_t events = 0;
    std::size_t rows = 0;
};

// Seeded k-fold cross-validation grouped by selection event (all of an
// event's candidates share a fold; assignment never looks at labels).
// A segment counts as correct only when the argmax is unique and matches
// the composer's choice; a model that scores candidates identically has not
// selected anything.
TrainReport train(const Corpus& corpus, ModelKind kind, FeatureSet set, int folds,
                  std::uint64_t seed);

struct ScoredCandidate {
    std::int64_t service_id = 0;
    Timestamp departure = 0;
    const FullFeatures* features = nullptr;
};

// Highest-scoring candidate; ties break to the earliest departure, then the
// smallest service id. Throws DataError on an empty list.
std::int64_t predict_select(const TrainedModel& model,
                            const std::vector<ScoredCandidate>& candidates);

// Gradient of the mean logistic loss at (w, b); exposed so the training
// path can be checked against finite differences.
void logistic_loss_grad(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                        const std::vector<double>& w, double b, double& loss,
                        std::vector<double>& grad_w, double& grad_b);

struct LatencyReport {
    std::size_t pdrs = 0;
    std::size_t selections = 0;
    double planning_mean_us = 0.0; // shared by both paths, reported for context
    double composer_mean_us = 0.0;
    double composer_p95_us = 0.0;
    double predictor_mean_us = 0.0;
    double predictor_p95_us = 0.0;
    std::size_t agreement = 0; // predictor selections matching the composer's

    std::string to_csv() const;
};

// Times the spatiotemporal selection machinery against model scoring of the
// candidates' precomputed feature rows, per selection, over one PDR batch.
// Route planning is identical on both paths and measured separately.
// Throws DataError when the batch is non-empty and the predictor does not
// come out faster.
LatencyReport benchmark_latency(const std::vector<composer::DeliveryRequest>& pdrs,
                                const net::SkywayNetwork& net,
                                const composer::ServiceStore& store,
                                const planner::CostContext& ctx, double window_min,
                                const TrainedModel& model, const Corpus& corpus);

} // namespace skyroute::ml
