#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "linkbait/traffic.hpp"

namespace linkbait {

struct FmParams {
    int interval_ticks = 10;
    int window_intervals = 10;  // n; stride is one interval
};

struct TmParams {
    int dt_ticks = 5000;  // detection period DT
    int subperiods = 5;   // n_T
};

// Per-host bytes on every link over consecutive intervals; individual sliding
// windows and the joint-FM both materialize from it.
struct FloodingMatrixSeries {
    int host = -1;
    std::vector<int> link_ids;                // m links, ascending
    std::vector<std::vector<double>> bytes;   // [link][interval]
    int total_intervals = 0;

    int window_count(int n) const;
    // One m x n window starting at interval w.
    std::vector<std::vector<double>> window(int w, int n) const;
    // Element-wise max across all window positions.
    std::vector<std::vector<double>> joint(int n) const;
};

FloodingMatrixSeries extract_fm(const Topology& topo,
                                const std::map<int, std::vector<double>>& host_acc, int host,
                                int total_intervals);

struct TracerouteMatrix {
    int host = -1;
    std::vector<int> link_ids;
    std::vector<std::vector<int>> ft;  // [link][subperiod]
};

// Empty result when the host never completed a trace inside DT (not a prober).
std::optional<TracerouteMatrix> extract_tm(const Topology& topo,
                                           const std::vector<TraceResult>& trace_log, int prober,
                                           const TmParams& params);

enum class FeatureMode { joint_fm, fused_fm_tm };
const char* to_string(FeatureMode m);

struct FeatureVector {
    int host = -1;
    bool is_bot = false;
    std::vector<double> values;  // raw; the model owns normalization
};

std::vector<FeatureVector> build_features(
    const Topology& topo, const std::map<int, std::map<int, std::vector<double>>>& acc,
    const std::vector<TraceResult>& trace_log, const std::vector<std::pair<int, bool>>& hosts,
    FeatureMode mode, const FmParams& fm, const TmParams& tm, int total_intervals);

struct SvmConfig {
    int epochs = 60;
    double lambda = 1e-3;
    double lr0 = 0.5;
    int calibration_iters = 600;
};

struct SvmModel {
    std::vector<double> weights;
    double bias = 0.0;
    double calib_a = 1.0;  // confidence = logistic(a * margin + c)
    double calib_c = 0.0;
    std::vector<double> feat_min;
    std::vector<double> feat_max;
    SvmConfig config;
    std::uint64_t seed = 0;

    std::vector<double> normalize(const std::vector<double>& raw) const;
    double margin(const std::vector<double>& raw) const;
    double confidence(const std::vector<double>& raw) const;
    std::string to_json_string() const;
};

SvmModel train_svm(const std::vector<FeatureVector>& train, std::uint64_t seed,
                   const SvmConfig& config = {});

struct DetectionMetrics {
    double ct_svm = 0.5;
    long tp = 0, fp = 0, tn = 0, fn = 0;
    double detection_rate = 0.0;
    double false_positive_rate = 0.0;
};

DetectionMetrics evaluate(const SvmModel& model, const std::vector<FeatureVector>& test,
                          double ct_svm);

// Stratified-by-class host split, deterministic per seed.
void split_train_test(const std::vector<FeatureVector>& all, double training_fraction,
                      std::uint64_t seed, std::vector<FeatureVector>* train,
                      std::vector<FeatureVector>* test);

std::string features_csv(const std::vector<FeatureVector>& rows, FeatureMode mode);

}  // namespace linkbait
