#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "rome/errors.hpp"
#include "rome/rng.hpp"

namespace rome::metrics {

/// Paired (actual, predicted) efforts for one evaluation unit.
struct PredictionSet {
    std::vector<std::pair<double, double>> pairs;  // (actual, predicted)
};

/// Magnitude of relative error: |actual - predicted| / actual.
inline double mre(double actual, double predicted) {
    if (actual <= 0) throw DataError("mre: actual effort must be positive");
    return std::abs(actual - predicted) / actual;
}

inline double mae(const PredictionSet& pairs) {
    if (pairs.pairs.empty()) throw DataError("mae: empty prediction set");
    double sum = 0.0;
    for (const auto& [actual, predicted] : pairs.pairs) sum += std::abs(actual - predicted);
    return sum / static_cast<double>(pairs.pairs.size());
}

/// MAE of random guessing. Exact mode is the closed-form expectation of
/// guessing uniformly from `guess_source`: mean_i mean_j |test_i - src_j|.
/// Sampled mode averages `runs` seeded draws and converges to the exact
/// value.
inline double rguess_mae_exact(const std::vector<double>& test_actuals,
                               const std::vector<double>& guess_source) {
    if (guess_source.empty()) throw DataError("rguess: empty guess source");
    if (test_actuals.empty()) throw DataError("rguess: empty test set");
    double outer = 0.0;
    for (double t : test_actuals) {
        double inner = 0.0;
        for (double g : guess_source) inner += std::abs(t - g);
        outer += inner / static_cast<double>(guess_source.size());
    }
    return outer / static_cast<double>(test_actuals.size());
}

inline double rguess_mae_sampled(const std::vector<double>& test_actuals,
                                 const std::vector<double>& guess_source, std::size_t runs,
                                 std::uint64_t seed) {
    if (guess_source.empty()) throw DataError("rguess: empty guess source");
    if (test_actuals.empty()) throw DataError("rguess: empty test set");
    if (runs == 0) throw DataError("rguess: need at least one run");
    Rng rng(seed);
    double total = 0.0;
    for (std::size_t run = 0; run < runs; ++run) {
        double sum = 0.0;
        for (double t : test_actuals) sum += std::abs(t - guess_source[rng.index(guess_source.size())]);
        total += sum / static_cast<double>(test_actuals.size());
    }
    return total / static_cast<double>(runs);
}

/// Standardized accuracy, reported as a fraction: 1 - MAE / baseline.
/// 1 for perfect predictions, 0 for guess-level ones, negative when
/// worse than guessing.
inline double sa(const PredictionSet& pairs, double baseline_mae) {
    if (baseline_mae <= 0) throw DataError("sa: baseline MAE must be positive");
    return 1.0 - mae(pairs) / baseline_mae;
}

/// Pooled summary: 50th percentile, lower median on even counts.
inline double aggregate(std::vector<double> per_prediction_scores) {
    if (per_prediction_scores.empty()) throw DataError("aggregate: empty score list");
    std::sort(per_prediction_scores.begin(), per_prediction_scores.end());
    return per_prediction_scores[(per_prediction_scores.size() - 1) / 2];
}

} // namespace rome::metrics
