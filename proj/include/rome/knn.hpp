#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "rome/dataset.hpp"
#include "rome/errors.hpp"

namespace rome::knn {

inline constexpr std::size_t kDefaultK = 5;

/// Analogy-based estimate: min-max normalize every feature by the
/// training ranges, take the k nearest rows by Euclidean distance (ties
/// broken by lower row index), and average their effort. A feature whose
/// training range is zero contributes nothing to any distance.
inline double predict(const Dataset& train, const std::vector<double>& row,
                      std::size_t k = kDefaultK) {
    if (k < 1) throw DataError("knn: k must be at least 1");
    if (k > train.n_rows())
        throw DataError("knn: k = " + std::to_string(k) + " exceeds " +
                        std::to_string(train.n_rows()) + " training rows");
    if (row.size() != train.n_features())
        throw DataError("knn: row has " + std::to_string(row.size()) + " features, expected " +
                        std::to_string(train.n_features()));

    const std::size_t f_count = train.n_features();
    std::vector<double> lo(f_count), span(f_count);
    for (std::size_t f = 0; f < f_count; ++f) {
        double mn = train.value(0, f), mx = train.value(0, f);
        for (std::size_t r = 1; r < train.n_rows(); ++r) {
            mn = std::min(mn, train.value(r, f));
            mx = std::max(mx, train.value(r, f));
        }
        lo[f] = mn;
        span[f] = mx - mn;
    }

    std::vector<std::pair<double, std::size_t>> distances;
    distances.reserve(train.n_rows());
    for (std::size_t r = 0; r < train.n_rows(); ++r) {
        double d2 = 0.0;
        for (std::size_t f = 0; f < f_count; ++f) {
            if (span[f] == 0.0) continue;
            const double diff = (train.value(r, f) - lo[f]) / span[f] - (row[f] - lo[f]) / span[f];
            d2 += diff * diff;
        }
        distances.emplace_back(d2, r);
    }
    std::sort(distances.begin(), distances.end());

    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) sum += train.target(distances[i].second);
    return sum / static_cast<double>(k);
}

} // namespace rome::knn
