#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "rome/cart.hpp"
#include "rome/dataset.hpp"
#include "rome/rng.hpp"

namespace rome::rf {

struct Options {
    std::size_t trees = 100;
    bool bootstrap = true;  // off only in degenerate-ensemble tests
};

struct Forest {
    std::vector<cart::Tree> trees;

    double predict(const std::vector<double>& row) const {
        double sum = 0.0;
        for (const cart::Tree& t : trees) sum += t.predict(row);
        return sum / static_cast<double>(trees.size());
    }
};

/// Bagged CART: each tree sees a with-replacement resample of the rows
/// and considers sqrt(F) of the F features at each split.
inline Forest train(const Dataset& data, const Options& options, std::uint64_t seed) {
    if (options.trees < 1) throw DataError("rf: need at least one tree");
    cart::Config config;
    config.max_features_fraction =
        std::clamp(std::sqrt(static_cast<double>(data.n_features())) /
                       static_cast<double>(data.n_features()),
                   0.01, 1.0);

    std::vector<std::vector<double>> base_rows;
    base_rows.reserve(data.n_rows());
    for (std::size_t r = 0; r < data.n_rows(); ++r) base_rows.push_back(data.row(r));

    Forest forest;
    forest.trees.reserve(options.trees);
    for (std::size_t t = 0; t < options.trees; ++t) {
        const std::uint64_t tree_seed = derive_seed(seed, {t});
        if (options.bootstrap) {
            Rng rng(derive_seed(tree_seed, {0}));
            std::vector<std::vector<double>> rows;
            std::vector<double> targets;
            rows.reserve(data.n_rows());
            targets.reserve(data.n_rows());
            for (std::size_t i = 0; i < data.n_rows(); ++i) {
                const std::size_t pick = rng.index(data.n_rows());
                rows.push_back(base_rows[pick]);
                targets.push_back(data.target(pick));
            }
            forest.trees.push_back(cart::train(rows, targets, config, derive_seed(tree_seed, {1})));
        } else {
            forest.trees.push_back(
                cart::train(base_rows, data.targets(), config, derive_seed(tree_seed, {1})));
        }
    }
    return forest;
}

} // namespace rome::rf
