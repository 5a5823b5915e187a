#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <map>
#include <optional>
#include <tuple>
#include <vector>

#include "rome/cart.hpp"
#include "rome/dataset.hpp"
#include "rome/errors.hpp"
#include "rome/metrics.hpp"
#include "rome/rng.hpp"

namespace rome::tune {

/// Scores a candidate configuration; smaller is better. The harness
/// builds these from a train/validation split, tests from synthetic
/// functions.
struct TuneObjective {
    std::function<double(const cart::Config&)> score;
};

struct ArchiveEntry {
    cart::Config config;
    double score = 0.0;
    std::size_t eval_index = 0;
};

/// Every configuration actually evaluated, in evaluation order. Entries
/// are unique: repeat requests are served from memory and consume no
/// budget.
struct Archive {
    std::vector<ArchiveEntry> entries;
    std::size_t budget = 0;

    std::size_t consumed() const { return entries.size(); }

    /// Minimum measured score; earlier evaluation wins ties.
    const ArchiveEntry& best() const {
        if (entries.empty()) throw DataError("tune: empty archive");
        const ArchiveEntry* best = &entries.front();
        for (const ArchiveEntry& e : entries)
            if (e.score < best->score) best = &e;
        return *best;
    }
};

struct Result {
    cart::Config best;
    double best_score = 0.0;
    Archive archive;
    /// Best measured score so far, appended once per generation (DE) or
    /// per evaluation (FLASH); non-increasing.
    std::vector<double> trace;
};

namespace detail {

using ConfigKey = std::tuple<std::uint64_t, int, int, int>;

inline ConfigKey key_of(const cart::Config& c) {
    std::uint64_t bits;
    const double f = c.max_features_fraction;
    std::memcpy(&bits, &f, sizeof(bits));
    return {bits, c.max_depth ? *c.max_depth : -1, c.min_sample_split, c.min_samples_leaf};
}

/// Memoizing evaluator enforcing the budget and archive contracts.
class Evaluator {
public:
    Evaluator(const TuneObjective& objective, std::size_t budget) : objective_(objective) {
        archive_.budget = budget;
    }

    double eval(const cart::Config& config) {
        const ConfigKey key = key_of(config);
        auto hit = seen_.find(key);
        if (hit != seen_.end()) return hit->second;
        if (archive_.budget > 0 && archive_.consumed() >= archive_.budget)
            throw DataError("tune: evaluation budget exhausted");
        const double score = objective_.score(config);
        seen_.emplace(key, score);
        archive_.entries.push_back({config, score, archive_.consumed()});
        return score;
    }

    std::size_t consumed() const { return archive_.consumed(); }
    const std::vector<ArchiveEntry>& entries() const { return archive_.entries; }
    Archive take_archive() { return std::move(archive_); }

private:
    const TuneObjective& objective_;
    Archive archive_;
    std::map<ConfigKey, double> seen_;
};

/// Numeric view of the 4-dimensional space, in table order:
/// fraction, depth, split, leaf.
inline std::array<double, 4> dims_of(const cart::Config& c) {
    return {c.max_features_fraction, static_cast<double>(c.max_depth.value_or(12)),
            static_cast<double>(c.min_sample_split), static_cast<double>(c.min_samples_leaf)};
}

inline cart::Config config_of(const std::array<double, 4>& dims) {
    cart::Config c;
    c.max_features_fraction = std::clamp(dims[0], 0.01, 1.0);
    c.max_depth = static_cast<int>(std::clamp(std::llround(dims[1]), 1ll, 12ll));
    c.min_sample_split = static_cast<int>(std::clamp(std::llround(dims[2]), 0ll, 20ll));
    c.min_samples_leaf = static_cast<int>(std::clamp(std::llround(dims[3]), 1ll, 12ll));
    return c;
}

} // namespace detail

/// Uniform seeded samples from the tuning ranges, duplicates removed.
inline std::vector<cart::Config> sample_space(std::size_t n, std::uint64_t seed) {
    if (n < 1) throw DataError("sample_space: need at least one sample");
    Rng rng(seed);
    std::vector<cart::Config> out;
    std::map<detail::ConfigKey, bool> seen;
    std::size_t attempts = 0;
    while (out.size() < n && attempts < n * 20 + 100) {
        ++attempts;
        cart::Config c;
        c.max_features_fraction = rng.uniform(0.01, 1.0);
        c.max_depth = static_cast<int>(rng.uniform_int(1, 12));
        c.min_sample_split = static_cast<int>(rng.uniform_int(0, 20));
        c.min_samples_leaf = static_cast<int>(rng.uniform_int(1, 12));
        if (seen.emplace(detail::key_of(c), true).second) out.push_back(c);
    }
    return out;
}

struct DeParams {
    std::size_t np = 20;
    double f = 0.75;
    double cr = 0.3;
    std::size_t generations = 10;

    void validate() const {
        if (np < 4) throw DataError("de: population must be at least 4");
        if (cr < 0 || cr > 1) throw DataError("de: cr must lie in [0, 1]");
        if (generations < 1) throw DataError("de: need at least one generation");
    }
};

/// Differential evolution over the CART space. Candidates extrapolate
/// between three distinct population members as y_k = a_k + f*(b_k - c_k)
/// per dimension at probability cr (one forced dimension always moves),
/// members are replaced only by strictly better candidates, and the best
/// configuration ever measured is returned.
inline Result de_tune(const TuneObjective& objective, const DeParams& params,
                      std::uint64_t seed) {
    params.validate();
    detail::Evaluator evaluator(objective, params.np * (params.generations + 1));
    Rng rng(derive_seed(seed, {0xde, 0}));

    std::vector<cart::Config> population = sample_space(params.np, derive_seed(seed, {0xde, 1}));
    std::vector<double> scores;
    scores.reserve(population.size());
    for (const cart::Config& c : population) scores.push_back(evaluator.eval(c));

    Result result;
    auto best_score_now = [&]() {
        double best = scores.front();
        for (double s : scores) best = std::min(best, s);
        return best;
    };
    result.trace.push_back(best_score_now());

    for (std::size_t gen = 0; gen < params.generations; ++gen) {
        for (std::size_t i = 0; i < population.size(); ++i) {
            std::size_t a = i, b = i, c = i;
            while (a == i) a = rng.index(population.size());
            while (b == i || b == a) b = rng.index(population.size());
            while (c == i || c == a || c == b) c = rng.index(population.size());

            const auto xa = detail::dims_of(population[a]);
            const auto xb = detail::dims_of(population[b]);
            const auto xc = detail::dims_of(population[c]);
            auto dims = detail::dims_of(population[i]);
            const std::size_t forced = rng.index(dims.size());
            for (std::size_t k = 0; k < dims.size(); ++k) {
                const double draw = rng.uniform();
                if (draw < params.cr || k == forced)
                    dims[k] = xa[k] + params.f * (xb[k] - xc[k]);
            }
            const cart::Config candidate = detail::config_of(dims);
            const double score = evaluator.eval(candidate);
            if (score < scores[i]) {
                population[i] = candidate;
                scores[i] = score;
            }
        }
        result.trace.push_back(best_score_now());
    }

    result.archive = evaluator.take_archive();
    const ArchiveEntry& winner = result.archive.best();
    result.best = winner.config;
    result.best_score = winner.score;
    return result;
}

struct FlashParams {
    std::size_t budget = 200;  // total evaluations, initial sample included
    std::size_t init = 20;
    std::size_t pool = 10000;

    void validate() const {
        if (init < 1) throw DataError("flash: need initial samples");
        if (init >= budget) throw DataError("flash: init must be below budget");
        if (pool <= budget) throw DataError("flash: pool must exceed budget");
    }
};

/// Sequential model-based optimization: measure a small random sample,
/// then repeatedly fit a CART surrogate over the archive, predict scores
/// for every untried pool member, and spend one real evaluation on the
/// member with the smallest predicted error until the budget runs out.
inline Result flash_tune(const TuneObjective& objective, const FlashParams& params,
                         std::uint64_t seed) {
    params.validate();
    detail::Evaluator evaluator(objective, params.budget);

    std::vector<cart::Config> pool = sample_space(params.pool, derive_seed(seed, {0xf1a, 1}));
    std::vector<std::array<double, 4>> pool_dims;
    pool_dims.reserve(pool.size());
    for (const cart::Config& c : pool) pool_dims.push_back(detail::dims_of(c));
    std::vector<bool> tried(pool.size(), false);

    std::vector<std::vector<double>> archive_rows;
    std::vector<double> archive_scores;
    auto measure = [&](std::size_t pool_index) {
        tried[pool_index] = true;
        const double score = evaluator.eval(pool[pool_index]);
        const auto& d = pool_dims[pool_index];
        archive_rows.push_back({d[0], d[1], d[2], d[3]});
        archive_scores.push_back(score);
    };

    {
        Rng rng(derive_seed(seed, {0xf1a, 2}));
        std::vector<std::size_t> order(pool.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        for (std::size_t i = 0; i < params.init && i < order.size(); ++i) {
            const std::size_t j = i + rng.index(order.size() - i);
            std::swap(order[i], order[j]);
            measure(order[i]);
        }
    }

    const std::uint64_t surrogate_seed = derive_seed(seed, {0xf1a, 3});
    while (evaluator.consumed() < params.budget) {
        const cart::Tree surrogate =
            cart::train(archive_rows, archive_scores, cart::Config{}, surrogate_seed);
        std::size_t chosen = pool.size();
        double best_predicted = 0.0;
        std::vector<double> probe(4);
        for (std::size_t i = 0; i < pool.size(); ++i) {
            if (tried[i]) continue;
            probe.assign(pool_dims[i].begin(), pool_dims[i].end());
            const double predicted = surrogate.predict(probe);
            if (chosen == pool.size() || predicted < best_predicted) {
                chosen = i;
                best_predicted = predicted;
            }
        }
        if (chosen == pool.size()) break;  // pool exhausted early
        measure(chosen);
    }

    Result result;
    result.archive = evaluator.take_archive();
    double best = result.archive.entries.front().score;
    for (const ArchiveEntry& e : result.archive.entries) {
        best = std::min(best, e.score);
        result.trace.push_back(best);
    }
    const ArchiveEntry& winner = result.archive.best();
    result.best = winner.config;
    result.best_score = winner.score;
    return result;
}

/// Train-side holdout for tuning: the chronological tail for contemporary
/// data, a seeded random fifth for classic tables.
struct ValidationSplit {
    Dataset train;
    Dataset validation;
};

inline ValidationSplit validation_split(const Dataset& train_fold, std::uint64_t seed) {
    const std::size_t n = train_fold.n_rows();
    if (n < 2) throw DataError(train_fold.name() + ": too few rows to hold out validation data");
    std::size_t n_val = std::max<std::size_t>(1, n / 5);
    if (n_val >= n) n_val = n - 1;

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    if (train_fold.provenance() != Provenance::contemporary) {
        Rng rng(derive_seed(seed, {0x5a11d}));
        rng.shuffle(order);
    }
    std::vector<std::size_t> train_idx(order.begin(),
                                       order.end() - static_cast<std::ptrdiff_t>(n_val));
    std::vector<std::size_t> val_idx(order.end() - static_cast<std::ptrdiff_t>(n_val),
                                     order.end());
    if (train_fold.provenance() != Provenance::contemporary) {
        std::sort(train_idx.begin(), train_idx.end());
        std::sort(val_idx.begin(), val_idx.end());
    }
    return {train_fold.subset(train_idx, "#train"), train_fold.subset(val_idx, "#val")};
}

enum class ObjectiveMetric { median_mre, mae };

/// Objective used by the experiment harness: train a candidate CART on
/// the held-in rows, score it on the validation rows. Rows whose actual
/// effort is non-positive cannot contribute an MRE and are skipped; if
/// every row is skipped the objective falls back to MAE.
inline TuneObjective validation_objective(const ValidationSplit& split, std::uint64_t seed,
                                          ObjectiveMetric metric = ObjectiveMetric::median_mre) {
    const Dataset* train = &split.train;
    const Dataset* validation = &split.validation;
    const std::uint64_t train_seed = derive_seed(seed, {0x0b1});
    TuneObjective objective;
    objective.score = [train, validation, train_seed, metric](const cart::Config& config) {
        const cart::Tree tree = cart::train(*train, config, train_seed);
        std::vector<double> mres;
        double abs_err = 0.0;
        for (std::size_t r = 0; r < validation->n_rows(); ++r) {
            const double predicted = tree.predict(validation->row(r));
            const double actual = validation->target(r);
            abs_err += std::abs(actual - predicted);
            if (metric == ObjectiveMetric::median_mre && actual > 0)
                mres.push_back(std::abs(actual - predicted) / actual);
        }
        if (metric == ObjectiveMetric::median_mre && !mres.empty())
            return metrics::aggregate(std::move(mres));
        return abs_err / static_cast<double>(validation->n_rows());
    };
    return objective;
}

} // namespace rome::tune
