#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "rome/errors.hpp"
#include "rome/metrics.hpp"
#include "rome/rng.hpp"

namespace rome::stats {

enum class Orientation { lower_better, higher_better };

struct TreatmentScores {
    std::string treatment;
    std::vector<double> scores;
    Orientation orientation = Orientation::lower_better;
};

struct RankResult {
    /// Parallel to the input groups: rank of each treatment, 1 = best.
    std::vector<std::pair<std::string, int>> ranks;

    int rank_of(const std::string& treatment) const {
        for (const auto& [name, rank] : ranks)
            if (name == treatment) return rank;
        throw DataError("no treatment named '" + treatment + "' in rank result");
    }

    int rank_count() const {
        int mx = 0;
        for (const auto& [name, rank] : ranks) mx = std::max(mx, rank);
        return mx;
    }
};

/// Vargha-Delaney A12: probability that a draw from xs exceeds a draw
/// from ys, ties counting half.
inline double a12(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.empty() || ys.empty()) throw DataError("a12: empty input");
    double wins = 0.0;
    for (double x : xs) {
        for (double y : ys) {
            if (x > y)
                wins += 1.0;
            else if (x == y)
                wins += 0.5;
        }
    }
    return wins / (static_cast<double>(xs.size()) * static_cast<double>(ys.size()));
}

struct SkConfig {
    std::size_t resamples = 1000;
    double alpha = 0.05;
    double a12_threshold = 0.56;  // Vargha-Delaney small-effect boundary
    std::uint64_t seed = 0;
};

/// Mean-shift bootstrap hypothesis test: both groups are recentered onto
/// the pooled mean, resampled with replacement, and the observed mean gap
/// is compared against the resampled gaps. True means the gap is
/// significant at the configured alpha.
inline bool bootstrap_sig(const std::vector<double>& xs, const std::vector<double>& ys,
                          std::size_t resamples, double alpha, std::uint64_t seed) {
    if (xs.empty() || ys.empty()) throw DataError("bootstrap: empty input");
    if (resamples == 0) throw DataError("bootstrap: need resamples");
    auto mean = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
    };
    const double mean_x = mean(xs), mean_y = mean(ys);
    const double observed = std::abs(mean_x - mean_y);

    double pooled = 0.0;
    for (double x : xs) pooled += x;
    for (double y : ys) pooled += y;
    pooled /= static_cast<double>(xs.size() + ys.size());

    std::vector<double> sx(xs), sy(ys);
    for (double& v : sx) v += pooled - mean_x;
    for (double& v : sy) v += pooled - mean_y;

    Rng rng(seed);
    std::size_t at_least = 0;
    for (std::size_t b = 0; b < resamples; ++b) {
        double rx = 0.0, ry = 0.0;
        for (std::size_t i = 0; i < sx.size(); ++i) rx += sx[rng.index(sx.size())];
        for (std::size_t i = 0; i < sy.size(); ++i) ry += sy[rng.index(sy.size())];
        rx /= static_cast<double>(sx.size());
        ry /= static_cast<double>(sy.size());
        if (std::abs(rx - ry) >= observed) ++at_least;
    }
    return static_cast<double>(at_least) / static_cast<double>(resamples) < alpha;
}

/// Two groups differ only when the bootstrap says significant AND the
/// effect size is non-small.
inline bool distinguishable(const std::vector<double>& xs, const std::vector<double>& ys,
                            const SkConfig& config) {
    const double effect = std::max(a12(xs, ys), a12(ys, xs));
    if (effect < config.a12_threshold) return false;
    return bootstrap_sig(xs, ys, config.resamples, config.alpha, config.seed);
}

namespace detail {

inline double median_of(std::vector<double> v) { return metrics::aggregate(std::move(v)); }

struct SortedGroup {
    std::size_t input_index;
    double median;
};

/// Between-part sum of squares for a cut of the sorted span, over pooled
/// values.
inline double cut_gain(const std::vector<const TreatmentScores*>& groups, std::size_t begin,
                       std::size_t cut, std::size_t end) {
    double sum_all = 0.0, n_all = 0.0;
    double sum_l = 0.0, n_l = 0.0, sum_r = 0.0, n_r = 0.0;
    for (std::size_t g = begin; g < end; ++g) {
        for (double v : groups[g]->scores) {
            sum_all += v;
            n_all += 1.0;
            if (g < cut) {
                sum_l += v;
                n_l += 1.0;
            } else {
                sum_r += v;
                n_r += 1.0;
            }
        }
    }
    const double mean_all = sum_all / n_all;
    const double mean_l = sum_l / n_l;
    const double mean_r = sum_r / n_r;
    return n_l * (mean_l - mean_all) * (mean_l - mean_all) +
           n_r * (mean_r - mean_all) * (mean_r - mean_all);
}

inline std::vector<double> pool(const std::vector<const TreatmentScores*>& groups,
                                std::size_t begin, std::size_t end) {
    std::vector<double> out;
    for (std::size_t g = begin; g < end; ++g)
        out.insert(out.end(), groups[g]->scores.begin(), groups[g]->scores.end());
    return out;
}

} // namespace detail

/// Scott-Knott: sort treatments by median (best first per orientation),
/// recursively split the span at the cut maximizing the between-part sum
/// of squares, stop where the two sides are not distinguishable, and
/// number the surviving spans 1, 2, ... in sorted order.
inline RankResult scott_knott(const std::vector<TreatmentScores>& groups, const SkConfig& config) {
    if (groups.empty()) throw DataError("scott_knott: no groups");
    for (const auto& g : groups)
        if (g.scores.empty()) throw DataError("scott_knott: empty score list for " + g.treatment);
    const Orientation orientation = groups.front().orientation;

    std::vector<const TreatmentScores*> sorted;
    for (const auto& g : groups) sorted.push_back(&g);
    std::stable_sort(sorted.begin(), sorted.end(), [&](const auto* a, const auto* b) {
        const double ma = detail::median_of(a->scores);
        const double mb = detail::median_of(b->scores);
        return orientation == Orientation::lower_better ? ma < mb : ma > mb;
    });

    std::vector<int> rank_by_sorted_pos(sorted.size(), 0);
    int next_rank = 1;
    std::uint64_t split_counter = 0;

    auto assign = [&](auto&& self, std::size_t begin, std::size_t end) -> void {
        if (end - begin == 1) {
            rank_by_sorted_pos[begin] = next_rank++;
            return;
        }
        std::size_t best_cut = begin + 1;
        double best_gain = -1.0;
        for (std::size_t cut = begin + 1; cut < end; ++cut) {
            const double gain = detail::cut_gain(sorted, begin, cut, end);
            if (gain > best_gain) {
                best_gain = gain;
                best_cut = cut;
            }
        }
        SkConfig local = config;
        local.seed = derive_seed(config.seed, {split_counter++});
        const bool split = distinguishable(detail::pool(sorted, begin, best_cut),
                                           detail::pool(sorted, best_cut, end), local);
        if (split) {
            self(self, begin, best_cut);
            self(self, best_cut, end);
        } else {
            const int rank = next_rank++;
            for (std::size_t g = begin; g < end; ++g) rank_by_sorted_pos[g] = rank;
        }
    };
    assign(assign, 0, sorted.size());

    RankResult result;
    result.ranks.reserve(groups.size());
    for (const auto& g : groups) {
        for (std::size_t pos = 0; pos < sorted.size(); ++pos) {
            if (sorted[pos] == &g) {
                result.ranks.emplace_back(g.treatment, rank_by_sorted_pos[pos]);
                break;
            }
        }
    }
    return result;
}

} // namespace rome::stats
