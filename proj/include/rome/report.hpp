#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rome/harness.hpp"
#include "rome/stats.hpp"
#include "rome/text.hpp"

namespace rome::harness {

enum class Metric { mre, sa };

inline std::string to_string(Metric m) { return m == Metric::mre ? "mre" : "sa"; }

inline Metric parse_metric(std::string_view s) {
    if (s == "mre") return Metric::mre;
    if (s == "sa") return Metric::sa;
    throw DataError("unknown metric '" + std::string(s) + "'");
}

/// Per-fold score of one outcome under a metric; NaN when undefined.
inline double fold_score(const FoldOutcome& outcome, Metric metric) {
    return metric == Metric::mre ? outcome.median_mre : outcome.sa;
}

/// Median of every per-prediction MRE pooled across the dataset's folds
/// for one treatment (rows with non-positive actuals cannot contribute).
inline double pooled_median_mre(const DatasetResult& result, const std::string& treatment) {
    std::vector<double> mres;
    for (const FoldOutcome* outcome : result.of_treatment(treatment))
        for (const auto& [actual, predicted] : outcome->pairs)
            if (actual > 0) mres.push_back(std::abs(actual - predicted) / actual);
    if (mres.empty()) return std::numeric_limits<double>::quiet_NaN();
    return metrics::aggregate(std::move(mres));
}

struct DatasetRanks {
    std::string dataset;
    stats::RankResult ranks;
    std::map<std::string, double> medians;  // per treatment, of fold scores
};

struct WinTally {
    std::map<std::string, std::size_t> wins;
    std::size_t denominator = 0;
};

struct RankSummary {
    Metric metric = Metric::mre;
    std::vector<DatasetRanks> per_dataset;
    WinTally tally;
};

/// Scott-Knott over per-fold score distributions, dataset by dataset,
/// then a tally of rank-1 finishes per treatment.
inline RankSummary rank_and_tally(const ExperimentResult& result, Metric metric,
                                  std::uint64_t seed) {
    RankSummary summary;
    summary.metric = metric;
    summary.tally.denominator = result.datasets.size();
    for (const std::string& t : result.treatments) summary.tally.wins[t] = 0;

    for (const DatasetResult& dataset : result.datasets) {
        std::vector<stats::TreatmentScores> groups;
        for (const std::string& treatment : result.treatments) {
            stats::TreatmentScores g;
            g.treatment = treatment;
            g.orientation = metric == Metric::mre ? stats::Orientation::lower_better
                                                  : stats::Orientation::higher_better;
            for (const FoldOutcome* outcome : dataset.of_treatment(treatment)) {
                const double score = fold_score(*outcome, metric);
                if (!std::isnan(score)) g.scores.push_back(score);
            }
            if (!g.scores.empty()) groups.push_back(std::move(g));
        }
        if (groups.empty()) continue;

        stats::SkConfig config;
        config.seed = derive_seed(seed, dataset.name, {0x5c017, hash_bytes(to_string(metric))});
        DatasetRanks ranks;
        ranks.dataset = dataset.name;
        ranks.ranks = stats::scott_knott(groups, config);
        for (const auto& g : groups) {
            std::vector<double> copy = g.scores;
            ranks.medians[g.treatment] = metrics::aggregate(std::move(copy));
        }
        for (const auto& [treatment, rank] : ranks.ranks.ranks)
            if (rank == 1) summary.tally.wins[treatment] += 1;
        summary.per_dataset.push_back(std::move(ranks));
    }
    return summary;
}

struct HistogramRow {
    std::string group;      // dataset name, or "contemporary" pooled
    std::string treatment;
    std::string dimension;  // max_features_fraction, max_depth, ...
    std::string bin;
    double percent = 0.0;
    std::size_t count = 0;
};

/// Bins the tuned configurations the way the hyperparameter-frequency
/// figure does: four buckets per dimension, percentages within each
/// (group, treatment, dimension).
inline std::vector<HistogramRow> config_histogram(const ExperimentResult& result) {
    struct Dimension {
        std::string name;
        std::array<double, 4> bounds;
        std::array<std::string, 4> labels;
        double (*value)(const cart::Config&);
    };
    static const std::vector<Dimension> dimensions = {
        {"max_features_fraction",
         {0.25, 0.5, 0.75, 1.0},
         {"<=0.25", "<=0.5", "<=0.75", "<=1"},
         [](const cart::Config& c) { return c.max_features_fraction; }},
        {"max_depth",
         {3, 6, 9, 12},
         {"<=3", "<=6", "<=9", "<=12"},
         [](const cart::Config& c) { return static_cast<double>(c.max_depth.value_or(12)); }},
        {"min_sample_split",
         {5, 10, 15, 20},
         {"<=5", "<=10", "<=15", "<=20"},
         [](const cart::Config& c) { return static_cast<double>(c.min_sample_split); }},
        {"min_samples_leaf",
         {3, 6, 9, 12},
         {"<=3", "<=6", "<=9", "<=12"},
         [](const cart::Config& c) { return static_cast<double>(c.min_samples_leaf); }},
    };

    // (group, treatment) -> chosen configs
    std::map<std::pair<std::string, std::string>, std::vector<cart::Config>> chosen;
    bool any = false;
    for (const DatasetResult& dataset : result.datasets) {
        const std::string group =
            dataset.provenance == Provenance::contemporary ? "contemporary" : dataset.name;
        for (const FoldOutcome& outcome : dataset.outcomes) {
            if (outcome.chosen_config) {
                chosen[{group, outcome.treatment}].push_back(*outcome.chosen_config);
                any = true;
            }
        }
    }
    if (!any) throw DataError("config_histogram: no tuned runs in the results");

    std::vector<HistogramRow> rows;
    for (const auto& [key, configs] : chosen) {
        for (const Dimension& dim : dimensions) {
            std::array<std::size_t, 4> counts{};
            for (const cart::Config& c : configs) {
                const double v = dim.value(c);
                for (std::size_t b = 0; b < 4; ++b) {
                    if (v <= dim.bounds[b]) {
                        ++counts[b];
                        break;
                    }
                }
            }
            for (std::size_t b = 0; b < 4; ++b) {
                HistogramRow row;
                row.group = key.first;
                row.treatment = key.second;
                row.dimension = dim.name;
                row.bin = dim.labels[b];
                row.count = counts[b];
                row.percent = 100.0 * static_cast<double>(counts[b]) /
                              static_cast<double>(configs.size());
                rows.push_back(std::move(row));
            }
        }
    }
    return rows;
}

struct FeatureUsageRow {
    std::string dataset;
    std::string treatment;
    std::string feature;
    std::size_t count = 0;  // tuned trees using the feature in a split
    std::size_t trees = 0;  // tuned trees examined
};

/// How often each feature appears in the final tuned trees. Single-leaf
/// trees contribute nothing; a feature used in every tree reaches the
/// tree count.
inline std::vector<FeatureUsageRow> feature_usage(const ExperimentResult& result,
                                                  const std::vector<Dataset>& datasets) {
    std::vector<FeatureUsageRow> rows;
    for (const DatasetResult& dataset_result : result.datasets) {
        const Dataset* data = nullptr;
        for (const Dataset& d : datasets)
            if (d.name() == dataset_result.name) data = &d;
        if (data == nullptr)
            throw DataError("feature_usage: no source dataset named '" + dataset_result.name + "'");
        for (const std::string& treatment : result.treatments) {
            std::map<std::size_t, std::size_t> counts;
            std::size_t trees = 0;
            for (const FoldOutcome* outcome : dataset_result.of_treatment(treatment)) {
                if (!outcome->tuned_tree) continue;
                ++trees;
                for (std::size_t f : outcome->tuned_tree->features_used()) counts[f] += 1;
            }
            if (trees == 0) continue;
            for (std::size_t f = 0; f < data->n_features(); ++f) {
                FeatureUsageRow row;
                row.dataset = dataset_result.name;
                row.treatment = treatment;
                row.feature = data->predictors()[f].name;
                row.count = counts.count(f) ? counts[f] : 0;
                row.trees = trees;
                rows.push_back(std::move(row));
            }
        }
    }
    return rows;
}

// ---------------------------------------------------------------------------
// output files

inline std::string metrics_csv(const ExperimentResult& result) {
    std::ostringstream out;
    out << "dataset,treatment,repeat,fold,metric,value\n";
    for (const DatasetResult& dataset : result.datasets) {
        for (const FoldOutcome& o : dataset.outcomes) {
            const std::pair<const char*, double> metrics[] = {
                {"mre", o.median_mre}, {"mae", o.mae}, {"sa", o.sa}};
            for (const auto& [name, value] : metrics)
                out << dataset.name << ',' << o.treatment << ',' << o.repeat << ',' << o.fold
                    << ',' << name << ',' << fmt_double(value) << '\n';
        }
    }
    return out.str();
}

inline std::string predictions_csv(const ExperimentResult& result) {
    std::ostringstream out;
    out << "dataset,treatment,repeat,fold,row,actual,predicted\n";
    for (const DatasetResult& dataset : result.datasets) {
        for (const FoldOutcome& o : dataset.outcomes) {
            for (std::size_t r = 0; r < o.pairs.size(); ++r)
                out << dataset.name << ',' << o.treatment << ',' << o.repeat << ',' << o.fold
                    << ',' << r << ',' << fmt_double(o.pairs[r].first) << ','
                    << fmt_double(o.pairs[r].second) << '\n';
        }
    }
    return out.str();
}

inline std::string ranks_csv(const std::vector<RankSummary>& summaries) {
    std::ostringstream out;
    out << "metric,dataset,treatment,median,rank\n";
    for (const RankSummary& summary : summaries) {
        for (const DatasetRanks& dataset : summary.per_dataset) {
            for (const auto& [treatment, rank] : dataset.ranks.ranks)
                out << to_string(summary.metric) << ',' << dataset.dataset << ',' << treatment
                    << ',' << fmt_double(dataset.medians.at(treatment)) << ',' << rank << '\n';
        }
    }
    return out.str();
}

inline std::string tallies_csv(const std::vector<RankSummary>& summaries) {
    std::ostringstream out;
    out << "metric,treatment,wins,denominator\n";
    for (const RankSummary& summary : summaries)
        for (const auto& [treatment, wins] : summary.tally.wins)
            out << to_string(summary.metric) << ',' << treatment << ',' << wins << ','
                << summary.tally.denominator << '\n';
    return out.str();
}

inline std::string configs_csv(const ExperimentResult& result) {
    std::ostringstream out;
    out << "dataset,treatment,repeat,fold,max_features_fraction,max_depth,min_sample_split,"
           "min_samples_leaf\n";
    for (const DatasetResult& dataset : result.datasets) {
        for (const FoldOutcome& o : dataset.outcomes) {
            if (!o.chosen_config) continue;
            out << dataset.name << ',' << o.treatment << ',' << o.repeat << ',' << o.fold << ','
                << fmt_double(o.chosen_config->max_features_fraction) << ','
                << o.chosen_config->max_depth.value_or(12) << ','
                << o.chosen_config->min_sample_split << ',' << o.chosen_config->min_samples_leaf
                << '\n';
        }
    }
    return out.str();
}

inline std::string histogram_csv(const std::vector<HistogramRow>& rows) {
    std::ostringstream out;
    out << "group,treatment,dimension,bin,count,percent\n";
    for (const HistogramRow& row : rows)
        out << row.group << ',' << row.treatment << ',' << row.dimension << ',' << row.bin << ','
            << row.count << ',' << fmt_double(row.percent) << '\n';
    return out.str();
}

inline std::string feature_usage_csv(const std::vector<FeatureUsageRow>& rows) {
    std::ostringstream out;
    out << "dataset,treatment,feature,count,trees\n";
    for (const FeatureUsageRow& row : rows)
        out << row.dataset << ',' << row.treatment << ',' << row.feature << ',' << row.count << ','
            << row.trees << '\n';
    return out.str();
}

/// Aligned text table per metric: one dataset per row, one treatment per
/// column, `*` marking the rank-1 cells (the paper renders these gray).
inline std::string render_report(const ExperimentResult& result,
                                 const std::vector<RankSummary>& summaries) {
    std::ostringstream out;
    for (const RankSummary& summary : summaries) {
        out << "== " << to_string(summary.metric) << " (";
        out << (summary.metric == Metric::mre ? "lower" : "higher") << " is better, * = rank 1)\n";
        std::size_t name_width = 8;
        for (const DatasetRanks& d : summary.per_dataset)
            name_width = std::max(name_width, d.dataset.size());
        out << std::string(name_width + 2, ' ');
        for (const std::string& t : result.treatments) {
            out << t;
            out << std::string(t.size() < 12 ? 12 - t.size() : 2, ' ');
        }
        out << '\n';
        for (const DatasetRanks& dataset : summary.per_dataset) {
            out << dataset.dataset << std::string(name_width + 2 - dataset.dataset.size(), ' ');
            for (const std::string& treatment : result.treatments) {
                std::string cell = "-";
                if (dataset.medians.count(treatment)) {
                    char buf[32];
                    std::snprintf(buf, sizeof(buf), "%.2f", dataset.medians.at(treatment));
                    cell = buf;
                    bool best = false;
                    for (const auto& [name, rank] : dataset.ranks.ranks)
                        if (name == treatment && rank == 1) best = true;
                    if (best) cell += "*";
                }
                out << cell;
                out << std::string(cell.size() < 12 ? 12 - cell.size() : 2, ' ');
            }
            out << '\n';
        }
        out << '\n' << "wins";
        for (const auto& [treatment, wins] : summary.tally.wins)
            out << "  " << treatment << "=" << wins << "/" << summary.tally.denominator;
        out << "\n\n";
    }
    return out.str();
}

/// Writes every artifact of a finished experiment under one directory.
inline void write_outputs(const std::filesystem::path& out_dir, const ExperimentResult& result,
                          const std::vector<Dataset>& datasets, std::uint64_t seed,
                          const std::vector<Metric>& metric_set) {
    std::filesystem::create_directories(out_dir);
    std::vector<RankSummary> summaries;
    for (Metric metric : metric_set)
        summaries.push_back(rank_and_tally(result, metric, derive_seed(seed, {0x4a4k5})));

    write_file(out_dir / "metrics.csv", metrics_csv(result));
    write_file(out_dir / "predictions.csv", predictions_csv(result));
    write_file(out_dir / "ranks.csv", ranks_csv(summaries));
    write_file(out_dir / "tallies.csv", tallies_csv(summaries));
    write_file(out_dir / "configs.csv", configs_csv(result));

    bool has_tuned = false;
    for (const DatasetResult& d : result.datasets)
        for (const FoldOutcome& o : d.outcomes)
            if (o.chosen_config) has_tuned = true;
    if (has_tuned) {
        write_file(out_dir / "histogram.csv", histogram_csv(config_histogram(result)));
        write_file(out_dir / "feature_usage.csv",
                   feature_usage_csv(feature_usage(result, datasets)));
    }
    write_file(out_dir / "report.txt", render_report(result, summaries));
}

} // namespace rome::harness
