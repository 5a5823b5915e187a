#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "rome/atlm.hpp"
#include "rome/cart.hpp"
#include "rome/cocomo.hpp"
#include "rome/dataset.hpp"
#include "rome/errors.hpp"
#include "rome/forest.hpp"
#include "rome/knn.hpp"
#include "rome/lp4ee.hpp"
#include "rome/metrics.hpp"
#include "rome/rng.hpp"
#include "rome/tuners.hpp"

namespace rome::harness {

enum class TreatmentKind { knn, cart, rf, atlm, lp4ee, cocomo2, cart_de, rome_flash };

struct Treatment {
    TreatmentKind kind;
    std::string name;
};

inline Treatment parse_treatment(const std::string& name) {
    if (name == "KNN") return {TreatmentKind::knn, name};
    if (name == "CART") return {TreatmentKind::cart, name};
    if (name == "RF") return {TreatmentKind::rf, name};
    if (name == "ATLM") return {TreatmentKind::atlm, name};
    if (name == "LP4EE") return {TreatmentKind::lp4ee, name};
    if (name == "COCOMO-II") return {TreatmentKind::cocomo2, name};
    if (name == "CART_DE") return {TreatmentKind::cart_de, name};
    if (name == "ROME") return {TreatmentKind::rome_flash, name};
    throw DataError("unknown treatment '" + name + "'");
}

inline bool is_tuned(TreatmentKind kind) {
    return kind == TreatmentKind::cart_de || kind == TreatmentKind::rome_flash;
}

struct PlanParams {
    std::size_t m = 20;
    std::size_t n = 3;
};

struct TunerParams {
    tune::FlashParams flash;
    tune::DeParams de;
};

/// Wraps the test fold and counts every access, so the harness can prove
/// that tuning never touched it.
class SentinelDataset {
public:
    explicit SentinelDataset(Dataset data) : data_(std::move(data)) {}

    const Dataset& read() const {
        ++reads_;
        return data_;
    }

    std::uint64_t reads() const { return reads_.load(); }
    std::size_t n_rows() const { return data_.n_rows(); }

private:
    Dataset data_;
    mutable std::atomic<std::uint64_t> reads_{0};
};

struct FoldOutcome {
    std::size_t repeat = 0;
    std::size_t fold = 0;
    std::string treatment;
    std::vector<std::pair<double, double>> pairs;  // (actual, predicted) per test row
    double mae = 0.0;
    double sa = 0.0;
    double median_mre = 0.0;  // NaN when no test row has positive actual effort
    std::optional<cart::Config> chosen_config;
    std::optional<cart::Tree> tuned_tree;
};

struct DatasetResult {
    std::string name;
    Provenance provenance = Provenance::classic;
    std::uint64_t plan_hash = 0;
    std::vector<FoldOutcome> outcomes;  // ordered by (treatment, repeat, fold)

    std::vector<const FoldOutcome*> of_treatment(const std::string& treatment) const {
        std::vector<const FoldOutcome*> out;
        for (const FoldOutcome& o : outcomes)
            if (o.treatment == treatment) out.push_back(&o);
        return out;
    }
};

struct ExperimentResult {
    std::vector<DatasetResult> datasets;
    std::vector<std::string> treatments;  // in execution order

    const DatasetResult& dataset(const std::string& name) const {
        for (const DatasetResult& d : datasets)
            if (d.name == name) return d;
        throw DataError("no dataset named '" + name + "' in results");
    }
};

struct ExperimentSpec {
    std::vector<Dataset> datasets;
    std::vector<Treatment> treatments;
    PlanParams plan;
    TunerParams tuners;
    std::size_t contemporary_repeats = 20;
    std::uint64_t seed = 0;
    std::size_t jobs = 0;  // 0 = hardware concurrency
    const cocomo::RatingTable* ratings = nullptr;  // required for COCOMO-II
};

namespace detail {

inline bool is_cocomo_layout(const Dataset& data) {
    const auto& sf = cocomo::scale_factor_names();
    const auto& em = cocomo::effort_multiplier_names();
    if (data.n_features() != sf.size() + em.size() + 1) return false;
    std::size_t at = 0;
    for (const auto& name : sf)
        if (data.predictors()[at++].name != name) return false;
    for (const auto& name : em)
        if (data.predictors()[at++].name != name) return false;
    return data.predictors()[at].name == "kloc";
}

inline cocomo::Project project_of_row(const Dataset& data, std::size_t row) {
    cocomo::Project p;
    for (std::size_t i = 0; i < 5; ++i)
        p.scale_factors[i] = static_cast<int>(std::llround(data.value(row, i)));
    for (std::size_t i = 0; i < 17; ++i)
        p.effort_multipliers[i] = static_cast<int>(std::llround(data.value(row, 5 + i)));
    p.kloc = data.value(row, 22);
    p.actual_months = data.target(row);
    return p;
}

struct TreatmentOutput {
    std::vector<double> predictions;
    std::optional<cart::Config> config;
    std::optional<cart::Tree> tree;
};

inline TreatmentOutput run_treatment(const Treatment& treatment, const Dataset& train,
                                     const SentinelDataset& test, std::uint64_t stream,
                                     const TunerParams& tuners,
                                     const cocomo::RatingTable* ratings) {
    TreatmentOutput out;

    // Tuned treatments finish all search work against the validation
    // holdout before the sentinel releases a single test value.
    std::optional<cart::Config> tuned;
    if (is_tuned(treatment.kind)) {
        const tune::ValidationSplit split = tune::validation_split(train, stream);
        const tune::TuneObjective objective = tune::validation_objective(split, stream);
        if (treatment.kind == TreatmentKind::cart_de)
            tuned = tune::de_tune(objective, tuners.de, stream).best;
        else
            tuned = tune::flash_tune(objective, tuners.flash, stream).best;
        if (test.reads() != 0)
            throw std::logic_error(treatment.name + ": test data was read during tuning");
    }

    const Dataset& test_data = test.read();
    auto predict_all = [&](auto&& model_predict) {
        out.predictions.reserve(test_data.n_rows());
        for (std::size_t r = 0; r < test_data.n_rows(); ++r)
            out.predictions.push_back(model_predict(test_data.row(r)));
    };

    switch (treatment.kind) {
        case TreatmentKind::knn: {
            // tiny training folds cap k at the row count
            const std::size_t k = std::min<std::size_t>(knn::kDefaultK, train.n_rows());
            predict_all([&](const std::vector<double>& row) { return knn::predict(train, row, k); });
            break;
        }
        case TreatmentKind::cart: {
            const cart::Tree tree = cart::train(train, cart::Config{}, stream);
            predict_all([&](const std::vector<double>& row) { return tree.predict(row); });
            break;
        }
        case TreatmentKind::rf: {
            const rf::Forest forest = rf::train(train, rf::Options{}, stream);
            predict_all([&](const std::vector<double>& row) { return forest.predict(row); });
            break;
        }
        case TreatmentKind::atlm: {
            // aliased-column dropping keeps degenerate folds (missing
            // levels, constant columns, p >= n lag tables) total
            atlm::Options options;
            options.drop_aliased = true;
            const atlm::Model model = atlm::train(train, options);
            predict_all([&](const std::vector<double>& row) { return model.predict(row); });
            break;
        }
        case TreatmentKind::lp4ee: {
            const lp4ee::Model model = lp4ee::train(train);
            predict_all([&](const std::vector<double>& row) { return lp4ee::predict(model, row); });
            break;
        }
        case TreatmentKind::cocomo2: {
            if (ratings == nullptr) throw DataError("COCOMO-II requires a rating table");
            std::vector<cocomo::Project> projects;
            projects.reserve(train.n_rows());
            for (std::size_t r = 0; r < train.n_rows(); ++r)
                projects.push_back(project_of_row(train, r));
            cocomo::Coefficients coeffs;
            try {
                coeffs = cocomo::local_calibrate(projects, *ratings);
            } catch (const DataError&) {
                // calibration underdetermined on this fold: keep defaults
            }
            predict_all([&](const std::vector<double>& row) {
                cocomo::Project p;
                for (std::size_t i = 0; i < 5; ++i)
                    p.scale_factors[i] = static_cast<int>(std::llround(row[i]));
                for (std::size_t i = 0; i < 17; ++i)
                    p.effort_multipliers[i] = static_cast<int>(std::llround(row[5 + i]));
                p.kloc = row[22];
                return cocomo::estimate(p, coeffs, *ratings);
            });
            break;
        }
        case TreatmentKind::cart_de:
        case TreatmentKind::rome_flash: {
            const cart::Tree tree = cart::train(train, *tuned, derive_seed(stream, {0xef1}));
            out.config = tuned;
            out.tree = tree;
            predict_all([&](const std::vector<double>& row) { return tree.predict(row); });
            break;
        }
    }
    return out;
}

inline FoldOutcome score_fold(const Treatment& treatment, std::size_t repeat, std::size_t fold,
                              const Dataset& train, const Dataset& test,
                              TreatmentOutput&& output) {
    FoldOutcome outcome;
    outcome.repeat = repeat;
    outcome.fold = fold;
    outcome.treatment = treatment.name;
    outcome.chosen_config = output.config;
    outcome.tuned_tree = std::move(output.tree);

    metrics::PredictionSet set;
    std::vector<double> mres;
    for (std::size_t r = 0; r < test.n_rows(); ++r) {
        const double actual = test.target(r);
        const double predicted = output.predictions[r];
        set.pairs.emplace_back(actual, predicted);
        if (actual > 0) mres.push_back(std::abs(actual - predicted) / actual);
    }
    outcome.pairs = set.pairs;
    outcome.mae = metrics::mae(set);
    outcome.median_mre =
        mres.empty() ? std::numeric_limits<double>::quiet_NaN() : metrics::aggregate(std::move(mres));

    const double baseline = metrics::rguess_mae_exact(test.targets(), train.targets());
    outcome.sa = baseline > 0 ? metrics::sa(set, baseline)
                              : std::numeric_limits<double>::quiet_NaN();
    return outcome;
}

struct FoldTask {
    std::size_t dataset = 0;
    std::size_t treatment = 0;
    std::size_t repeat = 0;
};

} // namespace detail

/// Runs treatments x datasets x splits. Classic and cocomo tables iterate
/// the shared M*N plan; contemporary tables rerun the chronological split
/// with per-repeat seeds. Within a fold, tuned treatments search over a
/// validation holdout carved from the training rows, refit on the full
/// training fold, and only then predict the sentinel-guarded test rows.
inline ExperimentResult run_experiment(const ExperimentSpec& spec) {
    if (spec.datasets.empty()) throw DataError("experiment: no datasets");
    if (spec.treatments.empty()) throw DataError("experiment: no treatments");

    for (const Dataset& data : spec.datasets) {
        for (const Treatment& treatment : spec.treatments) {
            if (treatment.kind == TreatmentKind::cocomo2) {
                if (data.provenance() != Provenance::cocomo)
                    throw DataError("COCOMO-II is only admissible on cocomo-provenance data; '" +
                                    data.name() + "' is " + to_string(data.provenance()));
                if (!detail::is_cocomo_layout(data))
                    throw DataError("dataset '" + data.name() +
                                    "' does not carry the scale-factor/effort-multiplier layout");
                if (spec.ratings == nullptr)
                    throw DataError("COCOMO-II treatment requires a rating table");
            }
        }
    }

    ExperimentResult result;
    for (const Treatment& t : spec.treatments) result.treatments.push_back(t.name);
    result.datasets.resize(spec.datasets.size());

    // per-dataset split plans, shared by every treatment
    std::vector<SplitPlan> plans(spec.datasets.size());
    std::vector<std::size_t> repeats(spec.datasets.size());
    std::vector<std::size_t> folds(spec.datasets.size());
    for (std::size_t d = 0; d < spec.datasets.size(); ++d) {
        const Dataset& data = spec.datasets[d];
        result.datasets[d].name = data.name();
        result.datasets[d].provenance = data.provenance();
        if (data.provenance() == Provenance::contemporary) {
            repeats[d] = spec.contemporary_repeats;
            folds[d] = 1;
            result.datasets[d].plan_hash = mix64(data.content_hash() ^ 0x7e57);
        } else {
            plans[d] = mxn_folds(data, spec.plan.m, spec.plan.n,
                                 derive_seed(spec.seed, data.name(), {0x9147}));
            repeats[d] = spec.plan.m;
            folds[d] = spec.plan.n;
            result.datasets[d].plan_hash = plans[d].plan_hash();
        }
    }

    // slot matrix so concurrent tasks never contend
    std::vector<std::vector<std::vector<std::vector<FoldOutcome>>>> slots(spec.datasets.size());
    std::vector<detail::FoldTask> tasks;
    for (std::size_t d = 0; d < spec.datasets.size(); ++d) {
        slots[d].resize(spec.treatments.size());
        for (std::size_t t = 0; t < spec.treatments.size(); ++t) {
            slots[d][t].resize(repeats[d]);
            for (std::size_t r = 0; r < repeats[d]; ++r) tasks.push_back({d, t, r});
        }
    }

    std::atomic<std::size_t> next_task{0};
    std::atomic<bool> failed{false};
    std::string failure;
    std::mutex failure_mutex;

    auto worker = [&]() {
        while (true) {
            const std::size_t task_index = next_task.fetch_add(1);
            if (task_index >= tasks.size() || failed.load()) return;
            const detail::FoldTask task = tasks[task_index];
            const Dataset& data = spec.datasets[task.dataset];
            const Treatment& treatment = spec.treatments[task.treatment];
            try {
                auto& into = slots[task.dataset][task.treatment][task.repeat];
                for (std::size_t fold = 0; fold < folds[task.dataset]; ++fold) {
                    auto [train, test_part] =
                        data.provenance() == Provenance::contemporary
                            ? time_series_split(data)
                            : std::pair<Dataset, Dataset>(
                                  data.subset(plans[task.dataset].complement_rows(task.repeat,
                                                                                  fold)),
                                  data.subset(plans[task.dataset].bin_rows(task.repeat, fold)));
                    SentinelDataset test(std::move(test_part));
                    const std::uint64_t stream = derive_seed(
                        spec.seed, data.name(),
                        {hash_bytes(treatment.name), task.repeat, fold});
                    detail::TreatmentOutput output = detail::run_treatment(
                        treatment, train, test, stream, spec.tuners, spec.ratings);
                    into.push_back(detail::score_fold(treatment, task.repeat, fold, train,
                                                      test.read(), std::move(output)));
                }
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                failed.store(true);
                if (failure.empty())
                    failure = data.name() + "/" + treatment.name + ": " + e.what();
            }
        }
    };

    std::size_t jobs = spec.jobs > 0 ? spec.jobs : std::thread::hardware_concurrency();
    jobs = std::max<std::size_t>(1, std::min(jobs, tasks.size()));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(jobs);
        for (std::size_t i = 0; i < jobs; ++i) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }
    if (failed.load()) throw DataError("experiment failed at " + failure);

    // deterministic assembly order: treatment-major, then repeat, fold
    for (std::size_t d = 0; d < spec.datasets.size(); ++d) {
        for (std::size_t t = 0; t < spec.treatments.size(); ++t)
            for (std::size_t r = 0; r < repeats[d]; ++r)
                for (FoldOutcome& outcome : slots[d][t][r])
                    result.datasets[d].outcomes.push_back(std::move(outcome));
    }
    return result;
}

} // namespace rome::harness
