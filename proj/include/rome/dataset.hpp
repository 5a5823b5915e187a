#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rome/activity.hpp"
#include "rome/errors.hpp"
#include "rome/rng.hpp"
#include "rome/text.hpp"

namespace rome {

enum class ColumnKind { numeric, ordinal, categorical, excluded, target };

inline std::string to_string(ColumnKind kind) {
    switch (kind) {
        case ColumnKind::numeric: return "numeric";
        case ColumnKind::ordinal: return "ordinal";
        case ColumnKind::categorical: return "categorical";
        case ColumnKind::excluded: return "excluded";
        case ColumnKind::target: return "target";
    }
    return "?";
}

inline ColumnKind parse_column_kind(std::string_view s) {
    if (s == "numeric") return ColumnKind::numeric;
    if (s == "ordinal") return ColumnKind::ordinal;
    if (s == "categorical") return ColumnKind::categorical;
    if (s == "excluded") return ColumnKind::excluded;
    if (s == "target") return ColumnKind::target;
    throw DataError("unknown column kind '" + std::string(s) + "'");
}

enum class Provenance { cocomo, classic, contemporary };

inline std::string to_string(Provenance p) {
    switch (p) {
        case Provenance::cocomo: return "cocomo";
        case Provenance::classic: return "classic";
        case Provenance::contemporary: return "contemporary";
    }
    return "?";
}

inline Provenance parse_provenance(std::string_view s) {
    if (s == "cocomo") return Provenance::cocomo;
    if (s == "classic") return Provenance::classic;
    if (s == "contemporary") return Provenance::contemporary;
    throw DataError("unknown provenance '" + std::string(s) + "'");
}

/// Declares every column of a source table: its name and how estimators
/// should treat it. Exactly one column is the target; excluded columns
/// are dropped at load time and never reach an estimator.
struct FeatureSchema {
    struct Column {
        std::string name;
        ColumnKind kind = ColumnKind::numeric;
        bool operator==(const Column&) const = default;
    };

    std::vector<Column> columns;

    void validate() const {
        std::set<std::string> seen;
        std::size_t targets = 0;
        for (const Column& c : columns) {
            if (!seen.insert(c.name).second) throw DataError("duplicate column '" + c.name + "'");
            if (c.kind == ColumnKind::target) ++targets;
        }
        if (targets != 1)
            throw DataError("schema must have exactly one target column, found " +
                            std::to_string(targets));
    }

    const std::string& target_name() const {
        for (const Column& c : columns)
            if (c.kind == ColumnKind::target) return c.name;
        throw DataError("schema has no target column");
    }

    std::optional<std::size_t> find(std::string_view name) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i].name == name) return i;
        return std::nullopt;
    }

    bool operator==(const FeatureSchema&) const = default;
};

/// Immutable training/evaluation table: predictor matrix plus effort
/// targets. Categorical cells are stored as their integer codes. Safe to
/// share across threads once built.
class Dataset {
public:
    Dataset() = default;

    Dataset(std::string name, std::vector<FeatureSchema::Column> predictors,
            std::string target_name, std::vector<std::vector<double>> rows,
            std::vector<double> targets, Provenance provenance)
        : name_(std::move(name)),
          predictors_(std::move(predictors)),
          target_name_(std::move(target_name)),
          rows_(std::move(rows)),
          targets_(std::move(targets)),
          provenance_(provenance) {
        if (rows_.empty()) throw DataError(name_ + ": empty dataset");
        if (rows_.size() != targets_.size())
            throw DataError(name_ + ": row/target count mismatch");
        for (const auto& row : rows_)
            if (row.size() != predictors_.size())
                throw DataError(name_ + ": ragged row");
        for (double t : targets_) {
            if (provenance_ == Provenance::contemporary) {
                if (t < 0) throw DataError(name_ + ": negative target");
            } else if (t <= 0) {
                throw DataError(name_ + ": target must be strictly positive");
            }
        }
    }

    const std::string& name() const { return name_; }
    Provenance provenance() const { return provenance_; }
    std::size_t n_rows() const { return rows_.size(); }
    std::size_t n_features() const { return predictors_.size(); }
    const std::vector<FeatureSchema::Column>& predictors() const { return predictors_; }
    const std::string& target_name() const { return target_name_; }

    double value(std::size_t row, std::size_t col) const { return rows_[row][col]; }
    const std::vector<double>& row(std::size_t r) const { return rows_[r]; }
    double target(std::size_t r) const { return targets_[r]; }
    const std::vector<double>& targets() const { return targets_; }

    std::size_t feature_index(std::string_view name) const {
        for (std::size_t i = 0; i < predictors_.size(); ++i)
            if (predictors_[i].name == name) return i;
        throw DataError(name_ + ": no predictor named '" + std::string(name) + "'");
    }

    /// New dataset holding the given rows, in the given order.
    Dataset subset(const std::vector<std::size_t>& row_indices, std::string suffix = "") const {
        std::vector<std::vector<double>> rows;
        std::vector<double> targets;
        rows.reserve(row_indices.size());
        targets.reserve(row_indices.size());
        for (std::size_t r : row_indices) {
            rows.push_back(rows_[r]);
            targets.push_back(targets_[r]);
        }
        return Dataset(name_ + suffix, predictors_, target_name_, std::move(rows),
                       std::move(targets), provenance_);
    }

    /// Content hash covering schema, rows, and targets.
    std::uint64_t content_hash() const {
        std::uint64_t h = hash_bytes(name_);
        h = hash_bytes(target_name_, h);
        for (const auto& c : predictors_) {
            h = hash_bytes(c.name, h);
            h = mix64(h ^ static_cast<std::uint64_t>(c.kind));
        }
        auto mix_double = [&h](double v) {
            std::uint64_t bits;
            static_assert(sizeof(bits) == sizeof(v));
            std::memcpy(&bits, &v, sizeof(bits));
            h = mix64(h ^ bits);
        };
        for (std::size_t r = 0; r < rows_.size(); ++r) {
            for (double v : rows_[r]) mix_double(v);
            mix_double(targets_[r]);
        }
        return h;
    }

private:
    std::string name_;
    std::vector<FeatureSchema::Column> predictors_;
    std::string target_name_;
    std::vector<std::vector<double>> rows_;
    std::vector<double> targets_;
    Provenance provenance_ = Provenance::classic;
};

/// Sidecar file declaring a table's column kinds and provenance.
///
///   provenance: classic
///   column: Input numeric
///   column: RawFPs excluded
///   column: Effort target
struct DatasetSpec {
    FeatureSchema schema;
    Provenance provenance = Provenance::classic;
};

inline DatasetSpec read_schema_file(const std::filesystem::path& path) {
    KvFile kv = read_kv(path);
    DatasetSpec spec;
    spec.provenance = parse_provenance(kv.require("provenance"));
    for (const std::string& entry : kv.all("column")) {
        auto parts = split(trim(entry), ' ');
        std::vector<std::string> words;
        for (auto& p : parts)
            if (!trim(p).empty()) words.emplace_back(trim(p));
        if (words.size() != 2)
            throw DataError(path.string() + ": column entry must be '<name> <kind>', got '" +
                            entry + "'");
        spec.schema.columns.push_back({words[0], parse_column_kind(words[1])});
    }
    spec.schema.validate();
    return spec;
}

/// Loads a CSV against a schema. The header must carry exactly the schema's
/// columns in order. Excluded columns are dropped; categorical text values
/// get integer codes in first-appearance order.
inline Dataset load_csv(const std::filesystem::path& path, const FeatureSchema& schema,
                        Provenance provenance = Provenance::classic) {
    schema.validate();
    CsvTable table = read_csv(path);
    if (table.header.size() != schema.columns.size())
        throw DataError(path.string() + ": header has " + std::to_string(table.header.size()) +
                        " columns, schema expects " + std::to_string(schema.columns.size()));
    for (std::size_t i = 0; i < table.header.size(); ++i)
        if (table.header[i] != schema.columns[i].name)
            throw DataError(path.string() + ": header column " + std::to_string(i + 1) + " is '" +
                            table.header[i] + "', schema expects '" + schema.columns[i].name + "'");
    if (table.rows.empty()) throw DataError(path.string() + ": empty dataset");

    std::vector<FeatureSchema::Column> predictors;
    std::vector<std::size_t> predictor_cols;
    std::size_t target_col = 0;
    for (std::size_t i = 0; i < schema.columns.size(); ++i) {
        switch (schema.columns[i].kind) {
            case ColumnKind::excluded: break;
            case ColumnKind::target: target_col = i; break;
            default:
                predictors.push_back(schema.columns[i]);
                predictor_cols.push_back(i);
        }
    }

    // first-appearance code books for categorical columns
    std::vector<std::map<std::string, double>> codes(schema.columns.size());

    std::vector<std::vector<double>> rows;
    std::vector<double> targets;
    rows.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        auto cell = [&](std::size_t col) -> double {
            const std::string& text = table.rows[r][col];
            const auto& column = schema.columns[col];
            if (column.kind == ColumnKind::categorical) {
                auto [it, inserted] = codes[col].try_emplace(text, double(codes[col].size()));
                (void)inserted;
                return it->second;
            }
            auto v = parse_double(text);
            if (!v)
                throw DataError(path.string() + ": row " + std::to_string(r + 2) + ", column '" +
                                column.name + "': non-numeric value '" + text + "'");
            return *v;
        };
        std::vector<double> row;
        row.reserve(predictor_cols.size());
        for (std::size_t col : predictor_cols) row.push_back(cell(col));
        rows.push_back(std::move(row));
        targets.push_back(cell(target_col));
    }
    return Dataset(path.stem().string(), std::move(predictors),
                   schema.columns[target_col].name, std::move(rows), std::move(targets),
                   provenance);
}

inline Dataset load_dataset(const std::filesystem::path& csv,
                            const std::filesystem::path& schema_file) {
    DatasetSpec spec = read_schema_file(schema_file);
    return load_csv(csv, spec.schema, spec.provenance);
}

/// Drops the named predictor columns. Row count is unchanged; excluding
/// the target is an error.
inline Dataset clean(const Dataset& data, const std::vector<std::string>& exclusions) {
    std::set<std::string> drop;
    for (const std::string& name : exclusions) {
        if (name == data.target_name())
            throw DataError(data.name() + ": cannot exclude the target column '" + name + "'");
        if (!std::any_of(data.predictors().begin(), data.predictors().end(),
                         [&](const auto& c) { return c.name == name; }))
            throw DataError(data.name() + ": no column named '" + name + "' to exclude");
        drop.insert(name);
    }
    std::vector<FeatureSchema::Column> kept;
    std::vector<std::size_t> kept_idx;
    for (std::size_t i = 0; i < data.predictors().size(); ++i) {
        if (!drop.count(data.predictors()[i].name)) {
            kept.push_back(data.predictors()[i]);
            kept_idx.push_back(i);
        }
    }
    std::vector<std::vector<double>> rows(data.n_rows());
    for (std::size_t r = 0; r < data.n_rows(); ++r) {
        rows[r].reserve(kept_idx.size());
        for (std::size_t i : kept_idx) rows[r].push_back(data.value(r, i));
    }
    return Dataset(data.name(), std::move(kept), data.target_name(), std::move(rows),
                   std::vector<double>(data.targets()), data.provenance());
}

/// M repeats of an N-fold partition. assignments[repeat][row] = bin.
struct SplitPlan {
    std::size_t m_repeats = 0;
    std::size_t n_bins = 0;
    std::uint64_t seed = 0;
    std::vector<std::vector<std::size_t>> assignments;

    std::uint64_t plan_hash() const {
        std::uint64_t h = mix64(seed ^ (m_repeats * 31 + n_bins));
        for (const auto& repeat : assignments)
            for (std::size_t bin : repeat) h = mix64(h ^ bin);
        return h;
    }

    std::vector<std::size_t> bin_rows(std::size_t repeat, std::size_t bin) const {
        std::vector<std::size_t> out;
        for (std::size_t r = 0; r < assignments[repeat].size(); ++r)
            if (assignments[repeat][r] == bin) out.push_back(r);
        return out;
    }

    std::vector<std::size_t> complement_rows(std::size_t repeat, std::size_t bin) const {
        std::vector<std::size_t> out;
        for (std::size_t r = 0; r < assignments[repeat].size(); ++r)
            if (assignments[repeat][r] != bin) out.push_back(r);
        return out;
    }
};

/// M*N cross-validation plan: per repeat, shuffle row indices with a
/// per-repeat stream, then deal position i to bin i mod n.
inline SplitPlan mxn_folds(const Dataset& data, std::size_t m, std::size_t n,
                           std::uint64_t seed) {
    if (n < 2) throw DataError("mxn_folds: need at least 2 bins");
    if (m < 1) throw DataError("mxn_folds: need at least 1 repeat");
    if (data.n_rows() < n)
        throw DataError("mxn_folds: " + std::to_string(n) + " bins but only " +
                        std::to_string(data.n_rows()) + " rows");
    SplitPlan plan;
    plan.m_repeats = m;
    plan.n_bins = n;
    plan.seed = seed;
    plan.assignments.resize(m);
    for (std::size_t repeat = 0; repeat < m; ++repeat) {
        std::vector<std::size_t> order(data.n_rows());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(repeat)}));
        rng.shuffle(order);
        auto& bins = plan.assignments[repeat];
        bins.resize(data.n_rows());
        for (std::size_t pos = 0; pos < order.size(); ++pos) bins[order[pos]] = pos % n;
    }
    return plan;
}

/// Turns a monthly activity series into a supervised table: for every
/// month t >= lag, the predictors are the activity values of months
/// t-lag .. t-1 (oldest first, features in fixture order) and the target
/// is `target_feature` at month t.
inline Dataset lag_features(const ActivitySeries& series, std::size_t lag,
                            const std::string& target_feature) {
    if (lag == 0) throw DataError(series.repo_id + ": lag must be at least 1");
    series.validate();
    if (series.months.size() < lag + 2)
        throw DataError(series.repo_id + ": series too short (" +
                        std::to_string(series.months.size()) + " months, need at least " +
                        std::to_string(lag + 2) + ")");
    const auto& names = MonthlyActivity::feature_names();
    std::size_t target_idx = names.size();
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == target_feature) target_idx = i;
    if (target_idx == names.size())
        throw DataError(series.repo_id + ": no activity feature named '" + target_feature + "'");

    std::vector<FeatureSchema::Column> predictors;
    for (std::size_t back = lag; back >= 1; --back)
        for (const auto& f : names)
            predictors.push_back({f + "_tminus" + std::to_string(back), ColumnKind::numeric});

    std::vector<std::vector<double>> rows;
    std::vector<double> targets;
    for (std::size_t t = lag; t < series.months.size(); ++t) {
        std::vector<double> row;
        row.reserve(lag * names.size());
        for (std::size_t back = lag; back >= 1; --back) {
            auto vals = series.months[t - back].values();
            for (std::int64_t v : vals) row.push_back(static_cast<double>(v));
        }
        rows.push_back(std::move(row));
        targets.push_back(static_cast<double>(series.months[t].values()[target_idx]));
    }
    return Dataset(series.repo_id, std::move(predictors), target_feature, std::move(rows),
                   std::move(targets), Provenance::contemporary);
}

/// Chronological split for contemporary data: the last row is the test
/// set, everything before it is training.
inline std::pair<Dataset, Dataset> time_series_split(const Dataset& supervised) {
    if (supervised.provenance() != Provenance::contemporary)
        throw DataError(supervised.name() + ": time-series split needs contemporary provenance");
    if (supervised.n_rows() < 2)
        throw DataError(supervised.name() + ": need at least 2 rows to split");
    std::vector<std::size_t> train_idx(supervised.n_rows() - 1);
    for (std::size_t i = 0; i < train_idx.size(); ++i) train_idx[i] = i;
    std::vector<std::size_t> test_idx = {supervised.n_rows() - 1};
    return {supervised.subset(train_idx), supervised.subset(test_idx)};
}

} // namespace rome
