#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "rome/dataset.hpp"
#include "rome/errors.hpp"

namespace rome::atlm {

enum class Transform { identity, sqrt_shift, log_shift };

inline std::string to_string(Transform t) {
    switch (t) {
        case Transform::identity: return "identity";
        case Transform::sqrt_shift: return "sqrt";
        case Transform::log_shift: return "log";
    }
    return "?";
}

/// Population skewness g1 = m3 / m2^(3/2); 0 for constant columns.
inline double skewness(const std::vector<double>& xs) {
    const double n = static_cast<double>(xs.size());
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= n;
    double m2 = 0.0, m3 = 0.0;
    for (double x : xs) {
        const double d = x - mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= n;
    m3 /= n;
    if (m2 == 0.0) return 0.0;
    return m3 / std::pow(m2, 1.5);
}

/// Per-predictor preprocessing. Continuous columns carry the transform
/// picked at training time plus the shift that keeps sqrt/log defined on
/// columns containing non-positive values; categorical columns carry the
/// observed level codes, expanding to levels-1 indicators (lowest code is
/// the baseline).
struct ColumnRule {
    bool categorical = false;
    Transform transform = Transform::identity;
    double shift = 0.0;              // sqrt(x + shift) or log(x + shift)
    std::vector<double> levels;      // categorical only, sorted

    std::size_t width() const {
        return categorical ? levels.size() - 1 : 1;
    }

    double apply_continuous(double x) const {
        switch (transform) {
            case Transform::identity: return x;
            case Transform::sqrt_shift: return std::sqrt(std::max(x + shift, 0.0));
            case Transform::log_shift: return std::log(std::max(x + shift, 1e-12));
        }
        return x;
    }
};

struct Model {
    std::vector<ColumnRule> rules;   // one per original predictor
    std::vector<double> beta;        // intercept first, then expanded columns
    std::vector<bool> aliased;       // expanded columns dropped as collinear

    std::size_t design_width() const {
        std::size_t w = 0;
        for (const ColumnRule& r : rules) w += r.width();
        return w;
    }

    std::vector<double> expand(const std::vector<double>& row) const {
        if (row.size() != rules.size())
            throw DataError("atlm: row has " + std::to_string(row.size()) +
                            " features, model expects " + std::to_string(rules.size()));
        std::vector<double> out;
        out.reserve(design_width());
        for (std::size_t c = 0; c < rules.size(); ++c) {
            const ColumnRule& rule = rules[c];
            if (rule.categorical) {
                // unseen level: every indicator stays zero
                for (std::size_t l = 1; l < rule.levels.size(); ++l)
                    out.push_back(row[c] == rule.levels[l] ? 1.0 : 0.0);
            } else {
                out.push_back(rule.apply_continuous(row[c]));
            }
        }
        return out;
    }

    double predict(const std::vector<double>& row) const {
        const std::vector<double> x = expand(row);
        double y = beta[0];
        for (std::size_t j = 0; j < x.size(); ++j) y += beta[j + 1] * x[j];
        return y;
    }
};

struct Options {
    /// Zero out linearly dependent design columns instead of failing.
    /// The experiment harness uses this so one degenerate fold (a level
    /// missing from a resample, a constant column) does not abort a run.
    bool drop_aliased = false;
    /// Skip skew-minimizing transform selection; identity everywhere.
    bool force_identity = false;
};

namespace detail {

/// Solves (XtX) beta = Xty. The matrix is symmetric positive
/// semi-definite, so plain elimination on the diagonal is stable; a
/// vanishing pivot means the column is linearly dependent on earlier ones
/// and is either an error or aliased to a zero coefficient, per options.
inline std::vector<double> solve_normal_equations(std::vector<std::vector<double>> a,
                                                  std::vector<double> b, const Options& options,
                                                  std::vector<bool>& aliased_out) {
    const std::size_t n = b.size();
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(a[i][i]));
    const double tol = std::max(scale, 1.0) * 1e-10;
    aliased_out.assign(n, false);

    for (std::size_t col = 0; col < n; ++col) {
        if (a[col][col] <= tol) {
            if (!options.drop_aliased) throw DataError("atlm: collinear predictors");
            aliased_out[col] = true;
            for (std::size_t r = col; r < n; ++r) a[r][col] = 0.0;
            for (std::size_t c = col; c < n; ++c) a[col][c] = 0.0;
            a[col][col] = 1.0;
            b[col] = 0.0;
            continue;
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            const double factor = a[r][col] / a[col][col];
            if (factor == 0.0) continue;
            for (std::size_t c = col; c < n; ++c) a[r][c] -= factor * a[col][c];
            b[r] -= factor * b[col];
        }
    }
    std::vector<double> x(n, 0.0);
    for (std::size_t i = n; i-- > 0;) {
        double acc = b[i];
        for (std::size_t c = i + 1; c < n; ++c) acc -= a[i][c] * x[c];
        x[i] = acc / a[i][i];
    }
    return x;
}

} // namespace detail

/// Chooses the skew-minimizing transform per continuous predictor (ties
/// prefer identity, then sqrt, then log), expands categoricals to
/// dummies, and fits ordinary least squares with an intercept.
inline Model train(const Dataset& data, const Options& options = {}) {
    Model model;
    for (std::size_t c = 0; c < data.n_features(); ++c) {
        ColumnRule rule;
        std::vector<double> column(data.n_rows());
        for (std::size_t r = 0; r < data.n_rows(); ++r) column[r] = data.value(r, c);
        if (data.predictors()[c].kind == ColumnKind::categorical) {
            rule.categorical = true;
            rule.levels = column;
            std::sort(rule.levels.begin(), rule.levels.end());
            rule.levels.erase(std::unique(rule.levels.begin(), rule.levels.end()),
                              rule.levels.end());
        } else {
            const double mn = *std::min_element(column.begin(), column.end());
            const double sqrt_shift = mn <= 0 ? -mn : 0.0;
            const double log_shift = mn <= 0 ? -mn + 1.0 : 0.0;
            const Transform candidates[] = {Transform::identity, Transform::sqrt_shift,
                                            Transform::log_shift};
            const double shifts[] = {0.0, sqrt_shift, log_shift};
            double best_skew = 0.0;
            for (std::size_t t = 0; t < 3; ++t) {
                ColumnRule trial;
                trial.transform = candidates[t];
                trial.shift = shifts[t];
                std::vector<double> transformed(column.size());
                for (std::size_t r = 0; r < column.size(); ++r)
                    transformed[r] = trial.apply_continuous(column[r]);
                const double skew = std::abs(skewness(transformed));
                if (t == 0 || skew < best_skew) {
                    best_skew = skew;
                    rule.transform = trial.transform;
                    rule.shift = trial.shift;
                }
            }
            if (options.force_identity) {
                rule.transform = Transform::identity;
                rule.shift = 0.0;
            }
        }
        model.rules.push_back(std::move(rule));
    }

    const std::size_t width = model.design_width();
    if (data.n_rows() <= width)
        throw DataError("atlm: " + std::to_string(data.n_rows()) + " rows for " +
                        std::to_string(width) + " predictors after dummy expansion");

    // normal equations over [1, expanded row]
    const std::size_t p = width + 1;
    std::vector<std::vector<double>> xtx(p, std::vector<double>(p, 0.0));
    std::vector<double> xty(p, 0.0);
    for (std::size_t r = 0; r < data.n_rows(); ++r) {
        std::vector<double> x = model.expand(data.row(r));
        x.insert(x.begin(), 1.0);
        for (std::size_t i = 0; i < p; ++i) {
            for (std::size_t j = 0; j < p; ++j) xtx[i][j] += x[i] * x[j];
            xty[i] += x[i] * data.target(r);
        }
    }
    std::vector<bool> aliased;
    model.beta = detail::solve_normal_equations(std::move(xtx), std::move(xty), options, aliased);
    model.aliased.assign(aliased.begin() + 1, aliased.end());
    return model;
}

inline double predict(const Model& model, const std::vector<double>& row) {
    return model.predict(row);
}

} // namespace rome::atlm
