#pragma once

#include <cmath>
#include <vector>

#include "rome/dataset.hpp"
#include "rome/errors.hpp"
#include "rome/simplex.hpp"

namespace rome::lp4ee {

struct Model {
    std::vector<double> coefficients;  // one per predictor, free sign
    double sar = 0.0;                  // sum of absolute residuals on training data
};

/// Least-absolute-residual fit: minimize sum_i (u_i + v_i) subject to
///   sum_j a_j * x_ij + u_i - v_i = y_i,   u, v >= 0, a free.
/// No intercept and no feature scaling; predictions are a plain dot
/// product with the raw feature values.
inline Model train(const std::vector<std::vector<double>>& rows,
                   const std::vector<double>& targets) {
    if (rows.empty()) throw DataError("lp4ee: empty training data");
    if (rows.size() != targets.size()) throw DataError("lp4ee: row/target count mismatch");
    const std::size_t n = rows.size();
    const std::size_t f = rows.front().size();
    if (f == 0) throw DataError("lp4ee: no predictors");

    simplex::LinearProgram lp;
    const std::size_t n_vars = f + 2 * n;  // a_j, then u_i, then v_i
    lp.objective.assign(n_vars, 0.0);
    lp.nonneg.assign(n_vars, true);
    for (std::size_t j = 0; j < f; ++j) lp.nonneg[j] = false;
    for (std::size_t i = 0; i < 2 * n; ++i) lp.objective[f + i] = 1.0;

    lp.constraints.assign(n, std::vector<double>(n_vars, 0.0));
    lp.rhs = targets;
    for (std::size_t i = 0; i < n; ++i) {
        if (rows[i].size() != f) throw DataError("lp4ee: ragged training rows");
        for (std::size_t j = 0; j < f; ++j) lp.constraints[i][j] = rows[i][j];
        lp.constraints[i][f + i] = 1.0;       // u_i
        lp.constraints[i][f + n + i] = -1.0;  // v_i
    }

    simplex::Solution solution = simplex::solve(lp);
    Model model;
    model.coefficients.assign(solution.x.begin(), solution.x.begin() + static_cast<std::ptrdiff_t>(f));
    model.sar = solution.objective;
    return model;
}

inline Model train(const Dataset& data) {
    std::vector<std::vector<double>> rows;
    rows.reserve(data.n_rows());
    for (std::size_t r = 0; r < data.n_rows(); ++r) rows.push_back(data.row(r));
    return train(rows, data.targets());
}

inline double predict(const Model& model, const std::vector<double>& row) {
    if (row.size() != model.coefficients.size())
        throw DataError("lp4ee: row has " + std::to_string(row.size()) +
                        " features, model expects " + std::to_string(model.coefficients.size()));
    double y = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) y += model.coefficients[j] * row[j];
    return y;
}

/// Training-set SAR of an arbitrary coefficient vector; the optimality
/// property tests perturb fitted models through this.
inline double sar_of(const std::vector<double>& coefficients,
                     const std::vector<std::vector<double>>& rows,
                     const std::vector<double>& targets) {
    double total = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        double y = 0.0;
        for (std::size_t j = 0; j < coefficients.size(); ++j) y += coefficients[j] * rows[i][j];
        total += std::abs(y - targets[i]);
    }
    return total;
}

} // namespace rome::lp4ee
