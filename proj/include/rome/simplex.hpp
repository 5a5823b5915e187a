#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "rome/errors.hpp"

namespace rome::simplex {

/// minimize c.x  subject to  A.x = b, with x_j >= 0 where nonneg[j] is
/// set and x_j free otherwise. Free variables are split into positive
/// parts internally.
struct LinearProgram {
    std::vector<double> objective;
    std::vector<std::vector<double>> constraints;
    std::vector<double> rhs;
    std::vector<bool> nonneg;  // empty = all non-negative

    void validate() const {
        if (constraints.size() != rhs.size())
            throw DataError("lp: constraint/rhs count mismatch");
        for (const auto& row : constraints)
            if (row.size() != objective.size())
                throw DataError("lp: constraint width does not match objective");
        if (!nonneg.empty() && nonneg.size() != objective.size())
            throw DataError("lp: nonneg marker count mismatch");
    }
};

struct Solution {
    std::vector<double> x;
    double objective = 0.0;
    std::size_t pivots = 0;
    /// Objective value after each phase-two pivot; non-increasing.
    std::vector<double> phase2_trace;
};

namespace detail {

constexpr double kEps = 1e-9;
constexpr std::size_t kMaxPivots = 200000;

/// Dense tableau in canonical form: rows_ = [A | b] expressed in the
/// current basis, cost_ = reduced costs with the basic columns zeroed.
class Tableau {
public:
    Tableau(std::vector<std::vector<double>> rows, std::vector<std::size_t> basis,
            std::size_t n_cols)
        : rows_(std::move(rows)), basis_(std::move(basis)), n_cols_(n_cols) {}

    const std::vector<std::size_t>& basis() const { return basis_; }
    std::size_t pivots() const { return pivots_; }
    std::size_t n_rows() const { return rows_.size(); }
    double rhs(std::size_t r) const { return rows_[r][n_cols_]; }
    double entry(std::size_t r, std::size_t c) const { return rows_[r][c]; }

    /// Installs an objective and prices it out against the basis.
    void set_objective(const std::vector<double>& costs) {
        cost_.assign(n_cols_ + 1, 0.0);
        for (std::size_t j = 0; j < costs.size(); ++j) cost_[j] = costs[j];
        for (std::size_t r = 0; r < rows_.size(); ++r) {
            const double cb = cost_[basis_[r]];
            if (cb != 0.0)
                for (std::size_t j = 0; j <= n_cols_; ++j) cost_[j] -= cb * rows_[r][j];
        }
    }

    double objective_value() const { return -cost_[n_cols_]; }

    /// Bland's rule iteration until no negative reduced cost remains.
    /// Returns false when the entering column is unbounded.
    bool minimize(std::vector<double>* trace = nullptr) {
        while (true) {
            std::size_t entering = n_cols_;
            for (std::size_t j = 0; j < n_cols_; ++j) {
                if (cost_[j] < -kEps) {
                    entering = j;
                    break;
                }
            }
            if (entering == n_cols_) return true;

            std::size_t leaving = rows_.size();
            double best_ratio = std::numeric_limits<double>::infinity();
            for (std::size_t r = 0; r < rows_.size(); ++r) {
                if (rows_[r][entering] > kEps) {
                    const double ratio = rhs(r) / rows_[r][entering];
                    if (ratio < best_ratio - kEps ||
                        (ratio < best_ratio + kEps &&
                         (leaving == rows_.size() || basis_[r] < basis_[leaving]))) {
                        best_ratio = ratio;
                        leaving = r;
                    }
                }
            }
            if (leaving == rows_.size()) return false;
            pivot(leaving, entering);
            if (trace) trace->push_back(objective_value());
        }
    }

    void pivot(std::size_t r, std::size_t c) {
        if (++pivots_ > kMaxPivots) throw DataError("simplex: pivot limit exceeded");
        auto& prow = rows_[r];
        const double p = prow[c];
        for (double& v : prow) v /= p;
        for (std::size_t i = 0; i < rows_.size(); ++i) {
            if (i == r) continue;
            const double factor = rows_[i][c];
            if (factor == 0.0) continue;
            for (std::size_t j = 0; j <= n_cols_; ++j) rows_[i][j] -= factor * prow[j];
        }
        if (!cost_.empty() && cost_[c] != 0.0) {
            const double cf = cost_[c];
            for (std::size_t j = 0; j <= n_cols_; ++j) cost_[j] -= cf * prow[j];
        }
        basis_[r] = c;
    }

    /// Pivots the basic variable of row r out on any usable entry among
    /// the first `limit` columns. False means the row is redundant.
    bool evict(std::size_t r, std::size_t limit) {
        for (std::size_t j = 0; j < limit; ++j) {
            if (std::abs(rows_[r][j]) > kEps) {
                pivot(r, j);
                return true;
            }
        }
        return false;
    }

    void drop_row(std::size_t r) {
        rows_.erase(rows_.begin() + static_cast<std::ptrdiff_t>(r));
        basis_.erase(basis_.begin() + static_cast<std::ptrdiff_t>(r));
    }

private:
    std::vector<std::vector<double>> rows_;
    std::vector<double> cost_;
    std::vector<std::size_t> basis_;
    std::size_t n_cols_ = 0;
    std::size_t pivots_ = 0;
};

} // namespace detail

/// Two-phase dense simplex under Bland's rule. Rows that already expose a
/// unit column seed the starting basis, so artificials (and effectively
/// phase one) only appear where needed. Throws on infeasible or unbounded
/// input.
inline Solution solve(const LinearProgram& lp) {
    lp.validate();
    const std::size_t n_vars = lp.objective.size();
    const std::size_t m = lp.rhs.size();
    if (n_vars == 0) throw DataError("lp: no variables");

    // split free variables into x+ - x-
    std::vector<std::size_t> split_of(n_vars, std::size_t(-1));
    std::size_t n_cols = n_vars;
    for (std::size_t j = 0; j < n_vars; ++j)
        if (!lp.nonneg.empty() && !lp.nonneg[j]) split_of[j] = n_cols++;

    std::vector<double> costs(n_cols, 0.0);
    for (std::size_t j = 0; j < n_vars; ++j) {
        costs[j] = lp.objective[j];
        if (split_of[j] != std::size_t(-1)) costs[split_of[j]] = -lp.objective[j];
    }

    // sign-normalized, row-equilibrated core matrix with rhs in the last slot
    std::vector<std::vector<double>> core(m);
    for (std::size_t i = 0; i < m; ++i) {
        core[i].assign(n_cols + 1, 0.0);
        const double sign = lp.rhs[i] < 0 ? -1.0 : 1.0;
        for (std::size_t j = 0; j < n_vars; ++j) {
            core[i][j] = sign * lp.constraints[i][j];
            if (split_of[j] != std::size_t(-1)) core[i][split_of[j]] = -core[i][j];
        }
        core[i][n_cols] = sign * lp.rhs[i];
        double mx = 0.0;
        for (double v : core[i]) mx = std::max(mx, std::abs(v));
        if (mx > 0.0)
            for (double& v : core[i]) v /= mx;
    }

    // claim existing positive unit columns as the starting basis
    std::vector<std::size_t> basis_col(m, std::size_t(-1));
    for (std::size_t j = 0; j < n_cols; ++j) {
        std::size_t hits = 0, at = 0;
        for (std::size_t i = 0; i < m; ++i) {
            if (core[i][j] != 0.0) {
                ++hits;
                at = i;
            }
        }
        if (hits == 1 && core[at][j] > detail::kEps && basis_col[at] == std::size_t(-1))
            basis_col[at] = j;
    }

    std::size_t n_artificial = 0;
    for (std::size_t i = 0; i < m; ++i)
        if (basis_col[i] == std::size_t(-1)) ++n_artificial;
    const std::size_t total_cols = n_cols + n_artificial;

    std::vector<std::vector<double>> rows(m);
    std::vector<std::size_t> basis(m);
    {
        std::size_t next_artificial = n_cols;
        for (std::size_t i = 0; i < m; ++i) {
            rows[i].assign(total_cols + 1, 0.0);
            std::copy(core[i].begin(), core[i].begin() + static_cast<std::ptrdiff_t>(n_cols),
                      rows[i].begin());
            rows[i][total_cols] = core[i][n_cols];
            if (basis_col[i] != std::size_t(-1)) {
                basis[i] = basis_col[i];
            } else {
                basis[i] = next_artificial;
                rows[i][next_artificial] = 1.0;
                ++next_artificial;
            }
        }
    }

    detail::Tableau tableau(std::move(rows), std::move(basis), total_cols);

    // canonicalize the crashed columns (scale to 1, clear elsewhere)
    for (std::size_t i = 0; i < tableau.n_rows(); ++i)
        if (tableau.basis()[i] < n_cols) tableau.pivot(i, tableau.basis()[i]);

    if (n_artificial > 0) {
        std::vector<double> phase1(total_cols, 0.0);
        for (std::size_t j = n_cols; j < total_cols; ++j) phase1[j] = 1.0;
        tableau.set_objective(phase1);
        if (!tableau.minimize()) throw DataError("simplex: phase one unbounded");
        if (tableau.objective_value() > 1e-7) throw DataError("simplex: infeasible constraints");
        for (std::size_t r = tableau.n_rows(); r-- > 0;) {
            if (tableau.basis()[r] >= n_cols) {
                if (!tableau.evict(r, n_cols)) tableau.drop_row(r);
            }
        }
    }

    std::vector<double> phase2(total_cols, 0.0);
    for (std::size_t j = 0; j < n_cols; ++j) phase2[j] = costs[j];
    tableau.set_objective(phase2);
    Solution solution;
    if (!tableau.minimize(&solution.phase2_trace))
        throw DataError("simplex: objective unbounded");

    std::vector<double> full(n_cols, 0.0);
    for (std::size_t r = 0; r < tableau.n_rows(); ++r)
        if (tableau.basis()[r] < n_cols) full[tableau.basis()[r]] = tableau.rhs(r);
    solution.x.resize(n_vars);
    for (std::size_t j = 0; j < n_vars; ++j)
        solution.x[j] = split_of[j] == std::size_t(-1) ? full[j] : full[j] - full[split_of[j]];
    double objective = 0.0;
    for (std::size_t j = 0; j < n_vars; ++j) objective += lp.objective[j] * solution.x[j];
    solution.objective = objective;
    solution.pivots = tableau.pivots();
    return solution;
}

} // namespace rome::simplex
