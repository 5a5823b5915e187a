#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "rome/errors.hpp"
#include "rome/text.hpp"

namespace rome::cocomo {

/// Attribute names in table order: 5 scale factors, then 17 effort
/// multipliers. This is also the expected predictor layout of a
/// cocomo-provenance dataset (followed by a kloc column).
inline const std::array<std::string, 5>& scale_factor_names() {
    static const std::array<std::string, 5> names = {"prec", "flex", "resl", "team", "pmat"};
    return names;
}

inline const std::array<std::string, 17>& effort_multiplier_names() {
    static const std::array<std::string, 17> names = {
        "rely", "cplx", "data", "ruse", "time", "stor", "pvol", "acap", "pcap",
        "pcon", "aexp", "plex", "ltex", "tool", "sced", "site", "docu"};
    return names;
}

/// One project in COCOMO-II form: ordinal ratings (1 = very low .. 6 =
/// extra high, 3 = nominal) plus size. actual_months is present on
/// training rows only.
struct Project {
    std::array<int, 5> scale_factors{};
    std::array<int, 17> effort_multipliers{};
    double kloc = 0.0;
    double actual_months = 0.0;
};

struct Coefficients {
    double a = 2.94;
    double b = 0.91;
};

/// Ordinal-to-numeric lookup for every scale factor and effort
/// multiplier. Undefined ordinals (e.g. "very low" DATA) are simply
/// absent and looking them up is an error naming the attribute.
class RatingTable {
public:
    void set(const std::string& attribute, int ordinal, double value) {
        table_[attribute][ordinal] = value;
    }

    double lookup(const std::string& attribute, int ordinal) const {
        auto attr = table_.find(attribute);
        if (attr == table_.end())
            throw DataError("rating table has no attribute '" + attribute + "'");
        auto cell = attr->second.find(ordinal);
        if (cell == attr->second.end())
            throw DataError("attribute '" + attribute + "' has no rating for ordinal " +
                            std::to_string(ordinal));
        return cell->second;
    }

    bool has(const std::string& attribute, int ordinal) const {
        auto attr = table_.find(attribute);
        return attr != table_.end() && attr->second.count(ordinal) > 0;
    }

    const std::map<std::string, std::map<int, double>>& entries() const { return table_; }

    /// Nominal effort multipliers must be 1.0 and every multiplier must
    /// stay inside [0.7, 1.74].
    void validate() const {
        for (const auto& name : effort_multiplier_names()) {
            auto attr = table_.find(name);
            if (attr == table_.end())
                throw DataError("rating table missing effort multiplier '" + name + "'");
            auto nominal = attr->second.find(3);
            if (nominal == attr->second.end() || nominal->second != 1.0)
                throw DataError("effort multiplier '" + name + "' must map nominal (3) to 1.0");
            for (const auto& [ordinal, value] : attr->second)
                if (value < 0.7 || value > 1.74)
                    throw DataError("effort multiplier '" + name + "' ordinal " +
                                    std::to_string(ordinal) + " = " + fmt_double(value) +
                                    " outside [0.7, 1.74]");
        }
        for (const auto& name : scale_factor_names())
            if (!table_.count(name))
                throw DataError("rating table missing scale factor '" + name + "'");
    }

private:
    std::map<std::string, std::map<int, double>> table_;
};

/// Rating table resource: lines of `SF <name> <ordinal> <value>` or
/// `EM <name> <ordinal> <value>`.
inline RatingTable read_rating_table(const std::filesystem::path& path) {
    RatingTable table;
    std::size_t lineno = 0;
    for (const auto& raw : split(read_file(path), '\n')) {
        ++lineno;
        std::string_view line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        std::vector<std::string> words;
        for (auto& w : split(line, ' '))
            if (!trim(w).empty()) words.emplace_back(trim(w));
        if (words.size() != 4 || (words[0] != "SF" && words[0] != "EM"))
            throw DataError(path.string() + ": line " + std::to_string(lineno) +
                            " must be 'SF|EM <name> <ordinal> <value>'");
        auto ordinal = parse_long(words[2]);
        auto value = parse_double(words[3]);
        if (!ordinal || !value)
            throw DataError(path.string() + ": line " + std::to_string(lineno) + " has bad numbers");
        table.set(words[1], static_cast<int>(*ordinal), *value);
    }
    table.validate();
    return table;
}

inline double product_of_multipliers(const Project& p, const RatingTable& tables) {
    const auto& names = effort_multiplier_names();
    double product = 1.0;
    for (std::size_t i = 0; i < names.size(); ++i)
        product *= tables.lookup(names[i], p.effort_multipliers[i]);
    return product;
}

inline double sum_of_scale_factors(const Project& p, const RatingTable& tables) {
    const auto& names = scale_factor_names();
    double sum = 0.0;
    for (std::size_t i = 0; i < names.size(); ++i)
        sum += tables.lookup(names[i], p.scale_factors[i]);
    return sum;
}

/// effort = a * prod(EM_i) * kloc^(b + 0.01 * sum(SF_j)), in person-months.
inline double estimate(const Project& p, const Coefficients& coeffs, const RatingTable& tables) {
    if (p.kloc <= 0) throw DataError("kloc must be positive");
    const double em = product_of_multipliers(p, tables);
    const double sf = sum_of_scale_factors(p, tables);
    return coeffs.a * em * std::pow(p.kloc, coeffs.b + 0.01 * sf);
}

/// Boehm-style local calibration: with the table-mapped multipliers and
/// scale factors treated as known, fit (a, b) by least squares in log
/// space. Writing y_i = ln(actual_i) - sum_j ln(EM_ij) and
/// c_i = 0.01 * sum(SF_i), the model is
///   y_i = ln(a) + (b + c_i) * ln(kloc_i),
/// so regressing (y_i - c_i * ln(kloc_i)) on ln(kloc_i) gives
/// intercept = ln(a) and slope = b.
inline Coefficients local_calibrate(const std::vector<Project>& train,
                                    const RatingTable& tables) {
    if (train.size() < 2)
        throw DataError("calibration needs at least 2 projects");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(train.size());
    bool distinct_kloc = false;
    for (const Project& p : train) {
        if (p.kloc <= 0) throw DataError("calibration: kloc must be positive");
        if (p.actual_months <= 0) throw DataError("calibration: actual effort must be positive");
        if (p.kloc != train.front().kloc) distinct_kloc = true;
        const double x = std::log(p.kloc);
        const double c = 0.01 * sum_of_scale_factors(p, tables);
        const double y = std::log(p.actual_months) - std::log(product_of_multipliers(p, tables)) -
                         c * x;
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    if (!distinct_kloc) throw DataError("calibration underdetermined: all kloc equal");
    const double denom = n * sxx - sx * sx;
    if (denom == 0) throw DataError("calibration underdetermined: all kloc equal");
    const double slope = (n * sxy - sx * sy) / denom;
    const double intercept = (sy - slope * sx) / n;
    return Coefficients{std::exp(intercept), slope};
}

} // namespace rome::cocomo
