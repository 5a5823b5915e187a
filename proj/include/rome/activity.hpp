#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "rome/errors.hpp"
#include "rome/text.hpp"

namespace rome {

/// Calendar month in UTC. Ordering and arithmetic are by (year, month).
struct YearMonth {
    int year = 0;
    int month = 0; // 1..12

    auto operator<=>(const YearMonth&) const = default;

    YearMonth next() const { return month == 12 ? YearMonth{year + 1, 1} : YearMonth{year, month + 1}; }

    int last_day() const {
        static constexpr int days[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
        if (month == 2 && (year % 4 == 0 && (year % 100 != 0 || year % 400 == 0))) return 29;
        return days[month - 1];
    }

    /// "YYYY-MM-DD" of the month's final day; the `dates` column of fixtures.
    std::string end_date() const {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month, last_day());
        return buf;
    }
};

inline YearMonth parse_year_month(std::string_view s, std::string_view what) {
    // accepts YYYY-MM or any string starting with YYYY-MM-
    if (s.size() < 7 || s[4] != '-')
        throw DataError(std::string(what) + ": bad date '" + std::string(s) + "'");
    auto y = parse_long(s.substr(0, 4));
    auto m = parse_long(s.substr(5, 2));
    if (!y || !m || *m < 1 || *m > 12)
        throw DataError(std::string(what) + ": bad date '" + std::string(s) + "'");
    return YearMonth{static_cast<int>(*y), static_cast<int>(*m)};
}

/// One month of repository activity. Field order matches the fixture
/// columns; `feature_names()` is the single source of that order.
struct MonthlyActivity {
    YearMonth month_end;
    std::int64_t commits = 0;
    std::int64_t commit_comments = 0;
    std::int64_t contributors = 0;
    std::int64_t open_prs = 0;
    std::int64_t closed_prs = 0;
    std::int64_t merged_prs = 0;
    std::int64_t pr_mergers = 0;
    std::int64_t pr_comments = 0;
    std::int64_t open_issues = 0;
    std::int64_t closed_issues = 0;
    std::int64_t issue_comments = 0;
    std::int64_t stargazers = 0;
    std::int64_t forks = 0;
    std::int64_t watchers = 0;

    static constexpr std::size_t kFeatureCount = 14;

    static const std::array<std::string, kFeatureCount>& feature_names() {
        static const std::array<std::string, kFeatureCount> names = {
            "monthly_commits",        "monthly_commit_comments", "monthly_contributors",
            "monthly_open_PRs",       "monthly_closed_PRs",      "monthly_merged_PRs",
            "monthly_PR_mergers",     "monthly_PR_comments",     "monthly_open_issues",
            "monthly_closed_issues",  "monthly_issue_comments",  "monthly_stargazer",
            "monthly_forks",          "monthly_watchers"};
        return names;
    }

    std::array<std::int64_t, kFeatureCount> values() const {
        return {commits,      commit_comments, contributors, open_prs,      closed_prs,
                merged_prs,   pr_mergers,      pr_comments,  open_issues,   closed_issues,
                issue_comments, stargazers,    forks,        watchers};
    }

    void set_values(const std::array<std::int64_t, kFeatureCount>& v) {
        commits = v[0]; commit_comments = v[1]; contributors = v[2]; open_prs = v[3];
        closed_prs = v[4]; merged_prs = v[5]; pr_mergers = v[6]; pr_comments = v[7];
        open_issues = v[8]; closed_issues = v[9]; issue_comments = v[10];
        stargazers = v[11]; forks = v[12]; watchers = v[13];
    }

    bool operator==(const MonthlyActivity&) const = default;
};

/// Contiguous monthly history of one repository.
struct ActivitySeries {
    std::string repo_id;
    std::vector<MonthlyActivity> months;

    /// Contiguity, non-negativity, and merged <= closed. Throws on violation.
    void validate() const {
        for (std::size_t i = 0; i < months.size(); ++i) {
            const MonthlyActivity& m = months[i];
            for (std::int64_t v : m.values())
                if (v < 0)
                    throw DataError(repo_id + ": negative count in month " + m.month_end.end_date());
            if (m.merged_prs > m.closed_prs)
                throw DataError(repo_id + ": merged_PRs > closed_PRs in month " +
                                m.month_end.end_date());
            if (i > 0 && months[i - 1].month_end.next() != m.month_end)
                throw DataError(repo_id + ": non-contiguous months at " + m.month_end.end_date());
        }
    }

    bool operator==(const ActivitySeries&) const = default;
};

/// Fixture codec: the 15-column CSV (a `dates` column plus the 14 counts).
inline std::string to_fixture_csv(const ActivitySeries& series) {
    std::ostringstream out;
    out << "dates";
    for (const auto& name : MonthlyActivity::feature_names()) out << ',' << name;
    out << '\n';
    for (const MonthlyActivity& m : series.months) {
        out << m.month_end.end_date();
        for (std::int64_t v : m.values()) out << ',' << v;
        out << '\n';
    }
    return out.str();
}

inline ActivitySeries from_fixture(const std::filesystem::path& path) {
    CsvTable table = read_csv(path);
    const auto& names = MonthlyActivity::feature_names();
    if (table.header.size() != names.size() + 1 || table.header[0] != "dates")
        throw DataError(path.string() + ": fixture must have a 'dates' column plus " +
                        std::to_string(names.size()) + " activity columns");
    for (std::size_t i = 0; i < names.size(); ++i)
        if (table.header[i + 1] != names[i])
            throw DataError(path.string() + ": column " + std::to_string(i + 2) + " must be '" +
                            names[i] + "', got '" + table.header[i + 1] + "'");
    ActivitySeries series;
    series.repo_id = path.stem().string();
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        MonthlyActivity m;
        m.month_end = parse_year_month(table.rows[r][0], path.string());
        std::array<std::int64_t, MonthlyActivity::kFeatureCount> vals{};
        for (std::size_t c = 0; c < vals.size(); ++c) {
            auto v = parse_long(table.rows[r][c + 1]);
            if (!v)
                throw DataError(path.string() + ": row " + std::to_string(r + 2) +
                                ", column '" + names[c] + "' is not an integer");
            vals[c] = *v;
        }
        m.set_values(vals);
        series.months.push_back(m);
    }
    if (series.months.empty()) throw DataError(path.string() + ": empty fixture");
    series.validate();
    return series;
}

inline void write_fixture(const std::filesystem::path& path, const ActivitySeries& series) {
    write_file(path, to_fixture_csv(series));
}

} // namespace rome
