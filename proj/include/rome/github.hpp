#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rome/activity.hpp"
#include "rome/errors.hpp"
#include "rome/text.hpp"

#include <json.hpp>

namespace rome::github {

struct HttpResponse {
    int status = 0;
    std::string body;
    std::map<std::string, std::string> headers;
};

/// Transport seam: live collection uses the cpp-httplib client defined in
/// the CLI, tests plug in canned responders.
class HttpClient {
public:
    virtual ~HttpClient() = default;
    virtual HttpResponse get(const std::string& path,
                             const std::map<std::string, std::string>& headers) = 0;
};

struct CollectionSpec {
    std::string repo;  // owner/name
    YearMonth from;
    YearMonth to;  // inclusive
    std::filesystem::path cache_dir;
    std::string token_env = "GITHUB_TOKEN";
    bool allow_network = false;
    std::size_t max_retries = 3;

    void validate() const {
        if (repo.find('/') == std::string::npos)
            throw DataError("repo must be owner/name, got '" + repo + "'");
        if (!(from < to) && from != to)
            throw DataError("collection range start must not be after end");
        if (cache_dir.empty()) throw DataError("cache directory is required");
    }
};

namespace detail {

// Howard Hinnant's civil-date algorithms.
inline std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = static_cast<unsigned>((153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1);
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yr = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    y = static_cast<int>(yr + (m <= 2));
}

} // namespace detail

/// UTC calendar month of an ISO-8601 timestamp; offsets like +02:00 are
/// folded in before bucketing.
inline YearMonth utc_month_of(std::string_view ts, std::string_view what = "timestamp") {
    auto bad = [&]() -> DataError {
        return DataError(std::string(what) + ": bad timestamp '" + std::string(ts) + "'");
    };
    if (ts.size() < 16 || ts[4] != '-' || ts[7] != '-') throw bad();
    auto y = parse_long(ts.substr(0, 4));
    auto mo = parse_long(ts.substr(5, 2));
    auto d = parse_long(ts.substr(8, 2));
    auto hh = parse_long(ts.substr(11, 2));
    auto mi = parse_long(ts.substr(14, 2));
    if (!y || !mo || !d || !hh || !mi) throw bad();

    std::int64_t offset_min = 0;
    if (!ts.empty() && ts.back() != 'Z') {
        // trailing +hh:mm / -hh:mm / +hhmm
        std::size_t sign_at = ts.find_last_of("+-");
        if (sign_at == std::string_view::npos || sign_at < 19) throw bad();
        std::string_view off = ts.substr(sign_at + 1);
        std::string digits;
        for (char c : off)
            if (c != ':') digits.push_back(c);
        if (digits.size() != 4) throw bad();
        auto oh = parse_long(digits.substr(0, 2));
        auto om = parse_long(digits.substr(2, 2));
        if (!oh || !om) throw bad();
        offset_min = *oh * 60 + *om;
        if (ts[sign_at] == '-') offset_min = -offset_min;
    }

    std::int64_t total_min = detail::days_from_civil(static_cast<int>(*y), static_cast<int>(*mo),
                                                     static_cast<int>(*d)) *
                                 1440 +
                             *hh * 60 + *mi;
    total_min -= offset_min;
    std::int64_t day = total_min / 1440;
    if (total_min < 0 && total_min % 1440 != 0) --day;
    int cy, cm, cd;
    detail::civil_from_days(day, cy, cm, cd);
    return YearMonth{cy, cm};
}

namespace detail {

inline std::string sanitize(std::string s) {
    for (char& c : s)
        if (c == '/') c = '_';
    return s;
}

struct Endpoint {
    std::string name;      // cache key component
    std::string path;      // request path, {repo} substituted
    std::string accept;    // Accept header override
};

inline std::vector<Endpoint> endpoints(const std::string& repo) {
    const std::string base = "/repos/" + repo;
    return {
        {"commits", base + "/commits", ""},
        {"commit_comments", base + "/comments", ""},
        {"pulls", base + "/pulls?state=all", ""},
        {"pull_comments", base + "/pulls/comments", ""},
        {"issues", base + "/issues?state=all", ""},
        {"issue_comments", base + "/issues/comments", ""},
        {"stargazers", base + "/stargazers", "application/vnd.github.star+json"},
        {"forks", base + "/forks", ""},
        {"watch_events", base + "/events", ""},
    };
}

} // namespace detail

/// Collects the monthly activity features for one repository. All pages
/// go through the on-disk cache keyed by (repo, endpoint, page); live
/// requests happen only on cache misses with networking enabled, with
/// retry-after-aware backoff on rate limits. Aggregation over an
/// unchanged cache is idempotent.
class Collector {
public:
    Collector(HttpClient* client = nullptr, std::function<void(int)> sleeper = nullptr)
        : client_(client), sleeper_(std::move(sleeper)) {}

    ActivitySeries collect(const CollectionSpec& spec) {
        spec.validate();
        namespace fs = std::filesystem;
        const fs::path repo_dir = spec.cache_dir / detail::sanitize(spec.repo);

        // month index over the requested range
        std::vector<YearMonth> months;
        for (YearMonth ym = spec.from;; ym = ym.next()) {
            months.push_back(ym);
            if (ym == spec.to) break;
        }
        auto month_slot = [&](const YearMonth& ym) -> std::ptrdiff_t {
            if (ym < months.front() || months.back() < ym) return -1;
            return (ym.year - months.front().year) * 12 + (ym.month - months.front().month);
        };

        ActivitySeries series;
        series.repo_id = spec.repo;
        series.months.resize(months.size());
        for (std::size_t i = 0; i < months.size(); ++i) series.months[i].month_end = months[i];

        std::vector<std::set<std::string>> authors(months.size());
        std::vector<std::set<std::string>> mergers(months.size());

        auto bump = [&](const YearMonth& ym, std::int64_t MonthlyActivity::* field) {
            const std::ptrdiff_t slot = month_slot(ym);
            if (slot >= 0) series.months[static_cast<std::size_t>(slot)].*field += 1;
        };

        for (const detail::Endpoint& endpoint : detail::endpoints(spec.repo)) {
            for (std::size_t page = 1;; ++page) {
                const std::string body = fetch_page(spec, repo_dir, endpoint, page);
                nlohmann::json items = nlohmann::json::parse(body, nullptr, false);
                if (items.is_discarded())
                    throw DataError(spec.repo + ": malformed JSON in " + endpoint.name + " page " +
                                    std::to_string(page));
                if (!items.is_array())
                    throw DataError(spec.repo + ": expected array from " + endpoint.name);
                if (items.empty()) break;

                for (const auto& item : items) {
                    if (endpoint.name == "commits") {
                        const std::string ts = item.at("commit").at("author").at("date");
                        const YearMonth ym = utc_month_of(ts, endpoint.name);
                        bump(ym, &MonthlyActivity::commits);
                        std::string who;
                        if (item.contains("author") && item["author"].is_object() &&
                            item["author"].contains("login"))
                            who = item["author"]["login"].get<std::string>();
                        else
                            who = item.at("commit").at("author").value("name", "");
                        const std::ptrdiff_t slot = month_slot(ym);
                        if (slot >= 0 && !who.empty())
                            authors[static_cast<std::size_t>(slot)].insert(who);
                    } else if (endpoint.name == "commit_comments") {
                        bump(utc_month_of(item.at("created_at").get<std::string>(), endpoint.name),
                             &MonthlyActivity::commit_comments);
                    } else if (endpoint.name == "pulls") {
                        bump(utc_month_of(item.at("created_at").get<std::string>(), endpoint.name),
                             &MonthlyActivity::open_prs);
                        if (item.contains("closed_at") && item["closed_at"].is_string())
                            bump(utc_month_of(item["closed_at"].get<std::string>(), endpoint.name),
                                 &MonthlyActivity::closed_prs);
                        if (item.contains("merged_at") && item["merged_at"].is_string()) {
                            const YearMonth ym =
                                utc_month_of(item["merged_at"].get<std::string>(), endpoint.name);
                            bump(ym, &MonthlyActivity::merged_prs);
                            const std::ptrdiff_t slot = month_slot(ym);
                            if (slot >= 0 && item.contains("merged_by") &&
                                item["merged_by"].is_object() && item["merged_by"].contains("login"))
                                mergers[static_cast<std::size_t>(slot)].insert(
                                    item["merged_by"]["login"].get<std::string>());
                        }
                    } else if (endpoint.name == "pull_comments") {
                        bump(utc_month_of(item.at("created_at").get<std::string>(), endpoint.name),
                             &MonthlyActivity::pr_comments);
                    } else if (endpoint.name == "issues") {
                        if (item.contains("pull_request")) continue;  // issues API echoes PRs
                        bump(utc_month_of(item.at("created_at").get<std::string>(), endpoint.name),
                             &MonthlyActivity::open_issues);
                        if (item.contains("closed_at") && item["closed_at"].is_string())
                            bump(utc_month_of(item["closed_at"].get<std::string>(), endpoint.name),
                                 &MonthlyActivity::closed_issues);
                    } else if (endpoint.name == "issue_comments") {
                        bump(utc_month_of(item.at("created_at").get<std::string>(), endpoint.name),
                             &MonthlyActivity::issue_comments);
                    } else if (endpoint.name == "stargazers") {
                        bump(utc_month_of(item.at("starred_at").get<std::string>(), endpoint.name),
                             &MonthlyActivity::stargazers);
                    } else if (endpoint.name == "forks") {
                        bump(utc_month_of(item.at("created_at").get<std::string>(), endpoint.name),
                             &MonthlyActivity::forks);
                    } else if (endpoint.name == "watch_events") {
                        if (item.value("type", "") != "WatchEvent") continue;
                        bump(utc_month_of(item.at("created_at").get<std::string>(), endpoint.name),
                             &MonthlyActivity::watchers);
                    }
                }
            }
        }

        for (std::size_t i = 0; i < months.size(); ++i) {
            series.months[i].contributors = static_cast<std::int64_t>(authors[i].size());
            series.months[i].pr_mergers = static_cast<std::int64_t>(mergers[i].size());
        }
        write_manifest(repo_dir);
        series.validate();
        return series;
    }

private:
    std::string fetch_page(const CollectionSpec& spec, const std::filesystem::path& repo_dir,
                           const detail::Endpoint& endpoint, std::size_t page) {
        namespace fs = std::filesystem;
        const std::string file = endpoint.name + "_p" + std::to_string(page) + ".json";
        const fs::path cached = repo_dir / file;
        if (fs::exists(cached)) return read_file(cached);
        if (!spec.allow_network || client_ == nullptr)
            throw NetworkError(spec.repo + ": cache miss for " + endpoint.name + " page " +
                               std::to_string(page) + " (networking disabled)");

        const char* token = std::getenv(spec.token_env.c_str());
        std::map<std::string, std::string> headers;
        headers["User-Agent"] = "rome-effort-estimation";
        headers["Accept"] =
            endpoint.accept.empty() ? "application/vnd.github+json" : endpoint.accept;
        if (token != nullptr && *token != '\0') headers["Authorization"] = std::string("token ") + token;

        const char sep = endpoint.path.find('?') == std::string::npos ? '?' : '&';
        const std::string path =
            endpoint.path + sep + "per_page=100&page=" + std::to_string(page);

        for (std::size_t attempt = 0;; ++attempt) {
            HttpResponse response = client_->get(path, headers);
            if (response.status == 200) {
                write_file(cached, response.body);
                return response.body;
            }
            if (response.status == 404)
                throw NetworkError(spec.repo + ": repository not found");
            if (response.status == 401)
                throw NetworkError(spec.repo + ": authentication failed (check " + spec.token_env +
                                   ")");
            const bool rate_limited =
                response.status == 403 || response.status == 429 ||
                (response.headers.count("X-RateLimit-Remaining") &&
                 response.headers.at("X-RateLimit-Remaining") == "0");
            if (rate_limited && attempt < spec.max_retries) {
                int wait = 60;
                if (auto it = response.headers.find("Retry-After"); it != response.headers.end())
                    if (auto v = parse_long(it->second)) wait = static_cast<int>(*v);
                if (sleeper_) sleeper_(wait);
                continue;
            }
            if (rate_limited)
                throw NetworkError(spec.repo + ": rate limit exceeded after " +
                                   std::to_string(spec.max_retries) + " retries");
            throw NetworkError(spec.repo + ": HTTP " + std::to_string(response.status) + " from " +
                               endpoint.name);
        }
    }

    void write_manifest(const std::filesystem::path& repo_dir) {
        namespace fs = std::filesystem;
        if (!fs::exists(repo_dir)) return;
        std::vector<std::string> lines;
        for (const auto& entry : fs::directory_iterator(repo_dir)) {
            if (!entry.is_regular_file() || entry.path().extension() != ".json") continue;
            lines.push_back(entry.path().filename().string() + " " +
                            std::to_string(entry.file_size()));
        }
        std::sort(lines.begin(), lines.end());
        std::ostringstream body;
        for (const auto& line : lines) body << line << '\n';
        write_file(repo_dir / "manifest.txt", body.str());
    }

    HttpClient* client_;
    std::function<void(int)> sleeper_;
};

inline ActivitySeries collect(const CollectionSpec& spec, HttpClient* client = nullptr,
                              std::function<void(int)> sleeper = nullptr) {
    return Collector(client, std::move(sleeper)).collect(spec);
}

} // namespace rome::github
