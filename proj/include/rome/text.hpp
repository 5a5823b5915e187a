#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "rome/errors.hpp"

namespace rome {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            out.emplace_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

inline std::optional<double> parse_double(std::string_view s) {
    s = trim(s);
    if (s.empty()) return std::nullopt;
    double value = 0.0;
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, value);
    if (ec != std::errc{} || ptr != end) return std::nullopt;
    return value;
}

inline std::optional<long> parse_long(std::string_view s) {
    s = trim(s);
    if (s.empty()) return std::nullopt;
    long value = 0;
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, value);
    if (ec != std::errc{} || ptr != end) return std::nullopt;
    return value;
}

/// Round-trip-safe decimal form, identical across runs. Used everywhere a
/// double lands in an output file so reruns are byte-comparable.
inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    // prefer the shortest representation that still round-trips
    for (int prec = 1; prec < 17; ++prec) {
        char trial[40];
        std::snprintf(trial, sizeof(trial), "%.*g", prec, v);
        double back = 0.0;
        std::sscanf(trial, "%lf", &back);
        if (back == v) return trial;
    }
    return buf;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path.string());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view body) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path.string());
    out << body;
}

/// Comma-separated table: no quoting, one header row, uniform width.
/// The bundled datasets and every emitted report use this dialect.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

inline CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path.string());
    CsvTable table;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view sv = trim(line);
        if (sv.empty()) continue;
        auto cells = split(sv, ',');
        for (auto& c : cells) c = std::string(trim(c));
        if (table.header.empty()) {
            table.header = std::move(cells);
        } else {
            if (cells.size() != table.header.size())
                throw DataError(path.string() + ": row " + std::to_string(lineno) + " has " +
                                std::to_string(cells.size()) + " cells, expected " +
                                std::to_string(table.header.size()));
            table.rows.push_back(std::move(cells));
        }
    }
    if (table.header.empty()) throw DataError(path.string() + ": empty file");
    return table;
}

/// `key: value` lines, `#` comments. Repeated keys keep every occurrence.
struct KvFile {
    std::vector<std::pair<std::string, std::string>> entries;

    std::vector<std::string> all(std::string_view key) const {
        std::vector<std::string> out;
        for (const auto& [k, v] : entries)
            if (k == key) out.push_back(v);
        return out;
    }

    std::optional<std::string> get(std::string_view key) const {
        for (const auto& [k, v] : entries)
            if (k == key) return v;
        return std::nullopt;
    }

    std::string require(std::string_view key) const {
        auto v = get(key);
        if (!v) throw DataError("missing key '" + std::string(key) + "'");
        return *v;
    }
};

inline KvFile parse_kv(std::string_view body, std::string_view what) {
    KvFile kv;
    std::size_t lineno = 0;
    for (const auto& raw : split(body, '\n')) {
        ++lineno;
        std::string_view line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        auto colon = line.find(':');
        if (colon == std::string_view::npos)
            throw DataError(std::string(what) + ": line " + std::to_string(lineno) +
                            " is not 'key: value'");
        kv.entries.emplace_back(std::string(trim(line.substr(0, colon))),
                                std::string(trim(line.substr(colon + 1))));
    }
    return kv;
}

inline KvFile read_kv(const std::filesystem::path& path) {
    return parse_kv(read_file(path), path.string());
}

} // namespace rome
