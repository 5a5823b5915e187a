#pragma once

#include <stdexcept>
#include <string>

namespace rome {

/// Malformed input data: bad CSV cells, schema violations, impossible
/// parameter combinations. Mapped to exit code 2 by the CLI.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Remote-collection failures: rate limits, auth, missing repos.
/// Mapped to exit code 3 by the CLI.
class NetworkError : public std::runtime_error {
public:
    explicit NetworkError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace rome
