#pragma once

#include <stdexcept>
#include <string>

namespace hsp {

/// Input data is malformed (bad CSV, dimension mismatch, unparseable value).
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
    DataError(const std::string& path, std::size_t line, const std::string& msg)
        : std::runtime_error(path + ":" + std::to_string(line) + ": " + msg) {}
};

/// Data is structurally valid but statistically unusable (e.g. a constant column).
class DegenerateDataError : public DataError {
public:
    using DataError::DataError;
};

/// A request exceeds a hard-coded resource guard (e.g. enumerating partitions of n > 12).
class ResourceLimitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A sampler state invariant was violated; indicates a bug, not bad input.
class InternalError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

} // namespace hsp
