#pragma once

#include <stdexcept>
#include <string>

namespace morpinet {

/// Malformed, missing or inconsistent input data (files, streams, manifests).
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Numeric contract violation: non-finite values, degenerate norms, shape mismatch.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace morpinet
