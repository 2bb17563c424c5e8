#pragma once

#include <stdexcept>
#include <string>

namespace norin {

/// Malformed or unusable input data (bad CSV, invalid parameters, short splits).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A training run or search that could not complete (non-finite loss, all trials failed).
class RunError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace norin
