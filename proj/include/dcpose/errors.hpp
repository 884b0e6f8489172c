#pragma once

#include <stdexcept>
#include <string>

namespace dcpose {

// Error taxonomy mirrored by the CLI exit codes:
//   UsageError -> 1, DataError -> 2, NumericError -> 3.
struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace dcpose
