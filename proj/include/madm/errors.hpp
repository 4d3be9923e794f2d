#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace madm {

// Precondition or input-format violations (CLI exit code 2).
struct ValidationError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A numerical diagnostic exceeded its tolerance (CLI exit code 3).
struct ToleranceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Short %g rendering for diagnostics; std::to_string prints small values as 0.000000.
inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

inline void require(bool ok, const std::string& what) {
    if (!ok) throw ValidationError(what);
}

}  // namespace madm
