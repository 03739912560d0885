#pragma once

#include <stdexcept>
#include <string>

namespace areaprof {

/// Bad input data or configuration. Maps to CLI exit code 2.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid or degenerate geometry (collinear polygon, zero area).
class GeometryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Data is well formed but too degenerate to analyse. Maps to exit code 3.
class DegenerateDataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace areaprof
