#pragma once

#include <stdexcept>
#include <string>

namespace trire {

// Config text problems: unknown keys, bad values, violated constraints.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed or missing input data (IDX files, checkpoint containers).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Dimension mismatch between matrices, masks or parameter sets.
class ShapeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad call arguments: labels out of range, masked label class,
// degenerate inputs (all-zero counters, empty splits).
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// API misuse: stale traces, missing checkpoints, wrong call order.
class StateError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace trire
