#pragma once

#include <stdexcept>
#include <string>

namespace surrobridge {

// Bad user input: out-of-range values, malformed files, inconsistent sizes.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// A computation that cannot proceed: singular systems, failed factorizations,
// non-convergent iterations.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

// API misuse: querying a model before it has been fitted, etc.
class StateError : public std::runtime_error {
public:
    explicit StateError(const std::string& msg) : std::runtime_error(msg) {}
};

// I/O failures: missing files, unwritable paths.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace surrobridge
