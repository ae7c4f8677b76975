#pragma once

#include <stdexcept>
#include <string>

namespace graftlab {

// Raised when an operation needs a map of a different type (e.g. axis of an elliptic).
struct ClassificationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Intersecting carriers, shared endpoints, parabolic curve words.
struct DegeneracyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad pants decompositions and numerically impossible gluings.
struct AssemblyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MeshError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace graftlab
