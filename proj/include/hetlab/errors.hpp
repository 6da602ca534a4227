#pragma once

#include <stdexcept>
#include <string>

namespace hetlab {

// Input-side failures (malformed files, invariant violations, bad parameters).
// The CLI maps these to exit code 1.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct KappaUndefined : std::runtime_error {
    KappaUndefined() : std::runtime_error("kappa is undefined: no alpha_k equals 1 for k <= n-1") {}
};
struct RegimeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct GeometryError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UnstableCycle : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Runtime failures of experiments and numerics. Exit code 2.
struct QuadratureError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InsufficientData : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InsufficientEscapes : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct AllTimeout : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace hetlab
