#pragma once

#include <Eigen/Core>
#include <cmath>
#include <stdexcept>
#include <string>

namespace iqvi {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Residual norms at or below this threshold are treated as exact zeros when
/// evaluating the scaling factors of the finite-time and fixed-time flows.
/// Keeps negative powers of denormal norms from overflowing.
inline constexpr double kEpsZero = 1e-14;

struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Thrown when an iteration produces a state with NaN/Inf entries.
struct NonFiniteError : std::runtime_error {
    long iteration;
    explicit NonFiniteError(long iter)
        : std::runtime_error("state became non-finite at iteration " + std::to_string(iter)),
          iteration(iter) {}
};

/// A bound calculator was invoked although its stability condition fails.
struct ConditionViolatedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Flow exponents do not match the requested envelope parameter.
struct ExponentMismatchError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// A user-supplied projector hook returned a point that fails the
/// idempotence re-check.
struct ProjectorError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UnreachableDestinationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

[[nodiscard]] inline bool is_finite(const Vector& v) { return v.allFinite(); }

inline void require_finite(const Vector& v, const char* what) {
    if (!v.allFinite()) {
        throw std::invalid_argument(std::string(what) + " contains NaN/Inf entries");
    }
}

inline void require_dim(const Vector& v, Eigen::Index dim, const char* what) {
    if (v.size() != dim) {
        throw DimensionError(std::string(what) + ": expected dimension " + std::to_string(dim) +
                             ", got " + std::to_string(v.size()));
    }
}

}  // namespace iqvi
