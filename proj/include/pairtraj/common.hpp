// common.hpp — shared scalar/matrix aliases and error taxonomy

#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

namespace pairtraj {

using Complex = std::complex<double>;
using Vector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXcd;
using SparseMatrix = Eigen::SparseMatrix<Complex>;
using Triplet = Eigen::Triplet<Complex>;
using Index = Eigen::Index;

inline constexpr Complex kI{0.0, 1.0};

// Largest Hilbert-space dimension a tensor product may produce.
inline constexpr Index kMaxDimension = 1 << 20;

// Operators at or above this dimension are stored sparse by default.
inline constexpr Index kDenseStorageLimit = 64;

// Structural misuse: operands living in different spaces.
struct dimension_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Requested object would exceed configured resource limits.
struct resource_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A run whose result is identically trivial (e.g. B|psi0> = 0).
struct degenerate_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Numerical breakdown inside an engine (dead trajectory, impossible jump).
struct numerical_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Diverging jump intensity in the expectation-targeted engine.
struct rate_singularity_error : numerical_error {
    using numerical_error::numerical_error;
};

// Bad or inconsistent run configuration.
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline bool all_finite(const Vector& v) {
    for (Index i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i].real()) || !std::isfinite(v[i].imag())) return false;
    }
    return true;
}

inline void require_same_dim(Index a, Index b, const char* where) {
    if (a != b) {
        throw dimension_error(std::string(where) + ": dimension mismatch (" +
                              std::to_string(a) + " vs " + std::to_string(b) + ")");
    }
}

}  // namespace pairtraj
