#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace lctrunc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Raised when a numerical procedure cannot produce a reliable result
/// (singular factorization, non-convergence, excessive residual).
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Raised when a precondition of a bound or certificate is not met
/// (tuning constants outside their admissible interval, perturbation too
/// large for the contraction argument, tail mass too heavy).
struct InfeasibleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Raised when a block callback returns a matrix of the wrong shape or a
/// model description is structurally inconsistent.
struct StructureError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Sizes of the level state spaces: level 0 has s0 phases, every level
/// k >= 1 has s1 phases. States are indexed (level, phase) and flattened
/// level-major.
struct LevelLayout {
    int s0 = 1;
    int s1 = 1;

    LevelLayout() = default;
    LevelLayout(int s0_, int s1_) : s0(s0_), s1(s1_) {
        if (s0 < 1 || s1 < 1)
            throw StructureError("LevelLayout: level sizes must be >= 1");
    }

    int level_size(int k) const { return k == 0 ? s0 : s1; }
    int level_offset(int k) const { return k == 0 ? 0 : s0 + (k - 1) * s1; }

    /// Number of states in levels 0..n.
    int num_states(int n) const { return s0 + n * s1; }

    int state_index(int level, int phase) const {
        return level_offset(level) + phase;
    }

    std::pair<int, int> state_of(int index) const {
        if (index < s0) return {0, index};
        const int r = index - s0;
        return {1 + r / s1, r % s1};
    }

    /// Largest level with all states at index < count.
    int level_of(int index) const { return state_of(index).first; }
};

inline double sig_round(double x, int digits) {
    if (x == 0.0 || !std::isfinite(x)) return x;
    const double mag = std::pow(10.0, digits - 1 - std::floor(std::log10(std::abs(x))));
    return std::round(x * mag) / mag;
}

}  // namespace lctrunc
