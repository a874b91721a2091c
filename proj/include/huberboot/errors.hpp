#pragma once

#include <stdexcept>
#include <string>

namespace huberboot {

// Linear system has no unique solution (rank-deficient design, indefinite
// normal matrix, and so on).
struct singular_matrix_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The data admit no meaningful answer: residuals identically zero, a
// calibration equation with no root, an interpolating pilot fit.
struct degenerate_data_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Too many bootstrap replications failed to converge (more than the
// tolerated 1% of the budget).
struct replication_budget_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input file. Message carries row/column context.
struct parse_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// An iterative fit exhausted its budget without meeting its tolerance.
struct convergence_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace huberboot
