#pragma once

#include <stdexcept>
#include <string>

namespace varcap {

/// Base class for all varcap failures. Subclasses map 1:1 onto CLI exit codes.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed input file (JSON/CSV syntax, missing fields, bad header).
struct parse_error : error {
    using error::error;
};

/// Network fails radiality/connectivity/phase-consistency checks.
struct topology_error : error {
    using error::error;
};

/// A value is outside its physical or contractual range.
struct value_error : error {
    using error::error;
};

/// Argument outside a mathematical domain (e.g. quantile of P not in (0,1)).
struct domain_error : error {
    using error::error;
};

/// Vector/matrix sizes do not agree.
struct dimension_error : error {
    using error::error;
};

/// A matrix required to be invertible is singular or near-singular.
struct singular_error : error {
    using error::error;
};

/// Iterative method failed to converge.
struct convergence_error : error {
    using error::error;
};

/// Not enough samples to fit a model.
struct insufficient_data_error : error {
    using error::error;
};

/// Optimization problem has no feasible point.
struct infeasible_error : error {
    using error::error;
};

}  // namespace varcap
