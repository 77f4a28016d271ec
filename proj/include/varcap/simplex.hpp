#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "varcap/linalg.hpp"

namespace varcap {

inline constexpr double lp_inf = std::numeric_limits<double>::infinity();

enum class LpSense { minimize, maximize };
enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

/// Linear program with ranged rows:  row_lo <= A x <= row_hi,
/// var_lo <= x <= var_hi, optimizing c'x in the given sense.
struct LpProblem {
    std::size_t n_vars = 0;
    std::vector<double> objective;
    LpSense sense = LpSense::minimize;
    Matrix rows;                       // n_rows x n_vars (may have 0 rows)
    std::vector<double> row_lo, row_hi;
    std::vector<double> var_lo, var_hi;

    std::size_t n_rows() const { return row_lo.size(); }
    void validate() const;  // throws dimension_error on inconsistent sizes
};

/// Active constraint at an optimum.
struct LpActive {
    enum class Kind { var_lower, var_upper, row_lower, row_upper };
    Kind kind;
    std::size_t index;
};

struct LpSolution {
    LpStatus status = LpStatus::infeasible;
    double objective = 0.0;
    std::vector<double> x;
    std::vector<LpActive> active;
    int iterations = 0;
    // Infeasibility report (phase-1 outcome):
    std::size_t worst_row = static_cast<std::size_t>(-1);  // row, or npos if a variable bound
    std::size_t worst_var = static_cast<std::size_t>(-1);
    double worst_violation = 0.0;
    // Basis at termination (column ids: [0,n_vars) structural, then slacks),
    // kept so optimality can be re-certified from scratch.
    std::vector<std::size_t> basis;
};

struct LpOptions {
    int max_iterations = 0;        // 0 = auto (scales with problem size)
    double feas_tol = 1e-9;        // pivot/feasibility tolerance inside the solver
    bool lex_tiebreak = false;     // canonicalize alternate optima (lexicographic min x)
};

/// Dense bounded-variable primal simplex with Bland's anti-cycling rule.
LpSolution solve_lp(const LpProblem& problem, const LpOptions& opts = {});

/// Independent optimality certificate: re-checks primal feasibility from the
/// original data and re-derives reduced costs from a fresh LU of the basis.
struct LpCertificate {
    bool primal_feasible = false;
    double max_violation = 0.0;
    bool dual_certified = false;
    double worst_reduced_cost = 0.0;  // most negative allowed margin observed
    bool ok() const { return primal_feasible && dual_certified; }
};

LpCertificate certify_lp(const LpProblem& problem, const LpSolution& sol,
                         double tol = 1e-7);

}  // namespace varcap
