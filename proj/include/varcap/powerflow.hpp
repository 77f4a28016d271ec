#pragma once

#include <complex>
#include <vector>

#include "varcap/network.hpp"

namespace varcap {

/// Result of the nonlinear backward/forward sweep. Voltages are complex
/// phasors per non-slack node-phase in the network's global ordering.
struct PfSolution {
    std::vector<std::complex<double>> v;
    bool converged = false;
    int iterations = 0;
    double max_mismatch = 0.0;          // worst per-node complex power residual (p.u.)
    bool mismatch_monotone = true;      // diagnostic: residual nonincreasing after iteration 2
    std::complex<double> slack_power;   // complex power leaving the slack (p.u.)
    std::complex<double> total_load;    // voltage-dependent loads evaluated at solution
    std::complex<double> total_gen;
    std::complex<double> total_loss;    // sum of line I*Z*I losses
};

/// Exact 3-phase unbalanced power flow on a radial feeder.
/// p_gen/q_gen are per-unit generation injections per node-phase
/// (same ordering and sign convention as the linear model).
PfSolution solve_pf(const NetworkModel& net,
                    const std::vector<double>& p_gen,
                    const std::vector<double>& q_gen,
                    double tol = 1e-8,
                    int max_iter = 100);

struct Violation {
    std::size_t node_phase;
    double vmag;
};

/// Node-phases whose voltage magnitude falls outside [v_lo, v_hi].
/// Throws convergence_error if the solution did not converge.
std::vector<Violation> check_limits(const PfSolution& sol, double v_lo, double v_hi);

}  // namespace varcap
