#pragma once

#include <array>
#include <memory>
#include <vector>

#include "varcap/linalg.hpp"
#include "varcap/network.hpp"

namespace varcap {

/// 3x3 voltage-drop coefficient blocks of one line, in per-unit.
struct LineCoeffs {
    std::array<std::array<double, 3>, 3> zp{};  // multiplies active phase flows
    std::array<std::array<double, 3>, 3> zq{};  // multiplies reactive phase flows
};

/// Coefficients such that y_down = y_up - Zp*P - Zq*Q for downstream phase
/// flows P, Q (per-unit). Balanced mutual-free lines reduce to diag(2r), diag(2x).
LineCoeffs build_coefficients(const Line& line, double z_base_ohm);

/// Affine map from nodal generation injections to squared voltage magnitudes:
///   y = K^{-1} [ R (p_g - p_l a0) + X (q_g - q_l a0) + base ]
/// with the voltage-dependent load fraction a1 absorbed into K.
/// Immutable after construction; safe to share across threads.
struct LinearSensitivity {
    Matrix r_eq, x_eq;                 // N x N, N = non-slack node-phases
    std::vector<double> base_term;     // slack contribution, v0^2 per node-phase
    std::shared_ptr<const LuFactor> k_factor;  // factorized K
    double load_scale = 1.0;
    // Scaled nameplate load split, per node-phase, per-unit:
    std::vector<double> p_load_a0, q_load_a0;  // constant-power parts p_l*a0, q_l*a0
    std::vector<double> p_load_a1, q_load_a1;  // voltage-coupled parts p_l*a1, q_l*a1

    std::size_t size() const { return base_term.size(); }
};

/// Builds R_eq, X_eq, K and the slack term for the feeder with loads scaled
/// by load_scale. Throws singular_error if K cannot be factorized.
LinearSensitivity build_sensitivity(const NetworkModel& net, double load_scale = 1.0);

/// Squared voltage magnitudes for the given generation injections (per-unit,
/// generation positive). Exactly affine in (p_gen, q_gen).
std::vector<double> predict_voltages(const LinearSensitivity& sens,
                                     const std::vector<double>& p_gen,
                                     const std::vector<double>& q_gen);

}  // namespace varcap
