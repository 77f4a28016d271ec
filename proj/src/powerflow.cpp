#include "varcap/powerflow.hpp"

#include <cmath>
#include <numbers>

namespace varcap {

namespace {

std::complex<double> phase_rotation(int p) {
    // a: 0 deg, b: -120 deg, c: +120 deg
    return p == 0 ? std::complex<double>{1.0, 0.0}
                  : std::polar(1.0, -2.0 * std::numbers::pi / 3.0 * p);
}

}  // namespace

PfSolution solve_pf(const NetworkModel& net, const std::vector<double>& p_gen,
                    const std::vector<double>& q_gen, double tol, int max_iter) {
    const std::size_t n = net.n_node_phases();
    if (p_gen.size() != n || q_gen.size() != n)
        throw dimension_error("injection vectors must match the node-phase count");
    if (tol <= 0) throw value_error("tolerance must be positive");

    const std::size_t nb = net.buses.size();
    const double s_phase = net.s_phase_kva();
    const double zb = net.z_base_ohm();

    // Flat start: slack magnitudes with the balanced 0/-120/+120 rotation.
    std::vector<std::array<std::complex<double>, 3>> v(nb);
    for (std::size_t b = 0; b < nb; ++b)
        for (int p = 0; p < 3; ++p)
            if (net.buses[b].phases.has(p))
                v[b][p] = std::sqrt(net.v0_sq[p]) * phase_rotation(p);

    auto net_injection = [&](std::size_t b, int p) -> std::complex<double> {
        const Bus& bus = net.buses[b];
        const double y = std::norm(v[b][p]);
        const double shape = bus.a0[p] + bus.a1[p] * y;
        const double pl = bus.load_kw[p] / s_phase * shape;
        const double ql = bus.load_kvar[p] / s_phase * shape;
        const auto idx = net.np_index[b][p];
        const double pg = idx >= 0 ? p_gen[idx] : 0.0;
        const double qg = idx >= 0 ? q_gen[idx] : 0.0;
        return {pg - pl, qg - ql};
    };

    std::vector<std::array<std::complex<double>, 3>> line_j(net.lines.size());
    PfSolution sol;
    sol.max_mismatch = 1e300;
    bool collapsed = false;

    for (int iter = 1; iter <= max_iter && !collapsed; ++iter) {
        // Backward: aggregate currents leaf-to-root from the present voltages.
        for (auto it = net.bus_order.rbegin(); it != net.bus_order.rend(); ++it) {
            const std::size_t u = *it;
            if (u == net.slack) continue;
            const std::size_t l = net.parent_line[u];
            std::array<std::complex<double>, 3> j{};
            for (int p = 0; p < 3; ++p) {
                if (!net.buses[u].phases.has(p)) continue;
                if (std::abs(v[u][p]) < 1e-6) {
                    collapsed = true;  // voltage collapse; bail out, not converged
                    break;
                }
                j[p] = -std::conj(net_injection(u, p) / v[u][p]);
            }
            if (collapsed) break;
            for (std::size_t cl : net.child_lines[u])
                for (int p = 0; p < 3; ++p) j[p] += line_j[cl][p];
            line_j[l] = j;
        }
        if (collapsed) {
            sol.iterations = iter;
            break;
        }

        // Forward: propagate voltages root-to-leaf through the 3x3 blocks.
        for (std::size_t u : net.bus_order) {
            if (u == net.slack) continue;
            const std::size_t l = net.parent_line[u];
            const Line& line = net.lines[l];
            const std::size_t up = net.bus_index(line.from);
            for (int p = 0; p < 3; ++p) {
                if (!line.phases.has(p)) continue;
                std::complex<double> drop{};
                for (int q = 0; q < 3; ++q)
                    if (line.phases.has(q)) drop += line.z_ohm[p][q] / zb * line_j[l][q];
                v[u][p] = v[up][p] - drop;
            }
        }

        // Mismatch: network-delivered power vs the load model at the new voltages.
        double mismatch = 0.0;
        for (std::size_t u = 0; u < nb; ++u) {
            if (u == net.slack) continue;
            for (int p = 0; p < 3; ++p) {
                if (!net.buses[u].phases.has(p)) continue;
                std::complex<double> absorbed = line_j[net.parent_line[u]][p];
                for (std::size_t cl : net.child_lines[u]) absorbed -= line_j[cl][p];
                const std::complex<double> residual =
                    v[u][p] * std::conj(absorbed) + net_injection(u, p);
                mismatch = std::max(mismatch, std::abs(residual));
            }
        }
        if (iter > 2 && mismatch > sol.max_mismatch * (1.0 + 1e-12))
            sol.mismatch_monotone = false;
        sol.iterations = iter;
        sol.max_mismatch = mismatch;
        if (mismatch <= tol) {
            sol.converged = true;
            break;
        }
    }

    sol.v.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto [b, ph] = net.node_phases[i];
        sol.v[i] = v[b][static_cast<int>(ph)];
    }
    for (std::size_t l : net.child_lines[net.slack])
        for (int p = 0; p < 3; ++p)
            if (net.lines[l].phases.has(p))
                sol.slack_power += v[net.slack][p] * std::conj(line_j[l][p]);
    for (std::size_t u = 0; u < nb; ++u) {
        if (u == net.slack) continue;
        for (int p = 0; p < 3; ++p) {
            if (!net.buses[u].phases.has(p)) continue;
            const Bus& bus = net.buses[u];
            const double y = std::norm(v[u][p]);
            const double shape = bus.a0[p] + bus.a1[p] * y;
            sol.total_load += std::complex<double>{bus.load_kw[p] / s_phase * shape,
                                                   bus.load_kvar[p] / s_phase * shape};
            const auto idx = net.np_index[u][p];
            if (idx >= 0) sol.total_gen += std::complex<double>{p_gen[idx], q_gen[idx]};
        }
    }
    for (std::size_t l = 0; l < net.lines.size(); ++l) {
        const Line& line = net.lines[l];
        const std::size_t up = net.bus_index(line.from);
        const std::size_t dn = net.bus_index(line.to);
        for (int p = 0; p < 3; ++p)
            if (line.phases.has(p))
                sol.total_loss += (v[up][p] - v[dn][p]) * std::conj(line_j[l][p]);
    }
    return sol;
}

std::vector<Violation> check_limits(const PfSolution& sol, double v_lo, double v_hi) {
    if (!sol.converged) throw convergence_error("power flow did not converge");
    std::vector<Violation> out;
    for (std::size_t i = 0; i < sol.v.size(); ++i) {
        const double m = std::abs(sol.v[i]);
        if (m < v_lo || m > v_hi) out.push_back({i, m});
    }
    return out;
}

}  // namespace varcap
