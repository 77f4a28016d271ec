#include "varcap/linear_model.hpp"

#include <cmath>
#include <complex>
#include <numbers>

namespace varcap {

namespace {

// Phase rotation gamma[p][q] = a^(p-q) with a = exp(-j*2*pi/3), the
// nearly-balanced voltage-ratio assumption behind the 3-phase extension.
std::complex<double> gamma_rot(int p, int q) {
    static const std::complex<double> a = std::polar(1.0, -2.0 * std::numbers::pi / 3.0);
    int k = ((p - q) % 3 + 3) % 3;
    std::complex<double> g{1.0, 0.0};
    for (int i = 0; i < k; ++i) g *= a;
    return g;
}

}  // namespace

LineCoeffs build_coefficients(const Line& line, double z_base_ohm) {
    LineCoeffs c;
    for (int p = 0; p < 3; ++p) {
        for (int q = 0; q < 3; ++q) {
            if (!(line.phases.has(p) && line.phases.has(q))) continue;
            const std::complex<double> z_pu = line.z_ohm[p][q] / z_base_ohm;
            const std::complex<double> w = gamma_rot(p, q) * std::conj(z_pu);
            c.zp[p][q] = 2.0 * w.real();
            c.zq[p][q] = -2.0 * w.imag();
        }
    }
    return c;
}

LinearSensitivity build_sensitivity(const NetworkModel& net, double load_scale) {
    const std::size_t n = net.n_node_phases();
    LinearSensitivity s;
    s.load_scale = load_scale;
    s.r_eq = Matrix(n, n);
    s.x_eq = Matrix(n, n);
    s.base_term.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        s.base_term[i] = net.v0_sq[static_cast<int>(net.node_phases[i].phase)];

    // Euler tour so each bus's subtree is a contiguous node-phase range.
    const std::size_t nb = net.buses.size();
    std::vector<std::size_t> enter(nb, 0), exit_(nb, 0), np_dfs;
    np_dfs.reserve(n);
    {
        std::vector<std::pair<std::size_t, bool>> stack{{net.slack, false}};
        while (!stack.empty()) {
            auto [u, done] = stack.back();
            stack.pop_back();
            if (done) {
                exit_[u] = np_dfs.size();
                continue;
            }
            enter[u] = np_dfs.size();
            if (u != net.slack)
                for (int p = 0; p < 3; ++p)
                    if (net.np_index[u][p] >= 0)
                        np_dfs.push_back(static_cast<std::size_t>(net.np_index[u][p]));
            stack.push_back({u, true});
            for (auto it = net.child_lines[u].rbegin(); it != net.child_lines[u].rend(); ++it)
                stack.push_back({net.bus_index(net.lines[*it].to), false});
        }
    }

    // R[n][m] accumulates Zp over the lines common to both paths from the
    // slack; equivalently each line contributes to all subtree pairs.
    const double zb = net.z_base_ohm();
    for (const Line& line : net.lines) {
        const LineCoeffs c = build_coefficients(line, zb);
        const std::size_t d = net.bus_index(line.to);
        for (std::size_t ii = enter[d]; ii < exit_[d]; ++ii) {
            const std::size_t row = np_dfs[ii];
            const int p = static_cast<int>(net.node_phases[row].phase);
            double* rrow = s.r_eq.row_data(row);
            double* xrow = s.x_eq.row_data(row);
            for (std::size_t jj = enter[d]; jj < exit_[d]; ++jj) {
                const std::size_t col = np_dfs[jj];
                const int q = static_cast<int>(net.node_phases[col].phase);
                rrow[col] += c.zp[p][q];
                xrow[col] += c.zq[p][q];
            }
        }
    }

    // Scaled per-unit load split.
    s.p_load_a0.assign(n, 0.0);
    s.q_load_a0.assign(n, 0.0);
    s.p_load_a1.assign(n, 0.0);
    s.q_load_a1.assign(n, 0.0);
    const double s_phase = net.s_phase_kva();
    for (std::size_t i = 0; i < n; ++i) {
        const auto [b, ph] = net.node_phases[i];
        const int p = static_cast<int>(ph);
        const Bus& bus = net.buses[b];
        const double pl = bus.load_kw[p] * load_scale / s_phase;
        const double ql = bus.load_kvar[p] * load_scale / s_phase;
        s.p_load_a0[i] = pl * bus.a0[p];
        s.p_load_a1[i] = pl * bus.a1[p];
        s.q_load_a0[i] = ql * bus.a0[p];
        s.q_load_a1[i] = ql * bus.a1[p];
    }

    // K = I + R diag(p_l a1) + X diag(q_l a1); reduces to I when a1 = 0.
    Matrix k(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const double* rrow = s.r_eq.row_data(i);
        const double* xrow = s.x_eq.row_data(i);
        double* krow = k.row_data(i);
        for (std::size_t j = 0; j < n; ++j)
            krow[j] = rrow[j] * s.p_load_a1[j] + xrow[j] * s.q_load_a1[j];
        krow[i] += 1.0;
    }
    try {
        s.k_factor = std::make_shared<LuFactor>(std::move(k));
    } catch (const singular_error& e) {
        throw singular_error(std::string("voltage-coupling matrix K is singular "
                                         "(pathological load composition): ") +
                             e.what());
    }
    return s;
}

std::vector<double> predict_voltages(const LinearSensitivity& sens,
                                     const std::vector<double>& p_gen,
                                     const std::vector<double>& q_gen) {
    const std::size_t n = sens.size();
    if (p_gen.size() != n || q_gen.size() != n)
        throw dimension_error("injection vectors must match the sensitivity dimension");
    std::vector<double> pd(n), qd(n);
    for (std::size_t j = 0; j < n; ++j) {
        pd[j] = p_gen[j] - sens.p_load_a0[j];
        qd[j] = q_gen[j] - sens.q_load_a0[j];
    }
    std::vector<double> rhs(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double* rrow = sens.r_eq.row_data(i);
        const double* xrow = sens.x_eq.row_data(i);
        double acc = sens.base_term[i];
        for (std::size_t j = 0; j < n; ++j) acc += rrow[j] * pd[j] + xrow[j] * qd[j];
        rhs[i] = acc;
    }
    return sens.k_factor->solve(rhs);
}

}  // namespace varcap
