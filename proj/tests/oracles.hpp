// Test-only reference implementations, independent of the library paths they
// check: an erf-series normal CDF, brute-force LP vertex enumeration, and the
// closed-form two-bus power flow.
#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "varcap/simplex.hpp"

namespace oracle {

// erf by Taylor series for small arguments, continued fraction for the tail.
inline double erf_taylor(double x) {
    double term = x, sum = x;
    for (int n = 1; n < 200; ++n) {
        term *= -x * x / n;
        const double add = term / (2 * n + 1);
        sum += add;
        if (std::fabs(add) < 1e-18 * std::fabs(sum)) break;
    }
    return 2.0 / std::sqrt(3.14159265358979323846) * sum;
}

inline double erfc_cf(double x) {
    // erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + 1/(2x + 2/(x + 3/(2x + ...)))), x > 0
    double f = 0.0;
    for (int k = 60; k >= 1; --k) {
        const double den = (k % 2 == 1) ? 2.0 * x : x;
        f = k / (den + f);
    }
    return std::exp(-x * x) / std::sqrt(3.14159265358979323846) / (x + f);
}

inline double erfc_ref(double x) {
    if (x < 0) return 2.0 - erfc_ref(-x);
    if (x <= 2.5) return 1.0 - erf_taylor(x);
    return erfc_cf(x);
}

inline double phi_ref(double z) { return 0.5 * erfc_ref(-z / std::sqrt(2.0)); }

inline double quantile_ref(double p) {
    double lo = -12.0, hi = 12.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (phi_ref(mid) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// Dense vertex enumeration for small LPs: every basic point from n active
// constraints, feasibility-checked against all of them.
struct VertexResult {
    bool feasible = false;
    double objective = 0.0;
    std::vector<double> x;
};

inline VertexResult enumerate_optimum(const varcap::LpProblem& p) {
    using varcap::lp_inf;
    const std::size_t n = p.n_vars;
    struct Con {
        std::vector<double> a;
        double b;
    };
    std::vector<Con> cons;  // a'x <= b
    for (std::size_t r = 0; r < p.n_rows(); ++r) {
        std::vector<double> a(n);
        for (std::size_t j = 0; j < n; ++j) a[j] = p.rows(r, j);
        if (std::isfinite(p.row_hi[r])) cons.push_back({a, p.row_hi[r]});
        if (std::isfinite(p.row_lo[r])) {
            std::vector<double> neg(n);
            for (std::size_t j = 0; j < n; ++j) neg[j] = -a[j];
            cons.push_back({neg, -p.row_lo[r]});
        }
    }
    for (std::size_t j = 0; j < n; ++j) {
        std::vector<double> a(n, 0.0);
        if (std::isfinite(p.var_hi[j])) {
            a[j] = 1.0;
            cons.push_back({a, p.var_hi[j]});
        }
        if (std::isfinite(p.var_lo[j])) {
            std::vector<double> b(n, 0.0);
            b[j] = -1.0;
            cons.push_back({b, -p.var_lo[j]});
        }
    }

    VertexResult best;
    const double want_max = p.sense == varcap::LpSense::maximize;
    std::vector<std::size_t> pick(n);
    const std::size_t m = cons.size();

    auto try_vertex = [&](const std::vector<std::size_t>& active) {
        std::vector<std::vector<double>> a(n, std::vector<double>(n + 1));
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) a[i][j] = cons[active[i]].a[j];
            a[i][n] = cons[active[i]].b;
        }
        // Gaussian elimination with partial pivoting.
        for (std::size_t k = 0; k < n; ++k) {
            std::size_t piv = k;
            for (std::size_t i = k + 1; i < n; ++i)
                if (std::fabs(a[i][k]) > std::fabs(a[piv][k])) piv = i;
            if (std::fabs(a[piv][k]) < 1e-9) return;
            std::swap(a[piv], a[k]);
            for (std::size_t i = 0; i < n; ++i) {
                if (i == k) continue;
                const double f = a[i][k] / a[k][k];
                for (std::size_t j = k; j <= n; ++j) a[i][j] -= f * a[k][j];
            }
        }
        std::vector<double> x(n);
        for (std::size_t i = 0; i < n; ++i) x[i] = a[i][n] / a[i][i];
        for (const Con& c : cons) {
            double lhs = 0.0;
            for (std::size_t j = 0; j < n; ++j) lhs += c.a[j] * x[j];
            if (lhs > c.b + 1e-7) return;
        }
        double obj = 0.0;
        for (std::size_t j = 0; j < n; ++j) obj += p.objective[j] * x[j];
        if (!best.feasible || (want_max ? obj > best.objective : obj < best.objective)) {
            best.feasible = true;
            best.objective = obj;
            best.x = x;
        }
    };

    // Iterative k-combinations of the constraint set.
    if (m < n) return best;
    for (std::size_t i = 0; i < n; ++i) pick[i] = i;
    for (;;) {
        try_vertex(pick);
        std::size_t i = n;
        while (i-- > 0) {
            if (pick[i] != i + m - n) {
                ++pick[i];
                for (std::size_t j = i + 1; j < n; ++j) pick[j] = pick[j - 1] + 1;
                break;
            }
            if (i == 0) return best;
        }
    }
}

// Exact |V2| of a two-bus single-phase feeder with constant-power load.
inline double two_bus_vmag(double v0, double r, double x, double p_load, double q_load) {
    const double b = v0 * v0 - 2.0 * (r * p_load + x * q_load);
    const double c = (r * r + x * x) * (p_load * p_load + q_load * q_load);
    const double disc = b * b - 4.0 * c;
    if (disc < 0) return std::numeric_limits<double>::quiet_NaN();
    return std::sqrt(0.5 * (b + std::sqrt(disc)));
}

}  // namespace oracle
