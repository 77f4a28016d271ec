#include "varcap/simplex.hpp"

#include <algorithm>
#include <cmath>

namespace varcap {

void LpProblem::validate() const {
    if (objective.size() != n_vars || var_lo.size() != n_vars || var_hi.size() != n_vars)
        throw dimension_error("LP variable arrays must match n_vars");
    if (row_hi.size() != row_lo.size())
        throw dimension_error("row bound arrays must match");
    if (n_rows() > 0 && (rows.rows() != n_rows() || rows.cols() != n_vars))
        throw dimension_error("row matrix shape mismatch");
    auto finite_ok = [](double v) { return !std::isnan(v); };
    for (double v : objective)
        if (!std::isfinite(v)) throw value_error("objective coefficients must be finite");
    for (std::size_t r = 0; r < n_rows(); ++r)
        for (std::size_t j = 0; j < n_vars; ++j)
            if (!std::isfinite(rows(r, j))) throw value_error("row coefficients must be finite");
    for (double v : row_lo)
        if (!finite_ok(v)) throw value_error("row bounds must not be NaN");
    for (double v : row_hi)
        if (!finite_ok(v)) throw value_error("row bounds must not be NaN");
    for (double v : var_lo)
        if (!finite_ok(v)) throw value_error("variable bounds must not be NaN");
    for (double v : var_hi)
        if (!finite_ok(v)) throw value_error("variable bounds must not be NaN");
}

namespace {

enum State : int { kBasic = 0, kAtLo = 1, kAtHi = 2, kFree = 3 };

// Bounded-variable primal simplex on the slack formulation A x - s = 0 with
// box bounds on x and ranged bounds on s. The dense tableau T = B^{-1}[-A | I]
// is updated in place; Bland's smallest-index rule everywhere.
class Simplex {
  public:
    Simplex(const LpProblem& p, const LpOptions& opts)
        : n_(p.n_vars), m_(p.n_rows()), ncol_(n_ + m_), tol_(opts.feas_tol), t_(m_, ncol_) {
        cost_.assign(ncol_, 0.0);
        const double sign = p.sense == LpSense::maximize ? -1.0 : 1.0;
        for (std::size_t j = 0; j < n_; ++j) cost_[j] = sign * p.objective[j];
        lo_.resize(ncol_);
        hi_.resize(ncol_);
        for (std::size_t j = 0; j < n_; ++j) {
            lo_[j] = p.var_lo[j];
            hi_[j] = p.var_hi[j];
        }
        for (std::size_t r = 0; r < m_; ++r) {
            lo_[n_ + r] = p.row_lo[r];
            hi_[n_ + r] = p.row_hi[r];
        }
        for (std::size_t r = 0; r < m_; ++r) {
            for (std::size_t j = 0; j < n_; ++j) t_(r, j) = -p.rows(r, j);
            t_(r, n_ + r) = 1.0;
        }
        state_.assign(ncol_, kAtLo);
        xval_.assign(ncol_, 0.0);
        for (std::size_t j = 0; j < n_; ++j) {
            if (std::isfinite(lo_[j])) {
                state_[j] = kAtLo;
                xval_[j] = lo_[j];
            } else if (std::isfinite(hi_[j])) {
                state_[j] = kAtHi;
                xval_[j] = hi_[j];
            } else {
                state_[j] = kFree;
                xval_[j] = 0.0;
            }
        }
        basic_.resize(m_);
        pos_.assign(ncol_, -1);
        for (std::size_t r = 0; r < m_; ++r) {
            const std::size_t col = n_ + r;
            basic_[r] = col;
            state_[col] = kBasic;
            pos_[col] = static_cast<int>(r);
        }
        refresh_basic_values();
        max_iter_ = opts.max_iterations > 0
                        ? opts.max_iterations
                        : static_cast<int>(1000 + 50 * (m_ + ncol_));
    }

    LpStatus run() {
        if (bounds_crossed()) return LpStatus::infeasible;
        if (!phase1()) return iterations_ >= max_iter_ ? LpStatus::iteration_limit
                                                       : LpStatus::infeasible;
        return phase2();
    }

    int iterations() const { return iterations_; }
    const std::vector<double>& values() const { return xval_; }
    const std::vector<std::size_t>& basis() const { return basic_; }
    int column_state(std::size_t c) const { return state_[c]; }

    void worst_infeasibility(std::size_t& row, std::size_t& var, double& viol) const {
        row = static_cast<std::size_t>(-1);
        var = static_cast<std::size_t>(-1);
        viol = 0.0;
        for (std::size_t r = 0; r < m_; ++r) {
            const std::size_t c = basic_[r];
            const double v = violation(c);
            if (v > viol) {
                viol = v;
                if (c >= n_)
                    row = c - n_, var = static_cast<std::size_t>(-1);
                else
                    var = c, row = static_cast<std::size_t>(-1);
            }
        }
    }

  private:
    bool bounds_crossed() const {
        for (std::size_t c = 0; c < ncol_; ++c)
            if (lo_[c] > hi_[c] + tol_) return true;
        return false;
    }

    double violation(std::size_t c) const {
        const double v = xval_[c];
        if (v < lo_[c]) return lo_[c] - v;
        if (v > hi_[c]) return v - hi_[c];
        return 0.0;
    }

    void refresh_basic_values() {
        // x_B = -sum over nonbasic columns of T_col * value
        std::vector<double> acc(m_, 0.0);
        for (std::size_t c = 0; c < ncol_; ++c) {
            if (state_[c] == kBasic || xval_[c] == 0.0) continue;
            const double v = xval_[c];
            for (std::size_t r = 0; r < m_; ++r) acc[r] -= t_(r, c) * v;
        }
        for (std::size_t r = 0; r < m_; ++r) xval_[basic_[r]] = acc[r];
    }

    void pivot(std::size_t r, std::size_t e) {
        const double piv = t_(r, e);
        double* rowr = t_.row_data(r);
        const double inv = 1.0 / piv;
        for (std::size_t c = 0; c < ncol_; ++c) rowr[c] *= inv;
        rowr[e] = 1.0;
        for (std::size_t i = 0; i < m_; ++i) {
            if (i == r) continue;
            const double f = t_(i, e);
            if (f == 0.0) continue;
            double* rowi = t_.row_data(i);
            for (std::size_t c = 0; c < ncol_; ++c) rowi[c] -= f * rowr[c];
            rowi[e] = 0.0;
        }
        const std::size_t leaving = basic_[r];
        pos_[leaving] = -1;
        basic_[r] = e;
        pos_[e] = static_cast<int>(r);
        state_[e] = kBasic;
        if (++pivots_since_refresh_ >= 64) {
            pivots_since_refresh_ = 0;
            refresh_basic_values();
        }
    }

    // Moves entering column e in direction dir by step, updating basic values.
    void apply_step(std::size_t e, double dir, double step) {
        if (step != 0.0) {
            for (std::size_t r = 0; r < m_; ++r) {
                const double rate = -t_(r, e) * dir;
                xval_[basic_[r]] += rate * step;
            }
            xval_[e] += dir * step;
        }
    }

    struct Ratio {
        double theta = std::numeric_limits<double>::infinity();
        std::size_t row = static_cast<std::size_t>(-1);  // npos = own bound flip
        std::size_t leave_col = static_cast<std::size_t>(-1);
        int leave_state = kAtLo;
    };

    // Minimum ratio with Bland's smallest-leaving-column tie-breaking.
    static void consider(Ratio& best, double theta, std::size_t row, int leave_state,
                         std::size_t leave_col) {
        theta = std::max(theta, 0.0);
        const bool better = theta < best.theta - 1e-12;
        const bool tied = !better && theta <= best.theta + 1e-12;
        if (better || (tied && leave_col < best.leave_col)) {
            best.theta = std::min(theta, best.theta);
            best.row = row;
            best.leave_col = leave_col;
            best.leave_state = leave_state;
        }
    }

    bool phase1() {
        while (iterations_ < max_iter_) {
            // Gradient of total infeasibility w.r.t. each basic.
            bool any_infeasible = false;
            std::vector<int> ph1(m_, 0);
            for (std::size_t r = 0; r < m_; ++r) {
                const std::size_t c = basic_[r];
                if (xval_[c] < lo_[c] - tol_) {
                    ph1[r] = -1;
                    any_infeasible = true;
                } else if (xval_[c] > hi_[c] + tol_) {
                    ph1[r] = 1;
                    any_infeasible = true;
                }
            }
            if (!any_infeasible) return true;
            ++iterations_;

            std::size_t enter = ncol_;
            double dir = 0.0;
            for (std::size_t c = 0; c < ncol_ && enter == ncol_; ++c) {
                if (state_[c] == kBasic || lo_[c] >= hi_[c]) continue;
                double z = 0.0;
                for (std::size_t r = 0; r < m_; ++r)
                    if (ph1[r] != 0) z += ph1[r] * t_(r, c);
                if ((state_[c] == kAtLo || state_[c] == kFree) && z > tol_) {
                    enter = c;
                    dir = 1.0;
                } else if ((state_[c] == kAtHi || state_[c] == kFree) && z < -tol_) {
                    enter = c;
                    dir = -1.0;
                }
            }
            if (enter == ncol_) return false;  // stalled while infeasible

            Ratio best;
            const double span = hi_[enter] - lo_[enter];
            if (std::isfinite(span))
                consider(best, span, static_cast<std::size_t>(-1),
                         state_[enter] == kAtLo ? kAtHi : kAtLo, enter);
            for (std::size_t r = 0; r < m_; ++r) {
                const std::size_t c = basic_[r];
                const double rate = -t_(r, enter) * dir;
                if (std::fabs(rate) <= 1e-11) continue;
                if (ph1[r] == -1) {
                    if (rate > 0) consider(best, (lo_[c] - xval_[c]) / rate, r, kAtLo, c);
                } else if (ph1[r] == 1) {
                    if (rate < 0) consider(best, (hi_[c] - xval_[c]) / rate, r, kAtHi, c);
                } else {
                    if (rate > 0 && std::isfinite(hi_[c]))
                        consider(best, (hi_[c] - xval_[c]) / rate, r, kAtHi, c);
                    else if (rate < 0 && std::isfinite(lo_[c]))
                        consider(best, (lo_[c] - xval_[c]) / rate, r, kAtLo, c);
                }
            }
            if (!std::isfinite(best.theta))
                return false;  // cannot happen for a well-posed phase 1; treat as stall

            apply_step(enter, dir, best.theta);
            if (best.row == static_cast<std::size_t>(-1)) {
                state_[enter] = state_[enter] == kAtLo ? kAtHi : kAtLo;
                xval_[enter] = state_[enter] == kAtLo ? lo_[enter] : hi_[enter];
            } else {
                const std::size_t leaving = basic_[best.row];
                xval_[leaving] = best.leave_state == kAtLo ? lo_[leaving] : hi_[leaving];
                state_[leaving] = best.leave_state;
                pivot(best.row, enter);
            }
        }
        return false;
    }

    LpStatus phase2() {
        while (iterations_ < max_iter_) {
            std::size_t enter = ncol_;
            double dir = 0.0;
            for (std::size_t c = 0; c < ncol_ && enter == ncol_; ++c) {
                if (state_[c] == kBasic || lo_[c] >= hi_[c]) continue;
                double d = cost_[c];
                for (std::size_t r = 0; r < m_; ++r) {
                    const double cb = cost_[basic_[r]];
                    if (cb != 0.0) d -= cb * t_(r, c);
                }
                if ((state_[c] == kAtLo || state_[c] == kFree) && d < -tol_) {
                    enter = c;
                    dir = 1.0;
                } else if ((state_[c] == kAtHi || state_[c] == kFree) && d > tol_) {
                    enter = c;
                    dir = -1.0;
                }
            }
            if (enter == ncol_) {
                refresh_basic_values();
                return LpStatus::optimal;
            }
            ++iterations_;

            Ratio best;
            const double span = hi_[enter] - lo_[enter];
            if (std::isfinite(span))
                consider(best, span, static_cast<std::size_t>(-1),
                         state_[enter] == kAtLo ? kAtHi : kAtLo, enter);
            for (std::size_t r = 0; r < m_; ++r) {
                const std::size_t c = basic_[r];
                const double rate = -t_(r, enter) * dir;
                if (std::fabs(rate) <= 1e-11) continue;
                if (rate > 0 && std::isfinite(hi_[c]))
                    consider(best, (hi_[c] - xval_[c]) / rate, r, kAtHi, c);
                else if (rate < 0 && std::isfinite(lo_[c]))
                    consider(best, (lo_[c] - xval_[c]) / rate, r, kAtLo, c);
            }
            if (!std::isfinite(best.theta)) return LpStatus::unbounded;

            apply_step(enter, dir, best.theta);
            if (best.row == static_cast<std::size_t>(-1)) {
                state_[enter] = state_[enter] == kAtLo ? kAtHi : kAtLo;
                xval_[enter] = state_[enter] == kAtLo ? lo_[enter] : hi_[enter];
            } else {
                const std::size_t leaving = basic_[best.row];
                xval_[leaving] = best.leave_state == kAtLo ? lo_[leaving] : hi_[leaving];
                state_[leaving] = best.leave_state;
                pivot(best.row, enter);
            }
        }
        return LpStatus::iteration_limit;
    }

    std::size_t n_, m_, ncol_;
    double tol_;
    Matrix t_;
    std::vector<double> cost_, lo_, hi_, xval_;
    std::vector<std::size_t> basic_;
    std::vector<int> pos_, state_;
    int iterations_ = 0, max_iter_ = 0, pivots_since_refresh_ = 0;
};

LpSolution solve_once(const LpProblem& p, const LpOptions& opts) {
    Simplex sx(p, opts);
    LpSolution sol;
    sol.status = sx.run();
    sol.iterations = sx.iterations();
    sol.x.assign(sx.values().begin(), sx.values().begin() + static_cast<std::ptrdiff_t>(p.n_vars));
    sol.basis = sx.basis();
    double obj = 0.0;
    for (std::size_t j = 0; j < p.n_vars; ++j) obj += p.objective[j] * sol.x[j];
    sol.objective = obj;
    if (sol.status == LpStatus::infeasible) sx.worst_infeasibility(sol.worst_row, sol.worst_var, sol.worst_violation);
    for (std::size_t c = 0; c < p.n_vars + p.n_rows(); ++c) {
        const int st = sx.column_state(c);
        if (st == kAtLo)
            sol.active.push_back({c < p.n_vars ? LpActive::Kind::var_lower : LpActive::Kind::row_lower,
                                  c < p.n_vars ? c : c - p.n_vars});
        else if (st == kAtHi)
            sol.active.push_back({c < p.n_vars ? LpActive::Kind::var_upper : LpActive::Kind::row_upper,
                                  c < p.n_vars ? c : c - p.n_vars});
    }
    return sol;
}

// Reduced costs for a nonbasic assessment: d = c - A'y with y from the basis.
std::vector<double> dual_from_basis(const LpProblem& p, const std::vector<std::size_t>& basis) {
    const std::size_t m = p.n_rows();
    if (m == 0) return {};
    if (basis.size() != m) throw dimension_error("basis size mismatch");
    // G_B columns: structural j -> A column j; slack r -> -e_r.
    Matrix gb(m, m);
    std::vector<double> cb(m, 0.0);
    for (std::size_t k = 0; k < m; ++k) {
        const std::size_t c = basis[k];
        if (c < p.n_vars) {
            for (std::size_t r = 0; r < m; ++r) gb(r, k) = p.rows(r, c);
            cb[k] = p.sense == LpSense::maximize ? -p.objective[c] : p.objective[c];
        } else {
            gb(c - p.n_vars, k) = -1.0;
        }
    }
    // Solve G_B' y = c_B.
    LuFactor lu(std::move(gb));
    return lu.solve_transposed(cb);
}

}  // namespace

LpSolution solve_lp(const LpProblem& problem, const LpOptions& opts) {
    problem.validate();
    LpSolution sol = solve_once(problem, opts);
    if (!opts.lex_tiebreak || sol.status != LpStatus::optimal || problem.n_vars == 0) return sol;

    // Alternate-optimum canonicalization: when some nonbasic structural column
    // has a vanishing reduced cost, pin the lexicographically smallest point of
    // the optimal face. Rare in practice; skipped when the optimum is unique.
    bool tie = false;
    try {
        const std::vector<double> y = dual_from_basis(problem, sol.basis);
        const double sign = problem.sense == LpSense::maximize ? -1.0 : 1.0;
        std::vector<bool> basic(problem.n_vars, false);
        for (std::size_t c : sol.basis)
            if (c < problem.n_vars) basic[c] = true;
        for (std::size_t j = 0; j < problem.n_vars && !tie; ++j) {
            if (basic[j] || problem.var_lo[j] >= problem.var_hi[j]) continue;
            double d = sign * problem.objective[j];
            for (std::size_t r = 0; r < problem.n_rows(); ++r) d -= y[r] * problem.rows(r, j);
            if (std::fabs(d) <= 10 * opts.feas_tol) tie = true;
        }
    } catch (const singular_error&) {
        tie = true;  // cannot prove uniqueness; canonicalize
    }
    if (!tie) return sol;

    LpProblem face = problem;
    const std::size_t m0 = problem.n_rows();
    Matrix rows2(m0 + 1, problem.n_vars);
    for (std::size_t r = 0; r < m0; ++r)
        for (std::size_t j = 0; j < problem.n_vars; ++j) rows2(r, j) = problem.rows(r, j);
    for (std::size_t j = 0; j < problem.n_vars; ++j) rows2(m0, j) = problem.objective[j];
    face.rows = std::move(rows2);
    face.row_lo = problem.row_lo;
    face.row_hi = problem.row_hi;
    const double margin = 1e-9 * (1.0 + std::fabs(sol.objective));
    if (problem.sense == LpSense::minimize) {
        face.row_lo.push_back(-lp_inf);
        face.row_hi.push_back(sol.objective + margin);
    } else {
        face.row_lo.push_back(sol.objective - margin);
        face.row_hi.push_back(lp_inf);
    }
    face.sense = LpSense::minimize;
    LpOptions sub = opts;
    sub.lex_tiebreak = false;
    std::vector<double> fixed(problem.n_vars);
    for (std::size_t j = 0; j < problem.n_vars; ++j) {
        face.objective.assign(problem.n_vars, 0.0);
        face.objective[j] = 1.0;
        const LpSolution s = solve_once(face, sub);
        if (s.status != LpStatus::optimal) return sol;  // fall back to the vertex we have
        fixed[j] = s.x[j];
        face.var_lo[j] = face.var_hi[j] = s.x[j];
    }
    sol.x = fixed;
    double obj = 0.0;
    for (std::size_t j = 0; j < problem.n_vars; ++j) obj += problem.objective[j] * sol.x[j];
    sol.objective = obj;
    // Active set re-derived from the canonical point.
    sol.active.clear();
    const double atol = 1e-8;
    for (std::size_t j = 0; j < problem.n_vars; ++j) {
        if (std::fabs(sol.x[j] - problem.var_lo[j]) <= atol * (1 + std::fabs(problem.var_lo[j])))
            sol.active.push_back({LpActive::Kind::var_lower, j});
        else if (std::fabs(sol.x[j] - problem.var_hi[j]) <= atol * (1 + std::fabs(problem.var_hi[j])))
            sol.active.push_back({LpActive::Kind::var_upper, j});
    }
    for (std::size_t r = 0; r < m0; ++r) {
        double act = 0.0;
        for (std::size_t j = 0; j < problem.n_vars; ++j) act += problem.rows(r, j) * sol.x[j];
        if (std::isfinite(problem.row_lo[r]) &&
            std::fabs(act - problem.row_lo[r]) <= atol * (1 + std::fabs(problem.row_lo[r])))
            sol.active.push_back({LpActive::Kind::row_lower, r});
        else if (std::isfinite(problem.row_hi[r]) &&
                 std::fabs(act - problem.row_hi[r]) <= atol * (1 + std::fabs(problem.row_hi[r])))
            sol.active.push_back({LpActive::Kind::row_upper, r});
    }
    return sol;
}

LpCertificate certify_lp(const LpProblem& p, const LpSolution& sol, double tol) {
    p.validate();
    LpCertificate cert;
    if (sol.status != LpStatus::optimal || sol.x.size() != p.n_vars) return cert;

    // Primal feasibility straight from the original data.
    double viol = 0.0;
    for (std::size_t j = 0; j < p.n_vars; ++j) {
        if (std::isfinite(p.var_lo[j])) viol = std::max(viol, p.var_lo[j] - sol.x[j]);
        if (std::isfinite(p.var_hi[j])) viol = std::max(viol, sol.x[j] - p.var_hi[j]);
    }
    std::vector<double> act(p.n_rows(), 0.0);
    for (std::size_t r = 0; r < p.n_rows(); ++r) {
        double a = 0.0;
        for (std::size_t j = 0; j < p.n_vars; ++j) a += p.rows(r, j) * sol.x[j];
        act[r] = a;
        if (std::isfinite(p.row_lo[r])) viol = std::max(viol, p.row_lo[r] - a);
        if (std::isfinite(p.row_hi[r])) viol = std::max(viol, a - p.row_hi[r]);
    }
    cert.max_violation = viol;
    cert.primal_feasible = viol <= tol;

    // Duals from a fresh LU of the basis columns; then sign conditions and
    // the weak-duality gap, all in the internal minimization orientation.
    std::vector<double> y;
    try {
        y = dual_from_basis(p, sol.basis);
    } catch (const error&) {
        return cert;
    }
    const double sign = p.sense == LpSense::maximize ? -1.0 : 1.0;
    double worst = 0.0;
    double dual_obj = 0.0;
    bool ok = true;
    for (std::size_t j = 0; j < p.n_vars; ++j) {
        double d = sign * p.objective[j];
        for (std::size_t r = 0; r < p.n_rows(); ++r) d -= y[r] * p.rows(r, j);
        const double span_lo = sol.x[j] - p.var_lo[j];
        const double span_hi = p.var_hi[j] - sol.x[j];
        const bool at_lo = std::isfinite(p.var_lo[j]) && span_lo <= tol * (1 + std::fabs(p.var_lo[j]));
        const bool at_hi = std::isfinite(p.var_hi[j]) && span_hi <= tol * (1 + std::fabs(p.var_hi[j]));
        if (at_lo && !at_hi) worst = std::min(worst, d);
        else if (at_hi && !at_lo) worst = std::min(worst, -d);
        else if (!at_lo && !at_hi) worst = std::min(worst, -std::fabs(d));
        if (d > tol) {
            if (!std::isfinite(p.var_lo[j])) ok = false;
            else dual_obj += d * p.var_lo[j];
        } else if (d < -tol) {
            if (!std::isfinite(p.var_hi[j])) ok = false;
            else dual_obj += d * p.var_hi[j];
        }
    }
    for (std::size_t r = 0; r < p.n_rows(); ++r) {
        const double yr = y[r];
        const bool at_lo = std::isfinite(p.row_lo[r]) &&
                           act[r] - p.row_lo[r] <= tol * (1 + std::fabs(p.row_lo[r]));
        const bool at_hi = std::isfinite(p.row_hi[r]) &&
                           p.row_hi[r] - act[r] <= tol * (1 + std::fabs(p.row_hi[r]));
        if (at_lo && !at_hi) worst = std::min(worst, yr);
        else if (at_hi && !at_lo) worst = std::min(worst, -yr);
        else if (!at_lo && !at_hi) worst = std::min(worst, -std::fabs(yr));
        if (yr > tol) {
            if (!std::isfinite(p.row_lo[r])) ok = false;
            else dual_obj += yr * p.row_lo[r];
        } else if (yr < -tol) {
            if (!std::isfinite(p.row_hi[r])) ok = false;
            else dual_obj += yr * p.row_hi[r];
        }
    }
    cert.worst_reduced_cost = worst;
    const double primal_int = sign * sol.objective;
    const double gap = std::fabs(primal_int - dual_obj);
    cert.dual_certified = ok && worst >= -tol && gap <= 1e4 * tol * (1.0 + std::fabs(primal_int));
    return cert;
}

}  // namespace varcap
