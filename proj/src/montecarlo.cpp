#include "varcap/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>

#include "varcap/powerflow.hpp"

namespace varcap {

namespace {

double realize(const ErrorModel& model, double forecast_kw, double capacity_kw,
               double p_cap_kw, double z) {
    if (forecast_kw == 0.0) return 0.0;
    const ErrorBin bin = lookup_bin(model, forecast_kw / capacity_kw);
    const double p = forecast_kw * (1.0 + bin.mu + bin.sigma * z);
    return std::clamp(p, 0.0, p_cap_kw);
}

}  // namespace

double sample_generation(const ErrorModel& model, double forecast_kw, double capacity_kw,
                         double p_cap_kw, RngStream& rng) {
    if (forecast_kw < 0) throw value_error("forecast must be nonnegative");
    if (forecast_kw == 0.0) return 0.0;
    return realize(model, forecast_kw, capacity_kw, p_cap_kw, inv_norm_cdf(rng.uniform01()));
}

McReport validate_fr(const FlexibilityRegion& fr, const NetworkModel& net,
                     const ErrorModel& model, const std::vector<double>& forecasts_kw,
                     const std::vector<DerSpec>& ders, const McConfig& cfg, double load_mult) {
    if (!fr.feasible) throw value_error("cannot validate an infeasible flexibility region");
    const std::size_t nd = ders.size();
    if (forecasts_kw.size() != nd || fr.dispatch_max_kvar.size() != nd ||
        fr.dispatch_min_kvar.size() != nd)
        throw dimension_error("per-DER vectors must match the DER list");
    if (cfg.n_samples < 100) throw value_error("n_samples must be at least 100");
    if (!(cfg.alpha > 0 && cfg.alpha < 1)) throw value_error("alpha must lie in (0,1)");

    const NetworkModel scaled = load_mult == 1.0 ? net : scale_loads(net, load_mult);
    const double s_phase = net.s_phase_kva();
    std::vector<std::size_t> der_np(nd);
    for (std::size_t d = 0; d < nd; ++d)
        der_np[d] = net.node_phase_index(ders[d].bus, ders[d].phase);

    const std::array<const std::vector<double>*, 2> dispatches{&fr.dispatch_max_kvar,
                                                               &fr.dispatch_min_kvar};

    struct Counts {
        std::size_t any_viol[2] = {0, 0};
        std::vector<std::size_t> per_der[2];
        std::size_t v_viol[2] = {0, 0};
        std::size_t indeterminate = 0;
        Counts(std::size_t nd) {
            per_der[0].assign(nd, 0);
            per_der[1].assign(nd, 0);
        }
        void operator+=(const Counts& o) {
            for (int e = 0; e < 2; ++e) {
                any_viol[e] += o.any_viol[e];
                v_viol[e] += o.v_viol[e];
                for (std::size_t d = 0; d < per_der[e].size(); ++d)
                    per_der[e][d] += o.per_der[e][d];
            }
            indeterminate += o.indeterminate;
        }
    };

    auto run_samples = [&](std::size_t begin, std::size_t end) {
        Counts counts(nd);
        std::vector<double> p_kw(nd);
        for (std::size_t s = begin; s < end; ++s) {
            if (cfg.correlation == McConfig::Correlation::shared) {
                RngStream rng(cfg.seed, s, RngStream::shared_substream);
                const double z = inv_norm_cdf(rng.uniform01());
                for (std::size_t d = 0; d < nd; ++d)
                    p_kw[d] = realize(model, forecasts_kw[d], ders[d].capacity_kw,
                                      ders[d].p_cap_kw(), z);
            } else {
                for (std::size_t d = 0; d < nd; ++d) {
                    RngStream rng(cfg.seed, s, d);
                    p_kw[d] = sample_generation(model, forecasts_kw[d], ders[d].capacity_kw,
                                                ders[d].p_cap_kw(), rng);
                }
            }
            bool sample_indeterminate = false;
            for (int e = 0; e < 2; ++e) {
                const std::vector<double>& q = *dispatches[e];
                bool any = false;
                for (std::size_t d = 0; d < nd; ++d) {
                    const double s2 = ders[d].s_rating_kva * ders[d].s_rating_kva;
                    if (q[d] * q[d] > s2 - p_kw[d] * p_kw[d] + 1e-9 * s2) {
                        counts.per_der[e][d] += 1;
                        any = true;
                    }
                }
                if (any) counts.any_viol[e] += 1;

                if (cfg.check_voltages) {
                    // Watt-priority rule: sampled generation keeps its watts and
                    // the VAR setpoint shrinks to the remaining circle headroom.
                    const std::size_t n = net.n_node_phases();
                    std::vector<double> p_gen(n, 0.0), q_gen(n, 0.0);
                    for (std::size_t d = 0; d < nd; ++d) {
                        const double s2 = ders[d].s_rating_kva * ders[d].s_rating_kva;
                        const double head = std::sqrt(std::max(0.0, s2 - p_kw[d] * p_kw[d]));
                        const double q_adj = std::copysign(std::min(std::fabs(q[d]), head), q[d]);
                        p_gen[der_np[d]] += p_kw[d] / s_phase;
                        q_gen[der_np[d]] += q_adj / s_phase;
                    }
                    const PfSolution sol = solve_pf(scaled, p_gen, q_gen);
                    if (!sol.converged) {
                        sample_indeterminate = true;
                    } else if (!check_limits(sol, cfg.v_lo, cfg.v_hi).empty()) {
                        counts.v_viol[e] += 1;
                    }
                }
            }
            if (sample_indeterminate) counts.indeterminate += 1;
        }
        return counts;
    };

    Counts total(nd);
    const int threads = std::max(1, cfg.threads);
    if (threads == 1) {
        total += run_samples(0, cfg.n_samples);
    } else {
        std::vector<std::future<Counts>> pool;
        const std::size_t chunk = (cfg.n_samples + threads - 1) / threads;
        for (int t = 0; t < threads; ++t) {
            const std::size_t b = t * chunk;
            const std::size_t e = std::min(cfg.n_samples, b + chunk);
            if (b >= e) break;
            pool.push_back(std::async(std::launch::async, run_samples, b, e));
        }
        for (auto& f : pool) total += f.get();
    }

    McReport rep;
    rep.hour = fr.hour;
    rep.probability = fr.probability;
    rep.n = cfg.n_samples;
    rep.seed = cfg.seed;
    const double n = static_cast<double>(cfg.n_samples);
    rep.hardware_violation_rate =
        static_cast<double>(std::max(total.any_viol[0], total.any_viol[1])) / n;
    std::size_t worst_der = 0;
    for (int e = 0; e < 2; ++e)
        for (std::size_t d = 0; d < nd; ++d) worst_der = std::max(worst_der, total.per_der[e][d]);
    rep.per_der_max_rate = static_cast<double>(worst_der) / n;
    rep.indeterminate = total.indeterminate;
    if (cfg.check_voltages) {
        const double denom = n - static_cast<double>(total.indeterminate);
        if (denom > 0)
            rep.voltage_violation_rate =
                static_cast<double>(std::max(total.v_viol[0], total.v_viol[1])) / denom;
    }
    const double r = rep.hardware_violation_rate;
    rep.ci_halfwidth = 1.96 * std::sqrt(std::max(0.0, r * (1.0 - r)) / n);
    rep.pass = rep.hardware_violation_rate <= cfg.alpha + rep.ci_halfwidth;
    return rep;
}

}  // namespace varcap
