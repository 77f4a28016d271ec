#include "varcap/opf.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <sstream>

#include <json.hpp>

namespace varcap {

using nlohmann::json;

void DerSpec::validate() const {
    if (p_peak_kw < 0) throw value_error("DER peak output must be nonnegative");
    if (s_rating_kva <= 0) throw value_error("DER rating must be positive");
    if (capacity_kw <= 0) throw value_error("DER installed capacity must be positive");
    if (0.9 * s_rating_kva + 1e-9 * s_rating_kva < p_peak_kw)
        throw value_error("DER \"" + bus + "\" rating too small: peak output may not exceed 90% of kVA");
}

QBounds reformulate_bounds(const DerSpec& der, double p_hat_kw) {
    if (p_hat_kw < 0) throw domain_error("p_hat must be nonnegative");
    if (p_hat_kw > der.s_rating_kva * (1.0 + 1e-12))
        throw domain_error("p_hat " + std::to_string(p_hat_kw) + " kW exceeds rating of DER at \"" +
                           der.bus + "\" (upstream clamping failure)");
    const double s2 = der.s_rating_kva * der.s_rating_kva;
    const double q = std::sqrt(std::max(0.0, s2 - p_hat_kw * p_hat_kw));
    return {-q, q};
}

namespace {

struct Assembled {
    LpProblem lp;                       // minimize orientation; flip sense for max
    std::vector<double> y0;             // squared voltages at q_g = 0
    double obj_const = 0.0;             // constant part of sum(q_g) - sum(q_l(y))
    std::vector<std::size_t> der_np;    // node-phase index per DER
};

Assembled assemble(const NetworkModel& net, const LinearSensitivity& sens,
                   const ScenarioHour& scenario, const std::vector<DerSpec>& ders,
                   const std::vector<QBounds>& bounds, double v_lo, double v_hi,
                   LpSense sense) {
    const std::size_t n = sens.size();
    const std::size_t nd = ders.size();
    if (net.n_node_phases() != n)
        throw dimension_error("sensitivity does not match the network");
    if (scenario.p_hat_kw.size() != nd || bounds.size() != nd)
        throw dimension_error("per-DER vectors must match the DER list");
    if (!(v_lo < v_hi)) throw value_error("voltage limits must satisfy v_lo < v_hi");

    const double s_phase = net.s_phase_kva();
    Assembled a;
    a.der_np.reserve(nd);
    for (const DerSpec& d : ders) a.der_np.push_back(net.node_phase_index(d.bus, d.phase));

    std::vector<double> p_gen(n, 0.0), q_zero(n, 0.0);
    for (std::size_t d = 0; d < nd; ++d) {
        if (scenario.p_hat_kw[d] < 0 ||
            scenario.p_hat_kw[d] > ders[d].p_cap_kw() * (1.0 + 1e-9))
            throw value_error("scenario p_hat outside [0, 0.9*S] for DER at \"" + ders[d].bus + "\"");
        p_gen[a.der_np[d]] += scenario.p_hat_kw[d] / s_phase;
    }
    a.y0 = predict_voltages(sens, p_gen, q_zero);

    // Sensitivity of y to each DER's reactive output: K^{-1} X e_d.
    Matrix s_cols(n, nd);
    for (std::size_t d = 0; d < nd; ++d) {
        std::vector<double> col(n);
        for (std::size_t i = 0; i < n; ++i) col[i] = sens.x_eq(i, a.der_np[d]);
        const std::vector<double> solved = sens.k_factor->solve(col);
        for (std::size_t i = 0; i < n; ++i) s_cols(i, d) = solved[i];
    }

    LpProblem& lp = a.lp;
    lp.n_vars = nd;
    lp.sense = sense;
    lp.objective.assign(nd, 0.0);
    for (std::size_t d = 0; d < nd; ++d) {
        double coupling = 0.0;
        for (std::size_t i = 0; i < n; ++i) coupling += sens.q_load_a1[i] * s_cols(i, d);
        lp.objective[d] = 1.0 - coupling;
    }
    a.obj_const = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        a.obj_const -= sens.q_load_a0[i] + sens.q_load_a1[i] * a.y0[i];

    lp.rows = std::move(s_cols);
    lp.row_lo.resize(n);
    lp.row_hi.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        lp.row_lo[i] = v_lo * v_lo - a.y0[i];
        lp.row_hi[i] = v_hi * v_hi - a.y0[i];
    }
    lp.var_lo.resize(nd);
    lp.var_hi.resize(nd);
    for (std::size_t d = 0; d < nd; ++d) {
        lp.var_lo[d] = bounds[d].q_lo_kvar / s_phase;
        lp.var_hi[d] = bounds[d].q_hi_kvar / s_phase;
    }
    return a;
}

std::string describe_infeasibility(const NetworkModel& net, const LpSolution& sol) {
    std::ostringstream ss;
    if (sol.worst_row != static_cast<std::size_t>(-1) && sol.worst_row < net.n_node_phases()) {
        const auto [b, ph] = net.node_phases[sol.worst_row];
        ss << "voltage limit unsatisfiable at bus \"" << net.buses[b].id << "\" phase "
           << phase_letter(ph) << " (violation " << sol.worst_violation << " p.u.^2)";
    } else if (sol.worst_var != static_cast<std::size_t>(-1)) {
        ss << "DER variable " << sol.worst_var << " box infeasible (violation "
           << sol.worst_violation << ")";
    } else {
        ss << "infeasible";
    }
    return ss.str();
}

}  // namespace

LpProblem assemble_lp(const NetworkModel& net, const LinearSensitivity& sens,
                      const ScenarioHour& scenario, const std::vector<DerSpec>& ders,
                      const std::vector<QBounds>& bounds, double v_lo, double v_hi,
                      LpSense sense) {
    return assemble(net, sens, scenario, ders, bounds, v_lo, v_hi, sense).lp;
}

FlexibilityRegion compute_fr(const NetworkModel& net, const LinearSensitivity& sens,
                             const ScenarioHour& scenario, const std::vector<DerSpec>& ders,
                             const std::vector<QBounds>& bounds, const FrOptions& opts) {
    Assembled a = assemble(net, sens, scenario, ders, bounds, opts.v_lo, opts.v_hi,
                           LpSense::minimize);
    const double s_phase = net.s_phase_kva();

    FlexibilityRegion fr;
    fr.hour = scenario.hour;
    fr.probability = scenario.probability;

    LpOptions lp_opts;
    lp_opts.lex_tiebreak = opts.lex_tiebreak;

    // min obj -> largest VAR demand from the grid; max obj -> largest injection.
    const LpSolution sol_min = solve_lp(a.lp, lp_opts);
    a.lp.sense = LpSense::maximize;
    const LpSolution sol_max = solve_lp(a.lp, lp_opts);
    a.lp.sense = LpSense::minimize;

    for (const LpSolution* s : {&sol_min, &sol_max}) {
        if (s->status == LpStatus::infeasible) {
            fr.status = "infeasible";
            fr.infeasibility_note = describe_infeasibility(net, *s);
            return fr;
        }
        if (s->status != LpStatus::optimal) {
            fr.status = "iteration_limit";
            return fr;
        }
    }

    if (opts.certify) {
        for (const LpSolution* s : {&sol_min, &sol_max}) {
            a.lp.sense = s == &sol_min ? LpSense::minimize : LpSense::maximize;
            const LpCertificate cert = certify_lp(a.lp, *s);
            if (!cert.ok())
                throw error("LP certification failed at hour " + std::to_string(scenario.hour) +
                            " (violation " + std::to_string(cert.max_violation) +
                            ", reduced cost " + std::to_string(cert.worst_reduced_cost) + ")");
        }
        a.lp.sense = LpSense::minimize;
    }

    fr.feasible = true;
    fr.status = "optimal";
    fr.q_sub_max_kvar = -(sol_min.objective + a.obj_const) * s_phase;
    fr.q_sub_min_kvar = -(sol_max.objective + a.obj_const) * s_phase;
    fr.dispatch_max_kvar.resize(ders.size());
    fr.dispatch_min_kvar.resize(ders.size());
    for (std::size_t d = 0; d < ders.size(); ++d) {
        fr.dispatch_max_kvar[d] = sol_min.x[d] * s_phase;
        fr.dispatch_min_kvar[d] = sol_max.x[d] * s_phase;
    }
    fr.binding_max = sol_min.active;
    fr.binding_min = sol_max.active;

    if (opts.post_check) {
        const std::size_t n = sens.size();
        for (const LpSolution* s : {&sol_min, &sol_max}) {
            std::vector<double> p_gen(n, 0.0), q_gen(n, 0.0);
            for (std::size_t d = 0; d < ders.size(); ++d) {
                p_gen[a.der_np[d]] += scenario.p_hat_kw[d] / s_phase;
                q_gen[a.der_np[d]] += s->x[d];
            }
            const std::vector<double> y = predict_voltages(sens, p_gen, q_gen);
            for (std::size_t i = 0; i < n; ++i) {
                if (y[i] < opts.v_lo * opts.v_lo - opts.post_check_tol ||
                    y[i] > opts.v_hi * opts.v_hi + opts.post_check_tol) {
                    const auto [b, ph] = net.node_phases[i];
                    throw error("dispatch post-check failed at bus \"" + net.buses[b].id +
                                "\" phase " + std::string(1, phase_letter(ph)) + ": y = " +
                                std::to_string(y[i]));
                }
            }
        }
    }
    return fr;
}

SweepResult sweep(const NetworkModel& net, const ErrorModel& model, const DayProfiles& profiles,
                  const std::vector<DerSpec>& ders, const std::vector<double>& p_levels,
                  const SweepOptions& opts) {
    if (profiles.load_mult.size() != 24 || profiles.solar_forecast_norm.size() != 24)
        throw value_error("profiles must cover exactly 24 hours");
    if (p_levels.empty()) throw value_error("at least one probability level is required");
    for (double p : p_levels)
        if (!(p > 0.0 && p < 1.0))
            throw domain_error("probability level " + std::to_string(p) + " outside (0,1)");
    for (const DerSpec& d : ders) d.validate();

    const std::size_t np = p_levels.size();
    SweepResult result;
    result.regions.resize(24 * np);
    result.scenarios.resize(24 * np);
    result.q_base_kvar.resize(24);

    auto run_hour = [&](int h) {
        const LinearSensitivity sens = build_sensitivity(net, profiles.load_mult[h]);
        const double s_phase = net.s_phase_kva();
        const std::size_t n = sens.size();

        // Base load line: substation VAR with DERs idle at the raw forecast.
        {
            std::vector<double> p_gen(n, 0.0), q_zero(n, 0.0);
            for (const DerSpec& d : ders)
                p_gen[net.node_phase_index(d.bus, d.phase)] +=
                    profiles.solar_forecast_norm[h] * d.capacity_kw / s_phase;
            const std::vector<double> y = predict_voltages(sens, p_gen, q_zero);
            double q_base = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                q_base += sens.q_load_a0[i] + sens.q_load_a1[i] * y[i];
            result.q_base_kvar[h] = q_base * s_phase;
        }

        for (std::size_t pi = 0; pi < np; ++pi) {
            ScenarioHour sc;
            sc.hour = h;
            sc.load_mult = profiles.load_mult[h];
            sc.probability = p_levels[pi];
            sc.p_hat_kw.resize(ders.size());
            sc.forecast_kw.resize(ders.size());
            std::vector<QBounds> bounds(ders.size());
            for (std::size_t d = 0; d < ders.size(); ++d) {
                const double forecast = profiles.solar_forecast_norm[h] * ders[d].capacity_kw;
                sc.forecast_kw[d] = forecast;
                sc.p_hat_kw[d] = adjust_forecast(model, forecast, ders[d].capacity_kw,
                                                 p_levels[pi], ders[d].p_cap_kw());
                bounds[d] = reformulate_bounds(ders[d], sc.p_hat_kw[d]);
            }
            result.regions[h * np + pi] = compute_fr(net, sens, sc, ders, bounds, opts.fr);
            result.scenarios[h * np + pi] = std::move(sc);
        }
    };

    const int threads = std::max(1, opts.threads);
    if (threads == 1) {
        for (int h = 0; h < 24; ++h) run_hour(h);
    } else {
        std::atomic<int> next{0};
        std::vector<std::future<void>> pool;
        for (int t = 0; t < threads; ++t)
            pool.push_back(std::async(std::launch::async, [&] {
                for (int h = next.fetch_add(1); h < 24; h = next.fetch_add(1)) run_hour(h);
            }));
        for (auto& f : pool) f.get();
    }
    return result;
}

std::vector<DerSpec> default_der_fleet(const NetworkModel& net, double penetration,
                                       double rating_factor) {
    if (penetration < 0) throw value_error("penetration must be nonnegative");
    if (rating_factor <= 0) throw value_error("rating factor must be positive");
    double total_peak = 0.0;
    std::vector<std::size_t> load_buses;
    for (std::size_t b = 0; b < net.buses.size(); ++b) {
        double pk = 0.0;
        for (int p = 0; p < 3; ++p) pk += net.buses[b].load_kw[p];
        if (pk > 0.0) {
            load_buses.push_back(b);
            total_peak += pk;
        }
    }
    std::vector<DerSpec> fleet;
    if (load_buses.empty() || penetration == 0.0) return fleet;
    const double per_bus = penetration * total_peak / static_cast<double>(load_buses.size());
    for (std::size_t b : load_buses) {
        const int nph = net.buses[b].phases.count();
        const double cap = per_bus / nph;
        for (int p = 0; p < 3; ++p) {
            if (!net.buses[b].phases.has(p)) continue;
            DerSpec d;
            d.bus = net.buses[b].id;
            d.phase = static_cast<Phase>(p);
            d.capacity_kw = cap;
            d.s_rating_kva = rating_factor * cap;
            d.p_peak_kw = 0.9 * d.s_rating_kva;  // peak deliverable output under the cap
            d.validate();
            fleet.push_back(std::move(d));
        }
    }
    return fleet;
}

std::vector<DerSpec> der_fleet_from_json(const NetworkModel& net, const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw parse_error(std::string("DER config JSON: ") + e.what());
    }
    double penetration = 0.9, rating_factor = 1.1;
    try {
        if (j.contains("penetration")) penetration = j.at("penetration").get<double>();
        if (j.contains("rating_factor")) rating_factor = j.at("rating_factor").get<double>();
        std::vector<DerSpec> fleet = default_der_fleet(net, penetration, rating_factor);
        if (j.contains("overrides")) {
            for (const auto& jo : j.at("overrides")) {
                const std::string bus = jo.at("bus").get<std::string>();
                const std::size_t b = net.bus_index(bus);
                std::erase_if(fleet, [&](const DerSpec& d) { return d.bus == bus; });
                const double s_total = jo.at("s_rating_kva").get<double>();
                if (s_total == 0.0) continue;  // bus excluded
                const int nph = net.buses[b].phases.count();
                const double s_ph = s_total / nph;
                const double cap_ph = jo.contains("capacity_kw")
                                          ? jo.at("capacity_kw").get<double>() / nph
                                          : s_ph / rating_factor;
                const double peak_ph = jo.contains("p_peak_kw")
                                           ? jo.at("p_peak_kw").get<double>() / nph
                                           : 0.9 * s_ph;
                for (int p = 0; p < 3; ++p) {
                    if (!net.buses[b].phases.has(p)) continue;
                    DerSpec d;
                    d.bus = bus;
                    d.phase = static_cast<Phase>(p);
                    d.s_rating_kva = s_ph;
                    d.capacity_kw = cap_ph;
                    d.p_peak_kw = peak_ph;
                    d.validate();
                    fleet.push_back(std::move(d));
                }
            }
        }
        return fleet;
    } catch (const json::exception& e) {
        throw parse_error(std::string("DER config JSON: ") + e.what());
    }
}

}  // namespace varcap
