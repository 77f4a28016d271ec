#pragma once

#include <optional>
#include <string>
#include <vector>

#include "varcap/forecast.hpp"
#include "varcap/linear_model.hpp"
#include "varcap/network.hpp"
#include "varcap/simplex.hpp"

namespace varcap {

/// Inverter-interfaced DER at one node-phase. p_peak_kw is the peak
/// deliverable output (capped at 90% of the kVA rating); capacity_kw is the
/// installed nameplate used to normalize forecasts.
struct DerSpec {
    std::string bus;
    Phase phase = Phase::a;
    double s_rating_kva = 0.0;
    double p_peak_kw = 0.0;
    double capacity_kw = 0.0;

    double p_cap_kw() const { return 0.9 * s_rating_kva; }
    void validate() const;  // s_rating >= p_peak/0.9, p_peak >= 0
};

/// Symmetric deterministic VAR limits after the quantile shift.
struct QBounds {
    double q_lo_kvar = 0.0;
    double q_hi_kvar = 0.0;
};

/// q_hi = sqrt(S^2 - p_hat^2), q_lo = -q_hi. Throws domain_error when
/// p_hat exceeds the rating (upstream clamping failure).
QBounds reformulate_bounds(const DerSpec& der, double p_hat_kw);

/// One hour of the day-ahead scenario: quantile-shifted generation per DER
/// and the scalar load multiplier. forecast_kw keeps the unshifted forecasts
/// so downstream validation can resample the same hour.
struct ScenarioHour {
    int hour = 0;
    std::vector<double> p_hat_kw;    // per DER
    std::vector<double> forecast_kw; // per DER, raw forecast
    double load_mult = 1.0;
    double probability = 0.5;
};

/// Min/max net substation VAR achievable at one hour and confidence level.
/// Substation convention: positive = VAR demanded from the transmission grid.
/// q_sub_max is attained by dispatch_max, q_sub_min by dispatch_min.
struct FlexibilityRegion {
    int hour = 0;
    double probability = 0.5;
    bool feasible = false;
    std::string status;  // "optimal" | "infeasible" | "iteration_limit"
    double q_sub_max_kvar = 0.0;
    double q_sub_min_kvar = 0.0;
    std::vector<double> dispatch_max_kvar, dispatch_min_kvar;  // per DER
    std::vector<LpActive> binding_max, binding_min;
    std::string infeasibility_note;
};

struct FrOptions {
    double v_lo = 0.95, v_hi = 1.05;
    bool lex_tiebreak = true;
    bool post_check = true;          // re-verify linear voltages at both extremes
    double post_check_tol = 1e-7;
    bool certify = true;             // independent LP certificate on every solve
};

/// Builds the hourly LP over DER reactive outputs: objective sum(q_g) - sum(q_l(y)),
/// voltage box rows through the linear model, and QBounds variable boxes.
LpProblem assemble_lp(const NetworkModel& net, const LinearSensitivity& sens,
                      const ScenarioHour& scenario, const std::vector<DerSpec>& ders,
                      const std::vector<QBounds>& bounds, double v_lo, double v_hi,
                      LpSense sense);

/// Solves both senses and reports the flexibility interval with dispatches.
FlexibilityRegion compute_fr(const NetworkModel& net, const LinearSensitivity& sens,
                             const ScenarioHour& scenario,
                             const std::vector<DerSpec>& ders,
                             const std::vector<QBounds>& bounds,
                             const FrOptions& opts = {});

/// 24-hour day-ahead profiles: per-hour load multiplier and solar forecast
/// normalized to installed capacity.
struct DayProfiles {
    std::vector<double> load_mult;           // 24 entries
    std::vector<double> solar_forecast_norm; // 24 entries
};

struct SweepOptions {
    FrOptions fr;
    int threads = 1;  // hours solved concurrently; results ordered by (hour, P)
};

struct SweepResult {
    std::vector<FlexibilityRegion> regions;    // ordered (hour-major, then P)
    std::vector<ScenarioHour> scenarios;       // matching order
    std::vector<double> q_base_kvar;           // per hour: substation VAR at zero DER dispatch
};

/// Full day-ahead sweep: per (hour, P) builds p_hat via adjust_forecast,
/// reformulates bounds, and computes the flexibility region.
SweepResult sweep(const NetworkModel& net, const ErrorModel& model,
                  const DayProfiles& profiles, const std::vector<DerSpec>& ders,
                  const std::vector<double>& p_levels, const SweepOptions& opts = {});

/// Default fleet: every load bus gets an equal share of
/// penetration * (total peak load), split across its phases;
/// ratings are rating_factor * installed share.
std::vector<DerSpec> default_der_fleet(const NetworkModel& net,
                                       double penetration = 0.9,
                                       double rating_factor = 1.1);

/// Fleet from a config JSON (defaults plus per-bus overrides).
std::vector<DerSpec> der_fleet_from_json(const NetworkModel& net,
                                         const std::string& json_text);

}  // namespace varcap
