#pragma once

#include <cstdint>
#include <vector>

#include "varcap/forecast.hpp"
#include "varcap/network.hpp"
#include "varcap/opf.hpp"
#include "varcap/rng.hpp"

namespace varcap {

struct McConfig {
    std::size_t n_samples = 10000;
    std::uint64_t seed = 1;
    double alpha = 0.024;          // risk factor; the F-R under test was built at P = 1 - alpha
    bool check_voltages = false;
    double v_lo = 0.95, v_hi = 1.05;
    // shared: one error draw per sample applied to every DER (single scaled
    // solar profile). independent: a fresh draw per (sample, DER).
    enum class Correlation { shared, independent };
    Correlation correlation = Correlation::shared;
    int threads = 1;
};

struct McReport {
    int hour = 0;
    double probability = 0.0;
    std::size_t n = 0;
    std::uint64_t seed = 0;
    double hardware_violation_rate = 0.0;  // any-DER, worst of the two extremes
    double per_der_max_rate = 0.0;         // worst single-DER rate
    double voltage_violation_rate = 0.0;   // nonlinear re-solve, if checked
    std::size_t indeterminate = 0;         // non-converged re-solves, excluded from rates
    double ci_halfwidth = 0.0;             // binomial 95% half-width at the reported rate
    bool pass = false;
};

/// One realized generation: rel_err ~ N(mu, sigma) from the matching bin,
/// p = forecast*(1+rel_err) clamped to [0, p_cap_kw]. forecast == 0 gives 0.
double sample_generation(const ErrorModel& model, double forecast_kw,
                         double capacity_kw, double p_cap_kw, RngStream& rng);

/// Empirical check of the hardware chance constraint for one flexibility
/// region: samples generation, tests dispatch_q^2 <= S^2 - p^2 per DER at
/// both extremes, and optionally re-solves the nonlinear power flow with
/// watt-priority VAR reduction. forecasts_kw are the per-DER forecasts the
/// region was built from; load_mult is that hour's load level.
McReport validate_fr(const FlexibilityRegion& fr, const NetworkModel& net,
                     const ErrorModel& model, const std::vector<double>& forecasts_kw,
                     const std::vector<DerSpec>& ders, const McConfig& cfg,
                     double load_mult = 1.0);

}  // namespace varcap
