#include <doctest.h>

#include <cmath>

#include "varcap/opf.hpp"

using namespace varcap;

namespace {

DerSpec der_at(const std::string& bus, Phase ph, double s_kva) {
    DerSpec d;
    d.bus = bus;
    d.phase = ph;
    d.s_rating_kva = s_kva;
    d.p_peak_kw = 0.9 * s_kva;
    d.capacity_kw = s_kva / 1.1;
    return d;
}

ErrorModel flat_model(double mu, double sigma) {
    ErrorModel m;
    m.bins.push_back({0.0, 1.0, 1000, mu, sigma});
    return m;
}

DayProfiles night_profiles() {
    DayProfiles p;
    p.load_mult.assign(24, 1.0);
    p.solar_forecast_norm.assign(24, 0.0);
    return p;
}

}  // namespace

TEST_SUITE("opf") {

TEST_CASE("reformulate_bounds traces the inverter circle") {
    const DerSpec d = der_at("b1", Phase::a, 1.0);

    const QBounds full = reformulate_bounds(d, 0.0);
    CHECK(full.q_hi_kvar == doctest::Approx(1.0));
    CHECK(full.q_lo_kvar == doctest::Approx(-1.0));

    const QBounds triple = reformulate_bounds(d, 0.6);
    CHECK(triple.q_hi_kvar == doctest::Approx(0.8));

    // At the 90%-of-kVA cap, headroom is about 44% of the rating.
    const DerSpec d11 = der_at("b1", Phase::a, 1.1);
    const QBounds capped = reformulate_bounds(d11, 0.99);
    CHECK(capped.q_hi_kvar == doctest::Approx(0.47947).epsilon(1e-4));
    CHECK(capped.q_hi_kvar / d11.s_rating_kva == doctest::Approx(0.4359).epsilon(1e-3));

    CHECK_THROWS_AS(reformulate_bounds(d, 1.2), domain_error);
    CHECK_THROWS_AS(reformulate_bounds(d, -0.1), domain_error);
}

TEST_CASE("q_hi is strictly decreasing in p_hat") {
    const DerSpec d = der_at("b1", Phase::a, 2.0);
    double prev = reformulate_bounds(d, 0.0).q_hi_kvar;
    for (double p = 0.1; p <= 0.9 * d.s_rating_kva + 1e-12; p += 0.1) {
        const double q = reformulate_bounds(d, p).q_hi_kvar;
        CHECK(q < prev);
        prev = q;
    }
}

TEST_CASE("DerSpec validation enforces the operating cap") {
    DerSpec d = der_at("b1", Phase::a, 1.0);
    CHECK_NOTHROW(d.validate());
    d.p_peak_kw = 0.95;  // > 0.9 * S
    CHECK_THROWS_AS(d.validate(), value_error);
    d.p_peak_kw = -1.0;
    CHECK_THROWS_AS(d.validate(), value_error);
}

TEST_CASE("assemble_lp shapes follow the topology") {
    const NetworkModel net = load_network(std::string(VARCAP_DATA_DIR) + "/feeder3.json");
    const LinearSensitivity sens = build_sensitivity(net);
    std::vector<DerSpec> ders{der_at("m1", Phase::a, 100.0), der_at("m2", Phase::c, 100.0)};
    ScenarioHour sc;
    sc.p_hat_kw = {20.0, 30.0};
    std::vector<QBounds> bounds{reformulate_bounds(ders[0], 20.0),
                                reformulate_bounds(ders[1], 30.0)};
    const LpProblem lp = assemble_lp(net, sens, sc, ders, bounds, 0.95, 1.05, LpSense::maximize);
    CHECK(lp.n_vars == 2);
    CHECK(lp.n_rows() == net.n_node_phases());
    // Voltage rows are ranged on both sides.
    for (std::size_t r = 0; r < lp.n_rows(); ++r) {
        CHECK(std::isfinite(lp.row_lo[r]));
        CHECK(std::isfinite(lp.row_hi[r]));
        CHECK(lp.row_lo[r] < lp.row_hi[r]);
    }
}

TEST_CASE("13-bus LP shape: one ranged row per node-phase, one variable per DER") {
    const NetworkModel net = load_network(std::string(VARCAP_DATA_DIR) + "/feeder13.json");
    const LinearSensitivity sens = build_sensitivity(net);
    const std::vector<DerSpec> ders = default_der_fleet(net);
    ScenarioHour sc;
    sc.p_hat_kw.assign(ders.size(), 0.0);
    std::vector<QBounds> bounds;
    for (const DerSpec& d : ders) bounds.push_back(reformulate_bounds(d, 0.0));
    const LpProblem lp = assemble_lp(net, sens, sc, ders, bounds, 0.95, 1.05, LpSense::minimize);
    CHECK(lp.n_vars == ders.size());
    // Each ranged row carries both voltage inequalities: 2*(node-phases) in total.
    CHECK(lp.n_rows() == net.n_node_phases());
    std::size_t one_sided = 0;
    for (std::size_t r = 0; r < lp.n_rows(); ++r)
        if (!std::isfinite(lp.row_lo[r]) || !std::isfinite(lp.row_hi[r])) ++one_sided;
    CHECK(one_sided == 0);
}

TEST_CASE("no DERs: the region collapses to the load VAR") {
    const NetworkModel net = load_network(std::string(VARCAP_DATA_DIR) + "/feeder3.json");
    const LinearSensitivity sens = build_sensitivity(net);
    ScenarioHour sc;
    const FlexibilityRegion fr = compute_fr(net, sens, sc, {}, {}, {});
    REQUIRE(fr.feasible);
    // Total nameplate VAR = 285 kvar, constant-power loads.
    CHECK(fr.q_sub_max_kvar == doctest::Approx(285.0));
    CHECK(fr.q_sub_min_kvar == doctest::Approx(285.0));
}

TEST_CASE("single DER with loose limits sits at the box corner") {
    const NetworkModel net = load_network(std::string(VARCAP_DATA_DIR) + "/feeder2.json");
    const LinearSensitivity sens = build_sensitivity(net);
    std::vector<DerSpec> ders{der_at("b1", Phase::a, 110.0)};
    ScenarioHour sc;
    sc.p_hat_kw = {60.0};
    std::vector<QBounds> bounds{reformulate_bounds(ders[0], 60.0)};
    FrOptions opts;
    opts.v_lo = 0.5;
    opts.v_hi = 1.5;
    const FlexibilityRegion fr = compute_fr(net, sens, sc, ders, bounds, opts);
    REQUIRE(fr.feasible);
    const double q_hi = std::sqrt(110.0 * 110.0 - 60.0 * 60.0);
    CHECK(fr.q_sub_max_kvar == doctest::Approx(50.0 + q_hi).epsilon(1e-9));
    CHECK(fr.q_sub_min_kvar == doctest::Approx(50.0 - q_hi).epsilon(1e-9));
    CHECK(fr.dispatch_max_kvar[0] == doctest::Approx(-q_hi));
    CHECK(fr.dispatch_min_kvar[0] == doctest::Approx(q_hi));
    bool lower_active = false;
    for (const LpActive& a : fr.binding_max)
        if (a.kind == LpActive::Kind::var_lower && a.index == 0) lower_active = true;
    CHECK(lower_active);
}

TEST_CASE("tight upper voltage limit binds the capacitive extreme") {
    // Oversized DER: injecting its full VAR would lift y past 1.05^2.
    const NetworkModel net = load_network(std::string(VARCAP_DATA_DIR) + "/feeder2.json");
    const LinearSensitivity sens = build_sensitivity(net);
    std::vector<DerSpec> ders{der_at("b1", Phase::a, 3000.0)};
    ScenarioHour sc;
    sc.p_hat_kw = {0.0};
    std::vector<QBounds> bounds{reformulate_bounds(ders[0], 0.0)};
    FrOptions opts;  // default 0.95/1.05
    const FlexibilityRegion fr = compute_fr(net, sens, sc, ders, bounds, opts);
    REQUIRE(fr.feasible);
    bool v_hi_binding = false;
    for (const LpActive& a : fr.binding_min)
        if (a.kind == LpActive::Kind::row_upper) v_hi_binding = true;
    CHECK(v_hi_binding);
    // The extreme is clipped by the voltage row, not the inverter box.
    CHECK(fr.q_sub_min_kvar > 50.0 - 3000.0);
    CHECK(std::fabs(fr.dispatch_min_kvar[0]) < 3000.0);
}

TEST_CASE("13-bus: heavy capacitive injection is clipped by the 1.05 cap") {
    const NetworkModel net = load_network(std::string(VARCAP_DATA_DIR) + "/feeder13.json");
    const LinearSensitivity sens = build_sensitivity(net);
    // 3x-peak-load fleet: the full box would lift a feeder-end voltage past 1.05.
    const std::vector<DerSpec> ders = default_der_fleet(net, 3.0, 1.1);
    ScenarioHour sc;
    sc.p_hat_kw.assign(ders.size(), 0.0);
    std::vector<QBounds> bounds;
    double box_total = 0.0;
    for (const DerSpec& d : ders) {
        bounds.push_back(reformulate_bounds(d, 0.0));
        box_total += bounds.back().q_hi_kvar;
    }
    const FlexibilityRegion fr = compute_fr(net, sens, sc, ders, bounds, {});
    REQUIRE(fr.feasible);
    bool v_hi_binding = false;
    for (const LpActive& a : fr.binding_min)
        if (a.kind == LpActive::Kind::row_upper) v_hi_binding = true;
    CHECK(v_hi_binding);
    double injected = 0.0;
    for (double q : fr.dispatch_min_kvar) injected += q;
    CHECK(injected < box_total - 1.0);  // strictly inside the box
}

TEST_CASE("impossible voltage window reports the infeasible node") {
    const NetworkModel net = load_network(std::string(VARCAP_DATA_DIR) + "/feeder2.json");
    const LinearSensitivity sens = build_sensitivity(net);
    std::vector<DerSpec> ders{der_at("b1", Phase::a, 10.0)};
    ScenarioHour sc;
    sc.p_hat_kw = {0.0};
    std::vector<QBounds> bounds{reformulate_bounds(ders[0], 0.0)};
    FrOptions opts;
    opts.v_lo = 1.2;  // unreachable window
    opts.v_hi = 1.3;
    const FlexibilityRegion fr = compute_fr(net, sens, sc, ders, bounds, opts);
    CHECK_FALSE(fr.feasible);
    CHECK(fr.status == "infeasible");
    CHECK(fr.infeasibility_note.find("b1") != std::string::npos);
}

TEST_CASE("zero-solar sweep is identical across probability levels") {
    const NetworkModel net = load_network(std::string(VARCAP_DATA_DIR) + "/feeder3.json");
    const ErrorModel model = flat_model(0.1, 0.5);
    const std::vector<DerSpec> ders = default_der_fleet(net);
    const SweepResult r = sweep(net, model, night_profiles(), ders, {0.5, 0.84, 0.976});
    REQUIRE(r.regions.size() == 72);
    for (int h = 0; h < 24; ++h) {
        const FlexibilityRegion& a = r.regions[h * 3 + 0];
        const FlexibilityRegion& b = r.regions[h * 3 + 1];
        const FlexibilityRegion& c = r.regions[h * 3 + 2];
        REQUIRE(a.feasible);
        CHECK(a.q_sub_max_kvar == b.q_sub_max_kvar);  // bitwise: identical LPs
        CHECK(b.q_sub_max_kvar == c.q_sub_max_kvar);
        CHECK(a.q_sub_min_kvar == b.q_sub_min_kvar);
        CHECK(b.q_sub_min_kvar == c.q_sub_min_kvar);
    }
}

TEST_CASE("sigma = 0 model collapses the sweep to the deterministic base case") {
    const NetworkModel net = load_network(std::string(VARCAP_DATA_DIR) + "/feeder3.json");
    const ErrorModel model = flat_model(0.05, 0.0);
    const std::vector<DerSpec> ders = default_der_fleet(net);
    DayProfiles p = night_profiles();
    p.solar_forecast_norm[12] = 0.5;
    const SweepResult r = sweep(net, model, p, ders, {0.5});
    const std::size_t i = 12;
    REQUIRE(r.regions[i].feasible);
    // p_hat = (1+mu) * forecast exactly
    for (std::size_t d = 0; d < ders.size(); ++d)
        CHECK(r.scenarios[i].p_hat_kw[d] ==
              doctest::Approx(1.05 * 0.5 * ders[d].capacity_kw).epsilon(1e-12));
}

TEST_CASE("nesting: higher confidence shrinks the region on solar hours") {
    const NetworkModel net = load_network(std::string(VARCAP_DATA_DIR) + "/feeder3.json");
    const ErrorModel model = flat_model(0.0, 0.3);
    const std::vector<DerSpec> ders = default_der_fleet(net);
    DayProfiles p = night_profiles();
    p.solar_forecast_norm[12] = 0.5;
    const SweepResult r = sweep(net, model, p, ders, {0.5, 0.84, 0.976});
    const FlexibilityRegion& a = r.regions[12 * 3 + 0];
    const FlexibilityRegion& b = r.regions[12 * 3 + 1];
    const FlexibilityRegion& c = r.regions[12 * 3 + 2];
    REQUIRE(a.feasible);
    REQUIRE(c.feasible);
    CHECK(a.q_sub_max_kvar > b.q_sub_max_kvar);
    CHECK(b.q_sub_max_kvar > c.q_sub_max_kvar);
    CHECK(a.q_sub_min_kvar < b.q_sub_min_kvar);
    CHECK(b.q_sub_min_kvar < c.q_sub_min_kvar);
}

TEST_CASE("sweep rejects bad probability levels and profiles") {
    const NetworkModel net = load_network(std::string(VARCAP_DATA_DIR) + "/feeder3.json");
    const ErrorModel model = flat_model(0.0, 0.1);
    const std::vector<DerSpec> ders = default_der_fleet(net);
    CHECK_THROWS_AS(sweep(net, model, night_profiles(), ders, {1.0}), domain_error);
    CHECK_THROWS_AS(sweep(net, model, night_profiles(), ders, {}), value_error);
    DayProfiles bad;
    bad.load_mult.assign(23, 1.0);
    bad.solar_forecast_norm.assign(23, 0.0);
    CHECK_THROWS_AS(sweep(net, model, bad, ders, {0.5}), value_error);
}

TEST_CASE("default fleet covers every load bus phase") {
    const NetworkModel net = load_network(std::string(VARCAP_DATA_DIR) + "/feeder3.json");
    const auto fleet = default_der_fleet(net, 0.9, 1.1);
    CHECK(fleet.size() == 6);
    double total_cap = 0.0;
    for (const DerSpec& d : fleet) {
        d.validate();
        total_cap += d.capacity_kw;
    }
    CHECK(total_cap == doctest::Approx(0.9 * 570.0));
}

TEST_CASE("DER config overrides replace the default fleet at a bus") {
    const NetworkModel net = load_network(std::string(VARCAP_DATA_DIR) + "/feeder3.json");
    const auto fleet = der_fleet_from_json(net, R"({
      "penetration": 0.9, "rating_factor": 1.1,
      "overrides": [
        { "bus": "m1", "s_rating_kva": 330.0 },
        { "bus": "m2", "s_rating_kva": 0.0 }
      ]})");
    REQUIRE(fleet.size() == 3);  // m1 only, one DER per phase
    for (const DerSpec& d : fleet) {
        CHECK(d.bus == "m1");
        CHECK(d.s_rating_kva == doctest::Approx(110.0));
    }
}

}  // TEST_SUITE
