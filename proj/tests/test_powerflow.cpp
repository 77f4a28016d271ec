#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "varcap/linear_model.hpp"
#include "varcap/powerflow.hpp"

using namespace varcap;

namespace {

NetworkModel two_bus(double r_pu, double x_pu, double load_kw, double load_kvar) {
    const double zb = 5.76;
    char buf[1024];
    std::snprintf(buf, sizeof buf, R"({
      "s_base_kva": 3000.0, "v_base_kv": 2.4, "slack": "src", "v0_pu": [1,1,1],
      "buses": [
        { "id": "src", "phases": "a" },
        { "id": "b1", "phases": "a", "load_kw": [%g], "load_kvar": [%g] }
      ],
      "lines": [
        { "from": "src", "to": "b1",
          "r_ohm": [[%g,0,0],[0,0,0],[0,0,0]], "x_ohm": [[%g,0,0],[0,0,0],[0,0,0]] }
      ]})",
                  load_kw, load_kvar, r_pu * zb, x_pu * zb);
    return parse_network(buf);
}

}  // namespace

TEST_SUITE("powerflow") {

TEST_CASE("flat profile with no load converges in one iteration") {
    const NetworkModel net = two_bus(0.01, 0.02, 0.0, 0.0);
    const PfSolution sol = solve_pf(net, {0.0}, {0.0});
    CHECK(sol.converged);
    CHECK(sol.iterations == 1);
    CHECK(std::abs(sol.v[0]) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("two-bus solution matches the closed-form quadratic") {
    // 0.1 + j0.05 pu load behind z = 0.01 + j0.02 pu
    const NetworkModel net = two_bus(0.01, 0.02, 100.0, 50.0);
    const PfSolution sol = solve_pf(net, {0.0}, {0.0}, 1e-12, 200);
    REQUIRE(sol.converged);
    const double v_ref = oracle::two_bus_vmag(1.0, 0.01, 0.02, 0.1, 0.05);
    CHECK(std::abs(sol.v[0]) == doctest::Approx(v_ref).epsilon(1e-8));
}

TEST_CASE("heavy two-bus load sags below 0.95 and check_limits reports it") {
    // Tuned so |V| lands near 0.93.
    const NetworkModel net = two_bus(0.05, 0.1, 550.0, 275.0);
    const PfSolution sol = solve_pf(net, {0.0}, {0.0}, 1e-10, 200);
    REQUIRE(sol.converged);
    const double v_ref = oracle::two_bus_vmag(1.0, 0.05, 0.1, 0.55, 0.275);
    CHECK(std::abs(sol.v[0]) == doctest::Approx(v_ref).epsilon(1e-8));
    CHECK(v_ref < 0.95);
    const auto viol = check_limits(sol, 0.95, 1.05);
    REQUIRE(viol.size() == 1);
    CHECK(viol[0].node_phase == 0);
    CHECK(viol[0].vmag == doctest::Approx(v_ref).epsilon(1e-8));
    CHECK(check_limits(sol, 0.0, 10.0).empty());
}

TEST_CASE("generation injection raises the voltage") {
    const NetworkModel net = two_bus(0.01, 0.02, 0.0, 0.0);
    const PfSolution sol = solve_pf(net, {0.1}, {0.0}, 1e-12, 200);
    REQUIRE(sol.converged);
    CHECK(std::abs(sol.v[0]) > 1.0);
    // Linear model predicts y = 1.002; the exact solution is close.
    CHECK(std::norm(sol.v[0]) == doctest::Approx(1.002).epsilon(2e-4));
}

TEST_CASE("energy balance: slack power equals load minus generation plus losses") {
    const NetworkModel net = load_network(std::string(VARCAP_DATA_DIR) + "/feeder3.json");
    std::vector<double> p_gen(net.n_node_phases(), 0.0), q_gen(net.n_node_phases(), 0.0);
    p_gen[net.node_phase_index("m2", Phase::b)] = 0.05;
    q_gen[net.node_phase_index("m2", Phase::b)] = -0.02;
    const PfSolution sol = solve_pf(net, p_gen, q_gen, 1e-10, 200);
    REQUIRE(sol.converged);
    const std::complex<double> residual =
        sol.slack_power - (sol.total_load - sol.total_gen + sol.total_loss);
    CHECK(std::abs(residual) < 1e-9);
}

TEST_CASE("voltage-dependent load converges and sags less than constant power") {
    const std::string text = R"({
      "s_base_kva": 3000.0, "v_base_kv": 2.4, "slack": "src", "v0_pu": [1,1,1],
      "buses": [
        { "id": "src", "phases": "a" },
        { "id": "b1", "phases": "a", "load_kw": [400], "load_kvar": [200], "a0": [0.4], "a1": [0.6] }
      ],
      "lines": [
        { "from": "src", "to": "b1",
          "r_ohm": [[0.2304,0,0],[0,0,0],[0,0,0]], "x_ohm": [[0.4608,0,0],[0,0,0],[0,0,0]] }
      ]})";
    const NetworkModel net = parse_network(text);
    const PfSolution sol = solve_pf(net, {0.0}, {0.0}, 1e-10, 200);
    REQUIRE(sol.converged);
    const double v_cp = oracle::two_bus_vmag(1.0, 0.04, 0.08, 0.4, 0.2);
    CHECK(std::abs(sol.v[0]) > v_cp);
}

TEST_CASE("non-convergence is reported, not thrown") {
    // Load far beyond the feeder's transfer capability.
    const NetworkModel net = two_bus(0.1, 0.2, 3000.0, 1500.0);
    const PfSolution sol = solve_pf(net, {0.0}, {0.0}, 1e-10, 30);
    CHECK_FALSE(sol.converged);
    CHECK_THROWS_AS(check_limits(sol, 0.95, 1.05), convergence_error);
}

TEST_CASE("13-bus fixture converges within 20 iterations at tol 1e-8") {
    const NetworkModel net = load_network(std::string(VARCAP_DATA_DIR) + "/feeder13.json");
    const std::vector<double> zero(net.n_node_phases(), 0.0);
    const PfSolution sol = solve_pf(net, zero, zero, 1e-8, 20);
    CHECK(sol.converged);
    CHECK(sol.iterations <= 20);
}

TEST_CASE("mismatch decreases monotonically on fixtures (flagged, not failed)") {
    for (const char* fixture : {"/feeder3.json", "/feeder13.json", "/feeder123.json"}) {
        const NetworkModel net = load_network(std::string(VARCAP_DATA_DIR) + fixture);
        const std::vector<double> zero(net.n_node_phases(), 0.0);
        const PfSolution sol = solve_pf(net, zero, zero, 1e-12, 100);
        REQUIRE(sol.converged);
        WARN_MESSAGE(sol.mismatch_monotone, "non-monotone convergence on " << fixture);
    }
}

TEST_CASE("linearization error shrinks quadratically with loading") {
    for (const char* fixture : {"/feeder2.json", "/feeder3.json", "/feeder123.json"}) {
        const NetworkModel net = load_network(std::string(VARCAP_DATA_DIR) + fixture);
        auto max_err = [&](double scale) {
            const NetworkModel scaled = scale_loads(net, scale);
            const LinearSensitivity sens = build_sensitivity(scaled);
            const std::vector<double> zero(net.n_node_phases(), 0.0);
            const auto y = predict_voltages(sens, zero, zero);
            const PfSolution pf = solve_pf(scaled, zero, zero, 1e-10, 200);
            REQUIRE(pf.converged);
            double err = 0.0;
            for (std::size_t i = 0; i < y.size(); ++i)
                err = std::max(err, std::fabs(y[i] - std::norm(pf.v[i])));
            return err;
        };
        const double e_full = max_err(1.0);
        const double e_tenth = max_err(0.1);
        CHECK(e_full <= 0.01);
        CHECK(e_tenth < e_full / 10.0);
    }
}

}  // TEST_SUITE
