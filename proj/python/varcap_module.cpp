// Python bindings for the varcap core: network/model construction, forecast
// error fitting, bound reformulation, flexibility sweeps, the nonlinear
// power-flow oracle, and Monte Carlo validation.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <complex>

#include "varcap/io.hpp"
#include "varcap/montecarlo.hpp"
#include "varcap/powerflow.hpp"

namespace py = pybind11;
using namespace varcap;

PYBIND11_MODULE(_varcap, m) {
    m.doc() = "Robust aggregated VAR capability curves for unbalanced feeders";
    m.attr("__version__") = tool_version;

    py::register_exception<error>(m, "Error", PyExc_RuntimeError);

    py::enum_<Phase>(m, "Phase")
        .value("a", Phase::a)
        .value("b", Phase::b)
        .value("c", Phase::c);

    py::class_<NetworkModel>(m, "NetworkModel")
        .def_property_readonly("n_node_phases", &NetworkModel::n_node_phases)
        .def_property_readonly("n_buses", [](const NetworkModel& n) { return n.buses.size(); })
        .def_property_readonly("n_lines", [](const NetworkModel& n) { return n.lines.size(); })
        .def_readonly("s_base_kva", &NetworkModel::s_base_kva)
        .def_readonly("v_base_kv", &NetworkModel::v_base_kv)
        .def("bus_ids",
             [](const NetworkModel& n) {
                 std::vector<std::string> ids;
                 for (const Bus& b : n.buses) ids.push_back(b.id);
                 return ids;
             })
        .def("node_phase_index", &NetworkModel::node_phase_index)
        .def("node_phases", [](const NetworkModel& n) {
            std::vector<std::pair<std::string, char>> out;
            for (const NodePhase& np : n.node_phases)
                out.emplace_back(n.buses[np.bus].id, phase_letter(np.phase));
            return out;
        });

    m.def("load_network", &load_network, py::arg("path"));
    m.def("parse_network", &parse_network, py::arg("json_text"));
    m.def("scale_loads", &scale_loads, py::arg("net"), py::arg("mult"));

    py::class_<LinearSensitivity>(m, "LinearSensitivity")
        .def_property_readonly("size", &LinearSensitivity::size)
        .def_readonly("load_scale", &LinearSensitivity::load_scale);

    m.def("build_sensitivity", &build_sensitivity, py::arg("net"), py::arg("load_scale") = 1.0);
    m.def("predict_voltages", &predict_voltages, py::arg("sens"), py::arg("p_gen"),
          py::arg("q_gen"));

    py::class_<PfSolution>(m, "PfSolution")
        .def_readonly("converged", &PfSolution::converged)
        .def_readonly("iterations", &PfSolution::iterations)
        .def_readonly("max_mismatch", &PfSolution::max_mismatch)
        .def_property_readonly("v_mag",
                               [](const PfSolution& s) {
                                   std::vector<double> out;
                                   for (const auto& v : s.v) out.push_back(std::abs(v));
                                   return out;
                               })
        .def_property_readonly("v", [](const PfSolution& s) { return s.v; });

    m.def("solve_pf", &solve_pf, py::arg("net"), py::arg("p_gen"), py::arg("q_gen"),
          py::arg("tol") = 1e-8, py::arg("max_iter") = 100);

    py::class_<ErrorBin>(m, "ErrorBin")
        .def_readonly("lo", &ErrorBin::lo)
        .def_readonly("hi", &ErrorBin::hi)
        .def_readonly("count", &ErrorBin::count)
        .def_readonly("mu", &ErrorBin::mu)
        .def_readonly("sigma", &ErrorBin::sigma);

    py::class_<ErrorModel>(m, "ErrorModel").def_readonly("bins", &ErrorModel::bins);

    m.def("read_forecast_csv", &read_forecast_csv, py::arg("path"));
    m.def(
        "fit_error_model_from_csv",
        [](const std::filesystem::path& path, int n_bins, std::size_t min_count) {
            return fit_error_model(clean_and_normalize(read_forecast_csv(path)), n_bins, min_count);
        },
        py::arg("path"), py::arg("n_bins") = 12, py::arg("min_count") = 20);
    m.def("fit_error_model", &fit_error_model, py::arg("pairs"), py::arg("n_bins") = 12,
          py::arg("min_count") = 20);
    m.def("load_error_model", &load_error_model, py::arg("path"));
    m.def("save_error_model", &save_error_model, py::arg("model"), py::arg("path"));
    m.def("lookup_bin", &lookup_bin, py::arg("model"), py::arg("f_norm"));
    m.def("inv_norm_cdf", &inv_norm_cdf, py::arg("p"));
    m.def("norm_cdf", &norm_cdf, py::arg("z"));
    m.def("adjust_forecast", &adjust_forecast, py::arg("model"), py::arg("forecast_kw"),
          py::arg("capacity_kw"), py::arg("probability"), py::arg("p_cap_kw"));

    py::class_<DerSpec>(m, "DerSpec")
        .def(py::init([](std::string bus, Phase phase, double s_rating_kva, double p_peak_kw,
                         double capacity_kw) {
                 DerSpec d{std::move(bus), phase, s_rating_kva, p_peak_kw, capacity_kw};
                 d.validate();
                 return d;
             }),
             py::arg("bus"), py::arg("phase"), py::arg("s_rating_kva"), py::arg("p_peak_kw"),
             py::arg("capacity_kw"))
        .def_readonly("bus", &DerSpec::bus)
        .def_readonly("phase", &DerSpec::phase)
        .def_readonly("s_rating_kva", &DerSpec::s_rating_kva)
        .def_readonly("p_peak_kw", &DerSpec::p_peak_kw)
        .def_readonly("capacity_kw", &DerSpec::capacity_kw)
        .def_property_readonly("p_cap_kw", &DerSpec::p_cap_kw);

    py::class_<QBounds>(m, "QBounds")
        .def_readonly("q_lo_kvar", &QBounds::q_lo_kvar)
        .def_readonly("q_hi_kvar", &QBounds::q_hi_kvar);

    m.def("reformulate_bounds", &reformulate_bounds, py::arg("der"), py::arg("p_hat_kw"));
    m.def("default_der_fleet", &default_der_fleet, py::arg("net"), py::arg("penetration") = 0.9,
          py::arg("rating_factor") = 1.1);
    m.def("der_fleet_from_json", &der_fleet_from_json, py::arg("net"), py::arg("json_text"));

    py::class_<ScenarioHour>(m, "ScenarioHour")
        .def(py::init<>())
        .def_readwrite("hour", &ScenarioHour::hour)
        .def_readwrite("p_hat_kw", &ScenarioHour::p_hat_kw)
        .def_readwrite("forecast_kw", &ScenarioHour::forecast_kw)
        .def_readwrite("load_mult", &ScenarioHour::load_mult)
        .def_readwrite("probability", &ScenarioHour::probability);

    py::class_<FlexibilityRegion>(m, "FlexibilityRegion")
        .def_readonly("hour", &FlexibilityRegion::hour)
        .def_readonly("probability", &FlexibilityRegion::probability)
        .def_readonly("feasible", &FlexibilityRegion::feasible)
        .def_readonly("status", &FlexibilityRegion::status)
        .def_readonly("q_sub_max_kvar", &FlexibilityRegion::q_sub_max_kvar)
        .def_readonly("q_sub_min_kvar", &FlexibilityRegion::q_sub_min_kvar)
        .def_readonly("dispatch_max_kvar", &FlexibilityRegion::dispatch_max_kvar)
        .def_readonly("dispatch_min_kvar", &FlexibilityRegion::dispatch_min_kvar)
        .def_readonly("infeasibility_note", &FlexibilityRegion::infeasibility_note);

    m.def(
        "compute_fr",
        [](const NetworkModel& net, const LinearSensitivity& sens, const ScenarioHour& sc,
           const std::vector<DerSpec>& ders, const std::vector<QBounds>& bounds, double v_lo,
           double v_hi) {
            FrOptions opts;
            opts.v_lo = v_lo;
            opts.v_hi = v_hi;
            return compute_fr(net, sens, sc, ders, bounds, opts);
        },
        py::arg("net"), py::arg("sens"), py::arg("scenario"), py::arg("ders"), py::arg("bounds"),
        py::arg("v_lo") = 0.95, py::arg("v_hi") = 1.05);

    py::class_<DayProfiles>(m, "DayProfiles")
        .def(py::init<>())
        .def_readwrite("load_mult", &DayProfiles::load_mult)
        .def_readwrite("solar_forecast_norm", &DayProfiles::solar_forecast_norm);

    m.def("read_profiles_csv", &read_profiles_csv, py::arg("path"));

    py::class_<SweepResult>(m, "SweepResult")
        .def_readonly("regions", &SweepResult::regions)
        .def_readonly("scenarios", &SweepResult::scenarios)
        .def_readonly("q_base_kvar", &SweepResult::q_base_kvar);

    m.def(
        "sweep",
        [](const NetworkModel& net, const ErrorModel& model, const DayProfiles& profiles,
           const std::vector<DerSpec>& ders, const std::vector<double>& p_levels, double v_lo,
           double v_hi, int threads) {
            SweepOptions opts;
            opts.fr.v_lo = v_lo;
            opts.fr.v_hi = v_hi;
            opts.threads = threads;
            return sweep(net, model, profiles, ders, p_levels, opts);
        },
        py::arg("net"), py::arg("model"), py::arg("profiles"), py::arg("ders"),
        py::arg("p_levels"), py::arg("v_lo") = 0.95, py::arg("v_hi") = 1.05,
        py::arg("threads") = 1);

    py::class_<McReport>(m, "McReport")
        .def_readonly("hour", &McReport::hour)
        .def_readonly("probability", &McReport::probability)
        .def_readonly("n", &McReport::n)
        .def_readonly("seed", &McReport::seed)
        .def_readonly("hardware_violation_rate", &McReport::hardware_violation_rate)
        .def_readonly("per_der_max_rate", &McReport::per_der_max_rate)
        .def_readonly("voltage_violation_rate", &McReport::voltage_violation_rate)
        .def_readonly("indeterminate", &McReport::indeterminate)
        .def_readonly("ci_halfwidth", &McReport::ci_halfwidth)
        .def_readonly("passed", &McReport::pass);

    m.def(
        "validate_fr",
        [](const FlexibilityRegion& fr, const NetworkModel& net, const ErrorModel& model,
           const std::vector<double>& forecasts_kw, const std::vector<DerSpec>& ders,
           std::size_t n_samples, std::uint64_t seed, double alpha, bool check_voltages,
           const std::string& correlation, double load_mult) {
            McConfig cfg;
            cfg.n_samples = n_samples;
            cfg.seed = seed;
            cfg.alpha = alpha;
            cfg.check_voltages = check_voltages;
            if (correlation == "independent")
                cfg.correlation = McConfig::Correlation::independent;
            else if (correlation != "shared")
                throw value_error("correlation must be 'shared' or 'independent'");
            return validate_fr(fr, net, model, forecasts_kw, ders, cfg, load_mult);
        },
        py::arg("fr"), py::arg("net"), py::arg("model"), py::arg("forecasts_kw"), py::arg("ders"),
        py::arg("n_samples") = 10000, py::arg("seed") = 1, py::arg("alpha") = 0.024,
        py::arg("check_voltages") = false, py::arg("correlation") = "shared",
        py::arg("load_mult") = 1.0);
}
