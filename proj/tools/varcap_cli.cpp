// varcap: day-ahead robust VAR capability curves for DER-rich feeders.
//
// Subcommands: fit-errors, sweep, validate, pf, plot. All runs are
// reproducible from the manifest written next to each output.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "varcap/io.hpp"
#include "varcap/montecarlo.hpp"
#include "varcap/powerflow.hpp"
#include "varcap/svg.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitParse = 2;
constexpr int kExitInsufficientData = 3;
constexpr int kExitSolver = 4;
constexpr int kExitValidationFailed = 5;

int env_threads() {
    const char* v = std::getenv("VARCAP_THREADS");
    if (!v) return 1;
    const int n = std::atoi(v);
    return n > 0 ? n : 1;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw varcap::value_error("cannot write " + path.string());
    out << text;
}

int cmd_fit_errors(const std::string& csv, int bins, std::size_t min_count,
                   const std::string& out_json) {
    using namespace varcap;
    const auto records = read_forecast_csv(csv);
    const auto pairs = clean_and_normalize(records);
    const ErrorModel model = fit_error_model(pairs, bins, min_count);

    std::printf("%-10s %10s %10s %8s   %s\n", "bin_center", "mu", "sigma", "count", "range");
    for (const ErrorBin& b : model.bins)
        std::printf("%-10s %10s %10s %8zu   (%s, %s]\n",
                    format_sig6(0.5 * (b.lo + b.hi)).c_str(), format_sig6(b.mu).c_str(),
                    format_sig6(b.sigma).c_str(), b.count, format_sig6(b.lo).c_str(),
                    format_sig6(b.hi).c_str());

    save_error_model(model, out_json);
    RunManifest m;
    m.command = "fit-errors";
    m.add_input("historical_csv", csv);
    m.parameters["n_bins"] = std::to_string(bins);
    m.parameters["min_count"] = std::to_string(min_count);
    write_text(out_json + ".manifest.json", m.to_json());
    return kExitOk;
}

int cmd_sweep(const std::string& network, const std::string& profiles_csv,
              const std::string& error_model_json, const std::string& der_config,
              const std::vector<double>& levels, const std::string& out_csv,
              const std::string& out_svg, const std::string& out_dispatch) {
    using namespace varcap;
    const NetworkModel net = load_network(network);
    const DayProfiles profiles = read_profiles_csv(profiles_csv);
    const ErrorModel model = load_error_model(error_model_json);
    std::vector<DerSpec> ders;
    if (der_config.empty()) {
        ders = default_der_fleet(net);
    } else {
        std::ifstream in(der_config);
        if (!in) throw parse_error("cannot open DER config " + der_config);
        std::ostringstream ss;
        ss << in.rdbuf();
        ders = der_fleet_from_json(net, ss.str());
    }

    SweepOptions opts;
    opts.threads = env_threads();
    const SweepResult result = sweep(net, model, profiles, ders, levels, opts);

    RunManifest m;
    m.command = "sweep";
    m.add_input("network", network);
    m.add_input("profiles", profiles_csv);
    m.add_input("error_model", error_model_json);
    if (!der_config.empty()) m.add_input("der_config", der_config);
    {
        std::ostringstream ls;
        for (std::size_t i = 0; i < levels.size(); ++i)
            ls << (i ? "," : "") << format_sig6(levels[i]);
        m.parameters["levels"] = ls.str();
    }
    m.parameters["v_lo"] = format_sig6(opts.fr.v_lo);
    m.parameters["v_hi"] = format_sig6(opts.fr.v_hi);
    m.q_base_kvar = result.q_base_kvar;

    write_fr_csv(out_csv, result);
    write_text(out_csv + ".manifest.json", m.to_json());
    if (!out_dispatch.empty()) write_text(out_dispatch, dispatch_json(result, ders, m));
    if (!out_svg.empty()) write_fr_svg(out_svg, read_fr_csv(out_csv), result.q_base_kvar);

    int rc = kExitOk;
    for (const FlexibilityRegion& fr : result.regions) {
        if (fr.status == "infeasible")
            std::cerr << "warning: hour " << fr.hour << " P=" << format_sig6(fr.probability)
                      << " infeasible: " << fr.infeasibility_note << "\n";
        if (fr.status == "iteration_limit") rc = kExitSolver;
    }
    return rc;
}

int cmd_validate(const std::string& dispatch, const std::string& network,
                 const std::string& error_model_json, std::size_t n, std::uint64_t seed,
                 double alpha, bool check_voltages, const std::string& correlation,
                 const std::string& out_json) {
    using namespace varcap;
    const NetworkModel net = load_network(network);
    const ErrorModel model = load_error_model(error_model_json);
    const DispatchFile file = read_dispatch_json(dispatch);

    McConfig cfg;
    cfg.n_samples = n;
    cfg.seed = seed;
    cfg.alpha = alpha;
    cfg.check_voltages = check_voltages;
    cfg.threads = env_threads();
    if (correlation == "independent")
        cfg.correlation = McConfig::Correlation::independent;
    else if (correlation != "shared")
        throw value_error("correlation must be 'shared' or 'independent'");

    std::vector<McReport> reports;
    bool all_pass = true;
    bool any = false;
    for (std::size_t i = 0; i < file.regions.size(); ++i) {
        const FlexibilityRegion& fr = file.regions[i];
        if (!fr.feasible) continue;
        if (std::abs((1.0 - fr.probability) - alpha) > 1e-9) continue;
        any = true;
        const McReport rep = validate_fr(fr, net, model, file.scenarios[i].forecast_kw, file.ders,
                                         cfg, file.scenarios[i].load_mult);
        std::printf("hour %2d P=%s rate=%s per_der=%s ci=%s %s\n", rep.hour,
                    format_sig6(rep.probability).c_str(),
                    format_sig6(rep.hardware_violation_rate).c_str(),
                    format_sig6(rep.per_der_max_rate).c_str(),
                    format_sig6(rep.ci_halfwidth).c_str(), rep.pass ? "pass" : "FAIL");
        all_pass = all_pass && rep.pass;
        reports.push_back(rep);
    }
    if (!any)
        throw value_error("no feasible region in the dispatch file was built at P = 1 - alpha = " +
                          format_sig6(1.0 - alpha));
    if (!out_json.empty()) {
        RunManifest m;
        m.command = "validate";
        m.add_input("dispatch", dispatch);
        m.add_input("network", network);
        m.add_input("error_model", error_model_json);
        m.parameters["n"] = std::to_string(n);
        m.parameters["seed"] = std::to_string(seed);
        m.parameters["alpha"] = format_sig6(alpha);
        m.parameters["correlation"] = correlation;
        write_text(out_json, mc_report_json(reports, m));
    }
    return all_pass ? kExitOk : kExitValidationFailed;
}

int cmd_pf(const std::string& network, const std::string& injections, double load_mult,
           double tol, int max_iter, const std::string& out_json) {
    using namespace varcap;
    using nlohmann::json;
    NetworkModel net = load_network(network);
    if (load_mult != 1.0) net = scale_loads(net, load_mult);

    std::vector<double> p_gen(net.n_node_phases(), 0.0), q_gen(net.n_node_phases(), 0.0);
    if (!injections.empty()) {
        std::ifstream in(injections);
        if (!in) throw parse_error("cannot open injections " + injections);
        json j;
        try {
            in >> j;
            auto apply = [&](const char* key, std::vector<double>& tgt, const char* field) {
                if (!j.contains(key)) return;
                for (const auto& e : j.at(key)) {
                    const std::size_t idx = net.node_phase_index(
                        e.at("bus").get<std::string>(),
                        static_cast<Phase>(
                            PhaseMask::parse(e.at("phase").get<std::string>()).has(Phase::a) ? 0
                            : PhaseMask::parse(e.at("phase").get<std::string>()).has(Phase::b)
                                ? 1
                                : 2));
                    tgt[idx] += e.at(field).get<double>() / net.s_phase_kva();
                }
            };
            apply("p_gen_kw", p_gen, "kw");
            apply("q_gen_kvar", q_gen, "kvar");
        } catch (const json::exception& e) {
            throw parse_error(std::string("injections JSON: ") + e.what());
        }
    }

    const PfSolution sol = solve_pf(net, p_gen, q_gen, tol, max_iter);
    json j;
    j["converged"] = sol.converged;
    j["iterations"] = sol.iterations;
    j["max_mismatch_pu"] = sol.max_mismatch;
    j["slack_power_pu"] = {sol.slack_power.real(), sol.slack_power.imag()};
    j["total_loss_pu"] = {sol.total_loss.real(), sol.total_loss.imag()};
    j["voltages"] = json::array();
    for (std::size_t i = 0; i < sol.v.size(); ++i) {
        const auto [b, ph] = net.node_phases[i];
        j["voltages"].push_back({{"bus", net.buses[b].id},
                                 {"phase", std::string(1, phase_letter(ph))},
                                 {"mag_pu", std::abs(sol.v[i])},
                                 {"angle_deg", std::arg(sol.v[i]) * 180.0 / 3.14159265358979323846}});
    }
    const std::string text = j.dump(2) + "\n";
    if (out_json.empty())
        std::cout << text;
    else
        write_text(out_json, text);
    return sol.converged ? kExitOk : kExitSolver;
}

int cmd_plot(const std::string& csv, const std::string& manifest, const std::string& out_svg) {
    using namespace varcap;
    const auto rows = read_fr_csv(csv);
    std::vector<double> base;
    if (!manifest.empty()) {
        std::ifstream in(manifest);
        if (!in) throw parse_error("cannot open manifest " + manifest);
        nlohmann::json j;
        try {
            in >> j;
            if (j.contains("q_base_kvar")) base = j.at("q_base_kvar").get<std::vector<double>>();
        } catch (const nlohmann::json::exception& e) {
            throw parse_error(std::string("manifest JSON: ") + e.what());
        }
    }
    write_fr_svg(out_svg, rows, base);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Robust aggregated VAR capability curves for unbalanced feeders"};
    app.require_subcommand(1);
    app.set_version_flag("--version", varcap::tool_version);
    // Precedence: command-line flags > config file > built-in defaults.
    app.set_config("--config", "", "Read options from an INI config file");

    // fit-errors
    std::string fe_csv, fe_out = "error_model.json";
    int fe_bins = 12;
    std::size_t fe_min_count = 20;
    auto* fit = app.add_subcommand("fit-errors", "Fit the solar forecast error model");
    fit->add_option("csv", fe_csv, "historical CSV (timestamp,forecast_kw,actual_kw,capacity_kw)")
        ->required();
    fit->add_option("--bins", fe_bins, "number of equal-width forecast bins");
    fit->add_option("--min-count", fe_min_count, "minimum samples per bin");
    fit->add_option("-o,--out", fe_out, "output error-model JSON");

    // sweep
    std::string sw_net, sw_profiles, sw_model, sw_der, sw_out = "fr.csv", sw_svg, sw_dispatch;
    std::vector<double> sw_levels{0.5, 0.84, 0.976};
    auto* sw = app.add_subcommand("sweep", "24-hour flexibility-region sweep");
    sw->add_option("--network", sw_net, "feeder JSON")->required();
    sw->add_option("--profiles", sw_profiles, "24-hour profiles CSV")->required();
    sw->add_option("--error-model", sw_model, "error-model JSON")->required();
    sw->add_option("--der-config", sw_der, "DER config JSON (default: auto fleet)");
    sw->add_option("--levels", sw_levels, "probability levels")->delimiter(',');
    sw->add_option("-o,--out", sw_out, "output CSV");
    sw->add_option("--svg", sw_svg, "also render the band plot SVG");
    sw->add_option("--dispatch", sw_dispatch, "also write per-(hour,P) dispatch JSON");

    // validate
    std::string va_dispatch, va_net, va_model, va_out, va_corr = "shared";
    std::size_t va_n = 10000;
    std::uint64_t va_seed = 1;
    double va_alpha = 0.024;
    bool va_voltages = false;
    auto* va = app.add_subcommand("validate", "Monte Carlo chance-constraint check");
    va->add_option("--dispatch", va_dispatch, "dispatch JSON from sweep")->required();
    va->add_option("--network", va_net, "feeder JSON")->required();
    va->add_option("--error-model", va_model, "error-model JSON")->required();
    va->add_option("-n,--samples", va_n, "Monte Carlo samples");
    va->add_option("--seed", va_seed, "RNG seed");
    va->add_option("--alpha", va_alpha, "risk factor (validates regions built at P = 1-alpha)");
    va->add_flag("--check-voltages", va_voltages, "re-solve the nonlinear power flow per sample");
    va->add_option("--correlation", va_corr, "'shared' (one profile error) or 'independent'");
    va->add_option("-o,--out", va_out, "write the Monte Carlo report JSON");

    // pf
    std::string pf_net, pf_inj, pf_out;
    double pf_mult = 1.0, pf_tol = 1e-8;
    int pf_iter = 100;
    auto* pf = app.add_subcommand("pf", "Nonlinear power flow on one injection set");
    pf->add_option("--network", pf_net, "feeder JSON")->required();
    pf->add_option("--injections", pf_inj, "injections JSON (p_gen_kw / q_gen_kvar lists)");
    pf->add_option("--load-mult", pf_mult, "scale nameplate loads");
    pf->add_option("--tol", pf_tol, "power mismatch tolerance (p.u.)");
    pf->add_option("--max-iter", pf_iter, "sweep iteration limit");
    pf->add_option("-o,--out", pf_out, "output JSON (default stdout)");

    // plot
    std::string pl_csv, pl_manifest, pl_out = "fr.svg";
    auto* pl = app.add_subcommand("plot", "Re-render the band SVG from a sweep CSV");
    pl->add_option("csv", pl_csv, "flexibility CSV")->required();
    pl->add_option("--manifest", pl_manifest, "sweep manifest (for the base-load line)");
    pl->add_option("-o,--out", pl_out, "output SVG");

    CLI11_PARSE(app, argc, argv);

    try {
        if (fit->parsed()) return cmd_fit_errors(fe_csv, fe_bins, fe_min_count, fe_out);
        if (sw->parsed())
            return cmd_sweep(sw_net, sw_profiles, sw_model, sw_der, sw_levels, sw_out, sw_svg,
                             sw_dispatch);
        if (va->parsed())
            return cmd_validate(va_dispatch, va_net, va_model, va_n, va_seed, va_alpha,
                                va_voltages, va_corr, va_out);
        if (pf->parsed()) return cmd_pf(pf_net, pf_inj, pf_mult, pf_tol, pf_iter, pf_out);
        if (pl->parsed()) return cmd_plot(pl_csv, pl_manifest, pl_out);
    } catch (const varcap::insufficient_data_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInsufficientData;
    } catch (const varcap::convergence_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSolver;
    } catch (const varcap::error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitParse;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}
