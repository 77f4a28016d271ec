#include "varcap/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace varcap {

using nlohmann::json;

std::string format_sig6(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string fnv1a64_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string hash_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw parse_error("cannot open " + path.string() + " for hashing");
    std::ostringstream ss;
    ss << in.rdbuf();
    return fnv1a64_hex(ss.str());
}

void RunManifest::add_input(const std::string& label, const std::filesystem::path& path) {
    inputs[label] = path.string();
    input_hashes[label] = hash_file(path);
}

std::string RunManifest::to_json() const {
    json j;
    j["tool"] = "varcap";
    j["version"] = tool_version;
    j["command"] = command;
    j["inputs"] = json::object();
    for (const auto& [k, v] : inputs)
        j["inputs"][k] = {{"path", v}, {"fnv1a64", input_hashes.at(k)}};
    j["parameters"] = json::object();
    for (const auto& [k, v] : parameters) j["parameters"][k] = v;
    if (!q_base_kvar.empty()) j["q_base_kvar"] = q_base_kvar;
    return j.dump(2) + "\n";
}

DayProfiles read_profiles_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw parse_error("cannot open profiles CSV " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw parse_error("empty profiles CSV");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "hour,load_mult,solar_forecast_norm")
        throw parse_error("unexpected profiles CSV header: " + line);
    DayProfiles p;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string f0, f1, f2;
        if (!std::getline(ss, f0, ',') || !std::getline(ss, f1, ',') || !std::getline(ss, f2, ','))
            throw parse_error("bad profiles row at line " + std::to_string(lineno));
        try {
            const int hour = std::stoi(f0);
            if (hour != static_cast<int>(p.load_mult.size()))
                throw parse_error("profiles hours must run 0..23 in order (line " +
                                  std::to_string(lineno) + ")");
            p.load_mult.push_back(std::stod(f1));
            p.solar_forecast_norm.push_back(std::stod(f2));
        } catch (const parse_error&) {
            throw;
        } catch (const std::exception&) {
            throw parse_error("bad profiles row at line " + std::to_string(lineno));
        }
        if (p.load_mult.back() < 0 || p.solar_forecast_norm.back() < 0 ||
            p.solar_forecast_norm.back() > 1)
            throw value_error("profiles values out of range at line " + std::to_string(lineno));
    }
    if (p.load_mult.size() != 24) throw parse_error("profiles CSV must have 24 rows");
    return p;
}

void write_fr_csv(const std::filesystem::path& path, const SweepResult& result) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw value_error("cannot write " + path.string());
    out << "hour,probability,q_sub_max_kvar,q_sub_min_kvar,status\n";
    for (const FlexibilityRegion& fr : result.regions) {
        out << fr.hour << ',' << format_sig6(fr.probability) << ',';
        if (fr.feasible)
            out << format_sig6(fr.q_sub_max_kvar) << ',' << format_sig6(fr.q_sub_min_kvar);
        else
            out << "nan,nan";
        out << ',' << fr.status << '\n';
    }
}

std::vector<FrCsvRow> read_fr_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw parse_error("cannot open flexibility CSV " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw parse_error("empty flexibility CSV");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "hour,probability,q_sub_max_kvar,q_sub_min_kvar,status")
        throw parse_error("unexpected flexibility CSV header: " + line);
    std::vector<FrCsvRow> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string f[5];
        for (int i = 0; i < 5; ++i)
            if (!std::getline(ss, f[i], ','))
                throw parse_error("bad flexibility row at line " + std::to_string(lineno));
        FrCsvRow r;
        try {
            r.hour = std::stoi(f[0]);
            r.probability = std::stod(f[1]);
            r.q_sub_max_kvar = f[2] == "nan" ? std::nan("") : std::stod(f[2]);
            r.q_sub_min_kvar = f[3] == "nan" ? std::nan("") : std::stod(f[3]);
            r.status = f[4];
        } catch (const std::exception&) {
            throw parse_error("bad flexibility row at line " + std::to_string(lineno));
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

std::string lp_active_str(const LpActive& a) {
    const char* kind = nullptr;
    switch (a.kind) {
        case LpActive::Kind::var_lower: kind = "q_lo"; break;
        case LpActive::Kind::var_upper: kind = "q_hi"; break;
        case LpActive::Kind::row_lower: kind = "v_lo"; break;
        case LpActive::Kind::row_upper: kind = "v_hi"; break;
    }
    return std::string(kind) + "[" + std::to_string(a.index) + "]";
}

namespace {

json der_to_json(const DerSpec& d) {
    return {{"bus", d.bus},
            {"phase", std::string(1, phase_letter(d.phase))},
            {"s_rating_kva", d.s_rating_kva},
            {"p_peak_kw", d.p_peak_kw},
            {"capacity_kw", d.capacity_kw}};
}

json active_to_json(const std::vector<LpActive>& active) {
    json arr = json::array();
    for (const LpActive& a : active) arr.push_back(lp_active_str(a));
    return arr;
}

}  // namespace

std::string dispatch_json(const SweepResult& result, const std::vector<DerSpec>& ders,
                          const RunManifest& manifest) {
    json j;
    j["manifest"] = json::parse(manifest.to_json());
    j["der"] = json::array();
    for (const DerSpec& d : ders) j["der"].push_back(der_to_json(d));
    j["regions"] = json::array();
    for (std::size_t i = 0; i < result.regions.size(); ++i) {
        const FlexibilityRegion& fr = result.regions[i];
        const ScenarioHour& sc = result.scenarios[i];
        json r;
        r["hour"] = fr.hour;
        r["probability"] = fr.probability;
        r["status"] = fr.status;
        r["load_mult"] = sc.load_mult;
        r["p_hat_kw"] = sc.p_hat_kw;
        r["forecast_kw"] = sc.forecast_kw;
        if (fr.feasible) {
            r["q_sub_max_kvar"] = fr.q_sub_max_kvar;
            r["q_sub_min_kvar"] = fr.q_sub_min_kvar;
            r["dispatch_max_kvar"] = fr.dispatch_max_kvar;
            r["dispatch_min_kvar"] = fr.dispatch_min_kvar;
            r["binding_max"] = active_to_json(fr.binding_max);
            r["binding_min"] = active_to_json(fr.binding_min);
        } else {
            r["note"] = fr.infeasibility_note;
        }
        j["regions"].push_back(std::move(r));
    }
    return j.dump(2) + "\n";
}

DispatchFile read_dispatch_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw parse_error("cannot open dispatch JSON " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw parse_error(std::string("dispatch JSON: ") + e.what());
    }
    DispatchFile f;
    try {
        for (const auto& jd : j.at("der")) {
            DerSpec d;
            d.bus = jd.at("bus").get<std::string>();
            const std::string ph = jd.at("phase").get<std::string>();
            if (ph.size() != 1) throw parse_error("bad DER phase in dispatch JSON");
            d.phase = static_cast<Phase>(PhaseMask::parse(ph).has(Phase::a)   ? 0
                                         : PhaseMask::parse(ph).has(Phase::b) ? 1
                                                                              : 2);
            d.s_rating_kva = jd.at("s_rating_kva").get<double>();
            d.p_peak_kw = jd.at("p_peak_kw").get<double>();
            d.capacity_kw = jd.at("capacity_kw").get<double>();
            f.ders.push_back(std::move(d));
        }
        for (const auto& jr : j.at("regions")) {
            FlexibilityRegion fr;
            ScenarioHour sc;
            fr.hour = sc.hour = jr.at("hour").get<int>();
            fr.probability = sc.probability = jr.at("probability").get<double>();
            fr.status = jr.at("status").get<std::string>();
            sc.load_mult = jr.at("load_mult").get<double>();
            sc.p_hat_kw = jr.at("p_hat_kw").get<std::vector<double>>();
            sc.forecast_kw = jr.at("forecast_kw").get<std::vector<double>>();
            fr.feasible = fr.status == "optimal";
            if (fr.feasible) {
                fr.q_sub_max_kvar = jr.at("q_sub_max_kvar").get<double>();
                fr.q_sub_min_kvar = jr.at("q_sub_min_kvar").get<double>();
                fr.dispatch_max_kvar = jr.at("dispatch_max_kvar").get<std::vector<double>>();
                fr.dispatch_min_kvar = jr.at("dispatch_min_kvar").get<std::vector<double>>();
            }
            f.regions.push_back(std::move(fr));
            f.scenarios.push_back(std::move(sc));
        }
    } catch (const json::exception& e) {
        throw parse_error(std::string("dispatch JSON: ") + e.what());
    }
    return f;
}

std::string mc_report_json(const std::vector<McReport>& reports, const RunManifest& manifest) {
    json j;
    j["manifest"] = json::parse(manifest.to_json());
    j["reports"] = json::array();
    for (const McReport& r : reports) {
        j["reports"].push_back({{"hour", r.hour},
                                {"probability", r.probability},
                                {"n", r.n},
                                {"seed", r.seed},
                                {"hardware_violation_rate", r.hardware_violation_rate},
                                {"per_der_max_rate", r.per_der_max_rate},
                                {"voltage_violation_rate", r.voltage_violation_rate},
                                {"indeterminate", r.indeterminate},
                                {"ci_halfwidth", r.ci_halfwidth},
                                {"pass", r.pass}});
    }
    return j.dump(2) + "\n";
}

}  // namespace varcap
