#include "varcap/network.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

namespace varcap {

using nlohmann::json;

PhaseMask PhaseMask::parse(const std::string& s) {
    PhaseMask m;
    for (char c : s) {
        Phase p;
        switch (c) {
            case 'a': p = Phase::a; break;
            case 'b': p = Phase::b; break;
            case 'c': p = Phase::c; break;
            default:
                throw parse_error("invalid phase character '" + std::string(1, c) + "'");
        }
        if (m.has(p)) throw parse_error("duplicate phase in \"" + s + "\"");
        m.add(p);
    }
    return m;
}

std::string PhaseMask::str() const {
    std::string s;
    for (int p = 0; p < 3; ++p)
        if (has(p)) s.push_back("abc"[p]);
    return s;
}

std::size_t NetworkModel::bus_index(const std::string& id) const {
    for (std::size_t i = 0; i < buses.size(); ++i)
        if (buses[i].id == id) return i;
    throw value_error("unknown bus id \"" + id + "\"");
}

std::size_t NetworkModel::node_phase_index(const std::string& bus_id, Phase p) const {
    const std::size_t b = bus_index(bus_id);
    const auto idx = np_index[b][static_cast<int>(p)];
    if (idx < 0)
        throw value_error("bus \"" + bus_id + "\" has no phase " + std::string(1, phase_letter(p)) +
                          " or is the slack");
    return static_cast<std::size_t>(idx);
}

namespace {

std::array<double, 3> expand_per_phase(const json& arr, PhaseMask phases, const char* what,
                                       const std::string& bus_id) {
    if (!arr.is_array() || arr.size() != static_cast<std::size_t>(phases.count()))
        throw parse_error(std::string(what) + " for bus \"" + bus_id +
                          "\" must list one value per phase (" + std::to_string(phases.count()) + ")");
    std::array<double, 3> out{};
    std::size_t k = 0;
    for (int p = 0; p < 3; ++p)
        if (phases.has(p)) out[p] = arr[k++].get<double>();
    return out;
}

std::array<std::array<double, 3>, 3> parse_3x3(const json& m, const char* what,
                                               const std::string& where) {
    if (!m.is_array() || m.size() != 3)
        throw parse_error(std::string(what) + " for line " + where + " must be a 3x3 matrix");
    std::array<std::array<double, 3>, 3> out{};
    for (int i = 0; i < 3; ++i) {
        if (!m[i].is_array() || m[i].size() != 3)
            throw parse_error(std::string(what) + " for line " + where + " must be a 3x3 matrix");
        for (int j = 0; j < 3; ++j) out[i][j] = m[i][j].get<double>();
    }
    return out;
}

void validate_and_derive(NetworkModel& net) {
    const std::size_t nb = net.buses.size();
    if (nb == 0) throw parse_error("network has no buses");
    if (net.s_base_kva <= 0 || net.v_base_kv <= 0)
        throw value_error("power and voltage bases must be positive");

    std::unordered_map<std::string, std::size_t> by_id;
    for (std::size_t i = 0; i < nb; ++i) {
        const Bus& b = net.buses[i];
        if (b.phases.empty()) throw value_error("bus \"" + b.id + "\" lists no phases");
        if (!by_id.emplace(b.id, i).second)
            throw parse_error("duplicate bus id \"" + b.id + "\"");
        for (int p = 0; p < 3; ++p) {
            if (!b.phases.has(p)) continue;
            if (b.a0[p] < 0 || b.a1[p] < 0)
                throw value_error("negative load composition at bus \"" + b.id + "\"");
            if (std::fabs(b.a0[p] + b.a1[p] - 1.0) > 1e-9)
                throw value_error("a0+a1 must equal 1 at bus \"" + b.id + "\" phase " +
                                  std::string(1, "abc"[p]));
        }
    }

    const Bus& slack = net.buses[net.slack];
    for (int p = 0; p < 3; ++p) {
        if (slack.phases.has(p) && (slack.load_kw[p] != 0.0 || slack.load_kvar[p] != 0.0))
            throw value_error("slack bus must carry no load");
        if (slack.phases.has(p) && net.v0_sq[p] <= 0)
            throw value_error("slack voltage must be positive on present phases");
    }

    if (net.lines.size() != nb - 1)
        throw topology_error("expected " + std::to_string(nb - 1) + " lines for " +
                             std::to_string(nb) + " buses, got " + std::to_string(net.lines.size()));

    // Adjacency, then BFS from the slack; orient every line upstream->downstream.
    std::vector<std::vector<std::size_t>> adj(nb);
    for (std::size_t l = 0; l < net.lines.size(); ++l) {
        const std::size_t f = net.bus_index(net.lines[l].from);
        const std::size_t t = net.bus_index(net.lines[l].to);
        if (f == t) throw topology_error("line from bus \"" + net.lines[l].from + "\" to itself");
        adj[f].push_back(l);
        adj[t].push_back(l);
    }

    net.parent_line.assign(nb, NetworkModel::npos);
    net.child_lines.assign(nb, {});
    net.bus_order.clear();
    std::vector<bool> seen(nb, false);
    std::deque<std::size_t> queue{net.slack};
    seen[net.slack] = true;
    while (!queue.empty()) {
        const std::size_t u = queue.front();
        queue.pop_front();
        net.bus_order.push_back(u);
        for (std::size_t l : adj[u]) {
            if (l == net.parent_line[u]) continue;
            Line& line = net.lines[l];
            const std::size_t other = net.bus_index(line.from) == u ? net.bus_index(line.to)
                                                                    : net.bus_index(line.from);
            if (seen[other])
                throw topology_error("cycle detected through line \"" + line.from + "\"-\"" +
                                     line.to + "\"");
            if (net.bus_index(line.from) != u) std::swap(line.from, line.to);
            seen[other] = true;
            net.parent_line[other] = l;
            net.child_lines[u].push_back(l);
            queue.push_back(other);
        }
    }
    for (std::size_t i = 0; i < nb; ++i)
        if (!seen[i])
            throw topology_error("bus \"" + net.buses[i].id + "\" is not reachable from the slack");

    // Per-line phase and impedance checks, now that orientation is known.
    for (Line& line : net.lines) {
        const Bus& up = net.buses[net.bus_index(line.from)];
        const Bus& down = net.buses[net.bus_index(line.to)];
        if (!down.phases.subset_of(up.phases))
            throw topology_error("phases of bus \"" + down.id + "\" (" + down.phases.str() +
                                 ") exceed upstream bus \"" + up.id + "\" (" + up.phases.str() + ")");
        line.phases = down.phases;
        const std::string where = "\"" + line.from + "\"-\"" + line.to + "\"";
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                const auto z = line.z_ohm[i][j];
                const auto zt = line.z_ohm[j][i];
                if (std::abs(z - zt) > 1e-9 * std::max(1.0, std::abs(z)))
                    throw value_error("impedance block of line " + where + " is not symmetric");
                if (!(line.phases.has(i) && line.phases.has(j)) && z != 0.0)
                    throw value_error("impedance of line " + where +
                                      " has a nonzero entry for an absent phase");
            }
            if (line.phases.has(i) && line.z_ohm[i][i].real() < 0.0)
                throw value_error("negative resistance on line " + where);
        }
    }

    // Global node-phase ordering: non-slack buses in file order, phases a<b<c.
    net.node_phases.clear();
    net.np_index.assign(nb, {-1, -1, -1});
    for (std::size_t i = 0; i < nb; ++i) {
        if (i == net.slack) continue;
        for (int p = 0; p < 3; ++p) {
            if (!net.buses[i].phases.has(p)) continue;
            net.np_index[i][p] = static_cast<std::ptrdiff_t>(net.node_phases.size());
            net.node_phases.push_back({i, static_cast<Phase>(p)});
        }
    }
}

NetworkModel parse_network_json(const json& j) {
    NetworkModel net;
    try {
        net.s_base_kva = j.at("s_base_kva").get<double>();
        net.v_base_kv = j.at("v_base_kv").get<double>();
        const auto& v0 = j.at("v0_pu");
        if (!v0.is_array() || v0.size() != 3)
            throw parse_error("v0_pu must list 3 per-phase magnitudes");
        for (int p = 0; p < 3; ++p) {
            const double m = v0[p].get<double>();
            net.v0_sq[p] = m * m;
        }
        const std::string slack_id = j.at("slack").get<std::string>();
        for (const auto& jb : j.at("buses")) {
            Bus b;
            b.id = jb.at("id").get<std::string>();
            const std::string ph = jb.at("phases").get<std::string>();
            b.phases = PhaseMask::parse(ph);
            std::string canonical = b.phases.str();
            if (ph != canonical)
                throw parse_error("phases of bus \"" + b.id + "\" must be in abc order");
            if (jb.contains("load_kw"))
                b.load_kw = expand_per_phase(jb.at("load_kw"), b.phases, "load_kw", b.id);
            if (jb.contains("load_kvar"))
                b.load_kvar = expand_per_phase(jb.at("load_kvar"), b.phases, "load_kvar", b.id);
            std::array<double, 3> ones{1.0, 1.0, 1.0};
            b.a0 = jb.contains("a0") ? expand_per_phase(jb.at("a0"), b.phases, "a0", b.id) : ones;
            if (jb.contains("a1")) {
                b.a1 = expand_per_phase(jb.at("a1"), b.phases, "a1", b.id);
            } else if (jb.contains("a0")) {
                for (int p = 0; p < 3; ++p)
                    if (b.phases.has(p)) b.a1[p] = 1.0 - b.a0[p];
            }
            if (!jb.contains("a0") && !jb.contains("a1")) {
                b.a0 = ones;  // constant-power by default
                b.a1 = {0.0, 0.0, 0.0};
            }
            net.buses.push_back(std::move(b));
        }
        bool found = false;
        for (std::size_t i = 0; i < net.buses.size(); ++i) {
            if (net.buses[i].id == slack_id) {
                net.slack = i;
                found = true;
            }
        }
        if (!found) throw parse_error("slack bus \"" + slack_id + "\" not in bus list");
        for (const auto& jl : j.at("lines")) {
            Line line;
            line.from = jl.at("from").get<std::string>();
            line.to = jl.at("to").get<std::string>();
            const std::string where = "\"" + line.from + "\"-\"" + line.to + "\"";
            const auto r = parse_3x3(jl.at("r_ohm"), "r_ohm", where);
            const auto x = parse_3x3(jl.at("x_ohm"), "x_ohm", where);
            for (int i = 0; i < 3; ++i)
                for (int k = 0; k < 3; ++k) line.z_ohm[i][k] = {r[i][k], x[i][k]};
            net.lines.push_back(std::move(line));
        }
    } catch (const json::exception& e) {
        throw parse_error(std::string("network JSON: ") + e.what());
    }
    validate_and_derive(net);
    return net;
}

}  // namespace

NetworkModel parse_network(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw parse_error(std::string("network JSON: ") + e.what());
    }
    return parse_network_json(j);
}

NetworkModel load_network(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw parse_error("cannot open network file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_network(ss.str());
}

NetworkModel scale_loads(const NetworkModel& net, double mult) {
    if (mult < 0) throw value_error("load multiplier must be nonnegative");
    NetworkModel out = net;
    for (Bus& b : out.buses) {
        for (int p = 0; p < 3; ++p) {
            b.load_kw[p] *= mult;
            b.load_kvar[p] *= mult;
        }
    }
    return out;
}

}  // namespace varcap
