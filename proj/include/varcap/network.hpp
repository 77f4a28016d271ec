#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "varcap/errors.hpp"

namespace varcap {

enum class Phase : int { a = 0, b = 1, c = 2 };

inline char phase_letter(Phase p) { return "abc"[static_cast<int>(p)]; }

/// Set of phases present at a bus or on a line, encoded as 3 bits.
class PhaseMask {
  public:
    PhaseMask() = default;
    explicit PhaseMask(std::uint8_t bits) : bits_(bits & 7u) {}

    /// Parses strings like "abc", "ac", "b". Order-insensitive, duplicates rejected.
    static PhaseMask parse(const std::string& s);

    bool has(Phase p) const { return bits_ & (1u << static_cast<int>(p)); }
    bool has(int p) const { return bits_ & (1u << p); }
    void add(Phase p) { bits_ |= (1u << static_cast<int>(p)); }
    int count() const { return (bits_ & 1) + ((bits_ >> 1) & 1) + ((bits_ >> 2) & 1); }
    bool subset_of(PhaseMask other) const { return (bits_ & ~other.bits_) == 0; }
    bool empty() const { return bits_ == 0; }
    std::uint8_t bits() const { return bits_; }
    std::string str() const;

    bool operator==(const PhaseMask&) const = default;

  private:
    std::uint8_t bits_ = 0;
};

struct Bus {
    std::string id;
    PhaseMask phases;
    std::array<double, 3> load_kw{};    // per phase, entries valid only for present phases
    std::array<double, 3> load_kvar{};
    std::array<double, 3> a0{1.0, 1.0, 1.0};  // constant-power load fraction
    std::array<double, 3> a1{0.0, 0.0, 0.0};  // voltage-squared-proportional fraction
};

struct Line {
    std::string from, to;  // from = upstream (slack side) after validation
    std::array<std::array<std::complex<double>, 3>, 3> z_ohm{};  // zero for absent phases
    PhaseMask phases;  // phases carried = phases of the downstream bus
};

/// One (bus, phase) coordinate in the global node-phase ordering.
struct NodePhase {
    std::size_t bus;  // index into NetworkModel::buses
    Phase phase;
};

/// Radial 3-phase unbalanced feeder, validated on construction.
///
/// Per-unit conventions: s_base_kva is the 3-phase total base, so per-phase
/// quantities normalize on s_base_kva/3; v_base_kv is line-to-neutral, and
/// z_base_ohm() = 1000*v_base_kv^2/(s_base_kva/3). v0_sq holds the squared
/// slack voltage magnitudes (the JSON file carries plain magnitudes).
struct NetworkModel {
    double s_base_kva = 0.0;
    double v_base_kv = 0.0;
    std::array<double, 3> v0_sq{1.0, 1.0, 1.0};
    std::vector<Bus> buses;     // slack included
    std::vector<Line> lines;    // oriented upstream -> downstream, BFS order from slack
    std::size_t slack = 0;      // index into buses

    // Derived topology (filled by validation)
    std::vector<std::size_t> parent_line;      // per bus; npos for slack
    std::vector<std::vector<std::size_t>> child_lines;  // per bus
    std::vector<std::size_t> bus_order;        // BFS order from slack (slack first)
    std::vector<NodePhase> node_phases;        // non-slack (bus, phase), bus file order, phases a<b<c
    std::vector<std::array<std::ptrdiff_t, 3>> np_index;  // per bus: node-phase index or -1

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    double s_phase_kva() const { return s_base_kva / 3.0; }
    double z_base_ohm() const { return 1000.0 * v_base_kv * v_base_kv / s_phase_kva(); }

    std::size_t n_node_phases() const { return node_phases.size(); }
    std::size_t bus_index(const std::string& id) const;
    /// Global node-phase index for a non-slack (bus, phase); throws if absent.
    std::size_t node_phase_index(const std::string& bus_id, Phase p) const;
};

/// Parses and validates a feeder JSON file (schema in README).
NetworkModel load_network(const std::filesystem::path& path);

/// Same, from a JSON string already in memory.
NetworkModel parse_network(const std::string& json_text);

/// Copy with all nameplate loads multiplied by `mult`.
NetworkModel scale_loads(const NetworkModel& net, double mult);

}  // namespace varcap
