#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "varcap/montecarlo.hpp"
#include "varcap/opf.hpp"

namespace varcap {

inline constexpr const char* tool_version = "0.1.0";

/// Locale-independent formatting with 6 significant digits, used for every
/// number written to CSV/SVG outputs.
std::string format_sig6(double v);

/// FNV-1a 64-bit content hash, hex encoded; used in run manifests.
std::string fnv1a64_hex(const std::string& bytes);
std::string hash_file(const std::filesystem::path& path);

/// Reproducibility record written alongside every output. Carries no
/// timestamps so re-runs are byte-identical.
struct RunManifest {
    std::string command;
    std::map<std::string, std::string> inputs;       // label -> path
    std::map<std::string, std::string> input_hashes; // label -> fnv1a64
    std::map<std::string, std::string> parameters;   // stringified
    std::vector<double> q_base_kvar;                 // sweep only: per-hour base load VAR

    void add_input(const std::string& label, const std::filesystem::path& path);
    std::string to_json() const;
};

// --- profiles CSV: `hour,load_mult,solar_forecast_norm`, 24 rows ---
DayProfiles read_profiles_csv(const std::filesystem::path& path);

// --- flexibility table CSV: `hour,probability,q_sub_max_kvar,q_sub_min_kvar,status` ---
void write_fr_csv(const std::filesystem::path& path, const SweepResult& result);

struct FrCsvRow {
    int hour;
    double probability;
    double q_sub_max_kvar, q_sub_min_kvar;  // NaN when not optimal
    std::string status;
};
std::vector<FrCsvRow> read_fr_csv(const std::filesystem::path& path);

// --- dispatch detail JSON (sweep output, validate input) ---
std::string dispatch_json(const SweepResult& result, const std::vector<DerSpec>& ders,
                          const RunManifest& manifest);

struct DispatchFile {
    std::vector<DerSpec> ders;
    std::vector<FlexibilityRegion> regions;
    std::vector<ScenarioHour> scenarios;
};
DispatchFile read_dispatch_json(const std::filesystem::path& path);

std::string mc_report_json(const std::vector<McReport>& reports, const RunManifest& manifest);

std::string lp_active_str(const LpActive& a);

}  // namespace varcap
