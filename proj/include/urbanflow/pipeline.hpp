#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "urbanflow/assignment.hpp"
#include "urbanflow/model.hpp"
#include "urbanflow/scenario.hpp"

namespace urbanflow::pipeline {

inline constexpr std::array<const char*, 4> kStages{"landuse", "demand", "assignment", "feedback"};

/// FNV-1a over every regular file below `dir`, visited in sorted relative
/// path order; each file contributes its relative path, a NUL and its bytes.
std::uint64_t directory_checksum(const std::filesystem::path& dir);
std::string hex(std::uint64_t v);

struct YearRecord {
    int year = 0;
    std::array<std::string, 4> checksums; // kStages order, hex

    bool operator==(const YearRecord&) const = default;
};

/// Written to <out>/<scenario>/manifest.txt. Stage outputs live under
/// <year>/<stage>/ relative to the manifest; the free-flow start is in
/// base/feedback/.
struct RunManifest {
    std::string scenario;
    std::uint64_t global_seed = 0;
    int start_year = 0;
    int end_year = 0;
    std::string base_checksum;
    std::vector<YearRecord> years;

    bool operator==(const RunManifest&) const = default;

    void write(const std::filesystem::path& path) const;
    static RunManifest read(const std::filesystem::path& path);
};

struct StageTiming {
    int year = 0; // 0 for the free-flow base
    std::string stage;
    double seconds = 0.0;
};

/// Link times per period (kPeriods order) read back from link_flows.csv.
std::array<std::vector<double>, 4> read_link_times(const std::filesystem::path& path,
                                                   const assignment::RoadGraph& graph);

/// Cumulative (auto, AM, threshold) and logsum accessibility for the placed
/// jobs of `population`.
assignment::Accessibility compute_accessibility(const ScenarioBundle& bundle, const std::vector<Zone>& zones,
                                                const Population& population, const SkimSet& skims);

/// Writes skims.csv and accessibility.csv.
void write_feedback(const std::filesystem::path& dir, const SkimSet& skims, const assignment::Accessibility& access);

/// Free-flow skims and accessibility of the input bundle into base/feedback.
void run_base(const ScenarioBundle& bundle, const std::filesystem::path& scenario_dir,
              std::vector<StageTiming>* timings = nullptr);

/// One simulated year: landuse, demand, assignment, feedback. Every stage
/// writes <scenario_dir>/<year>/<stage>/ and the next stage reads only those
/// files plus the prior feedback directory. Returns the bundle for the next
/// year (zones and population reloaded from disk). Stage failures surface as
/// StageError; outputs written so far stay in place.
ScenarioBundle run_year(const ScenarioBundle& bundle, int year, const std::filesystem::path& scenario_dir,
                        const std::filesystem::path& prior_feedback, std::vector<StageTiming>* timings = nullptr);

/// Runs start_year..end_year into <out_root>/<scenario>/ (replacing any
/// previous run there). Wall-clock stage timings go to
/// <out_root>/<scenario>.timings.txt so that the run tree itself is a pure
/// function of inputs and seed.
RunManifest run_scenario(const ScenarioBundle& bundle, const std::filesystem::path& out_root);

struct CompareRow {
    int year = 0;
    std::string metric;
    std::string key;
    double a = 0.0;
    double b = 0.0;
};

/// Per-year aligned metrics of two runs: households and jobs by zone, VMT,
/// VHT, energy, mean trip time per period, trip mode shares. Throws
/// ValidationError when zone systems or year ranges differ.
std::vector<CompareRow> compare_scenarios(const std::filesystem::path& manifest_a,
                                          const std::filesystem::path& manifest_b);

/// year,metric,key,a,b,delta,relative_delta (relative_delta empty when a = 0).
void write_comparison(const std::filesystem::path& path, const std::vector<CompareRow>& rows);

/// Human-readable per-year summary of a run.
std::string report(const std::filesystem::path& manifest);

} // namespace urbanflow::pipeline
