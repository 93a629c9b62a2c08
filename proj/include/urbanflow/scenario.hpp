#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "urbanflow/choice.hpp"
#include "urbanflow/config.hpp"
#include "urbanflow/model.hpp"

namespace urbanflow {

struct DeveloperParams {
    double price_to_build_threshold = 500.0;
    std::int64_t units_per_build = 20;
    double max_share_growth_per_zone = 0.05;

    bool operator==(const DeveloperParams&) const = default;
};

struct AssignmentSettings {
    double gap_tol = 1e-4;
    int max_iters = 200;
    double line_search_tol = 1e-8;

    bool operator==(const AssignmentSettings&) const = default;
};

struct LandUseSettings {
    double annual_move_rate = 0.15;
    double price_gamma = 0.5;
    double clearing_tol = 0.05;
    int clearing_max_iters = 50;
    double price_factor_floor = 0.75;
    double price_factor_ceiling = 1.25;
    double accessibility_threshold_min = 30.0;
    DeveloperParams developer;

    bool operator==(const LandUseSettings&) const = default;
};

struct DemandSettings {
    double shared_occupancy = 2.0;
    double walk_threshold_min = 30.0;
    double walk_speed_kmh = 5.0;
    double cdap_joint_coeff = 0.5;
    int cdap_max_size = 5;
    int destination_sample_size = 25;

    bool operator==(const DemandSettings&) const = default;
};

struct SkimSettings {
    double transit_factor = 1.7;
    double transit_wait_min = 10.0;

    bool operator==(const SkimSettings&) const = default;
};

struct RunSettings {
    std::string scenario_name = "scenario";
    std::uint64_t global_seed = 42;
    int start_year = 2020;
    int end_year = 2020;
    unsigned threads = 1;
    PeriodMap periods;
    AssignmentSettings assignment;
    LandUseSettings landuse;
    DemandSettings demand;
    SkimSettings skims;

    bool operator==(const RunSettings&) const = default;
};

/// Everything one scenario run reads. Immutable once loaded; the pipeline
/// produces a new bundle at year end.
struct ScenarioBundle {
    RunSettings settings;
    std::vector<Zone> zones; // sorted by zone_id
    Network network;
    Population population;
    SpecSet specs;
    ControlTotals control_totals;

    bool operator==(const ScenarioBundle&) const = default;

    std::vector<ZoneId> zone_ids() const;
};

/// Declared attribute schemas of every model that consumes a UtilitySpec.
const std::map<std::string, choice::Schema, std::less<>>& model_schemas();
const choice::Schema& schema_for(std::string_view spec_name);
/// Binds a spec from the set against its model schema.
choice::BoundSpec bind_spec(const SpecSet& specs, std::string_view name);

RunSettings parse_settings(const Config& cfg);
Config settings_to_config(const RunSettings& settings);

std::vector<Zone> load_zones(const std::filesystem::path& path);
Network load_network(const std::filesystem::path& nodes, const std::filesystem::path& links,
                     const std::filesystem::path& node_weights = {});
Population load_population(const std::filesystem::path& households, const std::filesystem::path& persons,
                           const std::filesystem::path& jobs);
SpecSet load_specs(const std::filesystem::path& path);
ControlTotals load_control_totals(const std::filesystem::path& path);

void write_zones(const std::filesystem::path& path, const std::vector<Zone>& zones);
void write_population(const std::filesystem::path& dir, const Population& population);
void write_specs(const std::filesystem::path& path, const SpecSet& specs);

/// Cross-entity checks (referential integrity, zone/node mapping, strong
/// connectivity over centroids, control-total coverage). Throws
/// ValidationError naming the offending entity.
void validate_bundle(const ScenarioBundle& bundle);

/// Reads the config plus every referenced CSV (paths relative to the config
/// file) and validates the result.
ScenarioBundle load_scenario(const std::filesystem::path& config_path);

/// Writes config + CSVs into `dir` so that load_scenario(dir/"scenario.cfg")
/// reproduces the bundle field for field.
std::filesystem::path save_scenario(const ScenarioBundle& bundle, const std::filesystem::path& dir);

} // namespace urbanflow
