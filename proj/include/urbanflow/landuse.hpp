#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "urbanflow/assignment.hpp"
#include "urbanflow/choice.hpp"
#include "urbanflow/model.hpp"
#include "urbanflow/random.hpp"
#include "urbanflow/scenario.hpp"

namespace urbanflow::landuse {

/// Grows or shrinks households (with their persons) and jobs to the year's
/// targets. Growth clones uniformly drawn records (with replacement) under
/// fresh ids, unplaced and without a workplace; shrinkage removes a uniform
/// sample. Throws ValidationError for a negative target or growth from an
/// empty population.
Population transition(const Population& population, const ControlTotal& target, const StreamFactory& streams);

/// Flags every placed household as a mover with probability `rate`, one
/// draw per household, and resets movers to unplaced. Returns the mover ids.
std::vector<HouseholdId> relocation(Population& population, double rate, const StreamFactory& streams);

/// Residential construction in zones priced above the threshold:
/// + min(units_per_build, cap slack, floor(max_share_growth * units)).
std::vector<Zone> developer_step(std::vector<Zone> zones, const DeveloperParams& params);

/// Per-zone counts of placed households and jobs, aligned with `zones`.
std::vector<std::int64_t> households_per_zone(const std::vector<Zone>& zones, const Population& population);
std::vector<std::int64_t> jobs_per_zone(const std::vector<Zone>& zones, const Population& population);

struct LocationChoiceResult {
    int placed = 0;
    int iterations = 0;
    bool converged = true;
};

/// Places every unplaced household by market clearing over zones with
/// vacant units (supply = units - households). Final clearing prices become
/// the zones' avg_price. Zone attributes: price, log_access =
/// ln(1 + jobs within threshold), logsum_access, log_units = ln(1 + units).
LocationChoiceResult household_location_choice(Population& population, std::vector<Zone>& zones,
                                               const choice::BoundSpec& hlc,
                                               const assignment::Accessibility& access,
                                               const LandUseSettings& settings, const StreamFactory& streams);

/// Places every unplaced job over zones with vacant job spaces, capacity
/// constrained, no prices. Zone attributes: log_access, log_job_spaces,
/// log_households.
LocationChoiceResult job_location_choice(Population& population, const std::vector<Zone>& zones,
                                         const choice::BoundSpec& elc, const assignment::Accessibility& access,
                                         const StreamFactory& streams);

struct YearResult {
    std::vector<Zone> zones;
    Population population;
    std::size_t movers = 0;
    LocationChoiceResult households;
    LocationChoiceResult jobs;
};

/// transition -> relocation -> developer -> household and job location.
YearResult annual_step(const ScenarioBundle& bundle, int year, const assignment::Accessibility& access);

/// landuse_summary.csv: year, zone_id, households, jobs, units, price.
void write_summary(const std::filesystem::path& path, int year, const std::vector<Zone>& zones,
                   const Population& population);

} // namespace urbanflow::landuse
