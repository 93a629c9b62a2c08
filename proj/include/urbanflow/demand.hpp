#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "urbanflow/assignment.hpp"
#include "urbanflow/choice.hpp"
#include "urbanflow/model.hpp"
#include "urbanflow/random.hpp"
#include "urbanflow/scenario.hpp"

namespace urbanflow::demand {

enum class Pattern : std::uint8_t { M, N, H };
enum class Purpose : std::uint8_t { Work, School, Other };
enum class Mode : std::uint8_t { DriveAlone, Shared, Transit, Walk };

inline constexpr std::array<Mode, 4> kModes{Mode::DriveAlone, Mode::Shared, Mode::Transit, Mode::Walk};

std::string_view to_string(Pattern p);
std::string_view to_string(Purpose p);
std::string_view to_string(Mode m);
Mode parse_mode(std::string_view s);

struct Tour {
    std::int64_t tour_id = 0;
    PersonId person_id = 0;
    HouseholdId household_id = 0;
    Purpose purpose = Purpose::Other;
    ZoneId origin = 0;
    ZoneId destination = 0;
    Mode mode = Mode::DriveAlone;
    int depart_hour = -1;
    int return_hour = -1;

    bool operator==(const Tour&) const = default;
};

struct Trip {
    std::int64_t trip_id = 0;
    std::int64_t tour_id = 0;
    PersonId person_id = 0;
    ZoneId origin = 0;
    ZoneId destination = 0;
    int hour = 0;
    Mode mode = Mode::DriveAlone;

    bool operator==(const Trip&) const = default;
};

/// What the demand models see of the land-use state, aligned with the skim
/// zone order.
struct ZoneData {
    std::vector<ZoneId> zone_ids;
    std::vector<double> jobs;
    std::vector<double> households;
    std::vector<double> logsum_access;

    std::size_t index_of(ZoneId z) const;
};

ZoneData zone_data(const std::vector<Zone>& zones, const Population& population,
                   const assignment::Accessibility& access);

/// Workers without a workplace pick one among a uniform sample of zones with
/// jobs. V = spec over {time = AM drive time, log_size = ln(1 + jobs)}.
void workplace_choice(Population& population, const ZoneData& zones, const SkimSet& skims,
                      const choice::BoundSpec& spec, std::size_t sample_size, const StreamFactory& streams,
                      unsigned threads = 1);

/// Redraws autos in {0, 1, 2} for every household. Chooser accessibility is
/// the home zone's logsum accessibility.
void auto_ownership(Population& population, const ZoneData& zones, const choice::BoundSpec& spec,
                    const StreamFactory& streams, unsigned threads = 1);

/// Combination c of n persons encodes person i's pattern as digit i of c in
/// base 3 (0 = M, 1 = N, 2 = H). `utilities` holds n rows of (V_M, V_N,
/// V_H); -inf marks an unavailable pattern. The combination utility adds
/// joint_coeff for every pair of persons that both choose N.
std::vector<double> cdap_combination_utilities(std::span<const double> utilities, std::size_t n, double joint_coeff);
std::vector<double> cdap_combination_probabilities(std::span<const double> utilities, std::size_t n,
                                                   double joint_coeff);

/// Draws one combination for a group of at most `max_size` persons.
/// Throws ChoiceError when the group is larger.
std::vector<Pattern> cdap_draw(std::span<const double> utilities, std::size_t n, double joint_coeff,
                               std::size_t max_size, RandomStream& stream);

/// Daily pattern for every person (aligned with population.persons). Larger
/// households are split into groups of up to max_size by person_id order.
std::vector<Pattern> cdap(const Population& population, const choice::BoundSpec& spec,
                          const DemandSettings& settings, const StreamFactory& streams, unsigned threads = 1);

/// Work tours to the workplace for M workers, school tours for M students,
/// 0-2 other tours for N persons. Tour ids are 1..T in person order.
std::vector<Tour> generate_tours(const Population& population, std::span<const Pattern> patterns,
                                 const choice::BoundSpec& frequency, const StreamFactory& streams);

/// Destinations of school and other tours among sampled zones.
/// School size term ln(1 + households), other ln(1 + jobs + households);
/// time is the AM (school) or MD (other) drive time.
void tour_destination(std::vector<Tour>& tours, const Population& population, const ZoneData& zones,
                      const SkimSet& skims, const choice::BoundSpec& school, const choice::BoundSpec& other,
                      std::size_t sample_size, const StreamFactory& streams, unsigned threads = 1);

/// Departure hour by MNL over hours 0-22 (23 would leave no return hour);
/// return = depart + 9 h (work), 7 h (school), 2 or 4 h (other, MNL),
/// clamped to 23.
void departure_time(std::vector<Tour>& tours, const Population& population, const SpecSet& specs,
                    const StreamFactory& streams, unsigned threads = 1);

/// Tour mode over the four modes, time = both legs in their periods.
/// Zero-auto households cannot drive alone; walk needs the one-way walk time
/// within the threshold.
void tour_mode(std::vector<Tour>& tours, const Population& population, const SkimSet& skims,
               const choice::BoundSpec& spec, const DemandSettings& settings, const PeriodMap& periods,
               const StreamFactory& streams, unsigned threads = 1);

/// Legs a tour mode admits: drive_alone -> {drive_alone}, shared ->
/// {shared, walk}, transit -> {transit, walk}, walk -> {walk}.
std::vector<Mode> permitted_trip_modes(Mode tour_mode);

/// Outbound and return trip per tour; trip ids 2k-1 and 2k for tour k.
std::vector<Trip> make_trips(const std::vector<Tour>& tours);

void trip_mode(std::vector<Trip>& trips, const std::vector<Tour>& tours, const Population& population,
               const SkimSet& skims, const choice::BoundSpec& spec, const DemandSettings& settings,
               const PeriodMap& periods, const StreamFactory& streams, unsigned threads = 1);

/// Vehicle trips by (o, d, period): drive_alone + shared / occupancy.
TripTable build_trip_table(const std::vector<Trip>& trips, const PeriodMap& periods, double shared_occupancy = 2.0);

struct DayResult {
    Population population;
    std::vector<Pattern> patterns;
    std::vector<Tour> tours;
    std::vector<Trip> trips;
    TripTable trip_table;
};

/// Full daily chain on a placed population.
DayResult daily_step(const ScenarioBundle& bundle, const SkimSet& skims, const assignment::Accessibility& access,
                     int year);

/// households.csv, persons.csv, jobs.csv, patterns.csv, tours.csv,
/// trips.csv, trip_table.csv, mode_shares.csv.
void write_outputs(const std::filesystem::path& dir, const DayResult& day);

} // namespace urbanflow::demand
