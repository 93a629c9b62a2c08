#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace urbanflow {

using ZoneId = std::int64_t;
using NodeId = std::int64_t;
using LinkId = std::int64_t;
using HouseholdId = std::int64_t;
using PersonId = std::int64_t;
using JobId = std::int64_t;

/// zone_id 0 marks an unplaced household or job.
inline constexpr ZoneId kUnplaced = 0;

// ---------------------------------------------------------------- periods

enum class Period : std::uint8_t { AM, MD, PM, NT };
inline constexpr std::array<Period, 4> kPeriods{Period::AM, Period::MD, Period::PM, Period::NT};

std::string_view to_string(Period p);
Period parse_period(std::string_view s);

/// Hour of day (0-23) to assignment period.
class PeriodMap {
public:
    /// AM = 6-9, MD = 10-14, PM = 15-18, NT = everything else.
    PeriodMap();
    explicit PeriodMap(const std::array<Period, 24>& hours) : hours_(hours) {}

    Period period_of(int hour) const { return hours_.at(static_cast<std::size_t>(hour)); }
    /// Number of hours mapped to the period.
    double duration_hours(Period p) const;
    const std::array<Period, 24>& hours() const noexcept { return hours_; }

    bool operator==(const PeriodMap&) const = default;

private:
    std::array<Period, 24> hours_{};
};

// ---------------------------------------------------------------- land

struct Zone {
    ZoneId zone_id = 0;
    double area = 0.0; // hectares
    std::int64_t max_residential_units = 0;
    std::int64_t max_job_spaces = 0;
    double avg_price = 0.0;
    // Built stock. Optional columns in zones.csv; see load_zones().
    std::int64_t residential_units = 0;
    std::int64_t job_spaces = 0;

    bool operator==(const Zone&) const = default;
};

// ---------------------------------------------------------------- network

struct Node {
    NodeId node_id = 0;
    double x = 0.0;
    double y = 0.0;
    std::optional<ZoneId> zone_id;

    bool operator==(const Node&) const = default;
};

struct Link {
    LinkId link_id = 0;
    NodeId from_node = 0;
    NodeId to_node = 0;
    double length = 0.0;         // km
    double capacity = 0.0;       // veh/hour
    double free_flow_time = 0.0; // minutes
    double alpha = 0.15;
    double beta = 4.0;

    bool operator==(const Link&) const = default;
};

struct Network {
    std::vector<Node> nodes;
    std::vector<Link> links;
    std::map<ZoneId, NodeId> zone_centroids;
    /// Optional demand split across the nodes of a zone (weights sum to 1 per
    /// zone). Empty: all zone trips start and end at the centroid.
    std::map<ZoneId, std::vector<std::pair<NodeId, double>>> zone_node_weights;

    bool operator==(const Network&) const = default;
};

/// Center-most node of each zone: the node minimizing the summed Euclidean
/// distance to all other nodes of that zone (lowest node_id on ties).
std::map<ZoneId, NodeId> center_most_nodes(const std::vector<Node>& nodes);

// ---------------------------------------------------------------- population

struct Household {
    HouseholdId household_id = 0;
    ZoneId zone_id = kUnplaced;
    double income = 0.0;
    std::int64_t size = 1;
    std::int64_t autos = 0;
    std::int64_t tenure_years = 0;

    bool operator==(const Household&) const = default;
};

struct Person {
    PersonId person_id = 0;
    HouseholdId household_id = 0;
    std::int64_t age = 0;
    bool is_worker = false;
    bool is_student = false;
    std::optional<ZoneId> workplace_zone;

    bool operator==(const Person&) const = default;
};

struct Job {
    JobId job_id = 0;
    ZoneId zone_id = kUnplaced;
    std::string sector;

    bool operator==(const Job&) const = default;
};

/// Households, persons and jobs, each kept sorted by id.
struct Population {
    std::vector<Household> households;
    std::vector<Person> persons;
    std::vector<Job> jobs;

    bool operator==(const Population&) const = default;
};

// ---------------------------------------------------------------- specs

/// Linear-in-parameters utility V = sum_k beta_k * x_k. Variable names refer
/// to chooser attributes, alternative attributes, or products "a*b".
struct UtilitySpec {
    std::string name;
    std::vector<std::pair<std::string, double>> coefficients;

    bool operator==(const UtilitySpec&) const = default;
};

using SpecSet = std::map<std::string, UtilitySpec, std::less<>>;

struct ControlTotal {
    std::int64_t households = 0;
    std::int64_t jobs = 0;

    bool operator==(const ControlTotal&) const = default;
};

using ControlTotals = std::map<int, ControlTotal>;

// ---------------------------------------------------------------- demand output

struct TripKey {
    ZoneId origin = 0;
    ZoneId destination = 0;
    Period period = Period::AM;

    auto operator<=>(const TripKey&) const = default;
};

/// Vehicle trips by (origin, destination, period). Iteration order is sorted
/// by key, which keeps every derived output deterministic.
class TripTable {
public:
    void add(ZoneId o, ZoneId d, Period p, double vehicle_trips);
    double at(ZoneId o, ZoneId d, Period p) const;
    double total() const;
    double total(Period p) const;
    bool empty() const noexcept { return cells_.empty(); }
    std::size_t size() const noexcept { return cells_.size(); }
    const std::map<TripKey, double>& cells() const noexcept { return cells_; }

    void write_csv(const std::filesystem::path& path) const;
    static TripTable read_csv(const std::filesystem::path& path);

    bool operator==(const TripTable&) const = default;

private:
    std::map<TripKey, double> cells_;
};

// ---------------------------------------------------------------- skims

enum class SkimMode : std::uint8_t { Auto, Transit, Walk };
inline constexpr std::array<SkimMode, 3> kSkimModes{SkimMode::Auto, SkimMode::Transit, SkimMode::Walk};

std::string_view to_string(SkimMode m);
SkimMode parse_skim_mode(std::string_view s);

/// Dense zone-by-zone travel-time matrices (minutes) per (mode, period).
/// Rows and columns follow ascending zone_id.
class SkimSet {
public:
    SkimSet() = default;
    explicit SkimSet(std::vector<ZoneId> zone_ids);

    std::size_t zone_count() const noexcept { return zone_ids_.size(); }
    const std::vector<ZoneId>& zone_ids() const noexcept { return zone_ids_; }
    std::size_t index_of(ZoneId z) const;

    void set(SkimMode m, Period p, std::vector<double> matrix);
    bool has(SkimMode m, Period p) const;
    const std::vector<double>& matrix(SkimMode m, Period p) const;
    double time(SkimMode m, Period p, std::size_t o, std::size_t d) const {
        return matrix(m, p)[o * zone_ids_.size() + d];
    }

    /// Throws ValidationError unless every stored value is positive and finite.
    void validate() const;

    void write_csv(const std::filesystem::path& path) const;
    static SkimSet read_csv(const std::filesystem::path& path, std::vector<ZoneId> zone_ids);

    bool operator==(const SkimSet&) const = default;

private:
    static std::size_t slot(SkimMode m, Period p) {
        return static_cast<std::size_t>(m) * kPeriods.size() + static_cast<std::size_t>(p);
    }

    std::vector<ZoneId> zone_ids_;
    std::array<std::vector<double>, 12> matrices_{};
};

/// Diagonal rule for intrazonal time: half the smallest off-diagonal value in
/// the row, never below 1 minute. `matrix` is n*n row-major and is updated.
void apply_intrazonal_rule(std::vector<double>& matrix, std::size_t n);

} // namespace urbanflow
