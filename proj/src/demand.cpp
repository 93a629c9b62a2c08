#include "urbanflow/demand.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>

#include "urbanflow/csv.hpp"
#include "urbanflow/error.hpp"
#include "urbanflow/parallel.hpp"

namespace urbanflow::demand {

namespace {

constexpr int kWorkHours = 9;
constexpr int kSchoolHours = 7;

std::map<HouseholdId, std::size_t> household_index(const Population& population) {
    std::map<HouseholdId, std::size_t> index;
    for (std::size_t i = 0; i < population.households.size(); ++i)
        index.emplace(population.households[i].household_id, i);
    return index;
}

const Household& household_of(const Population& population, const std::map<HouseholdId, std::size_t>& index,
                               HouseholdId id) {
    const auto it = index.find(id);
    if (it == index.end()) throw ValidationError("unknown household " + std::to_string(id));
    return population.households[it->second];
}

ZoneId home_zone(const Household& h) {
    if (h.zone_id == kUnplaced)
        throw ChoiceError("household " + std::to_string(h.household_id) + " is not placed in a zone");
    return h.zone_id;
}

SkimMode skim_mode(Mode m) {
    switch (m) {
    case Mode::DriveAlone:
    case Mode::Shared: return SkimMode::Auto;
    case Mode::Transit: return SkimMode::Transit;
    case Mode::Walk: return SkimMode::Walk;
    }
    return SkimMode::Auto;
}

// Row of mode attributes: time, is_drive_alone, is_shared, is_transit, is_walk.
std::array<double, 5> mode_row(Mode m, double time) {
    std::array<double, 5> row{};
    row[0] = time;
    row[1 + static_cast<std::size_t>(m)] = 1.0;
    return row;
}

std::size_t draw(std::span<const double> utilities, RandomStream& stream) {
    return choice::monte_carlo_choice(choice::mnl_probabilities(utilities), stream);
}

// Destination choice shared by workplace and tour destinations.
ZoneId choose_zone(const choice::BoundSpec& spec, std::span<const double> chooser, std::int64_t chooser_id,
                   std::size_t origin, const ZoneData& zones, std::span<const double> size, const SkimSet& skims,
                   Period period, std::size_t sample_size, RandomStream& stream) {
    choice::ChoiceSet universe(chooser_id, 2);
    for (std::size_t d = 0; d < zones.zone_ids.size(); ++d) {
        if (!(size[d] > 0.0)) continue;
        const double row[2] = {skims.time(SkimMode::Auto, period, origin, d), std::log1p(size[d])};
        universe.add(zones.zone_ids[d], row);
    }
    if (universe.size() == 0) throw ChoiceError("no zone offers a destination for chooser " + std::to_string(chooser_id));
    const auto sample = choice::sample_alternatives(universe, sample_size, stream);
    const auto v = choice::systematic_utility(spec, chooser, sample);
    return sample.id(draw(v, stream));
}

} // namespace

std::string_view to_string(Pattern p) {
    switch (p) {
    case Pattern::M: return "M";
    case Pattern::N: return "N";
    case Pattern::H: return "H";
    }
    return "?";
}

std::string_view to_string(Purpose p) {
    switch (p) {
    case Purpose::Work: return "work";
    case Purpose::School: return "school";
    case Purpose::Other: return "other";
    }
    return "?";
}

std::string_view to_string(Mode m) {
    switch (m) {
    case Mode::DriveAlone: return "drive_alone";
    case Mode::Shared: return "shared";
    case Mode::Transit: return "transit";
    case Mode::Walk: return "walk";
    }
    return "?";
}

Mode parse_mode(std::string_view s) {
    for (auto m : kModes)
        if (to_string(m) == s) return m;
    throw ValidationError("unknown mode '" + std::string(s) + "'");
}

std::size_t ZoneData::index_of(ZoneId z) const {
    const auto it = std::lower_bound(zone_ids.begin(), zone_ids.end(), z);
    if (it == zone_ids.end() || *it != z) throw ValidationError("unknown zone " + std::to_string(z));
    return static_cast<std::size_t>(it - zone_ids.begin());
}

ZoneData zone_data(const std::vector<Zone>& zones, const Population& population,
                   const assignment::Accessibility& access) {
    ZoneData zd;
    for (const auto& z : zones) zd.zone_ids.push_back(z.zone_id);
    std::sort(zd.zone_ids.begin(), zd.zone_ids.end());
    const std::size_t n = zd.zone_ids.size();
    zd.jobs.assign(n, 0.0);
    zd.households.assign(n, 0.0);
    zd.logsum_access.assign(n, 0.0);
    for (const auto& j : population.jobs)
        if (j.zone_id != kUnplaced) zd.jobs[zd.index_of(j.zone_id)] += 1.0;
    for (const auto& h : population.households)
        if (h.zone_id != kUnplaced) zd.households[zd.index_of(h.zone_id)] += 1.0;
    for (std::size_t i = 0; i < access.zone_ids.size(); ++i) zd.logsum_access[zd.index_of(access.zone_ids[i])] = access.logsum[i];
    return zd;
}

// ---------------------------------------------------------------- long-term choices

void workplace_choice(Population& population, const ZoneData& zones, const SkimSet& skims,
                      const choice::BoundSpec& spec, std::size_t sample_size, const StreamFactory& streams,
                      unsigned threads) {
    const auto hh = household_index(population);
    std::vector<std::optional<ZoneId>> chosen(population.persons.size());
    parallel_for(population.persons.size(), threads, [&](std::size_t i) {
        const auto& p = population.persons[i];
        if (!p.is_worker || p.workplace_zone) return;
        const auto& h = household_of(population, hh, p.household_id);
        auto stream = streams("workplace", static_cast<std::uint64_t>(p.person_id));
        const double chooser[1] = {h.income};
        chosen[i] = choose_zone(spec, chooser, p.person_id, zones.index_of(home_zone(h)), zones, zones.jobs, skims,
                                Period::AM, sample_size, stream);
    });
    for (std::size_t i = 0; i < chosen.size(); ++i)
        if (chosen[i]) population.persons[i].workplace_zone = chosen[i];
}

void auto_ownership(Population& population, const ZoneData& zones, const choice::BoundSpec& spec,
                    const StreamFactory& streams, unsigned threads) {
    std::map<HouseholdId, double> workers;
    for (const auto& p : population.persons)
        if (p.is_worker) workers[p.household_id] += 1.0;
    static constexpr double alternatives[3][3] = {{0, 0, 0}, {1, 1, 0}, {2, 0, 1}};
    std::vector<std::int64_t> autos(population.households.size());
    parallel_for(population.households.size(), threads, [&](std::size_t i) {
        const auto& h = population.households[i];
        const auto w = workers.find(h.household_id);
        const double chooser[4] = {h.income, static_cast<double>(h.size), w == workers.end() ? 0.0 : w->second,
                                   zones.logsum_access[zones.index_of(home_zone(h))]};
        std::array<double, 3> v{};
        for (std::size_t k = 0; k < 3; ++k) v[k] = spec.utility(chooser, alternatives[k]);
        auto stream = streams("auto_ownership", static_cast<std::uint64_t>(h.household_id));
        autos[i] = static_cast<std::int64_t>(draw(v, stream));
    });
    for (std::size_t i = 0; i < autos.size(); ++i) population.households[i].autos = autos[i];
}

// ---------------------------------------------------------------- CDAP

std::vector<double> cdap_combination_utilities(std::span<const double> utilities, std::size_t n, double joint_coeff) {
    if (utilities.size() != 3 * n) throw ChoiceError("cdap: expected 3 utilities per person");
    std::size_t combos = 1;
    for (std::size_t i = 0; i < n; ++i) combos *= 3;
    std::vector<double> v(combos, 0.0);
    std::vector<std::size_t> digit(n);
    for (std::size_t c = 0; c < combos; ++c) {
        std::size_t rest = c, non_mandatory = 0;
        double u = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            digit[i] = rest % 3;
            rest /= 3;
            u += utilities[3 * i + digit[i]];
            if (digit[i] == 1) ++non_mandatory;
        }
        if (std::isfinite(u) && non_mandatory > 1)
            u += joint_coeff * static_cast<double>(non_mandatory * (non_mandatory - 1) / 2);
        v[c] = u;
    }
    return v;
}

std::vector<double> cdap_combination_probabilities(std::span<const double> utilities, std::size_t n,
                                                   double joint_coeff) {
    return choice::mnl_probabilities(cdap_combination_utilities(utilities, n, joint_coeff));
}

std::vector<Pattern> cdap_draw(std::span<const double> utilities, std::size_t n, double joint_coeff,
                               std::size_t max_size, RandomStream& stream) {
    if (n == 0) throw ChoiceError("cdap: empty household group");
    if (n > max_size)
        throw ChoiceError("cdap: group of " + std::to_string(n) + " exceeds the enumeration cap of " +
                          std::to_string(max_size));
    auto c = choice::monte_carlo_choice(cdap_combination_probabilities(utilities, n, joint_coeff), stream);
    std::vector<Pattern> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = static_cast<Pattern>(c % 3);
        c /= 3;
    }
    return out;
}

std::vector<Pattern> cdap(const Population& population, const choice::BoundSpec& spec,
                          const DemandSettings& settings, const StreamFactory& streams, unsigned threads) {
    const auto hh = household_index(population);
    // Persons are sorted by id, so members come out in person_id order.
    std::map<HouseholdId, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < population.persons.size(); ++i) members[population.persons[i].household_id].push_back(i);
    std::vector<const std::pair<const HouseholdId, std::vector<std::size_t>>*> groups;
    for (const auto& entry : members) groups.push_back(&entry);

    static constexpr double patterns[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    const auto cap = static_cast<std::size_t>(settings.cdap_max_size);
    std::vector<Pattern> out(population.persons.size(), Pattern::H);
    parallel_for(groups.size(), threads, [&](std::size_t g) {
        const auto& [household_id, people] = *groups[g];
        const auto& h = household_of(population, hh, household_id);
        auto stream = streams("cdap", static_cast<std::uint64_t>(household_id));
        for (std::size_t start = 0; start < people.size(); start += cap) {
            const std::size_t n = std::min(cap, people.size() - start);
            std::vector<double> u(3 * n);
            for (std::size_t k = 0; k < n; ++k) {
                const auto& p = population.persons[people[start + k]];
                const double chooser[6] = {static_cast<double>(p.age), p.is_worker ? 1.0 : 0.0,
                                           p.is_student ? 1.0 : 0.0, h.income, static_cast<double>(h.autos),
                                           static_cast<double>(h.size)};
                for (std::size_t a = 0; a < 3; ++a) u[3 * k + a] = spec.utility(chooser, patterns[a]);
                if (!p.is_worker && !p.is_student) u[3 * k] = choice::kUnavailable;
            }
            const auto drawn = cdap_draw(u, n, settings.cdap_joint_coeff, cap, stream);
            for (std::size_t k = 0; k < n; ++k) out[people[start + k]] = drawn[k];
        }
    });
    return out;
}

// ---------------------------------------------------------------- tours

std::vector<Tour> generate_tours(const Population& population, std::span<const Pattern> patterns,
                                 const choice::BoundSpec& frequency, const StreamFactory& streams) {
    if (patterns.size() != population.persons.size()) throw ChoiceError("tours: one pattern per person required");
    const auto hh = household_index(population);
    static constexpr double counts[3][2] = {{0, 0}, {1, 0}, {0, 1}};
    std::vector<Tour> tours;
    std::int64_t next = 0;
    const auto add = [&](const Person& p, const Household& h, Purpose purpose, ZoneId destination) {
        Tour t;
        t.tour_id = ++next;
        t.person_id = p.person_id;
        t.household_id = h.household_id;
        t.purpose = purpose;
        t.origin = home_zone(h);
        t.destination = destination;
        tours.push_back(t);
    };
    for (std::size_t i = 0; i < population.persons.size(); ++i) {
        const auto& p = population.persons[i];
        const auto& h = household_of(population, hh, p.household_id);
        switch (patterns[i]) {
        case Pattern::M:
            if (p.is_worker) {
                if (!p.workplace_zone)
                    throw ChoiceError("person " + std::to_string(p.person_id) + " has pattern M but no workplace");
                add(p, h, Purpose::Work, *p.workplace_zone);
            }
            if (p.is_student) add(p, h, Purpose::School, 0);
            if (!p.is_worker && !p.is_student)
                throw ChoiceError("person " + std::to_string(p.person_id) + " has pattern M without work or school");
            break;
        case Pattern::N: {
            const double chooser[4] = {static_cast<double>(p.age), p.is_worker ? 1.0 : 0.0, h.income,
                                       static_cast<double>(h.autos)};
            std::array<double, 3> v{};
            for (std::size_t k = 0; k < 3; ++k) v[k] = frequency.utility(chooser, counts[k]);
            auto stream = streams("tour_frequency", static_cast<std::uint64_t>(p.person_id));
            const auto n = draw(v, stream);
            for (std::size_t k = 0; k < n; ++k) add(p, h, Purpose::Other, 0);
            break;
        }
        case Pattern::H: break;
        }
    }
    return tours;
}

void tour_destination(std::vector<Tour>& tours, const Population& population, const ZoneData& zones,
                      const SkimSet& skims, const choice::BoundSpec& school, const choice::BoundSpec& other,
                      std::size_t sample_size, const StreamFactory& streams, unsigned threads) {
    const auto hh = household_index(population);
    std::map<PersonId, std::size_t> person;
    for (std::size_t i = 0; i < population.persons.size(); ++i) person.emplace(population.persons[i].person_id, i);
    std::vector<double> other_size(zones.zone_ids.size());
    for (std::size_t d = 0; d < other_size.size(); ++d) other_size[d] = zones.jobs[d] + zones.households[d];

    parallel_for(tours.size(), threads, [&](std::size_t k) {
        auto& t = tours[k];
        if (t.purpose == Purpose::Work) return;
        const auto& p = population.persons[person.at(t.person_id)];
        const auto& h = household_of(population, hh, p.household_id);
        const double chooser[2] = {h.income, static_cast<double>(p.age)};
        auto stream = streams("destination", static_cast<std::uint64_t>(t.tour_id));
        const bool is_school = t.purpose == Purpose::School;
        t.destination = choose_zone(is_school ? school : other, chooser, t.tour_id, zones.index_of(t.origin), zones,
                                    is_school ? std::span<const double>(zones.households) : other_size, skims,
                                    is_school ? Period::AM : Period::MD, sample_size, stream);
    });
}

void departure_time(std::vector<Tour>& tours, const Population& population, const SpecSet& specs,
                    const StreamFactory& streams, unsigned threads) {
    const std::array<choice::BoundSpec, 3> hour_specs{bind_spec(specs, "departure_work"),
                                                      bind_spec(specs, "departure_school"),
                                                      bind_spec(specs, "departure_other")};
    const auto duration = bind_spec(specs, "duration_other");
    std::map<PersonId, std::size_t> person;
    for (std::size_t i = 0; i < population.persons.size(); ++i) person.emplace(population.persons[i].person_id, i);

    parallel_for(tours.size(), threads, [&](std::size_t k) {
        auto& t = tours[k];
        const auto& p = population.persons[person.at(t.person_id)];
        const double chooser[1] = {static_cast<double>(p.age)};
        const auto& spec = hour_specs[static_cast<std::size_t>(t.purpose)];
        std::array<double, 24> v{};
        std::array<double, 24> row{};
        for (std::size_t hour = 0; hour < 24; ++hour) {
            row.fill(0.0);
            row[hour] = 1.0;
            v[hour] = spec.utility(chooser, row);
        }
        v[23] = choice::kUnavailable;
        auto stream = streams("departure", static_cast<std::uint64_t>(t.tour_id));
        t.depart_hour = static_cast<int>(draw(v, stream));
        int hours = kWorkHours;
        if (t.purpose == Purpose::School) hours = kSchoolHours;
        if (t.purpose == Purpose::Other) {
            static constexpr double alternatives[2][1] = {{0}, {1}};
            const std::array<double, 2> dv{duration.utility(chooser, alternatives[0]),
                                           duration.utility(chooser, alternatives[1])};
            hours = draw(dv, stream) == 0 ? 2 : 4;
        }
        t.return_hour = std::min(23, t.depart_hour + hours);
    });
}

void tour_mode(std::vector<Tour>& tours, const Population& population, const SkimSet& skims,
               const choice::BoundSpec& spec, const DemandSettings& settings, const PeriodMap& periods,
               const StreamFactory& streams, unsigned threads) {
    const auto hh = household_index(population);
    parallel_for(tours.size(), threads, [&](std::size_t k) {
        auto& t = tours[k];
        const auto& h = household_of(population, hh, t.household_id);
        const auto o = skims.index_of(t.origin), d = skims.index_of(t.destination);
        const auto out_period = periods.period_of(t.depart_hour), back_period = periods.period_of(t.return_hour);
        const double chooser[3] = {h.income, static_cast<double>(h.autos), static_cast<double>(h.size)};

        choice::ChoiceSet set(t.tour_id, 5);
        for (auto m : kModes) {
            const double time =
                skims.time(skim_mode(m), out_period, o, d) + skims.time(skim_mode(m), back_period, d, o);
            set.add(static_cast<std::int64_t>(m), mode_row(m, time));
        }
        const double walk_time = skims.time(SkimMode::Walk, out_period, o, d);
        set = choice::constrained_choice_set(std::move(set), [&](const choice::ChoiceSet&, std::size_t i) {
            const auto m = kModes[i];
            if (m == Mode::DriveAlone) return h.autos > 0;
            if (m == Mode::Walk) return walk_time <= settings.walk_threshold_min;
            return true;
        });
        auto stream = streams("tour_mode", static_cast<std::uint64_t>(t.tour_id));
        t.mode = kModes[draw(choice::systematic_utility(spec, chooser, set), stream)];
    });
}

std::vector<Mode> permitted_trip_modes(Mode tour_mode) {
    switch (tour_mode) {
    case Mode::DriveAlone: return {Mode::DriveAlone};
    case Mode::Shared: return {Mode::Shared, Mode::Walk};
    case Mode::Transit: return {Mode::Transit, Mode::Walk};
    case Mode::Walk: return {Mode::Walk};
    }
    return {};
}

std::vector<Trip> make_trips(const std::vector<Tour>& tours) {
    std::vector<Trip> trips;
    trips.reserve(2 * tours.size());
    for (const auto& t : tours) {
        if (t.depart_hour < 0 || t.return_hour <= t.depart_hour)
            throw ChoiceError("tour " + std::to_string(t.tour_id) + " has no valid departure and return hours");
        trips.push_back({2 * t.tour_id - 1, t.tour_id, t.person_id, t.origin, t.destination, t.depart_hour, t.mode});
        trips.push_back({2 * t.tour_id, t.tour_id, t.person_id, t.destination, t.origin, t.return_hour, t.mode});
    }
    return trips;
}

void trip_mode(std::vector<Trip>& trips, const std::vector<Tour>& tours, const Population& population,
               const SkimSet& skims, const choice::BoundSpec& spec, const DemandSettings& settings,
               const PeriodMap& periods, const StreamFactory& streams, unsigned threads) {
    const auto hh = household_index(population);
    std::map<std::int64_t, std::size_t> tour_at;
    for (std::size_t i = 0; i < tours.size(); ++i) tour_at.emplace(tours[i].tour_id, i);

    parallel_for(trips.size(), threads, [&](std::size_t k) {
        auto& trip = trips[k];
        const auto& tour = tours[tour_at.at(trip.tour_id)];
        const auto& h = household_of(population, hh, tour.household_id);
        const auto allowed = permitted_trip_modes(tour.mode);
        if (allowed.size() == 1) {
            trip.mode = allowed.front();
            return;
        }
        const auto o = skims.index_of(trip.origin), d = skims.index_of(trip.destination);
        const auto period = periods.period_of(trip.hour);
        const double chooser[3] = {h.income, static_cast<double>(h.autos), static_cast<double>(h.size)};
        choice::ChoiceSet set(trip.trip_id, 5);
        for (auto m : allowed) {
            const double time = skims.time(skim_mode(m), period, o, d);
            set.add(static_cast<std::int64_t>(m), mode_row(m, time),
                    m != Mode::Walk || time <= settings.walk_threshold_min);
        }
        auto stream = streams("trip_mode", static_cast<std::uint64_t>(trip.trip_id));
        trip.mode = allowed[draw(choice::systematic_utility(spec, chooser, set), stream)];
    });
}

TripTable build_trip_table(const std::vector<Trip>& trips, const PeriodMap& periods, double shared_occupancy) {
    if (!(shared_occupancy > 0.0)) throw ValidationError("shared occupancy must be positive");
    std::map<TripKey, std::pair<std::int64_t, std::int64_t>> counts;
    for (const auto& t : trips) {
        if (t.mode != Mode::DriveAlone && t.mode != Mode::Shared) continue;
        auto& c = counts[{t.origin, t.destination, periods.period_of(t.hour)}];
        if (t.mode == Mode::DriveAlone) ++c.first;
        else ++c.second;
    }
    TripTable table;
    for (const auto& [key, c] : counts)
        table.add(key.origin, key.destination, key.period,
                  static_cast<double>(c.first) + static_cast<double>(c.second) / shared_occupancy);
    return table;
}

// ---------------------------------------------------------------- daily chain

DayResult daily_step(const ScenarioBundle& bundle, const SkimSet& skims, const assignment::Accessibility& access,
                     int year) {
    const auto& s = bundle.settings;
    const StreamFactory streams{s.global_seed, year};
    const unsigned threads = s.threads;
    const auto sample = static_cast<std::size_t>(s.demand.destination_sample_size);

    DayResult r;
    r.population = bundle.population;
    const auto zones = zone_data(bundle.zones, r.population, access);
    if (zones.zone_ids != skims.zone_ids()) throw ValidationError("skims do not match the zone system");

    workplace_choice(r.population, zones, skims, bind_spec(bundle.specs, "workplace"), sample, streams, threads);
    auto_ownership(r.population, zones, bind_spec(bundle.specs, "auto_ownership"), streams, threads);
    r.patterns = cdap(r.population, bind_spec(bundle.specs, "cdap"), s.demand, streams, threads);
    r.tours = generate_tours(r.population, r.patterns, bind_spec(bundle.specs, "nm_frequency"), streams);
    tour_destination(r.tours, r.population, zones, skims, bind_spec(bundle.specs, "destination_school"),
                     bind_spec(bundle.specs, "destination_other"), sample, streams, threads);
    departure_time(r.tours, r.population, bundle.specs, streams, threads);
    tour_mode(r.tours, r.population, skims, bind_spec(bundle.specs, "tour_mode"), s.demand, s.periods, streams,
              threads);
    r.trips = make_trips(r.tours);
    trip_mode(r.trips, r.tours, r.population, skims, bind_spec(bundle.specs, "trip_mode"), s.demand, s.periods,
              streams, threads);
    r.trip_table = build_trip_table(r.trips, s.periods, s.demand.shared_occupancy);
    return r;
}

void write_outputs(const std::filesystem::path& dir, const DayResult& day) {
    std::filesystem::create_directories(dir);
    write_population(dir, day.population);
    {
        csv::Writer w(dir / "patterns.csv", {"person_id", "pattern"});
        for (std::size_t i = 0; i < day.patterns.size(); ++i) {
            w.cell(day.population.persons[i].person_id).cell(to_string(day.patterns[i]));
            w.end_row();
        }
    }
    {
        csv::Writer w(dir / "tours.csv", {"tour_id", "person_id", "household_id", "purpose", "origin", "destination",
                                          "mode", "depart_hour", "return_hour"});
        for (const auto& t : day.tours) {
            w.cell(t.tour_id).cell(t.person_id).cell(t.household_id).cell(to_string(t.purpose)).cell(t.origin)
                .cell(t.destination).cell(to_string(t.mode)).cell(t.depart_hour).cell(t.return_hour);
            w.end_row();
        }
    }
    {
        csv::Writer w(dir / "trips.csv", {"trip_id", "tour_id", "person_id", "origin", "destination", "hour", "mode"});
        for (const auto& t : day.trips) {
            w.cell(t.trip_id).cell(t.tour_id).cell(t.person_id).cell(t.origin).cell(t.destination).cell(t.hour)
                .cell(to_string(t.mode));
            w.end_row();
        }
    }
    day.trip_table.write_csv(dir / "trip_table.csv");
    {
        std::array<std::int64_t, 4> count{};
        for (const auto& t : day.trips) ++count[static_cast<std::size_t>(t.mode)];
        const double total = static_cast<double>(day.trips.size());
        csv::Writer w(dir / "mode_shares.csv", {"mode", "trips", "share"});
        for (auto m : kModes) {
            const auto c = count[static_cast<std::size_t>(m)];
            w.cell(to_string(m)).cell(c).cell(total > 0.0 ? static_cast<double>(c) / total : 0.0);
            w.end_row();
        }
    }
}

} // namespace urbanflow::demand
