#include "urbanflow/landuse.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "urbanflow/csv.hpp"
#include "urbanflow/error.hpp"

namespace urbanflow::landuse {

namespace {

// Indices of k uniform draws without replacement from [0, n).
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, RandomStream& stream) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + stream.below(n - i)]);
    idx.resize(k);
    return idx;
}

std::map<ZoneId, std::size_t> zone_index(const std::vector<Zone>& zones) {
    std::map<ZoneId, std::size_t> index;
    for (std::size_t i = 0; i < zones.size(); ++i) index.emplace(zones[i].zone_id, i);
    return index;
}

struct ZoneAccess {
    double log_access = 0.0;
    double logsum = 0.0;
};

std::vector<ZoneAccess> access_for(const std::vector<Zone>& zones, const assignment::Accessibility& access) {
    std::map<ZoneId, ZoneAccess> by_zone;
    for (std::size_t i = 0; i < access.zone_ids.size(); ++i)
        by_zone[access.zone_ids[i]] = {std::log1p(access.jobs_within[i]), access.logsum[i]};
    std::vector<ZoneAccess> out;
    out.reserve(zones.size());
    for (const auto& z : zones) {
        const auto it = by_zone.find(z.zone_id);
        if (it == by_zone.end()) throw ValidationError("accessibility missing zone " + std::to_string(z.zone_id));
        out.push_back(it->second);
    }
    return out;
}

template <class Record, class GetId>
std::int64_t max_id(const std::vector<Record>& v, GetId id) {
    std::int64_t m = 0;
    for (const auto& r : v) m = std::max(m, id(r));
    return m;
}

} // namespace

Population transition(const Population& population, const ControlTotal& target, const StreamFactory& streams) {
    if (target.households < 0 || target.jobs < 0) throw ValidationError("control totals must be non-negative");
    Population out = population;

    // Households travel with their persons.
    const auto households = static_cast<std::int64_t>(population.households.size());
    if (target.households > households) {
        if (households == 0) throw ValidationError("cannot grow households from an empty population");
        std::map<HouseholdId, std::vector<std::size_t>> members;
        for (std::size_t i = 0; i < population.persons.size(); ++i)
            members[population.persons[i].household_id].push_back(i);
        auto next_hh = max_id(population.households, [](const Household& h) { return h.household_id; });
        auto next_person = max_id(population.persons, [](const Person& p) { return p.person_id; });
        auto stream = streams("transition_households", 0);
        for (std::int64_t k = households; k < target.households; ++k) {
            const auto& src = population.households[stream.below(static_cast<std::uint64_t>(households))];
            Household h = src;
            h.household_id = ++next_hh;
            h.zone_id = kUnplaced;
            h.tenure_years = 0;
            out.households.push_back(h);
            for (const auto i : members[src.household_id]) {
                Person p = population.persons[i];
                p.person_id = ++next_person;
                p.household_id = h.household_id;
                p.workplace_zone.reset();
                out.persons.push_back(p);
            }
        }
    } else if (target.households < households) {
        auto stream = streams("transition_households", 0);
        const auto drop = sample_without_replacement(population.households.size(),
                                                     static_cast<std::size_t>(households - target.households), stream);
        std::set<HouseholdId> removed;
        for (const auto i : drop) removed.insert(population.households[i].household_id);
        std::erase_if(out.households, [&](const Household& h) { return removed.count(h.household_id) > 0; });
        std::erase_if(out.persons, [&](const Person& p) { return removed.count(p.household_id) > 0; });
    }

    const auto jobs = static_cast<std::int64_t>(population.jobs.size());
    if (target.jobs > jobs) {
        if (jobs == 0) throw ValidationError("cannot grow jobs from an empty population");
        auto next_job = max_id(population.jobs, [](const Job& j) { return j.job_id; });
        auto stream = streams("transition_jobs", 0);
        for (std::int64_t k = jobs; k < target.jobs; ++k) {
            Job j = population.jobs[stream.below(static_cast<std::uint64_t>(jobs))];
            j.job_id = ++next_job;
            j.zone_id = kUnplaced;
            out.jobs.push_back(j);
        }
    } else if (target.jobs < jobs) {
        auto stream = streams("transition_jobs", 0);
        const auto drop =
            sample_without_replacement(population.jobs.size(), static_cast<std::size_t>(jobs - target.jobs), stream);
        std::set<JobId> removed;
        for (const auto i : drop) removed.insert(population.jobs[i].job_id);
        std::erase_if(out.jobs, [&](const Job& j) { return removed.count(j.job_id) > 0; });
    }
    return out;
}

std::vector<HouseholdId> relocation(Population& population, double rate, const StreamFactory& streams) {
    if (!(rate >= 0.0 && rate <= 1.0)) throw ValidationError("annual move rate must lie in [0, 1]");
    std::vector<HouseholdId> movers;
    for (auto& h : population.households) {
        if (h.zone_id == kUnplaced) continue;
        auto stream = streams("relocation", static_cast<std::uint64_t>(h.household_id));
        if (stream.uniform() < rate) {
            h.zone_id = kUnplaced;
            movers.push_back(h.household_id);
        }
    }
    return movers;
}

std::vector<Zone> developer_step(std::vector<Zone> zones, const DeveloperParams& params) {
    for (auto& z : zones) {
        if (!(z.avg_price > params.price_to_build_threshold)) continue;
        const auto slack = z.max_residential_units - z.residential_units;
        if (slack <= 0) continue;
        const auto share = static_cast<std::int64_t>(
            std::floor(params.max_share_growth_per_zone * static_cast<double>(z.residential_units)));
        const auto add = std::min({params.units_per_build, slack, share});
        if (add > 0) z.residential_units += add;
    }
    return zones;
}

std::vector<std::int64_t> households_per_zone(const std::vector<Zone>& zones, const Population& population) {
    const auto index = zone_index(zones);
    std::vector<std::int64_t> count(zones.size(), 0);
    for (const auto& h : population.households)
        if (h.zone_id != kUnplaced) ++count[index.at(h.zone_id)];
    return count;
}

std::vector<std::int64_t> jobs_per_zone(const std::vector<Zone>& zones, const Population& population) {
    const auto index = zone_index(zones);
    std::vector<std::int64_t> count(zones.size(), 0);
    for (const auto& j : population.jobs)
        if (j.zone_id != kUnplaced) ++count[index.at(j.zone_id)];
    return count;
}

LocationChoiceResult household_location_choice(Population& population, std::vector<Zone>& zones,
                                               const choice::BoundSpec& hlc,
                                               const assignment::Accessibility& access,
                                               const LandUseSettings& settings, const StreamFactory& streams) {
    std::vector<std::size_t> unplaced;
    std::vector<double> attrs;
    for (std::size_t i = 0; i < population.households.size(); ++i) {
        const auto& h = population.households[i];
        if (h.zone_id != kUnplaced) continue;
        unplaced.push_back(i);
        attrs.insert(attrs.end(), {h.income, static_cast<double>(h.size), static_cast<double>(h.autos)});
    }
    LocationChoiceResult out;
    if (unplaced.empty()) return out;

    const auto occupied = households_per_zone(zones, population);
    const auto zone_access = access_for(zones, access);
    choice::ChoiceSet submarkets(0, 4);
    std::vector<double> supply;
    for (std::size_t i = 0; i < zones.size(); ++i) {
        const auto& z = zones[i];
        const double row[4] = {z.avg_price, zone_access[i].log_access, zone_access[i].logsum,
                               std::log1p(static_cast<double>(z.residential_units))};
        submarkets.add(z.zone_id, row);
        supply.push_back(static_cast<double>(std::max<std::int64_t>(0, z.residential_units - occupied[i])));
    }

    choice::MarketClearingOptions options;
    options.gamma = settings.price_gamma;
    options.tol = settings.clearing_tol;
    options.max_iters = settings.clearing_max_iters;
    options.factor_floor = settings.price_factor_floor;
    options.factor_ceiling = settings.price_factor_ceiling;

    auto stream = streams("household_location", 0);
    const auto r = choice::market_clearing_assignment(hlc, {attrs, 3}, std::move(submarkets), supply, "price", stream,
                                                      options);
    for (std::size_t k = 0; k < unplaced.size(); ++k)
        population.households[unplaced[k]].zone_id = zones[r.placement[k]].zone_id;
    for (std::size_t i = 0; i < zones.size(); ++i) zones[i].avg_price = r.prices[i];
    out.placed = static_cast<int>(unplaced.size());
    out.iterations = r.iterations;
    out.converged = r.converged;
    return out;
}

LocationChoiceResult job_location_choice(Population& population, const std::vector<Zone>& zones,
                                         const choice::BoundSpec& elc, const assignment::Accessibility& access,
                                         const StreamFactory& streams) {
    std::vector<std::size_t> unplaced;
    std::vector<double> attrs;
    for (std::size_t i = 0; i < population.jobs.size(); ++i) {
        const auto& j = population.jobs[i];
        if (j.zone_id != kUnplaced) continue;
        unplaced.push_back(i);
        attrs.insert(attrs.end(), {j.sector == "retail" ? 1.0 : 0.0, j.sector == "office" ? 1.0 : 0.0,
                                   j.sector == "industrial" ? 1.0 : 0.0});
    }
    LocationChoiceResult out;
    if (unplaced.empty()) return out;

    const auto jobs_in = jobs_per_zone(zones, population);
    const auto households_in = households_per_zone(zones, population);
    const auto zone_access = access_for(zones, access);
    choice::ChoiceSet alternatives(0, 3);
    std::vector<double> capacity;
    for (std::size_t i = 0; i < zones.size(); ++i) {
        const auto& z = zones[i];
        const auto vacant = std::max<std::int64_t>(0, z.job_spaces - jobs_in[i]);
        const double row[3] = {zone_access[i].log_access, std::log1p(static_cast<double>(z.job_spaces)),
                               std::log1p(static_cast<double>(households_in[i]))};
        alternatives.add(z.zone_id, row, vacant > 0);
        capacity.push_back(static_cast<double>(vacant));
    }
    auto stream = streams("job_location", 0);
    const auto placement = choice::capacity_constrained_placement(elc, {attrs, 3}, alternatives, capacity, stream);
    for (std::size_t k = 0; k < unplaced.size(); ++k) population.jobs[unplaced[k]].zone_id = zones[placement[k]].zone_id;
    out.placed = static_cast<int>(unplaced.size());
    return out;
}

YearResult annual_step(const ScenarioBundle& bundle, int year, const assignment::Accessibility& access) {
    const auto& s = bundle.settings;
    const auto target = bundle.control_totals.find(year);
    if (target == bundle.control_totals.end()) throw ValidationError("no control totals for year " + std::to_string(year));
    const StreamFactory streams{s.global_seed, year};

    YearResult r;
    r.population = transition(bundle.population, target->second, streams);
    std::set<HouseholdId> stayers;
    for (const auto& h : r.population.households)
        if (h.zone_id != kUnplaced) stayers.insert(h.household_id);
    const auto movers = relocation(r.population, s.landuse.annual_move_rate, streams);
    for (const auto id : movers) stayers.erase(id);
    r.movers = movers.size();

    r.zones = developer_step(bundle.zones, s.landuse.developer);
    r.households = household_location_choice(r.population, r.zones, bind_spec(bundle.specs, "hlc"), access,
                                             s.landuse, streams);
    r.jobs = job_location_choice(r.population, r.zones, bind_spec(bundle.specs, "elc"), access, streams);

    for (auto& h : r.population.households) h.tenure_years = stayers.count(h.household_id) ? h.tenure_years + 1 : 0;
    return r;
}

void write_summary(const std::filesystem::path& path, int year, const std::vector<Zone>& zones,
                   const Population& population) {
    const auto households = households_per_zone(zones, population);
    const auto jobs = jobs_per_zone(zones, population);
    csv::Writer w(path, {"year", "zone_id", "households", "jobs", "units", "price"});
    for (std::size_t i = 0; i < zones.size(); ++i) {
        w.cell(year).cell(zones[i].zone_id).cell(households[i]).cell(jobs[i]).cell(zones[i].residential_units)
            .cell(zones[i].avg_price);
        w.end_row();
    }
}

} // namespace urbanflow::landuse
