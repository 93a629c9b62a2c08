#include "urbanflow/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <deque>
#include <fstream>
#include <iterator>
#include <map>
#include <set>
#include <sstream>

#include "urbanflow/config.hpp"
#include "urbanflow/csv.hpp"
#include "urbanflow/demand.hpp"
#include "urbanflow/error.hpp"
#include "urbanflow/landuse.hpp"
#include "urbanflow/random.hpp"

namespace urbanflow::pipeline {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

std::uint64_t fnv_update(std::uint64_t h, std::string_view bytes) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= kFnvPrime;
    }
    return h;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot read " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path stage_dir(const fs::path& scenario_dir, int year, std::string_view stage) {
    return scenario_dir / std::to_string(year) / std::string(stage);
}

// Runs one stage, records wall time and wraps failures with stage and year.
template <class Fn>
void stage(std::string_view name, int year, std::vector<StageTiming>* timings, Fn&& fn) {
    const auto start = std::chrono::steady_clock::now();
    try {
        fn();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(std::string(name), year, e.what());
    }
    if (timings) {
        const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
        timings->push_back({year, std::string(name), dt.count()});
    }
}

std::vector<std::int64_t> placed_jobs(const std::vector<Zone>& zones, const Population& population) {
    return landuse::jobs_per_zone(zones, population);
}

} // namespace

std::uint64_t directory_checksum(const fs::path& dir) {
    std::vector<std::string> files;
    for (const auto& entry : fs::recursive_directory_iterator(dir))
        if (entry.is_regular_file()) files.push_back(fs::relative(entry.path(), dir).generic_string());
    std::sort(files.begin(), files.end());
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& f : files) {
        h = fnv_update(h, f);
        h = fnv_update(h, std::string_view("\0", 1));
        h = fnv_update(h, slurp(dir / f));
    }
    return h;
}

std::string hex(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// ---------------------------------------------------------------- manifest

void RunManifest::write(const fs::path& path) const {
    Config cfg;
    cfg.set("run", "scenario", scenario);
    cfg.set("run", "global_seed", std::to_string(global_seed));
    cfg.set("run", "start_year", std::to_string(start_year));
    cfg.set("run", "end_year", std::to_string(end_year));
    cfg.set("layout", "stage_dir", "<year>/<stage>");
    cfg.set("layout", "base", "base/feedback");
    cfg.set("base", "feedback", base_checksum);
    for (const auto& y : years)
        for (std::size_t s = 0; s < kStages.size(); ++s)
            cfg.set("year." + std::to_string(y.year), kStages[s], y.checksums[s]);
    cfg.write(path);
}

RunManifest RunManifest::read(const fs::path& path) {
    if (!fs::exists(path)) throw ConfigError("manifest not found: " + path.string());
    const auto cfg = Config::read(path);
    RunManifest m;
    m.scenario = cfg.text("run", "scenario");
    m.global_seed = static_cast<std::uint64_t>(cfg.integer("run", "global_seed"));
    m.start_year = static_cast<int>(cfg.integer("run", "start_year"));
    m.end_year = static_cast<int>(cfg.integer("run", "end_year"));
    m.base_checksum = cfg.text("base", "feedback", "");
    for (int y = m.start_year; y <= m.end_year; ++y) {
        const auto section = "year." + std::to_string(y);
        YearRecord r;
        r.year = y;
        for (std::size_t s = 0; s < kStages.size(); ++s) r.checksums[s] = cfg.text(section, kStages[s]);
        m.years.push_back(r);
    }
    return m;
}

// ---------------------------------------------------------------- feedback

std::array<std::vector<double>, 4> read_link_times(const fs::path& path, const assignment::RoadGraph& graph) {
    std::map<LinkId, std::size_t> index;
    for (std::size_t a = 0; a < graph.link_count(); ++a) index.emplace(graph.link(a).link_id, a);
    std::array<std::vector<double>, 4> times;
    std::array<std::size_t, 4> seen{};
    for (auto& t : times) t.assign(graph.link_count(), 0.0);
    const auto t = csv::Table::read(path);
    const auto cp = t.column("period"), cl = t.column("link_id"), ct = t.column("time");
    for (std::size_t r = 0; r < t.rows(); ++r) {
        const auto p = static_cast<std::size_t>(parse_period(t.text(r, cp)));
        const auto it = index.find(t.integer(r, cl));
        if (it == index.end()) t.fail(r, cl, "unknown link");
        times[p][it->second] = t.number(r, ct);
        ++seen[p];
    }
    for (std::size_t p = 0; p < 4; ++p)
        if (seen[p] != graph.link_count())
            throw ValidationError(path.string() + ": incomplete link times for period " +
                                  std::string(to_string(kPeriods[p])));
    return times;
}

assignment::Accessibility compute_accessibility(const ScenarioBundle& bundle, const std::vector<Zone>& zones,
                                                const Population& population, const SkimSet& skims) {
    std::vector<Zone> sorted = zones;
    std::sort(sorted.begin(), sorted.end(), [](const Zone& a, const Zone& b) { return a.zone_id < b.zone_id; });
    const auto counts = placed_jobs(sorted, population);
    std::vector<double> jobs(counts.begin(), counts.end());
    assignment::Accessibility a;
    a.zone_ids = skims.zone_ids();
    a.jobs_within =
        assignment::cumulative_accessibility(skims, jobs, bundle.settings.landuse.accessibility_threshold_min);
    a.logsum = assignment::logsum_accessibility(skims, jobs, bind_spec(bundle.specs, "accessibility_logsum"),
                                                bundle.settings.demand.walk_threshold_min);
    return a;
}

void write_feedback(const fs::path& dir, const SkimSet& skims, const assignment::Accessibility& access) {
    fs::create_directories(dir);
    skims.write_csv(dir / "skims.csv");
    access.write_csv(dir / "accessibility.csv");
}

void run_base(const ScenarioBundle& bundle, const fs::path& scenario_dir, std::vector<StageTiming>* timings) {
    stage("feedback", 0, timings, [&] {
        const assignment::RoadGraph graph(bundle.network);
        const auto& s = bundle.settings;
        const auto skims = assignment::free_flow_skims(graph, s.skims, s.demand, s.threads);
        write_feedback(scenario_dir / "base" / "feedback", skims,
                       compute_accessibility(bundle, bundle.zones, bundle.population, skims));
    });
}

// ---------------------------------------------------------------- one year

ScenarioBundle run_year(const ScenarioBundle& bundle, int year, const fs::path& scenario_dir,
                        const fs::path& prior_feedback, std::vector<StageTiming>* timings) {
    const auto& s = bundle.settings;
    const auto zone_ids = bundle.zone_ids();
    const auto landuse_dir = stage_dir(scenario_dir, year, "landuse");
    const auto demand_dir = stage_dir(scenario_dir, year, "demand");
    const auto assignment_dir = stage_dir(scenario_dir, year, "assignment");
    const auto feedback_dir = stage_dir(scenario_dir, year, "feedback");

    stage("landuse", year, timings, [&] {
        const auto access = assignment::Accessibility::read_csv(prior_feedback / "accessibility.csv");
        const auto r = landuse::annual_step(bundle, year, access);
        fs::create_directories(landuse_dir);
        write_zones(landuse_dir / "zones.csv", r.zones);
        write_population(landuse_dir, r.population);
        landuse::write_summary(landuse_dir / "landuse_summary.csv", year, r.zones, r.population);
    });

    stage("demand", year, timings, [&] {
        ScenarioBundle b = bundle;
        b.zones = load_zones(landuse_dir / "zones.csv");
        b.population = load_population(landuse_dir / "households.csv", landuse_dir / "persons.csv",
                                       landuse_dir / "jobs.csv");
        const auto skims = SkimSet::read_csv(prior_feedback / "skims.csv", zone_ids);
        const auto access = assignment::Accessibility::read_csv(prior_feedback / "accessibility.csv");
        demand::write_outputs(demand_dir, demand::daily_step(b, skims, access, year));
    });

    const assignment::RoadGraph graph(bundle.network);
    stage("assignment", year, timings, [&] {
        const auto trips = TripTable::read_csv(demand_dir / "trip_table.csv");
        assignment::FrankWolfeOptions options;
        options.gap_tol = s.assignment.gap_tol;
        options.max_iters = s.assignment.max_iters;
        options.line_search_tol = s.assignment.line_search_tol;
        options.threads = s.threads;

        fs::create_directories(assignment_dir);
        csv::Writer flows(assignment_dir / "link_flows.csv", {"period", "link_id", "flow", "time"});
        csv::Writer convergence(assignment_dir / "convergence.csv", {"period", "iteration", "relative_gap", "objective"});
        csv::Writer energy(assignment_dir / "energy.csv", {"period", "vmt", "vht", "energy_mj"});
        csv::Writer travel(assignment_dir / "travel_times.csv",
                           {"period", "vehicle_trips", "iterations", "converged", "mean_trip_time_min"});
        assignment::EnergyTotals day;
        for (auto p : kPeriods) {
            const double hours = s.periods.duration_hours(p);
            const auto od = assignment::period_demand(graph, trips, p, hours);
            const auto r = assignment::frank_wolfe_ue(graph, od, options, p);
            for (std::size_t a = 0; a < graph.link_count(); ++a) {
                flows.cell(to_string(p)).cell(graph.link(a).link_id).cell(r.flow[a]).cell(r.time[a]);
                flows.end_row();
            }
            for (std::size_t k = 0; k < r.relative_gap.size(); ++k) {
                convergence.cell(to_string(p)).cell(k + 1).cell(r.relative_gap[k]).cell(r.objective[k]);
                convergence.end_row();
            }
            const auto e = assignment::energy_estimate(graph, r.flow, r.time, hours);
            day += e;
            energy.cell(to_string(p)).cell(e.vmt).cell(e.vht).cell(e.energy_mj);
            energy.end_row();

            double interzonal = 0.0, experienced = 0.0;
            for (std::size_t o = 0; o < od.zones; ++o)
                for (std::size_t d = 0; d < od.zones; ++d)
                    if (o != d) interzonal += od.at(o, d);
            for (std::size_t a = 0; a < graph.link_count(); ++a) experienced += r.flow[a] * r.time[a];
            travel.cell(to_string(p)).cell(trips.total(p)).cell(r.iterations).cell(r.converged ? 1 : 0);
            if (interzonal > 0.0) travel.cell(experienced / interzonal);
            else travel.empty();
            travel.end_row();
        }
        energy.cell("DAY").cell(day.vmt).cell(day.vht).cell(day.energy_mj);
        energy.end_row();
    });

    stage("feedback", year, timings, [&] {
        const auto times = read_link_times(assignment_dir / "link_flows.csv", graph);
        const auto skims = assignment::extract_skims(graph, times, s.skims, s.demand, s.threads);
        const auto zones = load_zones(landuse_dir / "zones.csv");
        const auto population =
            load_population(landuse_dir / "households.csv", landuse_dir / "persons.csv", landuse_dir / "jobs.csv");
        write_feedback(feedback_dir, skims, compute_accessibility(bundle, zones, population, skims));
    });

    ScenarioBundle next = bundle;
    next.zones = load_zones(landuse_dir / "zones.csv");
    next.population =
        load_population(demand_dir / "households.csv", demand_dir / "persons.csv", demand_dir / "jobs.csv");
    return next;
}

RunManifest run_scenario(const ScenarioBundle& bundle, const fs::path& out_root) {
    const auto& s = bundle.settings;
    if (s.end_year < s.start_year) throw ConfigError("end_year precedes start_year");
    for (int y = s.start_year; y <= s.end_year; ++y)
        if (!bundle.control_totals.count(y)) throw ConfigError("control totals missing year " + std::to_string(y));

    const auto scenario_dir = out_root / s.scenario_name;
    fs::remove_all(scenario_dir);
    fs::create_directories(scenario_dir);
    settings_to_config(s).write(scenario_dir / "settings.cfg");

    std::vector<StageTiming> timings;
    RunManifest m;
    m.scenario = s.scenario_name;
    m.global_seed = s.global_seed;
    m.start_year = s.start_year;
    m.end_year = s.end_year;

    const auto write_timings = [&] {
        std::ofstream out(out_root / (s.scenario_name + ".timings.txt"));
        out << "year,stage,seconds\n";
        for (const auto& t : timings) out << t.year << ',' << t.stage << ',' << t.seconds << '\n';
    };

    try {
        run_base(bundle, scenario_dir, &timings);
        m.base_checksum = hex(directory_checksum(scenario_dir / "base" / "feedback"));
        auto current = bundle;
        auto prior = scenario_dir / "base" / "feedback";
        for (int y = s.start_year; y <= s.end_year; ++y) {
            current = run_year(current, y, scenario_dir, prior, &timings);
            YearRecord r;
            r.year = y;
            for (std::size_t k = 0; k < kStages.size(); ++k)
                r.checksums[k] = hex(directory_checksum(stage_dir(scenario_dir, y, kStages[k])));
            m.years.push_back(r);
            prior = stage_dir(scenario_dir, y, "feedback");
        }
    } catch (...) {
        write_timings();
        throw;
    }
    m.write(scenario_dir / "manifest.txt");
    write_timings();
    return m;
}

// ---------------------------------------------------------------- compare / report

namespace {

struct YearMetrics {
    std::deque<std::pair<std::string, std::map<std::string, double>>> groups; // stable references
};

std::map<std::string, double>& group(YearMetrics& m, const std::string& name) {
    for (auto& [n, values] : m.groups)
        if (n == name) return values;
    m.groups.emplace_back(name, std::map<std::string, double>{});
    return m.groups.back().second;
}

YearMetrics year_metrics(const fs::path& root, int year) {
    YearMetrics m;
    {
        const auto t = csv::Table::read(stage_dir(root, year, "landuse") / "landuse_summary.csv");
        const auto cz = t.column("zone_id"), ch = t.column("households"), cj = t.column("jobs");
        auto& hh = group(m, "households");
        auto& jobs = group(m, "jobs");
        for (std::size_t r = 0; r < t.rows(); ++r) {
            hh[t.text(r, cz)] = t.number(r, ch);
            jobs[t.text(r, cz)] = t.number(r, cj);
        }
    }
    {
        const auto t = csv::Table::read(stage_dir(root, year, "assignment") / "energy.csv");
        const auto cp = t.column("period");
        for (const char* metric : {"vmt", "vht", "energy_mj"}) {
            const auto c = t.column(metric);
            auto& g = group(m, metric);
            for (std::size_t r = 0; r < t.rows(); ++r) g[t.text(r, cp)] = t.number(r, c);
        }
    }
    {
        const auto t = csv::Table::read(stage_dir(root, year, "assignment") / "travel_times.csv");
        const auto cp = t.column("period"), ct = t.column("mean_trip_time_min"), cv = t.column("vehicle_trips");
        auto& mean = group(m, "mean_trip_time_min");
        auto& trips = group(m, "vehicle_trips");
        for (std::size_t r = 0; r < t.rows(); ++r) {
            trips[t.text(r, cp)] = t.number(r, cv);
            if (!t.text(r, ct).empty()) mean[t.text(r, cp)] = t.number(r, ct);
        }
    }
    {
        const auto t = csv::Table::read(stage_dir(root, year, "demand") / "mode_shares.csv");
        const auto cm = t.column("mode"), cs = t.column("share");
        auto& shares = group(m, "mode_share");
        for (std::size_t r = 0; r < t.rows(); ++r) shares[t.text(r, cm)] = t.number(r, cs);
    }
    return m;
}

} // namespace

std::vector<CompareRow> compare_scenarios(const fs::path& manifest_a, const fs::path& manifest_b) {
    const auto a = RunManifest::read(manifest_a);
    const auto b = RunManifest::read(manifest_b);
    if (a.start_year != b.start_year || a.end_year != b.end_year)
        throw ValidationError("runs cover different years: " + std::to_string(a.start_year) + "-" +
                              std::to_string(a.end_year) + " vs " + std::to_string(b.start_year) + "-" +
                              std::to_string(b.end_year));
    const auto root_a = manifest_a.parent_path(), root_b = manifest_b.parent_path();

    std::vector<CompareRow> rows;
    for (int y = a.start_year; y <= a.end_year; ++y) {
        const auto ma = year_metrics(root_a, y), mb = year_metrics(root_b, y);
        for (const auto& [metric, values_a] : ma.groups) {
            const std::map<std::string, double>* values_b = nullptr;
            for (const auto& [n, v] : mb.groups)
                if (n == metric) values_b = &v;
            std::set<std::string> keys_a, keys_b;
            for (const auto& [k, v] : values_a) keys_a.insert(k);
            if (values_b)
                for (const auto& [k, v] : *values_b) keys_b.insert(k);
            if (metric == "households" && keys_a != keys_b)
                throw ValidationError("runs use different zone systems (year " + std::to_string(y) + ")");
            std::set<std::string> keys = keys_a;
            keys.insert(keys_b.begin(), keys_b.end());
            // Zone keys sort numerically, everything else alphabetically.
            std::vector<std::string> ordered(keys.begin(), keys.end());
            if (metric == "households" || metric == "jobs")
                std::sort(ordered.begin(), ordered.end(),
                          [](const std::string& l, const std::string& r) { return std::stoll(l) < std::stoll(r); });
            for (const auto& k : ordered) {
                CompareRow row;
                row.year = y;
                row.metric = metric;
                row.key = k;
                if (const auto it = values_a.find(k); it != values_a.end()) row.a = it->second;
                if (values_b)
                    if (const auto it = values_b->find(k); it != values_b->end()) row.b = it->second;
                rows.push_back(row);
            }
        }
    }
    return rows;
}

void write_comparison(const fs::path& path, const std::vector<CompareRow>& rows) {
    csv::Writer w(path, {"year", "metric", "key", "a", "b", "delta", "relative_delta"});
    for (const auto& r : rows) {
        w.cell(r.year).cell(r.metric).cell(r.key).cell(r.a).cell(r.b).cell(r.b - r.a);
        if (r.a != 0.0) w.cell((r.b - r.a) / r.a);
        else w.empty();
        w.end_row();
    }
}

std::string report(const fs::path& manifest_path) {
    const auto m = RunManifest::read(manifest_path);
    const auto root = manifest_path.parent_path();
    std::ostringstream out;
    out << "scenario " << m.scenario << " (seed " << m.global_seed << "), years " << m.start_year << "-"
        << m.end_year << "\n";
    char line[256];
    std::snprintf(line, sizeof line, "%-6s %10s %8s %12s %12s %12s %14s %10s\n", "year", "households", "jobs",
                  "veh_trips", "vmt_km", "vht_h", "energy_mj", "max_gap");
    out << line;
    for (const auto& y : m.years) {
        const auto metrics = year_metrics(root, y.year);
        double households = 0.0, jobs = 0.0, trips = 0.0, vmt = 0.0, vht = 0.0, energy = 0.0;
        for (const auto& [name, values] : metrics.groups) {
            double sum = 0.0;
            for (const auto& [k, v] : values)
                if (k != "DAY") sum += v;
            if (name == "households") households = sum;
            if (name == "jobs") jobs = sum;
            if (name == "vehicle_trips") trips = sum;
            if (name == "vmt") vmt = values.count("DAY") ? values.at("DAY") : sum;
            if (name == "vht") vht = values.count("DAY") ? values.at("DAY") : sum;
            if (name == "energy_mj") energy = values.count("DAY") ? values.at("DAY") : sum;
        }
        double max_gap = 0.0;
        const auto conv = csv::Table::read(stage_dir(root, y.year, "assignment") / "convergence.csv");
        const auto cp = conv.column("period"), cg = conv.column("relative_gap");
        std::map<std::string, double> last;
        for (std::size_t r = 0; r < conv.rows(); ++r) last[conv.text(r, cp)] = conv.number(r, cg);
        for (const auto& [p, g] : last) max_gap = std::max(max_gap, g);
        std::snprintf(line, sizeof line, "%-6d %10.0f %8.0f %12.1f %12.1f %12.1f %14.1f %10.2e\n", y.year, households,
                      jobs, trips, vmt, vht, energy, max_gap);
        out << line;
    }
    return out.str();
}

} // namespace urbanflow::pipeline
