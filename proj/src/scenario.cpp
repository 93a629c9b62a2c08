#include "urbanflow/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>

#include "urbanflow/csv.hpp"
#include "urbanflow/error.hpp"

namespace urbanflow {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> mode_attributes() {
    return {"time", "is_drive_alone", "is_shared", "is_transit", "is_walk"};
}

std::vector<std::string> hour_attributes() {
    std::vector<std::string> out;
    for (int h = 0; h < 24; ++h) out.push_back("hour_" + std::to_string(h));
    return out;
}

std::map<std::string, choice::Schema, std::less<>> build_schemas() {
    std::map<std::string, choice::Schema, std::less<>> s;
    s["hlc"] = {{"income", "size", "autos"}, {"price", "log_access", "logsum_access", "log_units"}};
    s["elc"] = {{"is_retail", "is_office", "is_industrial"}, {"log_access", "log_job_spaces", "log_households"}};
    s["workplace"] = {{"income"}, {"time", "log_size"}};
    s["destination_school"] = {{"income", "age"}, {"time", "log_size"}};
    s["destination_other"] = {{"income", "age"}, {"time", "log_size"}};
    s["auto_ownership"] = {{"income", "size", "workers", "accessibility"}, {"autos", "is_1", "is_2"}};
    s["cdap"] = {{"age", "is_worker", "is_student", "income", "autos", "household_size"}, {"is_M", "is_N", "is_H"}};
    s["nm_frequency"] = {{"age", "is_worker", "income", "autos"}, {"is_1", "is_2"}};
    s["tour_mode"] = {{"income", "autos", "size"}, mode_attributes()};
    s["trip_mode"] = {{"income", "autos", "size"}, mode_attributes()};
    s["departure_work"] = {{"age"}, hour_attributes()};
    s["departure_school"] = {{"age"}, hour_attributes()};
    s["departure_other"] = {{"age"}, hour_attributes()};
    s["duration_other"] = {{"age"}, {"is_4h"}};
    s["accessibility_logsum"] = {{}, mode_attributes()};
    return s;
}

template <class T, class Key>
void sort_by(std::vector<T>& v, Key key) {
    std::sort(v.begin(), v.end(), [&](const T& a, const T& b) { return key(a) < key(b); });
}

std::string piece(std::string_view what, std::int64_t id) { return std::string(what) + " " + std::to_string(id); }

std::array<Period, 24> parse_hours(const Config& cfg) {
    PeriodMap defaults;
    if (!cfg.has("periods", "AM") && !cfg.has("periods", "MD") && !cfg.has("periods", "PM")) return defaults.hours();

    std::array<Period, 24> hours{};
    hours.fill(Period::NT);
    std::array<bool, 24> claimed{};
    for (auto p : {Period::AM, Period::MD, Period::PM}) {
        const auto raw = cfg.text("periods", to_string(p));
        std::string_view rest = raw;
        while (!rest.empty()) {
            const auto comma = rest.find(',');
            std::string_view item = rest.substr(0, comma);
            rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
            const auto dash = item.find('-');
            const auto lo = csv::parse_integer(item.substr(0, dash));
            const auto hi = dash == std::string_view::npos ? lo : csv::parse_integer(item.substr(dash + 1));
            if (!lo || !hi || *lo < 0 || *hi > 23 || *lo > *hi)
                throw ConfigError("periods." + std::string(to_string(p)) + ": bad hour range '" + std::string(item) +
                                  "'");
            for (auto h = *lo; h <= *hi; ++h) {
                if (claimed[static_cast<std::size_t>(h)])
                    throw ConfigError("periods: hour " + std::to_string(h) + " assigned twice");
                claimed[static_cast<std::size_t>(h)] = true;
                hours[static_cast<std::size_t>(h)] = p;
            }
        }
    }
    return hours;
}

std::string format_hours(const PeriodMap& map, Period p) {
    std::string out;
    int h = 0;
    while (h < 24) {
        if (map.period_of(h) != p) {
            ++h;
            continue;
        }
        int end = h;
        while (end + 1 < 24 && map.period_of(end + 1) == p) ++end;
        if (!out.empty()) out += ",";
        out += std::to_string(h) + "-" + std::to_string(end);
        h = end + 1;
    }
    return out;
}

void require(bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
}

} // namespace

const std::map<std::string, choice::Schema, std::less<>>& model_schemas() {
    static const auto schemas = build_schemas();
    return schemas;
}

const choice::Schema& schema_for(std::string_view spec_name) {
    const auto& s = model_schemas();
    const auto it = s.find(spec_name);
    if (it == s.end()) throw ValidationError("unknown utility spec '" + std::string(spec_name) + "'");
    return it->second;
}

choice::BoundSpec bind_spec(const SpecSet& specs, std::string_view name) {
    const auto it = specs.find(name);
    if (it == specs.end()) throw ValidationError("missing utility spec '" + std::string(name) + "'");
    return choice::BoundSpec::bind(it->second, schema_for(name));
}

std::vector<ZoneId> ScenarioBundle::zone_ids() const {
    std::vector<ZoneId> ids;
    for (const auto& z : zones) ids.push_back(z.zone_id);
    return ids;
}

// ---------------------------------------------------------------- settings

RunSettings parse_settings(const Config& cfg) {
    RunSettings s;
    s.scenario_name = cfg.text("scenario", "name", s.scenario_name);
    const auto seed = cfg.integer("scenario", "global_seed", 42);
    require(seed >= 0, "scenario.global_seed must be >= 0");
    s.global_seed = static_cast<std::uint64_t>(seed);
    s.start_year = static_cast<int>(cfg.integer("scenario", "start_year"));
    s.end_year = static_cast<int>(cfg.integer("scenario", "end_year"));
    require(s.end_year >= s.start_year, "scenario.end_year must not precede scenario.start_year");
    const auto threads = cfg.integer("scenario", "threads", 1);
    require(threads >= 1, "scenario.threads must be >= 1");
    s.threads = static_cast<unsigned>(threads);
    require(!s.scenario_name.empty() && s.scenario_name.find_first_of("/\\") == std::string::npos,
            "scenario.name must be a plain directory name");

    s.periods = PeriodMap(parse_hours(cfg));

    auto& a = s.assignment;
    a.gap_tol = cfg.number("assignment", "gap_tol", a.gap_tol);
    a.max_iters = static_cast<int>(cfg.integer("assignment", "max_iters", a.max_iters));
    a.line_search_tol = cfg.number("assignment", "line_search_tol", a.line_search_tol);
    require(a.gap_tol > 0.0, "assignment.gap_tol must be > 0");
    require(a.max_iters >= 1, "assignment.max_iters must be >= 1");
    require(a.line_search_tol > 0.0, "assignment.line_search_tol must be > 0");

    auto& l = s.landuse;
    l.annual_move_rate = cfg.number("landuse", "annual_move_rate", l.annual_move_rate);
    l.price_gamma = cfg.number("landuse", "price_gamma", l.price_gamma);
    l.clearing_tol = cfg.number("landuse", "clearing_tol", l.clearing_tol);
    l.clearing_max_iters = static_cast<int>(cfg.integer("landuse", "clearing_max_iters", l.clearing_max_iters));
    l.price_factor_floor = cfg.number("landuse", "price_factor_floor", l.price_factor_floor);
    l.price_factor_ceiling = cfg.number("landuse", "price_factor_ceiling", l.price_factor_ceiling);
    l.accessibility_threshold_min = cfg.number("landuse", "accessibility_threshold_min", l.accessibility_threshold_min);
    require(l.annual_move_rate >= 0.0 && l.annual_move_rate <= 1.0, "landuse.annual_move_rate must be in [0, 1]");
    require(l.price_gamma > 0.0, "landuse.price_gamma must be > 0");
    require(l.clearing_tol > 0.0, "landuse.clearing_tol must be > 0");
    require(l.clearing_max_iters >= 0, "landuse.clearing_max_iters must be >= 0");
    require(l.price_factor_floor > 0.0 && l.price_factor_floor <= 1.0 && l.price_factor_ceiling >= 1.0,
            "landuse price factor bounds must satisfy 0 < floor <= 1 <= ceiling");

    auto& d = l.developer;
    d.price_to_build_threshold = cfg.number("developer", "price_to_build_threshold", d.price_to_build_threshold);
    d.units_per_build = cfg.integer("developer", "units_per_build", d.units_per_build);
    d.max_share_growth_per_zone = cfg.number("developer", "max_share_growth_per_zone", d.max_share_growth_per_zone);
    require(d.price_to_build_threshold > 0.0 && d.units_per_build > 0 && d.max_share_growth_per_zone > 0.0,
            "developer parameters must all be > 0");

    auto& m = s.demand;
    m.shared_occupancy = cfg.number("demand", "shared_occupancy", m.shared_occupancy);
    m.walk_threshold_min = cfg.number("demand", "walk_threshold_min", m.walk_threshold_min);
    m.walk_speed_kmh = cfg.number("demand", "walk_speed_kmh", m.walk_speed_kmh);
    m.cdap_joint_coeff = cfg.number("demand", "cdap_joint_coeff", m.cdap_joint_coeff);
    m.cdap_max_size = static_cast<int>(cfg.integer("demand", "cdap_max_size", m.cdap_max_size));
    m.destination_sample_size =
        static_cast<int>(cfg.integer("demand", "destination_sample_size", m.destination_sample_size));
    require(m.shared_occupancy >= 1.0, "demand.shared_occupancy must be >= 1");
    require(m.walk_threshold_min > 0.0 && m.walk_speed_kmh > 0.0, "demand walk parameters must be > 0");
    require(m.cdap_max_size >= 1 && m.cdap_max_size <= 8, "demand.cdap_max_size must be in [1, 8]");
    require(m.destination_sample_size >= 1, "demand.destination_sample_size must be >= 1");

    auto& k = s.skims;
    k.transit_factor = cfg.number("skims", "transit_factor", k.transit_factor);
    k.transit_wait_min = cfg.number("skims", "transit_wait_min", k.transit_wait_min);
    require(k.transit_factor > 0.0 && k.transit_wait_min >= 0.0, "skims transit parameters out of range");
    return s;
}

Config settings_to_config(const RunSettings& s) {
    Config c;
    const auto num = [](double v) { return csv::format_number(v); };
    c.set("scenario", "name", s.scenario_name);
    c.set("scenario", "global_seed", std::to_string(s.global_seed));
    c.set("scenario", "start_year", std::to_string(s.start_year));
    c.set("scenario", "end_year", std::to_string(s.end_year));
    c.set("scenario", "threads", std::to_string(s.threads));
    for (auto p : {Period::AM, Period::MD, Period::PM})
        c.set("periods", std::string(to_string(p)), format_hours(s.periods, p));
    c.set("assignment", "gap_tol", num(s.assignment.gap_tol));
    c.set("assignment", "max_iters", std::to_string(s.assignment.max_iters));
    c.set("assignment", "line_search_tol", num(s.assignment.line_search_tol));
    const auto& l = s.landuse;
    c.set("landuse", "annual_move_rate", num(l.annual_move_rate));
    c.set("landuse", "price_gamma", num(l.price_gamma));
    c.set("landuse", "clearing_tol", num(l.clearing_tol));
    c.set("landuse", "clearing_max_iters", std::to_string(l.clearing_max_iters));
    c.set("landuse", "price_factor_floor", num(l.price_factor_floor));
    c.set("landuse", "price_factor_ceiling", num(l.price_factor_ceiling));
    c.set("landuse", "accessibility_threshold_min", num(l.accessibility_threshold_min));
    c.set("developer", "price_to_build_threshold", num(l.developer.price_to_build_threshold));
    c.set("developer", "units_per_build", std::to_string(l.developer.units_per_build));
    c.set("developer", "max_share_growth_per_zone", num(l.developer.max_share_growth_per_zone));
    const auto& m = s.demand;
    c.set("demand", "shared_occupancy", num(m.shared_occupancy));
    c.set("demand", "walk_threshold_min", num(m.walk_threshold_min));
    c.set("demand", "walk_speed_kmh", num(m.walk_speed_kmh));
    c.set("demand", "cdap_joint_coeff", num(m.cdap_joint_coeff));
    c.set("demand", "cdap_max_size", std::to_string(m.cdap_max_size));
    c.set("demand", "destination_sample_size", std::to_string(m.destination_sample_size));
    c.set("skims", "transit_factor", num(s.skims.transit_factor));
    c.set("skims", "transit_wait_min", num(s.skims.transit_wait_min));
    return c;
}

// ---------------------------------------------------------------- loaders

std::vector<Zone> load_zones(const fs::path& path) {
    const auto t = csv::Table::read(path);
    const auto c_id = t.column("zone_id"), c_area = t.column("area"), c_maxu = t.column("max_residential_units"),
               c_maxj = t.column("max_job_spaces"), c_price = t.column("avg_price");
    const auto c_units = t.find_column("residential_units");
    const auto c_spaces = t.find_column("job_spaces");

    std::vector<Zone> zones;
    std::set<ZoneId> ids;
    for (std::size_t r = 0; r < t.rows(); ++r) {
        Zone z;
        z.zone_id = t.integer(r, c_id);
        z.area = t.number(r, c_area);
        z.max_residential_units = t.integer(r, c_maxu);
        z.max_job_spaces = t.integer(r, c_maxj);
        z.avg_price = t.number(r, c_price);
        z.residential_units = c_units ? t.integer(r, *c_units) : z.max_residential_units;
        z.job_spaces = c_spaces ? t.integer(r, *c_spaces) : z.max_job_spaces;
        if (z.zone_id <= 0) t.fail(r, c_id, "zone_id must be positive");
        if (!ids.insert(z.zone_id).second) t.fail(r, c_id, "duplicate zone_id " + std::to_string(z.zone_id));
        if (!(z.area > 0.0)) t.fail(r, c_area, "area must be > 0");
        if (z.max_residential_units < 0) t.fail(r, c_maxu, "must be >= 0");
        if (z.max_job_spaces < 0) t.fail(r, c_maxj, "must be >= 0");
        if (!(z.avg_price > 0.0)) t.fail(r, c_price, "avg_price must be > 0");
        if (c_units && (z.residential_units < 0 || z.residential_units > z.max_residential_units))
            t.fail(r, *c_units, "must be in [0, max_residential_units]");
        if (c_spaces && (z.job_spaces < 0 || z.job_spaces > z.max_job_spaces))
            t.fail(r, *c_spaces, "must be in [0, max_job_spaces]");
        zones.push_back(z);
    }
    sort_by(zones, [](const Zone& z) { return z.zone_id; });
    return zones;
}

Network load_network(const fs::path& nodes_path, const fs::path& links_path, const fs::path& weights_path) {
    Network net;
    {
        const auto t = csv::Table::read(nodes_path);
        const auto c_id = t.column("node_id"), c_x = t.column("x"), c_y = t.column("y"), c_z = t.column("zone_id");
        std::set<NodeId> ids;
        for (std::size_t r = 0; r < t.rows(); ++r) {
            Node n;
            n.node_id = t.integer(r, c_id);
            n.x = t.number(r, c_x);
            n.y = t.number(r, c_y);
            n.zone_id = t.optional_integer(r, c_z);
            if (n.zone_id && *n.zone_id == 0) n.zone_id.reset();
            if (!ids.insert(n.node_id).second) t.fail(r, c_id, "duplicate node_id " + std::to_string(n.node_id));
            net.nodes.push_back(n);
        }
    }
    std::set<NodeId> node_ids;
    for (const auto& n : net.nodes) node_ids.insert(n.node_id);
    {
        const auto t = csv::Table::read(links_path);
        const auto c_id = t.column("link_id"), c_from = t.column("from_node"), c_to = t.column("to_node"),
                   c_len = t.column("length"), c_cap = t.column("capacity"), c_fft = t.column("free_flow_time"),
                   c_a = t.column("alpha"), c_b = t.column("beta");
        std::set<LinkId> ids;
        for (std::size_t r = 0; r < t.rows(); ++r) {
            Link l;
            l.link_id = t.integer(r, c_id);
            l.from_node = t.integer(r, c_from);
            l.to_node = t.integer(r, c_to);
            l.length = t.number(r, c_len);
            l.capacity = t.number(r, c_cap);
            l.free_flow_time = t.number(r, c_fft);
            l.alpha = t.number(r, c_a);
            l.beta = t.number(r, c_b);
            if (!ids.insert(l.link_id).second) t.fail(r, c_id, "duplicate link_id " + std::to_string(l.link_id));
            if (!node_ids.count(l.from_node)) t.fail(r, c_from, "unknown node " + std::to_string(l.from_node));
            if (!node_ids.count(l.to_node)) t.fail(r, c_to, "unknown node " + std::to_string(l.to_node));
            if (l.from_node == l.to_node) t.fail(r, c_to, "self loop: from_node equals to_node");
            if (l.length < 0.0) t.fail(r, c_len, "length must be >= 0");
            if (!(l.capacity > 0.0)) t.fail(r, c_cap, "capacity must be > 0");
            if (!(l.free_flow_time > 0.0)) t.fail(r, c_fft, "free_flow_time must be > 0");
            if (l.alpha < 0.0) t.fail(r, c_a, "alpha must be >= 0");
            if (l.beta < 1.0) t.fail(r, c_b, "beta must be >= 1");
            net.links.push_back(l);
        }
    }
    sort_by(net.nodes, [](const Node& n) { return n.node_id; });
    sort_by(net.links, [](const Link& l) { return l.link_id; });
    net.zone_centroids = center_most_nodes(net.nodes);

    if (!weights_path.empty()) {
        const auto t = csv::Table::read(weights_path);
        const auto c_z = t.column("zone_id"), c_n = t.column("node_id"), c_w = t.column("weight");
        std::map<NodeId, std::optional<ZoneId>> zone_of;
        for (const auto& n : net.nodes) zone_of[n.node_id] = n.zone_id;
        for (std::size_t r = 0; r < t.rows(); ++r) {
            const ZoneId z = t.integer(r, c_z);
            const NodeId n = t.integer(r, c_n);
            const double w = t.number(r, c_w);
            const auto it = zone_of.find(n);
            if (it == zone_of.end() || it->second != z) t.fail(r, c_n, "node does not belong to zone " + std::to_string(z));
            if (!(w > 0.0)) t.fail(r, c_w, "weight must be > 0");
            auto& list = net.zone_node_weights[z];
            for (const auto& [existing, _] : list)
                if (existing == n) t.fail(r, c_n, "duplicate (zone_id, node_id)");
            list.emplace_back(n, w);
        }
        for (auto& [z, list] : net.zone_node_weights) sort_by(list, [](const auto& p) { return p.first; });
    }
    return net;
}

Population load_population(const fs::path& hh_path, const fs::path& persons_path, const fs::path& jobs_path) {
    Population pop;
    {
        const auto t = csv::Table::read(hh_path);
        const auto c_id = t.column("household_id"), c_z = t.column("zone_id"), c_inc = t.column("income"),
                   c_size = t.column("size"), c_autos = t.column("autos"), c_ten = t.column("tenure_years");
        std::set<HouseholdId> ids;
        for (std::size_t r = 0; r < t.rows(); ++r) {
            Household h;
            h.household_id = t.integer(r, c_id);
            h.zone_id = t.integer(r, c_z);
            h.income = t.number(r, c_inc);
            h.size = t.integer(r, c_size);
            h.autos = t.integer(r, c_autos);
            h.tenure_years = t.integer(r, c_ten);
            if (!ids.insert(h.household_id).second) t.fail(r, c_id, "duplicate household_id");
            if (h.size < 1) t.fail(r, c_size, "size must be >= 1");
            if (h.autos < 0) t.fail(r, c_autos, "autos must be >= 0");
            if (h.tenure_years < 0) t.fail(r, c_ten, "tenure_years must be >= 0");
            if (h.zone_id < 0) t.fail(r, c_z, "zone_id must be >= 0");
            pop.households.push_back(h);
        }
    }
    {
        const auto t = csv::Table::read(persons_path);
        const auto c_id = t.column("person_id"), c_hh = t.column("household_id"), c_age = t.column("age"),
                   c_w = t.column("is_worker"), c_s = t.column("is_student"), c_wz = t.column("workplace_zone");
        std::set<PersonId> ids;
        for (std::size_t r = 0; r < t.rows(); ++r) {
            Person p;
            p.person_id = t.integer(r, c_id);
            p.household_id = t.integer(r, c_hh);
            p.age = t.integer(r, c_age);
            p.is_worker = t.flag(r, c_w);
            p.is_student = t.flag(r, c_s);
            p.workplace_zone = t.optional_integer(r, c_wz);
            if (p.workplace_zone && *p.workplace_zone == 0) p.workplace_zone.reset();
            if (!ids.insert(p.person_id).second) t.fail(r, c_id, "duplicate person_id");
            if (p.age < 0) t.fail(r, c_age, "age must be >= 0");
            pop.persons.push_back(p);
        }
    }
    {
        const auto t = csv::Table::read(jobs_path);
        const auto c_id = t.column("job_id"), c_z = t.column("zone_id"), c_sec = t.column("sector");
        std::set<JobId> ids;
        for (std::size_t r = 0; r < t.rows(); ++r) {
            Job j;
            j.job_id = t.integer(r, c_id);
            j.zone_id = t.integer(r, c_z);
            j.sector = t.text(r, c_sec);
            if (!ids.insert(j.job_id).second) t.fail(r, c_id, "duplicate job_id");
            if (j.zone_id < 0) t.fail(r, c_z, "zone_id must be >= 0");
            pop.jobs.push_back(std::move(j));
        }
    }
    sort_by(pop.households, [](const Household& h) { return h.household_id; });
    sort_by(pop.persons, [](const Person& p) { return p.person_id; });
    sort_by(pop.jobs, [](const Job& j) { return j.job_id; });
    return pop;
}

SpecSet load_specs(const fs::path& path) {
    const auto t = csv::Table::read(path);
    const auto c_name = t.column("spec_name"), c_var = t.column("variable"), c_coef = t.column("coefficient");
    SpecSet specs;
    for (std::size_t r = 0; r < t.rows(); ++r) {
        const auto& name = t.text(r, c_name);
        if (!model_schemas().count(name)) t.fail(r, c_name, "unknown spec '" + name + "'");
        auto& spec = specs[name];
        spec.name = name;
        spec.coefficients.emplace_back(t.text(r, c_var), t.number(r, c_coef));
    }
    for (const auto& [name, spec] : specs) {
        try {
            (void)choice::BoundSpec::bind(spec, schema_for(name));
        } catch (const ChoiceError& e) {
            throw ValidationError(t.source() + ": " + e.what());
        }
    }
    return specs;
}

ControlTotals load_control_totals(const fs::path& path) {
    const auto t = csv::Table::read(path);
    const auto c_y = t.column("year"), c_h = t.column("households"), c_j = t.column("jobs");
    ControlTotals out;
    for (std::size_t r = 0; r < t.rows(); ++r) {
        const auto year = static_cast<int>(t.integer(r, c_y));
        ControlTotal ct{t.integer(r, c_h), t.integer(r, c_j)};
        if (ct.households < 0) t.fail(r, c_h, "target must be >= 0");
        if (ct.jobs < 0) t.fail(r, c_j, "target must be >= 0");
        if (!out.emplace(year, ct).second) t.fail(r, c_y, "duplicate year");
    }
    return out;
}

// ---------------------------------------------------------------- writers

void write_zones(const fs::path& path, const std::vector<Zone>& zones) {
    csv::Writer w(path, {"zone_id", "area", "max_residential_units", "max_job_spaces", "avg_price",
                         "residential_units", "job_spaces"});
    for (const auto& z : zones) {
        w.cell(z.zone_id).cell(z.area).cell(z.max_residential_units).cell(z.max_job_spaces).cell(z.avg_price);
        w.cell(z.residential_units).cell(z.job_spaces);
        w.end_row();
    }
}

void write_population(const fs::path& dir, const Population& pop) {
    {
        csv::Writer w(dir / "households.csv", {"household_id", "zone_id", "income", "size", "autos", "tenure_years"});
        for (const auto& h : pop.households) {
            w.cell(h.household_id).cell(h.zone_id).cell(h.income).cell(h.size).cell(h.autos).cell(h.tenure_years);
            w.end_row();
        }
    }
    {
        csv::Writer w(dir / "persons.csv",
                      {"person_id", "household_id", "age", "is_worker", "is_student", "workplace_zone"});
        for (const auto& p : pop.persons) {
            w.cell(p.person_id).cell(p.household_id).cell(p.age).cell(p.is_worker ? 1 : 0).cell(p.is_student ? 1 : 0);
            if (p.workplace_zone) w.cell(*p.workplace_zone);
            else w.empty();
            w.end_row();
        }
    }
    {
        csv::Writer w(dir / "jobs.csv", {"job_id", "zone_id", "sector"});
        for (const auto& j : pop.jobs) {
            w.cell(j.job_id).cell(j.zone_id).cell(j.sector);
            w.end_row();
        }
    }
}

void write_specs(const fs::path& path, const SpecSet& specs) {
    csv::Writer w(path, {"spec_name", "variable", "coefficient"});
    for (const auto& [name, spec] : specs)
        for (const auto& [variable, beta] : spec.coefficients) {
            w.cell(name).cell(variable).cell(beta);
            w.end_row();
        }
}

// ---------------------------------------------------------------- validation

void validate_bundle(const ScenarioBundle& b) {
    std::set<ZoneId> zone_ids;
    for (const auto& z : b.zones) zone_ids.insert(z.zone_id);
    if (zone_ids.empty()) throw ValidationError("scenario has no zones");

    const auto& net = b.network;
    for (const auto& n : net.nodes)
        if (n.zone_id && !zone_ids.count(*n.zone_id))
            throw ValidationError(piece("node", n.node_id) + " references unknown zone " + std::to_string(*n.zone_id));
    for (auto z : zone_ids)
        if (!net.zone_centroids.count(z)) throw ValidationError(piece("zone", z) + " has no network node");
    for (const auto& [z, c] : net.zone_centroids)
        if (!zone_ids.count(z)) throw ValidationError("centroid for unknown zone " + std::to_string(z));
    for (const auto& [z, list] : net.zone_node_weights)
        if (!zone_ids.count(z)) throw ValidationError("node weights reference unknown zone " + std::to_string(z));

    // Strong connectivity over centroids: every centroid reaches, and is
    // reached from, the first centroid.
    {
        std::map<NodeId, std::size_t> index;
        for (const auto& n : net.nodes) index.emplace(n.node_id, index.size());
        std::vector<std::vector<std::size_t>> fwd(index.size()), bwd(index.size());
        for (const auto& l : net.links) {
            fwd[index.at(l.from_node)].push_back(index.at(l.to_node));
            bwd[index.at(l.to_node)].push_back(index.at(l.from_node));
        }
        const auto reach = [&](const std::vector<std::vector<std::size_t>>& adj, std::size_t start) {
            std::vector<char> seen(adj.size(), 0);
            std::deque<std::size_t> q{start};
            seen[start] = 1;
            while (!q.empty()) {
                const auto u = q.front();
                q.pop_front();
                for (auto v : adj[u])
                    if (!seen[v]) {
                        seen[v] = 1;
                        q.push_back(v);
                    }
            }
            return seen;
        };
        const auto root = index.at(net.zone_centroids.begin()->second);
        const auto out = reach(fwd, root);
        const auto in = reach(bwd, root);
        for (const auto& [z, node] : net.zone_centroids) {
            const auto i = index.at(node);
            if (!out[i] || !in[i])
                throw ValidationError("network is not strongly connected over centroids: zone " + std::to_string(z) +
                                      " (node " + std::to_string(node) + ")");
        }
    }

    std::map<ZoneId, std::int64_t> households_in, jobs_in;
    std::set<HouseholdId> hh_ids;
    for (const auto& h : b.population.households) {
        hh_ids.insert(h.household_id);
        if (h.zone_id != kUnplaced) {
            if (!zone_ids.count(h.zone_id))
                throw ValidationError(piece("household", h.household_id) + " references unknown zone " +
                                      std::to_string(h.zone_id));
            ++households_in[h.zone_id];
        }
    }
    for (const auto& p : b.population.persons) {
        if (!hh_ids.count(p.household_id))
            throw ValidationError(piece("person", p.person_id) + " references unknown household " +
                                  std::to_string(p.household_id));
        if (p.workplace_zone && !zone_ids.count(*p.workplace_zone))
            throw ValidationError(piece("person", p.person_id) + " has unknown workplace zone " +
                                  std::to_string(*p.workplace_zone));
    }
    for (const auto& j : b.population.jobs) {
        if (j.zone_id != kUnplaced) {
            if (!zone_ids.count(j.zone_id))
                throw ValidationError(piece("job", j.job_id) + " references unknown zone " + std::to_string(j.zone_id));
            ++jobs_in[j.zone_id];
        }
    }
    for (const auto& z : b.zones) {
        if (households_in[z.zone_id] > z.residential_units)
            throw ValidationError(piece("zone", z.zone_id) + " holds more households than residential units");
        if (jobs_in[z.zone_id] > z.job_spaces)
            throw ValidationError(piece("zone", z.zone_id) + " holds more jobs than job spaces");
    }

    for (int y = b.settings.start_year; y <= b.settings.end_year; ++y)
        if (!b.control_totals.count(y)) throw ValidationError("control totals missing year " + std::to_string(y));

    for (const auto& [name, schema] : model_schemas()) {
        if (!b.specs.count(name)) throw ValidationError("missing utility spec '" + name + "'");
        try {
            (void)bind_spec(b.specs, name);
        } catch (const ChoiceError& e) {
            throw ValidationError(e.what());
        }
    }
    if (b.specs.count("hlc")) {
        const auto hlc = bind_spec(b.specs, "hlc");
        const auto k = hlc.find("price");
        if (!k || !(hlc.coefficients()[*k] < 0.0))
            throw ValidationError("spec 'hlc' needs a negative coefficient on 'price'");
    }
}

ScenarioBundle load_scenario(const fs::path& config_path) {
    const auto cfg = Config::read(config_path);
    const auto base = config_path.parent_path();
    const auto input = [&](std::string_view key) {
        const auto rel = cfg.text("inputs", key);
        const fs::path p = base / rel;
        if (!fs::exists(p)) throw ValidationError("missing file: " + p.string() + " (inputs." + std::string(key) + ")");
        return p;
    };

    ScenarioBundle b;
    b.settings = parse_settings(cfg);
    b.zones = load_zones(input("zones"));
    b.network = load_network(input("nodes"), input("links"), cfg.has("inputs", "node_weights") ? input("node_weights") : fs::path{});
    b.population = load_population(input("households"), input("persons"), input("jobs"));
    b.specs = load_specs(input("specs"));
    b.control_totals = load_control_totals(input("control_totals"));
    validate_bundle(b);
    return b;
}

fs::path save_scenario(const ScenarioBundle& b, const fs::path& dir) {
    fs::create_directories(dir);
    auto cfg = settings_to_config(b.settings);
    cfg.set("inputs", "zones", "zones.csv");
    cfg.set("inputs", "nodes", "nodes.csv");
    cfg.set("inputs", "links", "links.csv");
    cfg.set("inputs", "households", "households.csv");
    cfg.set("inputs", "persons", "persons.csv");
    cfg.set("inputs", "jobs", "jobs.csv");
    cfg.set("inputs", "specs", "specs.csv");
    cfg.set("inputs", "control_totals", "control_totals.csv");

    write_zones(dir / "zones.csv", b.zones);
    {
        csv::Writer w(dir / "nodes.csv", {"node_id", "x", "y", "zone_id"});
        for (const auto& n : b.network.nodes) {
            w.cell(n.node_id).cell(n.x).cell(n.y);
            if (n.zone_id) w.cell(*n.zone_id);
            else w.empty();
            w.end_row();
        }
    }
    {
        csv::Writer w(dir / "links.csv",
                      {"link_id", "from_node", "to_node", "length", "capacity", "free_flow_time", "alpha", "beta"});
        for (const auto& l : b.network.links) {
            w.cell(l.link_id).cell(l.from_node).cell(l.to_node).cell(l.length).cell(l.capacity);
            w.cell(l.free_flow_time).cell(l.alpha).cell(l.beta);
            w.end_row();
        }
    }
    if (!b.network.zone_node_weights.empty()) {
        cfg.set("inputs", "node_weights", "node_weights.csv");
        csv::Writer w(dir / "node_weights.csv", {"zone_id", "node_id", "weight"});
        for (const auto& [z, list] : b.network.zone_node_weights)
            for (const auto& [n, weight] : list) {
                w.cell(z).cell(n).cell(weight);
                w.end_row();
            }
    }
    write_population(dir, b.population);
    write_specs(dir / "specs.csv", b.specs);
    {
        csv::Writer w(dir / "control_totals.csv", {"year", "households", "jobs"});
        for (const auto& [year, ct] : b.control_totals) {
            w.cell(year).cell(ct.households).cell(ct.jobs);
            w.end_row();
        }
    }
    const auto path = dir / "scenario.cfg";
    cfg.write(path);
    return path;
}

} // namespace urbanflow
