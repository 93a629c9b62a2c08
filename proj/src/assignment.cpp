#include "urbanflow/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>

#include "urbanflow/csv.hpp"
#include "urbanflow/error.hpp"
#include "urbanflow/parallel.hpp"

namespace urbanflow::assignment {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------- RoadGraph

RoadGraph::RoadGraph(const Network& network) {
    for (const auto& n : network.nodes) node_ids_.push_back(n.node_id);
    std::sort(node_ids_.begin(), node_ids_.end());
    links_ = network.links;
    std::sort(links_.begin(), links_.end(), [](const Link& a, const Link& b) { return a.link_id < b.link_id; });

    tail_.resize(links_.size());
    head_.resize(links_.size());
    offsets_.assign(node_ids_.size() + 1, 0);
    for (std::size_t a = 0; a < links_.size(); ++a) {
        tail_[a] = node_index(links_[a].from_node);
        head_[a] = node_index(links_[a].to_node);
        ++offsets_[tail_[a] + 1];
    }
    std::partial_sum(offsets_.begin(), offsets_.end(), offsets_.begin());
    adjacency_.resize(links_.size());
    auto fill = offsets_;
    for (std::size_t a = 0; a < links_.size(); ++a) adjacency_[fill[tail_[a]]++] = static_cast<std::uint32_t>(a);

    for (const auto& [zone, node] : network.zone_centroids) {
        zone_ids_.push_back(zone);
        centroids_.push_back(node_index(node));
        std::vector<std::pair<std::size_t, double>> ends;
        if (const auto w = network.zone_node_weights.find(zone); w != network.zone_node_weights.end()) {
            double total = 0.0;
            for (const auto& [n, weight] : w->second) total += weight;
            for (const auto& [n, weight] : w->second) ends.emplace_back(node_index(n), weight / total);
        } else {
            ends.emplace_back(centroids_.back(), 1.0);
        }
        trip_ends_.push_back(std::move(ends));
    }
}

std::size_t RoadGraph::node_index(NodeId id) const {
    const auto it = std::lower_bound(node_ids_.begin(), node_ids_.end(), id);
    if (it == node_ids_.end() || *it != id) throw AssignmentError("unknown node " + std::to_string(id));
    return static_cast<std::size_t>(it - node_ids_.begin());
}

std::vector<double> RoadGraph::free_flow_times() const {
    std::vector<double> t;
    t.reserve(links_.size());
    for (const auto& l : links_) t.push_back(l.free_flow_time);
    return t;
}

std::vector<double> RoadGraph::lengths() const {
    std::vector<double> t;
    t.reserve(links_.size());
    for (const auto& l : links_) t.push_back(l.length);
    return t;
}

// ---------------------------------------------------------------- link costs

double bpr_time(const Link& link, double flow) {
    if (flow <= 0.0) return link.free_flow_time;
    return link.free_flow_time * (1.0 + link.alpha * std::pow(flow / link.capacity, link.beta));
}

double bpr_integral(const Link& link, double flow) {
    if (flow <= 0.0) return 0.0;
    const double ratio = flow / link.capacity;
    return link.free_flow_time * (flow + link.alpha * link.capacity * std::pow(ratio, link.beta + 1.0) / (link.beta + 1.0));
}

std::vector<double> link_times(const RoadGraph& g, std::span<const double> flows) {
    std::vector<double> t(g.link_count());
    for (std::size_t a = 0; a < t.size(); ++a) t[a] = bpr_time(g.link(a), flows[a]);
    return t;
}

double beckmann_objective(const RoadGraph& g, std::span<const double> flows) {
    double z = 0.0;
    for (std::size_t a = 0; a < g.link_count(); ++a) z += bpr_integral(g.link(a), flows[a]);
    return z;
}

// ---------------------------------------------------------------- shortest paths

ShortestPathTree shortest_paths(const RoadGraph& g, std::span<const double> times, std::size_t origin) {
    ShortestPathTree tree;
    tree.distance.assign(g.node_count(), kInf);
    tree.pred.assign(g.node_count(), -1);
    std::vector<char> settled(g.node_count(), 0);

    // Prefer the predecessor link whose tail has the smaller node_id.
    const auto better = [&](std::size_t a, std::int64_t current) {
        if (current < 0) return true;
        const auto c = static_cast<std::size_t>(current);
        const auto ta = g.node_id(g.tail(a)), tc = g.node_id(g.tail(c));
        if (ta != tc) return ta < tc;
        return g.link(a).link_id < g.link(c).link_id;
    };

    using Entry = std::pair<double, std::size_t>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
    tree.distance[origin] = 0.0;
    heap.emplace(0.0, origin);
    while (!heap.empty()) {
        const auto [d, u] = heap.top();
        heap.pop();
        if (settled[u]) continue;
        settled[u] = 1;
        for (const auto a : g.out_links(u)) {
            const auto v = g.head(a);
            if (v == origin) continue;
            const double nd = d + times[a];
            if (nd < tree.distance[v]) {
                tree.distance[v] = nd;
                tree.pred[v] = a;
                heap.emplace(nd, v);
            } else if (nd == tree.distance[v] && times[a] > 0.0 && better(a, tree.pred[v])) {
                tree.pred[v] = a;
            }
        }
    }
    return tree;
}

// ---------------------------------------------------------------- all-or-nothing

double OdMatrix::total() const { return std::accumulate(flow.begin(), flow.end(), 0.0); }

OdMatrix period_demand(const RoadGraph& g, const TripTable& trips, Period p, double period_hours) {
    if (!(period_hours > 0.0)) throw AssignmentError("period duration must be positive");
    OdMatrix m;
    m.zones = g.zone_count();
    m.flow.assign(m.zones * m.zones, 0.0);
    const auto& ids = g.zone_ids();
    const auto index = [&](ZoneId z) {
        const auto it = std::lower_bound(ids.begin(), ids.end(), z);
        if (it == ids.end() || *it != z) throw AssignmentError("trip table references unknown zone " + std::to_string(z));
        return static_cast<std::size_t>(it - ids.begin());
    };
    for (const auto& [key, trips_in_cell] : trips.cells()) {
        if (key.period != p) continue;
        m.flow[index(key.origin) * m.zones + index(key.destination)] += trips_in_cell / period_hours;
    }
    return m;
}

std::vector<double> all_or_nothing(const RoadGraph& g, std::span<const double> times, const OdMatrix& demand,
                                   unsigned threads) {
    struct Task {
        std::size_t zone;
        std::size_t node;
        double weight;
    };
    const std::size_t nz = g.zone_count();
    if (demand.zones != nz) throw AssignmentError("demand matrix does not match zone count");

    std::vector<Task> tasks;
    for (std::size_t o = 0; o < nz; ++o) {
        bool any = false;
        for (std::size_t d = 0; d < nz && !any; ++d) any = d != o && demand.at(o, d) > 0.0;
        if (!any) continue;
        for (const auto& [node, w] : g.trip_end_nodes(o)) tasks.push_back({o, node, w});
    }

    std::vector<std::vector<double>> partial(tasks.size());
    parallel_for(tasks.size(), threads, [&](std::size_t k) {
        const auto& task = tasks[k];
        const auto tree = shortest_paths(g, times, task.node);
        std::vector<double> node_load(g.node_count(), 0.0);
        for (std::size_t d = 0; d < nz; ++d) {
            const double q = d == task.zone ? 0.0 : demand.at(task.zone, d);
            if (q <= 0.0) continue;
            for (const auto& [dest, w] : g.trip_end_nodes(d)) {
                if (!std::isfinite(tree.distance[dest]))
                    throw AssignmentError("demanded destination unreachable: zone " +
                                          std::to_string(g.zone_ids()[task.zone]) + " -> zone " +
                                          std::to_string(g.zone_ids()[d]));
                node_load[dest] += q * task.weight * w;
            }
        }
        // Push loads up the tree, farthest nodes first.
        std::vector<std::size_t> order;
        for (std::size_t v = 0; v < g.node_count(); ++v)
            if (tree.pred[v] >= 0) order.push_back(v);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (tree.distance[a] != tree.distance[b]) return tree.distance[a] > tree.distance[b];
            return a > b;
        });
        auto& flow = partial[k];
        flow.assign(g.link_count(), 0.0);
        for (const auto v : order) {
            if (node_load[v] == 0.0) continue;
            const auto a = static_cast<std::size_t>(tree.pred[v]);
            flow[a] += node_load[v];
            node_load[g.tail(a)] += node_load[v];
        }
    });

    std::vector<double> y(g.link_count(), 0.0);
    for (const auto& flow : partial)
        for (std::size_t a = 0; a < y.size(); ++a) y[a] += flow[a];
    return y;
}

// ---------------------------------------------------------------- Frank-Wolfe

double line_search(const RoadGraph& g, std::span<const double> x, std::span<const double> y, double tol) {
    const auto slope = [&](double lambda) {
        double s = 0.0;
        for (std::size_t a = 0; a < g.link_count(); ++a) {
            const double dir = y[a] - x[a];
            if (dir == 0.0) continue;
            s += bpr_time(g.link(a), x[a] + lambda * dir) * dir;
        }
        return s;
    };
    bool moves = false;
    for (std::size_t a = 0; a < g.link_count() && !moves; ++a) moves = y[a] != x[a];
    if (!moves) return 0.0;
    if (slope(0.0) >= 0.0) return 0.0;
    if (slope(1.0) <= 0.0) return 1.0;
    double lo = 0.0, hi = 1.0;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (slope(mid) < 0.0) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

double relative_gap(std::span<const double> x, std::span<const double> y, std::span<const double> times) {
    double current = 0.0, best = 0.0;
    for (std::size_t a = 0; a < x.size(); ++a) {
        current += x[a] * times[a];
        best += y[a] * times[a];
    }
    if (current <= 0.0) return 0.0;
    return (current - best) / current;
}

AssignmentResult frank_wolfe_ue(const RoadGraph& g, const OdMatrix& demand, const FrankWolfeOptions& options,
                                Period period) {
    AssignmentResult r;
    r.period = period;
    auto x = all_or_nothing(g, g.free_flow_times(), demand, options.threads);
    std::vector<double> t;
    for (int k = 1; k <= options.max_iters; ++k) {
        t = link_times(g, x);
        const auto y = all_or_nothing(g, t, demand, options.threads);
        const double gap = relative_gap(x, y, t);
        r.relative_gap.push_back(gap);
        r.objective.push_back(beckmann_objective(g, x));
        r.iterations = k;
        if (gap <= options.gap_tol) {
            r.converged = true;
            break;
        }
        if (k == options.max_iters) break;
        const double lambda = line_search(g, x, y, options.line_search_tol);
        for (std::size_t a = 0; a < x.size(); ++a) x[a] += lambda * (y[a] - x[a]);
    }
    for (auto& v : x) v = std::max(v, 0.0);
    r.time = link_times(g, x);
    r.flow = std::move(x);
    return r;
}

// ---------------------------------------------------------------- skims

namespace {

std::vector<double> centroid_matrix(const RoadGraph& g, std::span<const double> link_costs, unsigned threads) {
    const std::size_t n = g.zone_count();
    std::vector<double> m(n * n, 0.0);
    parallel_for(n, threads, [&](std::size_t o) {
        const auto tree = shortest_paths(g, link_costs, g.centroid(o));
        for (std::size_t d = 0; d < n; ++d) {
            if (d == o) continue;
            const double v = tree.distance[g.centroid(d)];
            if (!std::isfinite(v))
                throw AssignmentError("unreachable centroid pair: zone " + std::to_string(g.zone_ids()[o]) +
                                      " -> zone " + std::to_string(g.zone_ids()[d]));
            m[o * n + d] = v;
        }
    });
    return m;
}

} // namespace

std::vector<double> centroid_costs(const RoadGraph& g, std::span<const double> link_costs, unsigned threads) {
    auto m = centroid_matrix(g, link_costs, threads);
    apply_intrazonal_rule(m, g.zone_count());
    return m;
}

SkimSet extract_skims(const RoadGraph& g, const std::array<std::vector<double>, 4>& period_times,
                      const SkimSettings& skim_settings, const DemandSettings& demand_settings, unsigned threads) {
    const std::size_t n = g.zone_count();
    SkimSet skims(g.zone_ids());

    auto walk = centroid_matrix(g, g.lengths(), threads);
    for (auto& v : walk) v = v / demand_settings.walk_speed_kmh * 60.0;
    apply_intrazonal_rule(walk, n);

    for (auto p : kPeriods) {
        auto autos = centroid_costs(g, period_times[static_cast<std::size_t>(p)], threads);
        std::vector<double> transit(autos.size());
        for (std::size_t i = 0; i < autos.size(); ++i)
            transit[i] = skim_settings.transit_factor * autos[i] + skim_settings.transit_wait_min;
        skims.set(SkimMode::Auto, p, std::move(autos));
        skims.set(SkimMode::Transit, p, std::move(transit));
        skims.set(SkimMode::Walk, p, walk);
    }
    skims.validate();
    return skims;
}

SkimSet free_flow_skims(const RoadGraph& g, const SkimSettings& skim_settings, const DemandSettings& demand_settings,
                        unsigned threads) {
    const auto t0 = g.free_flow_times();
    return extract_skims(g, {t0, t0, t0, t0}, skim_settings, demand_settings, threads);
}

// ---------------------------------------------------------------- accessibility

std::vector<double> cumulative_accessibility(const SkimSet& skims, std::span<const double> jobs, double threshold,
                                             Period period) {
    const std::size_t n = skims.zone_count();
    std::vector<double> out(n, 0.0);
    for (std::size_t o = 0; o < n; ++o)
        for (std::size_t d = 0; d < n; ++d)
            if (skims.time(SkimMode::Auto, period, o, d) <= threshold) out[o] += jobs[d];
    return out;
}

std::vector<double> logsum_accessibility(const SkimSet& skims, std::span<const double> jobs,
                                         const choice::BoundSpec& mode_spec, double walk_threshold_min,
                                         Period period) {
    const std::size_t n = skims.zone_count();
    const double total_jobs = std::accumulate(jobs.begin(), jobs.end(), 0.0);
    std::vector<double> weight(n);
    for (std::size_t d = 0; d < n; ++d) weight[d] = total_jobs > 0.0 ? jobs[d] / total_jobs : 1.0 / static_cast<double>(n);

    std::vector<double> out(n, 0.0);
    const std::vector<double> no_chooser;
    std::array<double, 5> attrs{};
    std::array<double, 4> v{};
    for (std::size_t o = 0; o < n; ++o) {
        for (std::size_t d = 0; d < n; ++d) {
            const double t_auto = skims.time(SkimMode::Auto, period, o, d);
            const double t_transit = skims.time(SkimMode::Transit, period, o, d);
            const double t_walk = skims.time(SkimMode::Walk, period, o, d);
            const std::array<double, 4> times{t_auto, t_auto, t_transit, t_walk};
            for (std::size_t m = 0; m < 4; ++m) {
                attrs.fill(0.0);
                attrs[0] = times[m];
                attrs[1 + m] = 1.0;
                v[m] = mode_spec.utility(no_chooser, attrs);
            }
            if (t_walk > walk_threshold_min) v[3] = choice::kUnavailable;
            out[o] += weight[d] * choice::logsum(v);
        }
    }
    return out;
}

void Accessibility::write_csv(const std::filesystem::path& path) const {
    csv::Writer w(path, {"zone_id", "jobs_within", "logsum"});
    for (std::size_t i = 0; i < zone_ids.size(); ++i) {
        w.cell(zone_ids[i]).cell(jobs_within[i]).cell(logsum[i]);
        w.end_row();
    }
}

Accessibility Accessibility::read_csv(const std::filesystem::path& path) {
    const auto t = csv::Table::read(path);
    const auto cz = t.column("zone_id"), cj = t.column("jobs_within"), cl = t.column("logsum");
    Accessibility a;
    for (std::size_t r = 0; r < t.rows(); ++r) {
        a.zone_ids.push_back(t.integer(r, cz));
        a.jobs_within.push_back(t.number(r, cj));
        a.logsum.push_back(t.number(r, cl));
    }
    return a;
}

// ---------------------------------------------------------------- energy

double energy_rate_mj_per_km(double speed_kmh) {
    static constexpr std::array<std::pair<double, double>, 7> table{{
        {10.0, 6.0}, {20.0, 4.5}, {30.0, 3.6}, {50.0, 3.0}, {70.0, 2.7}, {90.0, 2.6}, {110.0, 2.8}}};
    for (const auto& [upper, rate] : table)
        if (speed_kmh < upper) return rate;
    return 3.2;
}

EnergyTotals energy_estimate(const RoadGraph& g, std::span<const double> flows, std::span<const double> times,
                             double period_hours) {
    EnergyTotals e;
    for (std::size_t a = 0; a < g.link_count(); ++a) {
        const double x = flows[a];
        if (x <= 0.0) continue;
        const double len = g.link(a).length;
        const double speed = len / (times[a] / 60.0);
        e.vmt += x * len * period_hours;
        e.vht += x * times[a] / 60.0 * period_hours;
        e.energy_mj += x * len * energy_rate_mj_per_km(speed) * period_hours;
    }
    return e;
}

} // namespace urbanflow::assignment
