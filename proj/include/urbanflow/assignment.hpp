#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "urbanflow/choice.hpp"
#include "urbanflow/model.hpp"
#include "urbanflow/scenario.hpp"

namespace urbanflow::assignment {

/// Compact forward-star view of a Network. Nodes are indexed in ascending
/// node_id order; links keep the Network's (ascending link_id) order.
class RoadGraph {
public:
    explicit RoadGraph(const Network& network);

    std::size_t node_count() const noexcept { return node_ids_.size(); }
    std::size_t link_count() const noexcept { return links_.size(); }
    std::size_t zone_count() const noexcept { return zone_ids_.size(); }

    NodeId node_id(std::size_t i) const { return node_ids_[i]; }
    std::size_t node_index(NodeId id) const;
    const Link& link(std::size_t a) const { return links_[a]; }
    std::size_t tail(std::size_t a) const { return tail_[a]; }
    std::size_t head(std::size_t a) const { return head_[a]; }
    std::span<const std::uint32_t> out_links(std::size_t node) const {
        return std::span<const std::uint32_t>(adjacency_).subspan(offsets_[node], offsets_[node + 1] - offsets_[node]);
    }

    /// Zones in ascending zone_id order with their centroid node index.
    const std::vector<ZoneId>& zone_ids() const noexcept { return zone_ids_; }
    std::size_t centroid(std::size_t zone) const { return centroids_[zone]; }
    /// Nodes carrying the zone's trip ends with normalized weights. Just the
    /// centroid (weight 1) unless the network defines a node distribution.
    const std::vector<std::pair<std::size_t, double>>& trip_end_nodes(std::size_t zone) const {
        return trip_ends_[zone];
    }

    std::vector<double> free_flow_times() const;
    std::vector<double> lengths() const;

private:
    std::vector<NodeId> node_ids_;
    std::vector<Link> links_;
    std::vector<std::size_t> tail_, head_;
    std::vector<std::size_t> offsets_;
    std::vector<std::uint32_t> adjacency_;
    std::vector<ZoneId> zone_ids_;
    std::vector<std::size_t> centroids_;
    std::vector<std::vector<std::pair<std::size_t, double>>> trip_ends_;
};

/// t = t0 (1 + alpha (flow / capacity)^beta)
double bpr_time(const Link& link, double flow);
/// Integral of bpr_time from 0 to flow.
double bpr_integral(const Link& link, double flow);

std::vector<double> link_times(const RoadGraph& g, std::span<const double> flows);
/// Beckmann objective sum_a integral_0^{x_a} t_a(s) ds.
double beckmann_objective(const RoadGraph& g, std::span<const double> flows);

struct ShortestPathTree {
    std::vector<double> distance;    // +inf when unreachable
    std::vector<std::int64_t> pred;  // incoming link index, -1 at root or unreachable
};

/// One-to-all label-setting shortest paths. Among equal-distance
/// predecessors, the one whose tail has the smaller node_id wins (then the
/// smaller link_id for parallel links).
ShortestPathTree shortest_paths(const RoadGraph& g, std::span<const double> times, std::size_t origin);

/// Zone-by-zone demand for one period in veh/hour, row-major over
/// RoadGraph::zone_ids().
struct OdMatrix {
    std::size_t zones = 0;
    std::vector<double> flow;

    double at(std::size_t o, std::size_t d) const { return flow[o * zones + d]; }
    double total() const;
};

/// Period slice of a trip table converted to veh/hour.
OdMatrix period_demand(const RoadGraph& g, const TripTable& trips, Period p, double period_hours);

/// Loads every O-D demand onto its current shortest path. Parallel over
/// origin nodes; per-origin results are reduced in origin order, so the
/// result does not depend on `threads`. Intrazonal demand is not loaded.
/// Throws AssignmentError naming an unreachable demanded O-D pair.
std::vector<double> all_or_nothing(const RoadGraph& g, std::span<const double> times, const OdMatrix& demand,
                                   unsigned threads = 1);

/// Step in [0, 1] zeroing g(l) = sum_a t_a(x_a + l (y_a - x_a)) (y_a - x_a),
/// found by bisection to `tol`.
double line_search(const RoadGraph& g, std::span<const double> x, std::span<const double> y, double tol = 1e-8);

struct FrankWolfeOptions {
    int max_iters = 200;
    double gap_tol = 1e-4;
    double line_search_tol = 1e-8;
    unsigned threads = 1;
};

struct AssignmentResult {
    Period period = Period::AM;
    std::vector<double> flow; // veh/hour
    std::vector<double> time; // minutes
    int iterations = 0;
    std::vector<double> relative_gap;
    std::vector<double> objective;
    bool converged = false;
};

/// Relative gap (sum x t - sum y t) / sum x t, 0 when there is no flow.
double relative_gap(std::span<const double> x, std::span<const double> y, std::span<const double> times);

/// Static user equilibrium by Frank-Wolfe: start from all-or-nothing at
/// free-flow times, then each iteration computes link times, the
/// all-or-nothing direction and the relative gap, stops at gap <= gap_tol,
/// otherwise moves x <- x + lambda (y - x) with an exact line search.
AssignmentResult frank_wolfe_ue(const RoadGraph& g, const OdMatrix& demand, const FrankWolfeOptions& options = {},
                                Period period = Period::AM);

/// Zone-to-zone shortest-path costs from the centroids, diagonal set by the
/// intrazonal rule. Throws AssignmentError on an unreachable centroid pair.
std::vector<double> centroid_costs(const RoadGraph& g, std::span<const double> link_costs, unsigned threads = 1);

/// Builds the three-mode skim set: auto from the congested times of each
/// period, transit = factor * auto + wait, walk = shortest network distance
/// at walk speed (period independent).
SkimSet extract_skims(const RoadGraph& g, const std::array<std::vector<double>, 4>& period_times,
                      const SkimSettings& skim_settings, const DemandSettings& demand_settings, unsigned threads = 1);

SkimSet free_flow_skims(const RoadGraph& g, const SkimSettings& skim_settings, const DemandSettings& demand_settings,
                        unsigned threads = 1);

struct Accessibility {
    std::vector<ZoneId> zone_ids;
    std::vector<double> jobs_within;  // cumulative-opportunity measure
    std::vector<double> logsum;       // jobs-weighted mode-choice logsum

    bool operator==(const Accessibility&) const = default;

    void write_csv(const std::filesystem::path& path) const;
    static Accessibility read_csv(const std::filesystem::path& path);
};

/// A_z = sum_z' jobs_z' [time(z, z') <= threshold] on the auto skim of
/// `period`.
std::vector<double> cumulative_accessibility(const SkimSet& skims, std::span<const double> jobs, double threshold,
                                             Period period = Period::AM);

/// A_z = sum_z' w_z' ln sum_modes exp(V_mode(z, z')), w = jobs share of z'.
/// Mode utilities come from the accessibility_logsum spec (alternative
/// attributes only); walk is available up to the walk threshold.
std::vector<double> logsum_accessibility(const SkimSet& skims, std::span<const double> jobs,
                                         const choice::BoundSpec& mode_spec, double walk_threshold_min,
                                         Period period = Period::AM);

struct EnergyTotals {
    double vmt = 0.0;       // veh-km
    double vht = 0.0;       // veh-hours
    double energy_mj = 0.0; // MJ

    EnergyTotals& operator+=(const EnergyTotals& o) {
        vmt += o.vmt;
        vht += o.vht;
        energy_mj += o.energy_mj;
        return *this;
    }
};

/// Light-duty energy intensity (MJ per veh-km) by link speed (km/h):
///
///     speed      <10   10-20  20-30  30-50  50-70  70-90  90-110  >=110
///     MJ/veh-km  6.0   4.5    3.6    3.0    2.7    2.6    2.8     3.2
///
/// U-shaped: stop-and-go and high-speed drag both cost energy.
double energy_rate_mj_per_km(double speed_kmh);

/// VMT = sum x_a len_a h, VHT = sum x_a t_a / 60 h, energy = sum x_a len_a
/// rate(speed_a) h, with flows in veh/hour and h the period duration.
EnergyTotals energy_estimate(const RoadGraph& g, std::span<const double> flows, std::span<const double> times,
                             double period_hours = 1.0);

} // namespace urbanflow::assignment
