#include <doctest.h>

#include <cmath>
#include <limits>

#include "support.hpp"
#include "urbanflow/assignment.hpp"
#include "urbanflow/error.hpp"

using namespace urbanflow;
using namespace urbanflow::assignment;
using testing::link;

namespace {

// Two parallel links 1 -> 2 with linear costs t1 = 1 + x1 and t2 = 2 + 0.5 x2
// (alpha 0.25 on t0 = 2). Equal times with x1 + x2 = 10 give (4, 6) at 5.
Network two_link() {
    return testing::network({link(1, 1, 2, 1.0, 1.0, 1.0, 1.0), link(2, 1, 2, 2.0, 1.0, 0.25, 1.0)}, {1, 2});
}

OdMatrix single_od(const RoadGraph& g, std::size_t o, std::size_t d, double q) {
    OdMatrix m{g.zone_count(), std::vector<double>(g.zone_count() * g.zone_count(), 0.0)};
    m.flow[o * m.zones + d] = q;
    return m;
}

} // namespace

TEST_SUITE("assignment") {

TEST_CASE("bpr time and integral") {
    const auto l = link(1, 1, 2, 10.0, 100.0, 0.15, 4.0);
    CHECK(bpr_time(l, 0.0) == 10.0);
    CHECK(bpr_time(l, 100.0) == doctest::Approx(11.5).epsilon(1e-14));
    // Closed form t0 (x + alpha x^(b+1) / ((b+1) c^b)).
    const double x = 130.0;
    CHECK(bpr_integral(l, x) == doctest::Approx(10.0 * (x + 0.15 * std::pow(x, 5) / (5 * std::pow(100.0, 4)))));
    CHECK(bpr_integral(l, 0.0) == 0.0);
}

TEST_CASE("shortest paths") {
    SUBCASE("single link") {
        const RoadGraph g(testing::network({link(1, 1, 2, 5.0)}, {1, 2}));
        const auto t = shortest_paths(g, g.free_flow_times(), g.node_index(1));
        CHECK(t.distance[g.node_index(2)] == 5.0);
        CHECK(t.pred[g.node_index(1)] == -1);
    }
    SUBCASE("triangle goes through the middle node") {
        const RoadGraph g(testing::network({link(1, 1, 2, 1.0), link(2, 2, 3, 1.0), link(3, 1, 3, 3.0)}, {1, 3}));
        const auto t = shortest_paths(g, g.free_flow_times(), g.node_index(1));
        CHECK(t.distance[g.node_index(3)] == 2.0);
        CHECK(g.link(static_cast<std::size_t>(t.pred[g.node_index(3)])).link_id == 2);
    }
    SUBCASE("equal paths prefer the smaller predecessor node id") {
        // Link ids run against node ids so that only the node rule can pick 2.
        const RoadGraph g(testing::network(
            {link(1, 1, 3, 1.0), link(2, 3, 4, 1.0), link(3, 1, 2, 1.0), link(4, 2, 4, 1.0)}, {1, 4}));
        const auto t = shortest_paths(g, g.free_flow_times(), g.node_index(1));
        CHECK(t.distance[g.node_index(4)] == 2.0);
        CHECK(g.link(static_cast<std::size_t>(t.pred[g.node_index(4)])).from_node == 2);
    }
    SUBCASE("parallel links prefer the smaller link id") {
        const RoadGraph g(testing::network({link(9, 1, 2, 1.0), link(4, 1, 2, 1.0)}, {1, 2}));
        const auto t = shortest_paths(g, g.free_flow_times(), g.node_index(1));
        CHECK(g.link(static_cast<std::size_t>(t.pred[g.node_index(2)])).link_id == 4);
    }
    SUBCASE("unreachable nodes stay at infinity") {
        const RoadGraph g(testing::network({link(1, 2, 1, 1.0)}, {1, 2}));
        const auto t = shortest_paths(g, g.free_flow_times(), g.node_index(1));
        CHECK(std::isinf(t.distance[g.node_index(2)]));
        CHECK(t.pred[g.node_index(2)] == -1);
    }
}

TEST_CASE("all or nothing") {
    const RoadGraph g(testing::network(
        {link(1, 1, 2, 1.0), link(2, 2, 3, 1.0), link(3, 3, 4, 1.0), link(4, 4, 1, 1.0), link(5, 1, 4, 9.0)},
        {1, 4}));
    SUBCASE("unique path carries the demand") {
        const auto y = all_or_nothing(g, g.free_flow_times(), single_od(g, 0, 1, 10.0));
        CHECK(y == std::vector<double>{10, 10, 10, 0, 0});
    }
    SUBCASE("zero demand") {
        const auto y = all_or_nothing(g, g.free_flow_times(), single_od(g, 0, 1, 0.0));
        CHECK(y == std::vector<double>(5, 0.0));
    }
    SUBCASE("intrazonal demand is not loaded") {
        const auto y = all_or_nothing(g, g.free_flow_times(), single_od(g, 0, 0, 10.0));
        CHECK(y == std::vector<double>(5, 0.0));
    }
    SUBCASE("unreachable demanded pair names the zones") {
        const RoadGraph one_way(testing::network({link(1, 1, 2, 1.0)}, {1, 2}));
        try {
            (void)all_or_nothing(one_way, one_way.free_flow_times(), single_od(one_way, 1, 0, 1.0));
            FAIL("expected AssignmentError");
        } catch (const AssignmentError& e) {
            CHECK(std::string(e.what()).find("zone 2 -> zone 1") != std::string::npos);
        }
    }
}

TEST_CASE("line search") {
    const RoadGraph g(two_link());
    const std::vector<double> x{10, 0}, y{0, 10};
    CHECK(line_search(g, x, x) == 0.0);
    // g(l) = 10 [t2(10 l) - t1(10 - 10 l)] = 10 (15 l - 9), root 0.6.
    const double lambda = line_search(g, x, y, 1e-12);
    CHECK(lambda == doctest::Approx(0.6).epsilon(1e-10));
    const double x1 = 10 - 10 * lambda, x2 = 10 * lambda;
    CHECK(std::abs(bpr_time(g.link(0), x1) - bpr_time(g.link(1), x2)) < 1e-8);
    // Moving toward the more expensive link from equilibrium gains nothing.
    CHECK(line_search(g, std::vector<double>{4, 6}, std::vector<double>{0, 10}) == doctest::Approx(0.0).epsilon(1e-7));
}

TEST_CASE("relative gap") {
    const std::vector<double> x{4, 6}, y{0, 10}, t{5, 5};
    CHECK(relative_gap(x, y, t) == 0.0);
    const std::vector<double> t2{3, 7};
    CHECK(relative_gap(x, std::vector<double>{10, 0}, t2) == doctest::Approx((12.0 + 42.0 - 30.0) / 54.0));
    CHECK(relative_gap(std::vector<double>{0, 0}, std::vector<double>{0, 0}, t) == 0.0);
}

TEST_CASE("frank wolfe") {
    SUBCASE("two parallel links reach the analytic equilibrium") {
        const RoadGraph g(two_link());
        FrankWolfeOptions opt;
        opt.gap_tol = 1e-6;
        opt.max_iters = 100;
        const auto r = frank_wolfe_ue(g, single_od(g, 0, 1, 10.0), opt);
        REQUIRE(r.converged);
        CHECK(r.flow[0] == doctest::Approx(4.0).epsilon(1e-3));
        CHECK(r.flow[1] == doctest::Approx(6.0).epsilon(1e-3));
        CHECK(r.time[0] == doctest::Approx(5.0).epsilon(1e-3));
        CHECK(r.time[1] == doctest::Approx(5.0).epsilon(1e-3));
        for (std::size_t k = 1; k < r.objective.size(); ++k) CHECK(r.objective[k] <= r.objective[k - 1] + 1e-12);
    }
    SUBCASE("alpha 0.5 on the second link scales with its t0") {
        // t2 = 2 (1 + 0.5 x2) = 2 + x2; equal times give x1 = 5.5 at 6.5.
        const RoadGraph g(testing::network({link(1, 1, 2, 1.0, 1.0, 1.0, 1.0), link(2, 1, 2, 2.0, 1.0, 0.5, 1.0)},
                                           {1, 2}));
        FrankWolfeOptions opt;
        opt.gap_tol = 1e-6;
        const auto r = frank_wolfe_ue(g, single_od(g, 0, 1, 10.0), opt);
        CHECK(r.flow[0] == doctest::Approx(5.5).epsilon(1e-3));
        CHECK(r.time[1] == doctest::Approx(6.5).epsilon(1e-3));
    }
    SUBCASE("single path converges at once") {
        const RoadGraph g(testing::network({link(1, 1, 2, 1.0, 5.0), link(2, 2, 3, 1.0, 5.0)}, {1, 3}));
        const auto r = frank_wolfe_ue(g, single_od(g, 0, 1, 7.0));
        CHECK(r.converged);
        CHECK(r.iterations == 1);
        CHECK(r.relative_gap.at(0) == 0.0);
        CHECK(r.flow == std::vector<double>{7.0, 7.0});
    }
}

TEST_CASE("skims") {
    SkimSettings ks;
    DemandSettings ds;
    SUBCASE("uncongested skims equal free-flow shortest paths") {
        const RoadGraph g(testing::network({link(1, 1, 2, 2.0), link(2, 2, 3, 3.0), link(3, 3, 1, 4.0)}, {1, 2, 3}));
        const auto s = free_flow_skims(g, ks, ds);
        CHECK(s.time(SkimMode::Auto, Period::AM, 0, 2) == 5.0);
        CHECK(s.time(SkimMode::Auto, Period::NT, 2, 1) == 6.0);
        CHECK(s.time(SkimMode::Auto, Period::AM, 0, 0) == 1.0); // 0.5 * min(2, 5)
        CHECK(s.time(SkimMode::Transit, Period::AM, 0, 2) == doctest::Approx(1.7 * 5.0 + 10.0));
        // Walk: two 1-km links at 5 km/h.
        CHECK(s.time(SkimMode::Walk, Period::MD, 0, 2) == doctest::Approx(24.0));
        CHECK_NOTHROW(s.validate());
    }
    SUBCASE("two-link skim after equilibrium") {
        auto net = two_link();
        net.links.push_back(link(3, 2, 1, 1.0));
        const RoadGraph g(net);
        FrankWolfeOptions opt;
        opt.gap_tol = 1e-6;
        const auto r = frank_wolfe_ue(g, single_od(g, 0, 1, 10.0), opt);
        std::array<std::vector<double>, 4> times{r.time, r.time, r.time, r.time};
        const auto s = extract_skims(g, times, ks, ds);
        CHECK(s.time(SkimMode::Auto, Period::AM, 0, 1) == doctest::Approx(5.0).epsilon(1e-3));
    }
}

TEST_CASE("accessibility") {
    SkimSet s({1, 2, 3});
    for (auto m : kSkimModes)
        for (auto p : kPeriods) s.set(m, p, {2, 10, 40, 10, 2, 20, 40, 20, 2});
    const std::vector<double> jobs{100, 50, 25};
    const double inf = std::numeric_limits<double>::infinity();
    for (double a : cumulative_accessibility(s, jobs, inf)) CHECK(a == 175.0);
    for (double a : cumulative_accessibility(s, jobs, 0.0)) CHECK(a == 0.0);
    const auto a30 = cumulative_accessibility(s, jobs, 30.0);
    CHECK(a30 == std::vector<double>{150, 175, 75});

}

TEST_CASE("logsum accessibility by hand") {
    SkimSet s({1, 2});
    for (auto p : kPeriods) {
        s.set(SkimMode::Auto, p, {1, 10, 10, 1});
        s.set(SkimMode::Transit, p, {2, 20, 20, 2});
        s.set(SkimMode::Walk, p, {5, 40, 40, 5});
    }
    const auto spec = bind_spec(SpecSet{{"accessibility_logsum",
                                         UtilitySpec{"accessibility_logsum", {{"time", -0.1}}}}},
                                "accessibility_logsum");
    const std::vector<double> jobs{30, 10};
    const auto a = logsum_accessibility(s, jobs, spec, 30.0);
    // Drive alone and shared share the auto time; walk only within 30 minutes.
    const auto ls = [](double auto_t, double transit_t, double walk_t) {
        double sum = 2 * std::exp(-0.1 * auto_t) + std::exp(-0.1 * transit_t);
        if (walk_t <= 30.0) sum += std::exp(-0.1 * walk_t);
        return std::log(sum);
    };
    CHECK(a[0] == doctest::Approx(0.75 * ls(1, 2, 5) + 0.25 * ls(10, 20, 40)).epsilon(1e-12));
    CHECK(a[1] == doctest::Approx(0.75 * ls(10, 20, 40) + 0.25 * ls(1, 2, 5)).epsilon(1e-12));
}

TEST_CASE("energy") {
    const RoadGraph g(testing::network({link(1, 1, 2, 2.4, 100.0, 0.15, 4.0, 2.0)}, {1, 2}));
    const std::vector<double> zero{0.0}, t{2.4};
    const auto e0 = energy_estimate(g, zero, t);
    CHECK(e0.vmt == 0.0);
    CHECK(e0.vht == 0.0);
    CHECK(e0.energy_mj == 0.0);
    const std::vector<double> ten{10.0};
    const auto e = energy_estimate(g, ten, t);
    CHECK(e.vmt == 20.0);
    CHECK(e.vht == doctest::Approx(10.0 * 2.4 / 60.0));
    // 2 km in 2.4 min = 50 km/h.
    CHECK(e.energy_mj == doctest::Approx(20.0 * 2.7));
    CHECK(energy_estimate(g, ten, t, 4.0).vmt == 80.0);
    CHECK(energy_rate_mj_per_km(5) == 6.0);
    CHECK(energy_rate_mj_per_km(49.9) == 3.0);
    CHECK(energy_rate_mj_per_km(120) == 3.2);
}

TEST_CASE("period demand converts to hourly rates") {
    const RoadGraph g(two_link());
    TripTable tt;
    tt.add(1, 2, Period::AM, 10.0);
    tt.add(1, 2, Period::PM, 3.0);
    const auto m = period_demand(g, tt, Period::AM, 4.0);
    CHECK(m.at(0, 1) == 2.5);
    CHECK(m.total() == 2.5);
}

TEST_CASE("fixture assignment is thread independent") {
    const auto b = testing::load_fixture();
    const RoadGraph g(b.network);
    OdMatrix m{g.zone_count(), std::vector<double>(g.zone_count() * g.zone_count(), 0.0)};
    RandomStream s(5);
    for (auto& q : m.flow) q = 2.0 * s.uniform();
    const auto y1 = all_or_nothing(g, g.free_flow_times(), m, 1);
    const auto y4 = all_or_nothing(g, g.free_flow_times(), m, 4);
    CHECK(y1 == y4);

    FrankWolfeOptions opt;
    opt.threads = 3;
    const auto r3 = frank_wolfe_ue(g, m, opt);
    opt.threads = 1;
    const auto r1 = frank_wolfe_ue(g, m, opt);
    CHECK(r1.flow == r3.flow);
    CHECK(r1.converged);
    CHECK(r1.relative_gap.back() <= 1e-4);
    // Every origin's demand leaves the origin centroid.
    double total = 0.0;
    for (std::size_t o = 0; o < m.zones; ++o)
        for (std::size_t d = 0; d < m.zones; ++d)
            if (o != d) total += m.at(o, d);
    CHECK(total > 0.0);
}

}
