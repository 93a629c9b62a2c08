// Acceptance checks on the desk fixture. Prints one PASS/FAIL line per
// criterion and exits nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "urbanflow/assignment.hpp"
#include "urbanflow/choice.hpp"
#include "urbanflow/demand.hpp"
#include "urbanflow/estimation.hpp"
#include "urbanflow/pipeline.hpp"
#include "urbanflow/scenario.hpp"

using namespace urbanflow;
namespace fs = std::filesystem;

namespace {

const fs::path kFixture = URBANFLOW_FIXTURE_DIR;

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("urbanflow_acceptance_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Relative paths and bytes of every file below root, in sorted order.
std::vector<std::pair<std::string, std::string>> tree(const fs::path& root) {
    std::vector<std::pair<std::string, std::string>> files;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) files.emplace_back(fs::relative(e.path(), root).generic_string(), slurp(e.path()));
    std::sort(files.begin(), files.end());
    return files;
}

choice::BoundSpec spec(const std::string& name, std::vector<std::pair<std::string, double>> coefs,
                       choice::Schema schema) {
    return choice::BoundSpec::bind(UtilitySpec{name, std::move(coefs)}, schema);
}

// ---------------------------------------------------------------- 1

void mnl_correctness(Outcome& o) {
    const auto p = choice::mnl_probabilities(std::vector<double>{1.0, 0.0});
    o.require(std::abs(p[0] - 0.731059) <= 1e-6 && std::abs(p[1] - 0.268941) <= 1e-6, "V=(1,0)");
    o.detail << "P(1,0)=(" << p[0] << ", " << p[1] << ")";

    RandomStream s(101);
    double worst_p = 0.0, worst_ls = 0.0;
    for (int k = 0; k < 100; ++k) {
        const std::size_t n = 2 + s.below(9);
        std::vector<double> v(n), shifted(n);
        const double c = 2000.0 * s.uniform() - 1000.0;
        for (std::size_t i = 0; i < n; ++i) {
            v[i] = 10.0 * s.uniform() - 5.0;
            shifted[i] = v[i] + c;
        }
        const auto a = choice::mnl_probabilities(v), b = choice::mnl_probabilities(shifted);
        for (std::size_t i = 0; i < n; ++i) worst_p = std::max(worst_p, std::abs(a[i] - b[i]));
        double direct = 0.0;
        for (double x : v) direct += std::exp(x);
        worst_ls = std::max(worst_ls, std::abs(choice::logsum(shifted) - c - std::log(direct)));
    }
    o.require(worst_p <= 1e-9, "shift invariance");
    o.require(worst_ls <= 1e-9, "logsum shift identity");
    o.detail << " max|dP|=" << worst_p << " max|dlogsum|=" << worst_ls;
}

// ---------------------------------------------------------------- 2

void estimation_round_trip(Outcome& o) {
    const auto t0 = std::chrono::steady_clock::now();
    const choice::Schema schema{{}, {"x1", "x2"}};
    const auto skeleton = spec("est", {{"x1", 0.0}, {"x2", 0.0}}, schema);
    const double b1 = 0.8, b2 = -0.3;

    RandomStream s(20240611);
    std::vector<choice::Observation> obs;
    for (int i = 0; i < 5000; ++i) {
        choice::Observation ob;
        ob.choices = choice::ChoiceSet(i, 2);
        double best = -1e300;
        for (int j = 0; j < 4; ++j) {
            const double x[2] = {4.0 * s.uniform() - 2.0, 4.0 * s.uniform() - 2.0};
            ob.choices.add(j, x);
            const double u = b1 * x[0] + b2 * x[1] + s.gumbel();
            if (u > best) {
                best = u;
                ob.chosen = static_cast<std::size_t>(j);
            }
        }
        obs.push_back(std::move(ob));
    }

    const auto fit = choice::mnl_fit(skeleton, obs);
    o.require(fit.status == choice::FitStatus::Converged, "fit converged");
    o.require(fit.std_errors.size() == 2, "standard errors");
    if (fit.std_errors.size() == 2) {
        o.require(std::abs(fit.coefficients[0] - b1) <= 3 * fit.std_errors[0], "beta1 within 3 se");
        o.require(std::abs(fit.coefficients[1] - b2) <= 3 * fit.std_errors[1], "beta2 within 3 se");
        o.detail << "beta=(" << fit.coefficients[0] << " +- " << fit.std_errors[0] << ", " << fit.coefficients[1]
                 << " +- " << fit.std_errors[1] << ")";
    }

    double worst = 0.0;
    const double h = 1e-5;
    for (int k = 0; k < 10; ++k) {
        const std::vector<double> beta{2.0 * s.uniform() - 1.0, 2.0 * s.uniform() - 1.0};
        const auto g = choice::mnl_loglik_and_gradient(skeleton, beta, obs);
        for (std::size_t j = 0; j < 2; ++j) {
            auto up = beta, down = beta;
            up[j] += h;
            down[j] -= h;
            const double fd = (choice::mnl_loglik_and_gradient(skeleton, up, obs).value -
                               choice::mnl_loglik_and_gradient(skeleton, down, obs).value) / (2 * h);
            worst = std::max(worst, std::abs(fd - g.gradient[j]) / std::max(std::abs(fd), 1e-8));
        }
    }
    o.require(worst < 1e-6, "gradient vs central differences");
    const double secs = seconds_since(t0);
    o.require(secs < 10.0, "runtime < 10 s");
    o.detail << " max grad rel err=" << worst << " time=" << secs << "s";
}

// ---------------------------------------------------------------- 3

void ue_oracle(Outcome& o) {
    Network net;
    for (NodeId id : {1, 2}) net.nodes.push_back({id, static_cast<double>(id), 0.0, id});
    net.links.push_back({1, 1, 2, 1.0, 1.0, 1.0, 1.0, 1.0});
    // t2 = 2 (1 + 0.25 x2) = 2 + 0.5 x2
    net.links.push_back({2, 1, 2, 1.0, 1.0, 2.0, 0.25, 1.0});
    net.links.push_back({3, 2, 1, 1.0, 1.0, 1.0, 0.15, 4.0});
    net.zone_centroids = {{1, 1}, {2, 2}};
    const assignment::RoadGraph g(net);
    assignment::OdMatrix od{2, {0, 10, 0, 0}};
    assignment::FrankWolfeOptions opt;
    opt.gap_tol = 1e-6;
    opt.max_iters = 100;
    const auto r = assignment::frank_wolfe_ue(g, od, opt);

    o.require(r.converged && r.relative_gap.back() <= 1e-6, "gap <= 1e-6 within 100 iterations");
    o.require(std::abs(r.flow[0] - 4.0) <= 1e-3 && std::abs(r.flow[1] - 6.0) <= 1e-3, "flows (4,6)");
    o.require(std::abs(r.time[0] - 5.0) <= 1e-3 && std::abs(r.time[1] - 5.0) <= 1e-3, "common time 5");
    bool monotone = true;
    for (std::size_t k = 1; k < r.objective.size(); ++k) monotone = monotone && r.objective[k] <= r.objective[k - 1];
    o.require(monotone, "objective non-increasing");
    o.detail << "flows=(" << r.flow[0] << ", " << r.flow[1] << ") times=(" << r.time[0] << ", " << r.time[1]
             << ") iterations=" << r.iterations << " gap=" << r.relative_gap.back();
}

// ---------------------------------------------------------------- 4

void assignment_at_scale(Outcome& o) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto b = load_scenario(kFixture / "scenario.cfg");
    const assignment::RoadGraph g(b.network);
    const auto skims = assignment::free_flow_skims(g, b.settings.skims, b.settings.demand);
    const auto access = pipeline::compute_accessibility(b, b.zones, b.population, skims);
    const auto day = demand::daily_step(b, skims, access, b.settings.start_year);

    assignment::FrankWolfeOptions opt;
    opt.gap_tol = 1e-4;
    opt.max_iters = 200;
    opt.threads = 4;
    double worst_gap = 0.0;
    int most_iters = 0;
    bool identical = true;
    for (auto p : kPeriods) {
        const auto od = assignment::period_demand(g, day.trip_table, p, b.settings.periods.duration_hours(p));
        const auto r = assignment::frank_wolfe_ue(g, od, opt, p);
        o.require(r.converged, std::string("period ") + std::string(to_string(p)) + " converged");
        worst_gap = std::max(worst_gap, r.relative_gap.back());
        most_iters = std::max(most_iters, r.iterations);
        identical = identical && assignment::all_or_nothing(g, r.time, od, 1) == assignment::all_or_nothing(g, r.time, od, 4);
    }
    o.require(worst_gap <= 1e-4, "gap <= 1e-4");
    o.require(identical, "parallel AON bit-identical");
    const double secs = seconds_since(t0);
    o.require(secs < 30.0, "runtime < 30 s");
    o.detail << "vehicle trips=" << day.trip_table.total() << " max gap=" << worst_gap
             << " max iterations=" << most_iters << " time=" << secs << "s";
}

// ---------------------------------------------------------------- 5

void demand_integrity(Outcome& o) {
    const auto b = load_scenario(kFixture / "scenario.cfg");
    const assignment::RoadGraph g(b.network);
    const auto skims = assignment::free_flow_skims(g, b.settings.skims, b.settings.demand);
    const auto access = pipeline::compute_accessibility(b, b.zones, b.population, skims);
    const auto day = demand::daily_step(b, skims, access, b.settings.start_year);

    std::size_t bad = 0;
    std::map<std::int64_t, std::vector<const demand::Trip*>> legs;
    for (const auto& t : day.trips) legs[t.tour_id].push_back(&t);
    for (const auto& tour : day.tours) {
        const auto& l = legs[tour.tour_id];
        const auto allowed = demand::permitted_trip_modes(tour.mode);
        const auto ok_mode = [&](demand::Mode m) { return std::find(allowed.begin(), allowed.end(), m) != allowed.end(); };
        const bool ok = l.size() == 2 && l[0]->origin == tour.origin && l[0]->destination == tour.destination &&
                        l[1]->origin == tour.destination && l[1]->destination == tour.origin &&
                        l[0]->hour < l[1]->hour && ok_mode(l[0]->mode) && ok_mode(l[1]->mode);
        bad += !ok;
    }
    o.require(bad == 0 && legs.size() == day.tours.size(), "trip chains well-formed");

    double da = 0.0, shared = 0.0;
    for (const auto& t : day.trips) {
        da += t.mode == demand::Mode::DriveAlone;
        shared += t.mode == demand::Mode::Shared;
    }
    o.require(day.trip_table.total() == da + shared / 2.0, "trip table total");

    RandomStream s(5);
    double worst = 0.0;
    for (std::size_t n = 1; n <= 3; ++n)
        for (int rep = 0; rep < 20; ++rep) {
            std::vector<double> u(3 * n);
            for (auto& x : u) x = 4.0 * s.uniform() - 2.0;
            if (rep % 4 == 0) u[0] = choice::kUnavailable;
            const double joint = 2.0 * s.uniform();
            const auto p = demand::cdap_combination_probabilities(u, n, joint);
            std::size_t combos = 1;
            for (std::size_t i = 0; i < n; ++i) combos *= 3;
            std::vector<double> w(combos);
            double z = 0.0;
            for (std::size_t c = 0; c < combos; ++c) {
                double v = 0.0;
                std::size_t rest = c, n_count = 0;
                for (std::size_t i = 0; i < n; ++i) {
                    const std::size_t pattern = rest % 3;
                    rest /= 3;
                    v += u[3 * i + pattern];
                    n_count += pattern == 1;
                }
                v += joint * static_cast<double>(n_count * (n_count - 1) / 2);
                w[c] = std::exp(v);
                z += w[c];
            }
            for (std::size_t c = 0; c < combos; ++c) worst = std::max(worst, std::abs(p[c] - w[c] / z));
        }
    o.require(worst <= 1e-12, "cdap enumeration oracle");
    o.detail << "tours=" << day.tours.size() << " malformed=" << bad << " trip table=" << day.trip_table.total()
             << " (da " << da << ", shared " << shared << ") cdap max err=" << worst;
}

// ---------------------------------------------------------------- 6

void market_clearing(Outcome& o) {
    const auto sp = spec("toy", {{"price", -1.0}}, {{}, {"price"}});
    std::vector<double> attrs(10, 0.0);
    choice::ChoiceSet set(0, 1);
    const double p0[1] = {1.0};
    set.add(1, p0);
    set.add(2, p0);
    const std::vector<double> supply{8, 2};
    RandomStream s(42);
    choice::MarketClearingOptions opt; // gamma 0.5, tol 0.05, 50 iterations
    const auto r = choice::market_clearing_assignment(sp, {attrs, 1}, set, supply, "price", s, opt);
    double excess = 0.0;
    for (std::size_t m = 0; m < 2; ++m) excess = std::max(excess, std::abs(r.demand[m] - supply[m]) / supply[m]);
    o.require(r.converged && r.iterations <= 50 && excess <= 0.05, "clears within 50 iterations");
    o.require(r.prices[1] > r.prices[0], "scarce submarket dearer");
    std::array<int, 2> placed{};
    for (auto m : r.placement) ++placed.at(m);
    o.require(placed[0] <= 8 && placed[1] <= 2, "placement within supply");
    o.detail << "iterations=" << r.iterations << " demand=(" << r.demand[0] << ", " << r.demand[1] << ") prices=("
             << r.prices[0] << ", " << r.prices[1] << ") placed=(" << placed[0] << ", " << placed[1] << ")";
}

// ---------------------------------------------------------------- 7

void determinism(Outcome& o) {
    const auto dir = scratch("determinism");
    auto b = load_scenario(kFixture / "scenario.cfg");
    b.settings.global_seed = 42;
    pipeline::run_scenario(b, dir / "a");
    pipeline::run_scenario(b, dir / "b");
    b.settings.global_seed = 43;
    pipeline::run_scenario(b, dir / "c");
    const auto a = tree(dir / "a" / "desk25"), bb = tree(dir / "b" / "desk25"), c = tree(dir / "c" / "desk25");
    o.require(a == bb, "seed 42 runs byte-identical");
    std::size_t differing = 0;
    for (std::size_t i = 0; i < std::min(a.size(), c.size()); ++i) differing += a[i] != c[i];
    o.require(differing > 0, "other seed changes outputs");
    o.detail << "files=" << a.size() << " differing with seed 43=" << differing;
    fs::remove_all(dir);
}

// ---------------------------------------------------------------- 8

double vehicle_trips(const fs::path& scenario_dir, int year) {
    return TripTable::read_csv(scenario_dir / std::to_string(year) / "demand" / "trip_table.csv").total();
}

void end_to_end(Outcome& o) {
    const auto dir = scratch("end_to_end");
    const auto st = load_scenario(kFixture / "static.cfg");
    const auto m = pipeline::run_scenario(st, dir);
    const auto base = SkimSet::read_csv(dir / "static" / "base" / "feedback" / "skims.csv", st.zone_ids());
    bool free_flow = true;
    for (const auto& y : m.years)
        free_flow = free_flow && SkimSet::read_csv(dir / "static" / std::to_string(y.year) / "feedback" / "skims.csv",
                                                   st.zone_ids()) == base;
    o.require(free_flow, "static scenario keeps free-flow skims");

    const auto roomy = load_scenario(kFixture / "roomy.cfg");
    const auto doubled = load_scenario(kFixture / "doubled.cfg");
    pipeline::run_scenario(roomy, dir);
    pipeline::run_scenario(doubled, dir);
    const double t1 = vehicle_trips(dir / "roomy", roomy.settings.start_year);
    const double t2 = vehicle_trips(dir / "doubled", doubled.settings.start_year);
    o.require(t2 > t1, "doubled control totals add vehicle trips");
    o.detail << "static years=" << m.years.size() << " vehicle trips " << t1 << " -> " << t2;
    fs::remove_all(dir);
}

// ---------------------------------------------------------------- 9

void performance(Outcome& o) {
    const auto dir = scratch("performance");
    auto b = load_scenario(kFixture / "scenario.cfg");
    b.settings.end_year = b.settings.start_year;
    b.settings.threads = 4;
    const auto t0 = std::chrono::steady_clock::now();
    pipeline::run_scenario(b, dir);
    const double secs = seconds_since(t0);
    o.require(secs < 60.0, "one year < 60 s");
    o.detail << "one simulated year=" << secs << "s";
    fs::remove_all(dir);
}

} // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<void(Outcome&)>>> criteria{
        {"MNL correctness", mnl_correctness},
        {"Estimation round trip", estimation_round_trip},
        {"UE analytic oracle", ue_oracle},
        {"Assignment at scale", assignment_at_scale},
        {"Demand integrity", demand_integrity},
        {"Market clearing", market_clearing},
        {"Pipeline determinism", determinism},
        {"End-to-end sanity", end_to_end},
        {"Performance envelope", performance},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            criteria[i].second(o);
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << " [exception: " << e.what() << "]";
        }
        failed += !o.pass;
        std::printf("AC%zu %s: %s -- %s\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first, o.detail.str().c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria failed\n", failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
