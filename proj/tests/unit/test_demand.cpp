#include <doctest.h>

#include <cmath>
#include <map>

#include "support.hpp"
#include "urbanflow/demand.hpp"
#include "urbanflow/error.hpp"

using namespace urbanflow;
using namespace urbanflow::demand;
using choice::kUnavailable;

namespace {

choice::BoundSpec spec(const std::string& name, std::vector<std::pair<std::string, double>> coefs = {}) {
    return choice::BoundSpec::bind(UtilitySpec{name, std::move(coefs)}, schema_for(name));
}

// Every mode and period gets the same matrix unless overridden.
SkimSet skims(const std::vector<ZoneId>& ids, const std::vector<double>& m) {
    SkimSet s(ids);
    for (auto mode : kSkimModes)
        for (auto p : kPeriods) s.set(mode, p, m);
    return s;
}

ZoneData zones(std::vector<ZoneId> ids, std::vector<double> jobs, std::vector<double> households) {
    ZoneData z;
    z.zone_ids = std::move(ids);
    z.jobs = std::move(jobs);
    z.households = std::move(households);
    z.logsum_access.assign(z.zone_ids.size(), 1.0);
    return z;
}

// n single-person households in zone 1; persons are workers aged 40.
Population singles(int n, std::int64_t autos = 1, bool worker = true, bool student = false) {
    Population p;
    for (int i = 1; i <= n; ++i) {
        p.households.push_back({i, 1, 60.0, 1, autos, 0});
        p.persons.push_back({i, i, 40, worker, student, std::nullopt});
    }
    return p;
}

Tour tour(std::int64_t id, PersonId person, Purpose purpose, ZoneId o, ZoneId d, int depart = 8, int back = 17) {
    Tour t;
    t.tour_id = id;
    t.person_id = person;
    t.household_id = person;
    t.purpose = purpose;
    t.origin = o;
    t.destination = d;
    t.depart_hour = depart;
    t.return_hour = back;
    return t;
}

SpecSet departure_specs(std::map<int, double> work_hours = {}, double four_hours = 0.0,
                        std::map<int, double> other_hours = {}) {
    SpecSet s;
    const auto hours = [](const std::string& name, const std::map<int, double>& h) {
        UtilitySpec u{name, {}};
        for (const auto& [hour, b] : h) u.coefficients.push_back({"hour_" + std::to_string(hour), b});
        return u;
    };
    s["departure_work"] = hours("departure_work", work_hours);
    s["departure_school"] = hours("departure_school", {});
    s["departure_other"] = hours("departure_other", other_hours);
    s["duration_other"] = UtilitySpec{"duration_other", {{"is_4h", four_hours}}};
    return s;
}

const std::vector<double> kEqualTimes{2, 10, 10, 10, 2, 10, 10, 10, 2};

} // namespace

TEST_SUITE("demand") {

TEST_CASE("workplace choice") {
    const StreamFactory streams{42, 2020};
    const auto sk = skims({1, 2, 3}, kEqualTimes);
    const auto wp = spec("workplace", {{"time", -0.1}, {"log_size", 1.0}});
    SUBCASE("all jobs in one zone") {
        auto pop = singles(50);
        workplace_choice(pop, zones({1, 2, 3}, {0, 0, 80}, {50, 0, 0}), sk, wp, 25, streams);
        for (const auto& p : pop.persons) CHECK(p.workplace_zone == 3);
    }
    SUBCASE("two equal zones split evenly") {
        auto pop = singles(1000);
        workplace_choice(pop, zones({1, 2, 3}, {0, 40, 40}, {50, 0, 0}), sk, wp, 25, streams);
        int in2 = 0;
        for (const auto& p : pop.persons) in2 += p.workplace_zone == 2;
        CHECK(testing::within_3_sigma(in2, 1000, 0.5));
    }
    SUBCASE("non-workers and placed workers are left alone") {
        auto pop = singles(3);
        pop.persons[0].is_worker = false;
        pop.persons[1].workplace_zone = 2;
        workplace_choice(pop, zones({1, 2, 3}, {0, 0, 80}, {50, 0, 0}), sk, wp, 25, streams);
        CHECK_FALSE(pop.persons[0].workplace_zone.has_value());
        CHECK(pop.persons[1].workplace_zone == 2);
        CHECK(pop.persons[2].workplace_zone == 3);
    }
}

TEST_CASE("auto ownership") {
    const StreamFactory streams{42, 2020};
    const auto z = zones({1}, {10}, {10});
    SUBCASE("dominant zero autos") {
        auto pop = singles(200, 2);
        auto_ownership(pop, z, spec("auto_ownership", {{"is_1", -1000}, {"is_2", -1000}}), streams);
        for (const auto& h : pop.households) CHECK(h.autos == 0);
    }
    SUBCASE("zero coefficients are uniform") {
        auto pop = singles(3000);
        auto_ownership(pop, z, spec("auto_ownership"), streams);
        std::array<int, 3> counts{};
        for (const auto& h : pop.households) ++counts.at(static_cast<std::size_t>(h.autos));
        for (int c : counts) CHECK(testing::within_3_sigma(c, 3000, 1.0 / 3.0));
    }
    SUBCASE("income raises ownership") {
        auto pop = singles(10000);
        for (std::size_t i = 0; i < pop.households.size(); ++i) pop.households[i].income = 10.0 + 0.02 * i;
        auto_ownership(pop, z, spec("auto_ownership", {{"income*autos", 0.02}}), streams);
        std::array<double, 10> mean{};
        for (std::size_t i = 0; i < pop.households.size(); ++i) mean[i / 1000] += pop.households[i].autos / 1000.0;
        for (std::size_t d = 1; d < 10; ++d) CHECK(mean[d] >= mean[d - 1]);
    }
}

TEST_CASE("cdap enumeration") {
    SUBCASE("single person") {
        const std::vector<double> u{5, 0, 0};
        const auto p = cdap_combination_probabilities(u, 1, 0.0);
        const double e5 = std::exp(5.0);
        CHECK(p[0] == doctest::Approx(e5 / (e5 + 2)).epsilon(1e-12));
        CHECK(p[0] == doctest::Approx(0.986).epsilon(1e-3));
    }
    SUBCASE("two persons, flat utilities") {
        const auto p = cdap_combination_probabilities(std::vector<double>(6, 0.0), 2, 0.0);
        REQUIRE(p.size() == 9);
        for (double x : p) CHECK(x == doctest::Approx(1.0 / 9.0).epsilon(1e-14));
    }
    SUBCASE("strong joint term makes both stay non-mandatory") {
        const auto p = cdap_combination_probabilities(std::vector<double>(6, 0.0), 2, 10.0);
        // N for both: digit 1 in both places, c = 1 + 3 * 1.
        CHECK(p[4] > 0.99);
        CHECK(p[4] == doctest::Approx(std::exp(10.0) / (std::exp(10.0) + 8)).epsilon(1e-12));
    }
    SUBCASE("digit order and joint bonus against hand enumeration") {
        // Person 0 (M 1.0, N 0.2, H 0), person 1 (M unavailable, N 0.5, H 0), person 2 (0.3, 0.1, 0).
        const std::vector<double> u{1.0, 0.2, 0.0, kUnavailable, 0.5, 0.0, 0.3, 0.1, 0.0};
        const double joint = 0.7;
        const auto v = cdap_combination_utilities(u, 3, joint);
        const auto p = cdap_combination_probabilities(u, 3, joint);
        REQUIRE(v.size() == 27);
        double z = 0.0;
        std::vector<double> oracle(27);
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                for (int c = 0; c < 3; ++c) {
                    const int idx = a + 3 * b + 9 * c;
                    const int n_count = (a == 1) + (b == 1) + (c == 1);
                    const double util = u[a] + u[3 + b] + u[6 + c] + joint * n_count * (n_count - 1) / 2.0;
                    oracle[idx] = std::exp(util);
                    if (b == 0) oracle[idx] = 0.0;
                    z += oracle[idx];
                }
        for (int i = 0; i < 27; ++i) CHECK(std::abs(p[i] - oracle[i] / z) < 1e-12);
        CHECK(v[1 + 3 + 9] == doctest::Approx(0.2 + 0.5 + 0.1 + 3 * joint));
        CHECK(v[0] == kUnavailable);
        CHECK(p[9] == 0.0);
    }
    SUBCASE("groups over the cap are rejected") {
        RandomStream s(1);
        CHECK_THROWS_AS(cdap_draw(std::vector<double>(18, 0.0), 6, 0.0, 5, s), ChoiceError);
        CHECK(cdap_draw(std::vector<double>(15, 0.0), 5, 0.0, 5, s).size() == 5);
    }
}

TEST_CASE("cdap over a population") {
    const auto b = testing::load_fixture();
    const StreamFactory streams{42, 2020};
    const auto cd = bind_spec(b.specs, "cdap");
    const auto p1 = cdap(b.population, cd, b.settings.demand, streams, 1);
    const auto p3 = cdap(b.population, cd, b.settings.demand, streams, 3);
    CHECK(p1 == p3);
    REQUIRE(p1.size() == b.population.persons.size());
    for (std::size_t i = 0; i < p1.size(); ++i) {
        const auto& p = b.population.persons[i];
        if (!p.is_worker && !p.is_student) CHECK(p1[i] != Pattern::M);
    }
}

TEST_CASE("tour generation") {
    const StreamFactory streams{42, 2020};
    const auto freq0 = spec("nm_frequency");
    SUBCASE("mandatory worker goes to the workplace") {
        auto pop = singles(1);
        pop.persons[0].workplace_zone = 12;
        const auto tours = generate_tours(pop, std::vector<Pattern>{Pattern::M}, freq0, streams);
        REQUIRE(tours.size() == 1);
        CHECK(tours[0].purpose == Purpose::Work);
        CHECK(tours[0].destination == 12);
        CHECK(tours[0].origin == 1);
        CHECK(tours[0].tour_id == 1);
    }
    SUBCASE("home pattern has no tours") {
        const auto pop = singles(5);
        CHECK(generate_tours(pop, std::vector<Pattern>(5, Pattern::H), freq0, streams).empty());
    }
    SUBCASE("mandatory worker without a workplace is an error") {
        const auto pop = singles(1);
        CHECK_THROWS_AS(generate_tours(pop, std::vector<Pattern>{Pattern::M}, freq0, streams), ChoiceError);
    }
    SUBCASE("flat frequency spec") {
        const auto pop = singles(3000);
        const auto tours = generate_tours(pop, std::vector<Pattern>(3000, Pattern::N), freq0, streams);
        std::map<PersonId, int> per;
        for (const auto& t : tours) {
            CHECK(t.purpose == Purpose::Other);
            ++per[t.person_id];
        }
        std::array<int, 3> counts{};
        for (const auto& p : pop.persons) ++counts.at(static_cast<std::size_t>(per[p.person_id]));
        for (int c : counts) CHECK(testing::within_3_sigma(c, 3000, 1.0 / 3.0));
        for (std::size_t i = 0; i < tours.size(); ++i) CHECK(tours[i].tour_id == static_cast<std::int64_t>(i + 1));
    }
}

TEST_CASE("tour destination") {
    const StreamFactory streams{42, 2020};
    const auto school = spec("destination_school", {{"time", -0.2}, {"log_size", 1.0}});
    const auto other = spec("destination_other", {{"time", -0.2}, {"log_size", 1.0}});
    const auto pop = singles(2000);
    std::vector<Tour> base;
    for (int i = 1; i <= 2000; ++i) base.push_back(tour(i, i, Purpose::Other, 1, 0));

    SUBCASE("single attraction") {
        auto tours = base;
        tour_destination(tours, pop, zones({1, 2, 3}, {0, 0, 10}, {0, 0, 0}), skims({1, 2, 3}, kEqualTimes), school,
                         other, 25, streams);
        for (const auto& t : tours) CHECK(t.destination == 3);
    }
    SUBCASE("symmetric split") {
        auto tours = base;
        tour_destination(tours, pop, zones({1, 2, 3}, {0, 10, 10}, {0, 0, 0}), skims({1, 2, 3}, kEqualTimes), school,
                         other, 25, streams);
        int in2 = 0;
        for (const auto& t : tours) in2 += t.destination == 2;
        CHECK(testing::within_3_sigma(in2, 2000, 0.5));
    }
    SUBCASE("closer zone attracts more") {
        auto tours = base;
        tour_destination(tours, pop, zones({1, 2, 3}, {0, 10, 10}, {0, 0, 0}),
                         skims({1, 2, 3}, {2, 5, 15, 5, 2, 10, 15, 10, 2}), school, other, 25, streams);
        int in2 = 0;
        for (const auto& t : tours) in2 += t.destination == 2;
        const double p2 = 1.0 / (1.0 + std::exp(-0.2 * 10.0));
        CHECK(in2 > 1000);
        CHECK(testing::within_3_sigma(in2, 2000, p2));
    }
    SUBCASE("work tours keep their destination") {
        std::vector<Tour> tours{tour(1, 1, Purpose::Work, 1, 2)};
        tour_destination(tours, pop, zones({1, 2, 3}, {0, 0, 10}, {0, 0, 5}), skims({1, 2, 3}, kEqualTimes), school,
                         other, 25, streams);
        CHECK(tours[0].destination == 2);
    }
}

TEST_CASE("departure time") {
    const StreamFactory streams{42, 2020};
    const auto pop = singles(10000);
    SUBCASE("work constants peaking at 8") {
        std::vector<Tour> tours;
        for (int i = 1; i <= 10000; ++i) tours.push_back(tour(i, i, Purpose::Work, 1, 2, -1, -1));
        departure_time(tours, pop, departure_specs({{6, 0.5}, {7, 1.5}, {8, 2.0}, {9, 1.0}}), streams);
        std::array<int, 24> counts{};
        for (const auto& t : tours) {
            ++counts.at(static_cast<std::size_t>(t.depart_hour));
            CHECK(t.return_hour == std::min(23, t.depart_hour + 9));
        }
        CHECK(std::max_element(counts.begin(), counts.end()) - counts.begin() == 8);
    }
    SUBCASE("flat constants are uniform over the feasible hours") {
        std::vector<Tour> tours;
        for (int i = 1; i <= 10000; ++i) tours.push_back(tour(i, i, Purpose::School, 1, 2, -1, -1));
        departure_time(tours, pop, departure_specs(), streams);
        std::array<int, 24> counts{};
        for (const auto& t : tours) ++counts.at(static_cast<std::size_t>(t.depart_hour));
        CHECK(counts[23] == 0);
        for (int h = 0; h < 23; ++h) CHECK(testing::within_3_sigma(counts[h], 10000, 1.0 / 23.0));
    }
    SUBCASE("late four-hour tour is clamped") {
        std::vector<Tour> tours{tour(1, 1, Purpose::Other, 1, 2, -1, -1)};
        departure_time(tours, pop, departure_specs({}, 50.0, {{22, 50.0}}), streams);
        CHECK(tours[0].depart_hour == 22);
        CHECK(tours[0].return_hour == 23);
    }
}

TEST_CASE("tour mode") {
    const StreamFactory streams{42, 2020};
    const PeriodMap periods;
    DemandSettings settings;
    const auto sk = skims({1, 2}, {1, 10, 10, 1});
    const auto n = 6000;
    std::vector<Tour> base;
    for (int i = 1; i <= n; ++i) base.push_back(tour(i, i, Purpose::Other, 1, 2));

    SUBCASE("zero-auto households never drive alone") {
        auto tours = base;
        tour_mode(tours, singles(n, 0), sk, spec("tour_mode", {{"time", -0.05}}), settings, periods, streams);
        for (const auto& t : tours) REQUIRE(t.mode != Mode::DriveAlone);
    }
    SUBCASE("equal utilities give uniform shares") {
        auto tours = base;
        tour_mode(tours, singles(n), sk, spec("tour_mode"), settings, periods, streams);
        std::array<int, 4> counts{};
        for (const auto& t : tours) ++counts[static_cast<std::size_t>(t.mode)];
        for (int c : counts) CHECK(testing::within_3_sigma(c, n, 0.25));
    }
    SUBCASE("walk respects the distance threshold") {
        auto tours = base;
        auto far = skims({1, 2}, {1, 10, 10, 1});
        for (auto p : kPeriods) far.set(SkimMode::Walk, p, {5, 45, 45, 5});
        tour_mode(tours, singles(n), far, spec("tour_mode"), settings, periods, streams);
        for (const auto& t : tours) REQUIRE(t.mode != Mode::Walk);
    }
    SUBCASE("faster transit raises its share") {
        const auto share = [&](double transit_time) {
            auto s = skims({1, 2}, {1, 10, 10, 1});
            for (auto p : kPeriods) s.set(SkimMode::Transit, p, {1, transit_time, transit_time, 1});
            auto tours = base;
            tour_mode(tours, singles(n), s, spec("tour_mode", {{"time", -0.05}}), settings, periods, streams);
            int c = 0;
            for (const auto& t : tours) c += t.mode == Mode::Transit;
            return c;
        };
        CHECK(share(12.0) > share(30.0));
    }
}

TEST_CASE("trips and trip modes") {
    const StreamFactory streams{42, 2020};
    const PeriodMap periods;
    DemandSettings settings;
    const auto sk = skims({1, 2}, {1, 10, 10, 1});

    SUBCASE("trips chain origin to destination and back") {
        auto t1 = tour(1, 1, Purpose::Work, 1, 2, 8, 17);
        auto t2 = tour(2, 1, Purpose::Other, 1, 1, 18, 20);
        const auto trips = make_trips({t1, t2});
        REQUIRE(trips.size() == 4);
        CHECK(trips[0].trip_id == 1);
        CHECK(trips[1].trip_id == 2);
        CHECK(trips[0].origin == 1);
        CHECK(trips[0].destination == 2);
        CHECK(trips[1].origin == 2);
        CHECK(trips[1].destination == 1);
        CHECK(trips[0].hour == 8);
        CHECK(trips[1].hour == 17);
        CHECK(trips[3].tour_id == 2);
        auto bad = t1;
        bad.return_hour = 8;
        CHECK_THROWS_AS(make_trips({bad}), ChoiceError);
    }
    SUBCASE("permitted modes") {
        CHECK(permitted_trip_modes(Mode::DriveAlone) == std::vector<Mode>{Mode::DriveAlone});
        CHECK(permitted_trip_modes(Mode::Walk) == std::vector<Mode>{Mode::Walk});
        CHECK(permitted_trip_modes(Mode::Transit) == std::vector<Mode>{Mode::Transit, Mode::Walk});
        CHECK(permitted_trip_modes(Mode::Shared) == std::vector<Mode>{Mode::Shared, Mode::Walk});
    }
    SUBCASE("walk tour walks both legs") {
        auto t = tour(1, 1, Purpose::Other, 1, 2, 9, 13);
        t.mode = Mode::Walk;
        const std::vector<Tour> tours{t};
        auto trips = make_trips(tours);
        trips[0].mode = trips[1].mode = Mode::DriveAlone;
        trip_mode(trips, tours, singles(1), sk, spec("trip_mode"), settings, periods, streams);
        CHECK(trips[0].mode == Mode::Walk);
        CHECK(trips[1].mode == Mode::Walk);
    }
    SUBCASE("transit tour legs split evenly with equal utilities") {
        const int n = 3000;
        std::vector<Tour> tours;
        for (int i = 1; i <= n; ++i) {
            tours.push_back(tour(i, i, Purpose::Other, 1, 2, 9, 13));
            tours.back().mode = Mode::Transit;
        }
        auto trips = make_trips(tours);
        trip_mode(trips, tours, singles(n), sk, spec("trip_mode"), settings, periods, streams);
        int transit = 0;
        for (const auto& t : trips) {
            REQUIRE((t.mode == Mode::Transit || t.mode == Mode::Walk));
            transit += t.mode == Mode::Transit;
        }
        CHECK(testing::within_3_sigma(transit, 2 * n, 0.5));
    }
}

TEST_CASE("trip table") {
    const PeriodMap periods;
    std::vector<Trip> da;
    for (int i = 1; i <= 3; ++i) da.push_back({i, i, i, 1, 2, 8, Mode::DriveAlone});
    const auto t = build_trip_table(da, periods);
    CHECK(t.size() == 1);
    CHECK(t.at(1, 2, Period::AM) == 3.0);

    std::vector<Trip> other{{1, 1, 1, 1, 2, 8, Mode::Walk}, {2, 1, 1, 2, 1, 17, Mode::Transit}};
    CHECK(build_trip_table(other, periods).empty());

    std::vector<Trip> shared;
    for (int i = 1; i <= 4; ++i) shared.push_back({i, i, i, 2, 3, 12, Mode::Shared});
    CHECK(build_trip_table(shared, periods).at(2, 3, Period::MD) == 2.0);
    CHECK(build_trip_table(shared, periods, 4.0).at(2, 3, Period::MD) == 1.0);
}

TEST_CASE("daily step on the fixture") {
    const auto b = testing::load_fixture();
    const assignment::RoadGraph g(b.network);
    const auto sk = assignment::free_flow_skims(g, b.settings.skims, b.settings.demand);
    assignment::Accessibility access;
    access.zone_ids = b.zone_ids();
    access.jobs_within.assign(access.zone_ids.size(), 100.0);
    access.logsum.assign(access.zone_ids.size(), 1.0);

    const auto day = daily_step(b, sk, access, 2020);
    CHECK(day.patterns.size() == b.population.persons.size());
    CHECK(day.trips.size() == 2 * day.tours.size());
    std::map<std::int64_t, Tour> by_id;
    for (const auto& t : day.tours) by_id[t.tour_id] = t;
    for (std::size_t k = 0; k + 1 < day.trips.size(); k += 2) {
        const auto& out = day.trips[k];
        const auto& back = day.trips[k + 1];
        const auto& t = by_id.at(out.tour_id);
        REQUIRE(back.tour_id == out.tour_id);
        CHECK(out.origin == t.origin);
        CHECK(out.destination == back.origin);
        CHECK(back.destination == t.origin);
        CHECK(out.hour < back.hour);
        const auto allowed = permitted_trip_modes(t.mode);
        CHECK(std::find(allowed.begin(), allowed.end(), out.mode) != allowed.end());
        CHECK(std::find(allowed.begin(), allowed.end(), back.mode) != allowed.end());
    }
    for (const auto& p : day.population.persons)
        if (p.is_worker) CHECK(p.workplace_zone.has_value());
    CHECK(day.trip_table.total() > 0.0);

    auto threaded = b;
    threaded.settings.threads = 4;
    const auto again = daily_step(threaded, sk, access, 2020);
    CHECK(again.tours == day.tours);
    CHECK(again.trips == day.trips);
    CHECK(again.trip_table == day.trip_table);
}

}
