#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "urbanflow/random.hpp"

using namespace urbanflow;

TEST_SUITE("random") {

TEST_CASE("draws follow the SplitMix64 sequence") {
    // Reference values of the published SplitMix64 generator seeded with 0.
    RandomStream s(0);
    CHECK(s.next_u64() == 0xE220A8397B1DCDAFULL);
    CHECK(s.next_u64() == 0x6E789E6AA1B965F4ULL);
    CHECK(s.next_u64() == 0x06C45D188009454FULL);
    CHECK(s.position() == 3);
}

TEST_CASE("fnv1a reference values") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("derived streams are reproducible and keyed by every component") {
    const auto key = [](std::uint64_t seed, std::int64_t year, const char* model, std::uint64_t agent) {
        return derive_stream(seed, year, model, agent).key();
    };
    CHECK(key(42, 2020, "cdap", 7) == key(42, 2020, "cdap", 7));
    std::set<std::uint64_t> keys{key(42, 2020, "cdap", 7), key(43, 2020, "cdap", 7), key(42, 2021, "cdap", 7),
                                 key(42, 2020, "tour_mode", 7), key(42, 2020, "cdap", 8)};
    CHECK(keys.size() == 5);

    const StreamFactory f{42, 2020};
    CHECK(f("cdap", 7).key() == key(42, 2020, "cdap", 7));
}

TEST_CASE("uniform stays in [0, 1) with the right mean") {
    RandomStream s(123);
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double u = s.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    // Standard error of the mean is sqrt(1/12/n).
    CHECK(std::abs(sum / n - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST_CASE("below is bounded and roughly uniform") {
    RandomStream s(9);
    std::vector<int> counts(7, 0);
    const int n = 70000;
    for (int i = 0; i < n; ++i) {
        const auto v = s.below(7);
        REQUIRE(v < 7);
        ++counts[v];
    }
    const double p = 1.0 / 7.0;
    for (int c : counts) CHECK(std::abs(c - n * p) <= 4.0 * std::sqrt(n * p * (1 - p)));
    CHECK(s.below(1) == 0);
}

TEST_CASE("gumbel draws have the Euler-Mascheroni mean") {
    RandomStream s(5);
    double sum = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) sum += s.gumbel();
    const double sd = M_PI / std::sqrt(6.0);
    CHECK(std::abs(sum / n - 0.5772156649) < 4.0 * sd / std::sqrt(n));
}

}
