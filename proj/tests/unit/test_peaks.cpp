#include "oracles.hpp"

#include "iar/peaks.hpp"

#include <doctest.h>

#include <random>

using namespace iar;
using namespace iar::peaks;

namespace {
mi::MITrace make(std::vector<double> v, std::string id = "q") { return {std::move(id), std::move(v), 50.0}; }
}  // namespace

TEST_CASE("tukey fence on small traces") {
    // Q1 = 1, Q3 = 3, IQR = 2 -> fence 6.
    CHECK(tukey_threshold(std::vector<double>{0, 1, 2, 3, 4}) == doctest::Approx(6.0));
    // Q1 = Q3 = 1 -> fence 1; only the 10 exceeds it.
    const auto p = detect_peaks(make({1, 1, 1, 1, 10}));
    CHECK(p.threshold == doctest::Approx(1.0));
    CHECK(p.indices == IndexSet{4});
    CHECK(p.trace_length == 5);
}

TEST_CASE("exceedance is strict") {
    // Q1 = 0, Q3 = 0: fence 0, ties at the fence are not peaks.
    const auto p = detect_peaks(make({0, 0, 0, 0, 0, 0, 0, 0}));
    CHECK(p.empty());
    CHECK(detect_peaks(make({0.5})).empty());
}

TEST_CASE("detect_peaks matches the oracle and is shift/scale invariant") {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> len(1, 80);
    std::exponential_distribution<double> e(3.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> v(len(rng));
        for (auto& x : v) x = e(rng);
        const auto p = detect_peaks(make(v));
        CHECK(p.indices == oracle::tukey_peaks(v));
        CHECK(p.threshold == doctest::Approx(oracle::tukey_fence(v)).epsilon(1e-12));
        std::vector<double> w(v);
        for (auto& x : w) x = 4.0 * x + 8.0;  // power-of-two scale keeps comparisons exact
        CHECK(detect_peaks(make(w)).indices == p.indices);
    }
}

TEST_CASE("peak statistics") {
    const auto tr = make({1, 1, 1, 1, 10, 1, 1, 8});
    const auto p = detect_peaks(tr);
    REQUIRE(p.indices == IndexSet{4, 7});
    const auto s = peak_statistics(p, tr);
    CHECK(s.count == 2);
    CHECK(s.ratio == doctest::Approx(0.25));
    REQUIRE(s.intensity);
    CHECK(*s.intensity == doctest::Approx(9.0));

    const auto flat = make({2, 2, 2});
    const auto none = peak_statistics(detect_peaks(flat), flat);
    CHECK(none.count == 0);
    CHECK(none.ratio == 0.0);
    CHECK_FALSE(none.intensity.has_value());

    CHECK_THROWS_AS(peak_statistics(p, make({1, 2}, "other")), ConsistencyError);
}

TEST_CASE("with-peaks rate") {
    std::vector<PeakSet> sets(4);
    sets[1].indices = {3};
    sets[3].indices = {0, 1};
    CHECK(with_peaks_rate(sets) == doctest::Approx(50.0));
    CHECK_THROWS_AS(with_peaks_rate(std::span<const PeakSet>{}), ParameterError);
    CHECK_THROWS_AS(tukey_threshold(std::vector<double>{}), ParameterError);
}
