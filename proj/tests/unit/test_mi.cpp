#include "oracles.hpp"

#include "iar/mi.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace iar;
using namespace iar::mi;

TEST_CASE("hsic_biased agrees with the dense oracle") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> size(2, 12);
    std::normal_distribution<double> g(0.0, 3.0);
    std::uniform_real_distribution<double> s(0.3, 20.0);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = size(rng);
        std::vector<double> x(n), y(n);
        for (auto& v : x) v = g(rng);
        for (auto& v : y) v = g(rng);
        const double sigma = s(rng);
        const double got = hsic_biased(x, y, sigma);
        CHECK(got == doctest::Approx(oracle::hsic_dense(x, y, sigma)).epsilon(1e-12).scale(1.0));
        CHECK(std::abs(got - CenteredGram(y, sigma).hsic(x)) <= 1e-14);
        CHECK(got >= -1e-15);
    }
}

TEST_CASE("n = 2 closed form") {
    // K = [[1,a],[a,1]], HKH = (1-a)/2 [[1,-1],[-1,1]], so trace(KHLH) = (1-a)(1-b).
    const double sigma = 1.5;
    const std::vector<double> x = {0.0, 2.0};
    const std::vector<double> y = {1.0, -0.5};
    const double a = std::exp(-4.0 / (2 * sigma * sigma));
    const double b = std::exp(-2.25 / (2 * sigma * sigma));
    CHECK(hsic_biased(x, y, sigma) == doctest::Approx((1 - a) * (1 - b)).epsilon(1e-14));
}

TEST_CASE("hsic is zero when either sample is constant") {
    const std::vector<double> x = {3.0, 3.0, 3.0, 3.0};
    const std::vector<double> y = {1.0, -2.0, 0.5, 9.0};
    CHECK(std::abs(hsic_biased(x, y, 2.0)) < 1e-15);
    CHECK(std::abs(hsic_biased(y, x, 2.0)) < 1e-15);
}

TEST_CASE("hsic depends only on within-sample differences") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> x(16), y(16);
    for (auto& v : x) v = g(rng);
    for (auto& v : y) v = g(rng);
    std::vector<double> shifted = x;
    for (auto& v : shifted) v += 0.25;  // exactly representable shift
    CHECK(hsic_biased(shifted, y, 1.0) == doctest::Approx(hsic_biased(x, y, 1.0)).epsilon(1e-12));
}

TEST_CASE("rbf kernel") {
    const std::vector<double> u = {0.0, 0.0};
    const std::vector<double> v = {3.0, 4.0};
    CHECK(rbf_kernel(u, v, 5.0) == doctest::Approx(std::exp(-0.5)));
    CHECK(rbf_kernel(u, u, 5.0) == 1.0);
    CHECK_THROWS_AS(rbf_kernel(u, std::vector<double>{1.0}, 1.0), ShapeError);
}

TEST_CASE("median heuristic") {
    // Rows 0, (3,4), (6,8): pairwise distances 5, 10, 5.
    const std::vector<float> s = {0, 0, 3, 4, 6, 8};
    CHECK(median_heuristic_sigma(MatrixView<float>(s, 3, 2)) == doctest::Approx(5.0));
    // Four rows on a line: distances 1,2,3,1,2,1 -> median of six = 1.5.
    const std::vector<float> line = {0, 1, 2, 3};
    CHECK(median_heuristic_sigma(MatrixView<float>(line, 4, 1)) == doctest::Approx(1.5));
    const std::vector<float> same = {1, 2, 1, 2, 1, 2};
    CHECK_THROWS_AS(median_heuristic_sigma(MatrixView<float>(same, 3, 2)), DegenerateError);
    CHECK_THROWS_AS(median_heuristic_sigma(MatrixView<float>(std::span<const float>(s).first(2), 1, 2)),
                    ParameterError);
}

TEST_CASE("bandwidth validation") {
    CHECK_THROWS_AS(BandwidthPolicy::fixed(0.0), ParameterError);
    CHECK_THROWS_AS(BandwidthPolicy::fixed(-1.0), ParameterError);
    CHECK_THROWS_AS(BandwidthPolicy::fixed(std::nan("")), ParameterError);
    const std::vector<double> x = {1, 2};
    CHECK_THROWS_AS(hsic_biased(std::vector<double>{1}, std::vector<double>{1}, 1.0), ParameterError);
    CHECK_THROWS_AS(hsic_biased(x, std::vector<double>{1, 2, 3}, 1.0), ShapeError);
}

TEST_CASE("mi_trace evaluates each token against the gold embedding") {
    std::mt19937_64 rng(11);
    std::normal_distribution<float> g(0.0f, 10.0f);
    const std::size_t T = 9, d = 6;
    std::vector<float> states(T * d), gold(d);
    for (auto& v : states) v = g(rng);
    for (auto& v : gold) v = g(rng);
    const auto view = MatrixView<float>(states, T, d);
    const auto tr = mi_trace("q", view, gold, BandwidthPolicy::fixed(50.0));
    CHECK(tr.problem_id == "q");
    CHECK(tr.sigma_used == 50.0);
    REQUIRE(tr.values.size() == T);
    const std::vector<double> y(gold.begin(), gold.end());
    for (std::size_t t = 0; t < T; ++t) {
        const std::vector<double> x(states.begin() + t * d, states.begin() + (t + 1) * d);
        CHECK(tr.values[t] == doctest::Approx(oracle::hsic_dense(x, y, 50.0)).epsilon(1e-12));
    }
    const auto med = mi_trace("q", view, gold, BandwidthPolicy::median());
    CHECK(med.sigma_used == doctest::Approx(median_heuristic_sigma(view)));
    CHECK_THROWS_AS(mi_trace("q", view, std::vector<float>(d + 1), BandwidthPolicy::fixed(1.0)), ShapeError);
}
