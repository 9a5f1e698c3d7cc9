#include "helpers.hpp"
#include "oracles.hpp"

#include "iar/dtr.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace iar;
using namespace iar::dtr;

namespace {
std::vector<double> random_simplex(std::mt19937_64& rng, std::size_t n) {
    std::exponential_distribution<double> e(1.0);
    std::vector<double> p(n);
    double s = 0;
    for (auto& v : p) s += (v = e(rng));
    for (auto& v : p) v /= s;
    return p;
}
}  // namespace

TEST_CASE("jsd analytic values") {
    CHECK(jsd(std::vector<double>{0.5, 0.5}, std::vector<double>{1.0, 0.0}) == doctest::Approx(0.311278).epsilon(1e-6));
    CHECK(jsd(std::vector<double>{1.0, 0.0}, std::vector<double>{0.0, 1.0}) == doctest::Approx(1.0));
    const std::vector<double> p = {0.2, 0.3, 0.5};
    CHECK(jsd(p, p) == 0.0);
    CHECK_THROWS_AS(jsd(p, std::vector<double>{0.5, 0.5}), ShapeError);
    CHECK_THROWS_AS(jsd(p, std::vector<double>{0.5, 0.5, 0.5}), RangeError);
}

TEST_CASE("jsd agrees with the entropy form and stays in range") {
    std::mt19937_64 rng(17);
    for (int i = 0; i < 300; ++i) {
        const std::size_t n = 2 + i % 9;
        const auto p = random_simplex(rng, n);
        auto q = random_simplex(rng, n);
        if (i % 5 == 0) {
            // zero entry in q exercises the 0 log 0 convention
            const double rest = 1.0 - q[0];
            q[0] = 0.0;
            for (std::size_t k = 1; k < n; ++k) q[k] /= rest;
        }
        const double d = jsd(p, q);
        CHECK(d >= 0.0);
        CHECK(d <= 1.0);
        CHECK(std::abs(d - jsd(q, p)) <= 1e-12);
        CHECK(d == doctest::Approx(oracle::jsd_entropy(p, q)).epsilon(1e-10).scale(1.0));
    }
}

TEST_CASE("settling layer") {
    CHECK(settling_layer(std::vector<double>{0.9, 0.6, 0.4, 0.0}, 0.5) == 3);
    CHECK(settling_layer(std::vector<double>{0.1, 0.2, 0.3, 0.0}, 0.5) == 1);
    CHECK(settling_layer(std::vector<double>{0.1, 0.9, 0.3, 0.0}, 0.5) == 3);
    CHECK(settling_layer(std::vector<double>{0.9, 0.9, 0.9, 0.0}, 0.5) == 4);
    CHECK(settling_layer(std::vector<double>{0.0}, 0.5) == 1);
    CHECK_THROWS_AS(settling_layer(std::vector<double>{0.1, 0.2}, 0.5), RangeError);
    CHECK_THROWS_AS(settling_layer(std::vector<double>{}, 0.5), ShapeError);
    CHECK_THROWS_AS(settling_layer(std::vector<double>{0.0}, 0.0), ParameterError);
}

TEST_CASE("settling layer matches direct search and is monotone in tau") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 300; ++i) {
        std::vector<double> row(2 + i % 40);
        for (auto& v : row) v = u(rng);
        row.back() = 0.0;
        std::size_t prev = row.size() + 1;
        for (double tau : {0.05, 0.2, 0.5, 0.8, 1.01}) {
            const std::size_t l = settling_layer(row, tau);
            CHECK(l == oracle::settling_direct(row, tau));
            CHECK(l <= prev);
            prev = l;
        }
    }
}

TEST_CASE("cutoff layers") {
    CHECK(cutoff_layer(28, 0.85) == 23);
    CHECK(cutoff_layer(48, 0.85) == 40);
    CHECK(cutoff_layer(32, 0.85) == 27);
    CHECK(cutoff_layer(20, 0.85) == 17);
    CHECK(cutoff_layer(12, 0.85) == 10);
    CHECK_THROWS_AS(cutoff_layer(12, 1.0), ParameterError);
    CHECK_THROWS_AS(cutoff_layer(12, 0.0), ParameterError);
}

TEST_CASE("deep set from a JS matrix") {
    JSMatrix js{"q", Matrix(3, 4)};
    const double rows[3][4] = {{0.9, 0.9, 0.9, 0.0}, {0.1, 0.1, 0.1, 0.0}, {0.9, 0.9, 0.2, 0.0}};
    for (int t = 0; t < 3; ++t)
        for (int l = 0; l < 4; ++l) js.values(t, l) = rows[t][l];
    const auto d = dtr_deep_set(js, 0.5, 0.85);
    CHECK(d.cutoff_layer == 3);
    CHECK(d.settling_layers == std::vector<std::size_t>{4, 1, 3});
    CHECK(d.indices == IndexSet{0, 2});
    CHECK(d.problem_id == "q");
}

TEST_CASE("logit lens matches a brute-force oracle on a tiny raw archive") {
    // 2 tokens, 3 layers, d = 4, V = 4.
    archive::ArchiveHeader h;
    h.model_name = "m";
    h.num_layers = 3;
    h.hidden_dim = 4;
    h.subsample_dim = 2;
    h.vocab_size = 4;
    h.rmsnorm_eps = 1e-6;
    archive::ProblemMeta m;
    m.problem_id = "q";
    m.num_tokens = 2;
    m.token_strings = {"a", "b"};
    h.problems.push_back(m);

    std::mt19937_64 rng(29);
    std::normal_distribution<float> g(0.0f, 1.0f);
    archive::ProblemPayload p;
    p.final_states.resize(2 * 2);
    p.gold_embedding.resize(2);
    p.per_layer_states.resize(2 * 3 * 4);
    p.rmsnorm_gain = {1.0f, 0.5f, 2.0f, 1.5f};
    p.unembedding.resize(4 * 4);
    for (auto* t : {&p.final_states, &p.gold_embedding, &p.per_layer_states, &p.unembedding})
        for (auto& v : *t) v = g(rng);

    const auto js = js_matrix_from_raw(h, m, p);
    REQUIRE(js.tokens() == 2);
    REQUIRE(js.layers() == 3);
    std::vector<std::vector<double>> W(4, std::vector<double>(4));
    for (int v = 0; v < 4; ++v)
        for (int j = 0; j < 4; ++j) W[v][j] = p.unembedding[v * 4 + j];
    const std::vector<double> gain(p.rmsnorm_gain.begin(), p.rmsnorm_gain.end());
    for (int t = 0; t < 2; ++t) {
        auto hidden = [&](int l) {
            const auto* b = p.per_layer_states.data() + (t * 3 + l) * 4;
            return std::vector<double>(b, b + 4);
        };
        const auto final_dist = oracle::logit_lens(hidden(2), gain, 1e-6, W);
        for (int l = 0; l < 3; ++l) {
            const double want = oracle::jsd_entropy(oracle::logit_lens(hidden(l), gain, 1e-6, W), final_dist);
            CHECK(js.values(t, l) == doctest::Approx(want).epsilon(1e-9).scale(1.0));
        }
        CHECK(js.values(t, 2) == 0.0);
    }
}

TEST_CASE("js matrix dispatch by mode") {
    const auto h = testing_support::js_header(1, 4, 3, 5);
    const auto payloads = testing_support::js_payloads(h);
    const auto js = js_matrix(h, h.problems[0], payloads[0]);
    CHECK(js.values(1, 0) == static_cast<double>(payloads[0].js_matrix[3]));
    CHECK_THROWS_AS(js_matrix_from_raw(h, h.problems[0], payloads[0]), ModeError);
}

TEST_CASE("raising tau never removes deep tokens relative to the cutoff scan") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    JSMatrix js{"q", Matrix(50, 28)};
    for (std::size_t t = 0; t < 50; ++t) {
        for (std::size_t l = 0; l < 27; ++l) js.values(t, l) = u(rng);
    }
    std::size_t prev = 51;
    for (double tau : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        const auto d = dtr_deep_set(js, tau);
        CHECK(d.indices.size() <= prev);
        prev = d.indices.size();
    }
}
