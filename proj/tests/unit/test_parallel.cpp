#include "helpers.hpp"

#include "iar/parallel.hpp"
#include "iar/pipeline.hpp"
#include "iar/reference.hpp"

#include <doctest.h>

#include <random>

using namespace iar;

namespace {

struct ThreadScope {
    int saved = parallel::max_threads();
    explicit ThreadScope(int n) { parallel::set_threads(n); }
    ~ThreadScope() { parallel::set_threads(saved); }
};

}  // namespace

TEST_CASE("OpenMP kernels equal their serial references bitwise") {
    const auto spec = testing_support::cohort(3, 17, 1);
    const auto g = synth::generate_run(spec, 0);
    const auto& h = g.header;
    for (int threads : {1, 4}) {
        ThreadScope scope(threads);
        for (std::size_t i = 0; i < h.problems.size(); ++i) {
            const auto& m = h.problems[i];
            const auto& p = g.payloads[i];
            const MatrixView<float> fs(p.final_states, m.num_tokens, h.subsample_dim);
            for (const auto& pol : {mi::BandwidthPolicy::fixed(50.0), mi::BandwidthPolicy::median()}) {
                const auto par = mi::mi_trace(m.problem_id, fs, p.gold_embedding, pol);
                const auto ser = reference::mi_trace(m.problem_id, fs, p.gold_embedding, pol);
                CHECK(par.values == ser.values);
                CHECK(par.sigma_used == ser.sigma_used);
            }
            CHECK(mi::median_heuristic_sigma(fs) == reference::median_heuristic_sigma(fs));
            CHECK(dtr::js_matrix_from_raw(h, m, p).values.values == reference::js_matrix_from_raw(h, m, p).values.values);
        }
        std::mt19937_64 rng(1);
        std::normal_distribution<double> n01;
        std::vector<double> a(40), b(55);
        for (auto& v : a) v = n01(rng);
        for (auto& v : b) v = n01(rng) + 0.5;
        const auto stat = [](std::span<const double> x, std::span<const double> y) { return stats::rank_biserial(x, y); };
        const auto par = stats::bootstrap_ci(a, b, stat, 500, 3);
        const auto ser = reference::bootstrap_ci(a, b, stat, 500, 3);
        CHECK(par.low == ser.low);
        CHECK(par.high == ser.high);
    }
}

TEST_CASE("pipeline reports do not depend on the thread count") {
    const auto archives = testing_support::in_memory(testing_support::cohort(24, 19));
    pipeline::PipelineConfig c;
    c.n_resamples = 100;
    std::string one, four;
    {
        ThreadScope s(1);
        one = report::render(pipeline::run_rq4(archives, c), report::Format::tsv) +
              report::render(pipeline::run_rq1(archives[0], c), report::Format::json);
    }
    {
        ThreadScope s(4);
        four = report::render(pipeline::run_rq4(archives, c), report::Format::tsv) +
               report::render(pipeline::run_rq1(archives[0], c), report::Format::json);
    }
    CHECK(one == four);
}

TEST_CASE("exceptions inside parallel loops reach the caller") {
    ThreadScope s(4);
    CHECK_THROWS_AS(parallel::for_each_index(100,
                                             [](std::size_t i) {
                                                 if (i == 57) throw ParameterError("boom");
                                             }),
                    ParameterError);
}
