// Serial reference kernels against their OpenMP counterparts.
//   iar_bench --benchmark_filter=MI

#include "iar/dtr.hpp"
#include "iar/mi.hpp"
#include "iar/reference.hpp"
#include "iar/stats.hpp"
#include "iar/synth.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

struct Fixture {
    iar::synth::GeneratedArchive data;
    Fixture() {
        iar::synth::CohortOptions o;
        o.num_problems = 1;
        o.runs = 1;
        o.tokens_min = 512;
        o.tokens_max = 512;
        auto spec = iar::synth::make_cohort_spec(o);
        spec.subsample_dim = 256;
        spec.num_layers = 28;
        spec.vocab_size = 64;
        data = iar::synth::generate_run(spec, 0);
    }
    iar::MatrixView<float> states() const {
        const auto& h = data.header;
        return {data.payloads[0].final_states, h.problems[0].num_tokens, h.subsample_dim};
    }
};

const Fixture& fixture() {
    static const Fixture f;
    return f;
}

void BM_MI_Serial(benchmark::State& state) {
    const auto& f = fixture();
    for (auto _ : state) {
        auto t = iar::reference::mi_trace("q", f.states(), f.data.payloads[0].gold_embedding,
                                          iar::mi::BandwidthPolicy::fixed(50.0));
        benchmark::DoNotOptimize(t.values.data());
    }
}

void BM_MI_Parallel(benchmark::State& state) {
    const auto& f = fixture();
    for (auto _ : state) {
        auto t = iar::mi::mi_trace("q", f.states(), f.data.payloads[0].gold_embedding,
                                   iar::mi::BandwidthPolicy::fixed(50.0));
        benchmark::DoNotOptimize(t.values.data());
    }
}

void BM_Median_Serial(benchmark::State& state) {
    const auto& f = fixture();
    for (auto _ : state) benchmark::DoNotOptimize(iar::reference::median_heuristic_sigma(f.states()));
}

void BM_Median_Parallel(benchmark::State& state) {
    const auto& f = fixture();
    for (auto _ : state) benchmark::DoNotOptimize(iar::mi::median_heuristic_sigma(f.states()));
}

void BM_JS_Serial(benchmark::State& state) {
    const auto& f = fixture();
    for (auto _ : state) {
        auto js = iar::reference::js_matrix_from_raw(f.data.header, f.data.header.problems[0], f.data.payloads[0]);
        benchmark::DoNotOptimize(js.values.values.data());
    }
}

void BM_JS_Parallel(benchmark::State& state) {
    const auto& f = fixture();
    for (auto _ : state) {
        auto js = iar::dtr::js_matrix_from_raw(f.data.header, f.data.header.problems[0], f.data.payloads[0]);
        benchmark::DoNotOptimize(js.values.values.data());
    }
}

std::pair<std::vector<double>, std::vector<double>> groups() {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<double> a(120), b(200);
    for (auto& v : a) v = n(rng);
    for (auto& v : b) v = n(rng) + 0.5;
    return {a, b};
}

double rb(std::span<const double> a, std::span<const double> b) { return iar::stats::rank_biserial(a, b); }

void BM_Bootstrap_Serial(benchmark::State& state) {
    const auto [a, b] = groups();
    for (auto _ : state) benchmark::DoNotOptimize(iar::reference::bootstrap_ci(a, b, rb, 1000, 1));
}

void BM_Bootstrap_Parallel(benchmark::State& state) {
    const auto [a, b] = groups();
    for (auto _ : state) benchmark::DoNotOptimize(iar::stats::bootstrap_ci(a, b, rb, 1000, 1));
}

}  // namespace

BENCHMARK(BM_MI_Serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MI_Parallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Median_Serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Median_Parallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_JS_Serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_JS_Parallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Bootstrap_Serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Bootstrap_Parallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
