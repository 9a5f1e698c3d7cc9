#include "iar/reference.hpp"

#include "iar/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace iar::reference {

double median_heuristic_sigma(MatrixView<float> states) {
    const std::size_t n = states.rows();
    if (n < 2) throw ParameterError("median heuristic needs at least two states");
    std::vector<double> dist;
    dist.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double sq = 0.0;
            for (std::size_t k = 0; k < states.cols(); ++k) {
                const double d = static_cast<double>(states(i, k)) - static_cast<double>(states(j, k));
                sq += d * d;
            }
            dist.push_back(std::sqrt(sq));
        }
    }
    const double med = numeric::median(std::move(dist));
    if (!(med > 0.0)) throw DegenerateError("median heuristic bandwidth is zero (states are identical)");
    return med;
}

mi::MITrace mi_trace(std::string problem_id, MatrixView<float> final_states, std::span<const float> gold_embedding,
                     const mi::BandwidthPolicy& policy) {
    if (final_states.cols() != gold_embedding.size()) throw ShapeError("problem " + problem_id + ": width mismatch");
    if (final_states.rows() == 0) throw ShapeError("problem " + problem_id + ": empty trace");
    mi::MITrace trace;
    trace.problem_id = std::move(problem_id);
    trace.sigma_used = policy.mode == mi::BandwidthPolicy::Mode::fixed ? mi::BandwidthPolicy::fixed(policy.fixed_sigma).fixed_sigma
                                                                       : median_heuristic_sigma(final_states);
    const std::vector<double> gold(gold_embedding.begin(), gold_embedding.end());
    const mi::CenteredGram gram(gold, trace.sigma_used);
    std::vector<double> x(gold.size());
    for (std::size_t t = 0; t < final_states.rows(); ++t) {
        const auto row = final_states.row(t);
        std::copy(row.begin(), row.end(), x.begin());
        trace.values.push_back(gram.hsic(x));
    }
    return trace;
}

dtr::JSMatrix js_matrix_from_raw(const archive::ArchiveHeader& header, const archive::ProblemMeta& meta,
                                 const archive::ProblemPayload& payload) {
    if (header.mode != archive::Mode::raw) throw ModeError("problem " + meta.problem_id + ": not a raw-mode archive");
    const std::size_t T = meta.num_tokens;
    const std::size_t L = header.num_layers;
    const std::size_t d = header.hidden_dim;
    const std::size_t V = header.vocab_size.value_or(0);
    if (payload.per_layer_states.size() != T * L * d || payload.rmsnorm_gain.size() != d ||
        payload.unembedding.size() != V * d) {
        throw ShapeError("problem " + meta.problem_id + ": raw payload shape mismatch");
    }
    const double eps = header.rmsnorm_eps.value_or(0.0);
    const MatrixView<float> w_u(payload.unembedding, V, d);
    const std::span<const float> states(payload.per_layer_states);
    dtr::JSMatrix js;
    js.problem_id = meta.problem_id;
    js.values = Matrix(T, L);
    for (std::size_t t = 0; t < T; ++t) {
        const auto final_dist = dtr::layer_distribution(states.subspan((t * L + L - 1) * d, d), payload.rmsnorm_gain, eps, w_u);
        for (std::size_t l = 0; l + 1 < L; ++l) {
            js.values(t, l) = dtr::jsd(dtr::layer_distribution(states.subspan((t * L + l) * d, d), payload.rmsnorm_gain, eps, w_u),
                                       final_dist);
        }
    }
    return js;
}

stats::Interval bootstrap_ci(std::span<const double> a, std::span<const double> b,
                             const stats::TwoSampleStatistic& statistic, std::size_t n_resamples, std::uint64_t seed) {
    if (a.empty() || b.empty()) throw ParameterError("bootstrap_ci: both groups must be non-empty");
    if (n_resamples == 0) throw ParameterError("bootstrap_ci: need at least one resample");
    std::vector<double> values;
    std::vector<double> ra(a.size());
    std::vector<double> rb(b.size());
    for (std::size_t r = 0; r < n_resamples; ++r) {
        std::mt19937_64 rng(numeric::mix_seed(seed, r));
        std::uniform_int_distribution<std::size_t> pick_a(0, a.size() - 1);
        std::uniform_int_distribution<std::size_t> pick_b(0, b.size() - 1);
        for (double& v : ra) v = a[pick_a(rng)];
        for (double& v : rb) v = b[pick_b(rng)];
        values.push_back(statistic(ra, rb));
    }
    std::sort(values.begin(), values.end());
    return {numeric::quantile_sorted(values, 0.025), numeric::quantile_sorted(values, 0.975)};
}

}  // namespace iar::reference
