#include "iar/dtr.hpp"

#include "iar/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace iar::dtr {

namespace {

template <typename T>
std::vector<double> layer_distribution_impl(std::span<const T> hidden, std::span<const T> gain, double eps,
                                            MatrixView<T> unembedding) {
    const std::size_t d = hidden.size();
    if (d == 0) throw ShapeError("layer_distribution: empty hidden state");
    if (gain.size() != d) throw ShapeError("layer_distribution: gain width != hidden width");
    if (unembedding.cols() != d || unembedding.rows() == 0) {
        throw ShapeError("layer_distribution: unembedding must be V x d with V >= 1");
    }
    if (!(eps > 0.0)) throw ParameterError("layer_distribution: eps must be positive");

    double sq = 0.0;
    for (const T v : hidden) sq += static_cast<double>(v) * static_cast<double>(v);
    const double inv_rms = 1.0 / std::sqrt(sq / static_cast<double>(d) + eps);

    std::vector<double> normed(d);
    for (std::size_t i = 0; i < d; ++i) {
        normed[i] = static_cast<double>(hidden[i]) * inv_rms * static_cast<double>(gain[i]);
    }

    const std::size_t V = unembedding.rows();
    std::vector<double> out(V);
    double max_logit = -INFINITY;
    for (std::size_t v = 0; v < V; ++v) {
        const auto w = unembedding.row(v);
        double z = 0.0;
        for (std::size_t i = 0; i < d; ++i) z += static_cast<double>(w[i]) * normed[i];
        out[v] = z;
        max_logit = std::max(max_logit, z);
    }
    double total = 0.0;
    for (double& z : out) {
        z = std::exp(z - max_logit);
        total += z;
    }
    for (double& z : out) z /= total;
    return out;
}

void check_distribution(std::span<const double> p, const char* name) {
    double s = 0.0;
    for (double v : p) {
        if (!(v >= 0.0)) throw RangeError(std::string("jsd: ") + name + " has a negative or NaN entry");
        s += v;
    }
    if (std::abs(s - 1.0) > 1e-4) throw RangeError(std::string("jsd: ") + name + " does not sum to 1");
}

}  // namespace

std::vector<double> layer_distribution(std::span<const double> hidden, std::span<const double> gain,
                                       double eps, MatrixView<double> unembedding) {
    return layer_distribution_impl(hidden, gain, eps, unembedding);
}

std::vector<double> layer_distribution(std::span<const float> hidden, std::span<const float> gain,
                                       double eps, MatrixView<float> unembedding) {
    return layer_distribution_impl(hidden, gain, eps, unembedding);
}

double jsd(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) throw ShapeError("jsd: distributions differ in length");
    if (p.empty()) throw ShapeError("jsd: empty distributions");
    check_distribution(p, "p");
    check_distribution(q, "q");
    // 0.5 KL(p||m) + 0.5 KL(q||m), equal to H(m) - (H(p) + H(q)) / 2.
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double m = 0.5 * (p[i] + q[i]);
        double term = 0.0;
        if (p[i] > 0.0) term += p[i] * std::log2(p[i] / m);
        if (q[i] > 0.0) term += q[i] * std::log2(q[i] / m);
        s += 0.5 * term;
    }
    return std::clamp(s, 0.0, 1.0);
}

std::size_t settling_layer(std::span<const double> js_row, double tau) {
    if (js_row.empty()) throw ShapeError("settling_layer: empty JS row");
    if (!(tau > 0.0)) throw ParameterError("settling_layer: tau must be positive");
    if (std::abs(js_row.back()) > 1e-12) {
        throw RangeError("settling_layer: final-layer JS entry must be 0");
    }
    // Scan from the rear for the last layer that has not settled.
    for (std::size_t l = js_row.size(); l-- > 0;) {
        if (!(js_row[l] < tau)) return l + 2;
    }
    return 1;
}

std::size_t cutoff_layer(std::size_t num_layers, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("depth fraction alpha must lie in (0, 1)");
    // The guard absorbs representation error when alpha * L is an integer.
    return static_cast<std::size_t>(std::floor(alpha * static_cast<double>(num_layers) + 1e-9));
}

DeepSet dtr_deep_set(const JSMatrix& js, double tau, double alpha) {
    DeepSet out;
    out.problem_id = js.problem_id;
    out.cutoff_layer = cutoff_layer(js.layers(), alpha);
    out.settling_layers.resize(js.tokens());
    for (std::size_t t = 0; t < js.tokens(); ++t) {
        const std::size_t l = settling_layer(js.values.row(t), tau);
        out.settling_layers[t] = l;
        if (l >= out.cutoff_layer) out.indices.push_back(t);
    }
    return out;
}

JSMatrix js_matrix_from_raw(const archive::ArchiveHeader& header, const archive::ProblemMeta& meta,
                            const archive::ProblemPayload& payload) {
    if (header.mode != archive::Mode::raw) {
        throw ModeError("problem " + meta.problem_id + ": JS matrix from raw states needs a raw-mode archive");
    }
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
    const std::span<const float> gain(payload.rmsnorm_gain);
    const std::span<const float> states(payload.per_layer_states);

    JSMatrix js;
    js.problem_id = meta.problem_id;
    js.values = Matrix(T, L);
    parallel::for_each_index(T, [&](std::size_t t) {
        const auto token_states = states.subspan(t * L * d, L * d);
        const auto final_dist = layer_distribution(token_states.subspan((L - 1) * d, d), gain, eps, w_u);
        auto row = js.values.row(t);
        for (std::size_t l = 0; l + 1 < L; ++l) {
            const auto dist = layer_distribution(token_states.subspan(l * d, d), gain, eps, w_u);
            row[l] = jsd(dist, final_dist);
        }
        row[L - 1] = 0.0;
    });
    return js;
}

JSMatrix js_matrix_from_stored(const archive::ArchiveHeader& header, const archive::ProblemMeta& meta,
                               const archive::ProblemPayload& payload) {
    if (header.mode != archive::Mode::js) {
        throw ModeError("problem " + meta.problem_id + ": archive has no stored JS matrix");
    }
    const std::size_t T = meta.num_tokens;
    const std::size_t L = header.num_layers;
    if (payload.js_matrix.size() != T * L) throw ShapeError("problem " + meta.problem_id + ": js_matrix shape");
    JSMatrix js;
    js.problem_id = meta.problem_id;
    js.values = Matrix(T, L);
    std::copy(payload.js_matrix.begin(), payload.js_matrix.end(), js.values.values.begin());
    return js;
}

JSMatrix js_matrix(const archive::ArchiveHeader& header, const archive::ProblemMeta& meta,
                   const archive::ProblemPayload& payload) {
    return header.mode == archive::Mode::raw ? js_matrix_from_raw(header, meta, payload)
                                             : js_matrix_from_stored(header, meta, payload);
}

}  // namespace iar::dtr
