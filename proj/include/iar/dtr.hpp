#pragma once

// Layer-wise predictive distributions, Jensen-Shannon trajectories to the
// final layer, settling layers and DTR-deep token sets.
//
// Layers are stored 0-based; settling layers are reported 1-based (1..L).

#include "iar/archive.hpp"
#include "iar/common.hpp"

#include <span>
#include <string>
#include <vector>

namespace iar::dtr {

inline constexpr double kDefaultTau = 0.5;
inline constexpr double kDefaultAlpha = 0.85;

struct JSMatrix {
    std::string problem_id;
    Matrix values;  // T x L; entry (t, l) = JSD(p_t^(l) || p_t^(L))

    std::size_t tokens() const noexcept { return values.rows; }
    std::size_t layers() const noexcept { return values.cols; }
};

struct DeepSet {
    std::string problem_id;
    IndexSet indices;
    std::vector<std::size_t> settling_layers;  // 1-based, per token
    std::size_t cutoff_layer = 0;
};

// softmax(W_U * (h / sqrt(mean(h^2) + eps) * gain)). `unembedding` is V x d.
std::vector<double> layer_distribution(std::span<const double> hidden, std::span<const double> gain,
                                       double eps, MatrixView<double> unembedding);

// Same, reading float inputs straight from an archive payload.
std::vector<double> layer_distribution(std::span<const float> hidden, std::span<const float> gain,
                                       double eps, MatrixView<float> unembedding);

// Base-2 Jensen-Shannon divergence in [0, 1].
double jsd(std::span<const double> p, std::span<const double> q);

// Smallest 1-based layer l with row[l'] < tau for all l' >= l.
std::size_t settling_layer(std::span<const double> js_row, double tau);

// floor(alpha * L).
std::size_t cutoff_layer(std::size_t num_layers, double alpha);

DeepSet dtr_deep_set(const JSMatrix& js, double tau = kDefaultTau, double alpha = kDefaultAlpha);

// Logit-lens JS matrix computed from raw per-layer states. Tokens run in
// parallel (OpenMP), each writing its own row.
JSMatrix js_matrix_from_raw(const archive::ArchiveHeader& header, const archive::ProblemMeta& meta,
                            const archive::ProblemPayload& payload);

// JS matrix stored in a js-mode archive, widened to double.
JSMatrix js_matrix_from_stored(const archive::ArchiveHeader& header, const archive::ProblemMeta& meta,
                               const archive::ProblemPayload& payload);

// Dispatches on the archive mode.
JSMatrix js_matrix(const archive::ArchiveHeader& header, const archive::ProblemMeta& meta,
                   const archive::ProblemPayload& payload);

}  // namespace iar::dtr
