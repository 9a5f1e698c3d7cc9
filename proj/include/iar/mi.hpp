#pragma once

// Per-token mutual-information traces from the biased HSIC estimator under a
// Gaussian RBF kernel.
//
// For one token, the subsample_dim coordinates of its final-layer state h_t
// and of the gold embedding e_y form n paired scalar samples (h_t[i], e_y[i]).
// MI(x_t) = HSIC_b(h_t, e_y) over those pairs.

#include "iar/common.hpp"

#include <span>
#include <string>
#include <vector>

namespace iar::mi {

struct BandwidthPolicy {
    enum class Mode { fixed, median_heuristic };

    Mode mode = Mode::fixed;
    double fixed_sigma = 50.0;

    static BandwidthPolicy fixed(double sigma);
    static BandwidthPolicy median() { return {Mode::median_heuristic, 0.0}; }
};

struct MITrace {
    std::string problem_id;
    std::vector<double> values;
    double sigma_used = 0.0;
};

// exp(-||u - v||^2 / (2 sigma^2)).
double rbf_kernel(std::span<const double> u, std::span<const double> v, double sigma);

// Median of the pairwise Euclidean distances between rows (i < j). Throws
// DegenerateError when the median is zero; the caller must not substitute a
// default bandwidth.
double median_heuristic_sigma(MatrixView<float> states);

// trace(K H L H) / (n - 1)^2 with RBF Gram matrices over the scalar samples.
double hsic_biased(std::span<const double> x, std::span<const double> y, double sigma);

// Precomputed centered Gram matrix H L H of one sample set, reused across many
// hsic evaluations against the same y.
class CenteredGram {
public:
    CenteredGram(std::span<const double> y, double sigma);

    std::size_t size() const noexcept { return n_; }
    double sigma() const noexcept { return sigma_; }

    // HSIC_b(x, y) for the y this was built from.
    double hsic(std::span<const double> x) const;

private:
    std::size_t n_;
    double sigma_;
    std::vector<double> centered_;  // n x n, row-major
};

double resolve_sigma(const BandwidthPolicy& policy, MatrixView<float> final_states);

// MI trace over every token. Tokens are evaluated in parallel (OpenMP); the
// result is bitwise identical for any thread count.
MITrace mi_trace(std::string problem_id, MatrixView<float> final_states,
                 std::span<const float> gold_embedding, const BandwidthPolicy& policy);

}  // namespace iar::mi
