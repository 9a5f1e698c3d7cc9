#include "iar/mi.hpp"

#include "iar/numeric.hpp"

#include <cmath>
#include <string>

namespace iar::mi {

namespace {

void require_sigma(double sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw ParameterError("kernel bandwidth sigma must be a positive finite real");
    }
}

}  // namespace

BandwidthPolicy BandwidthPolicy::fixed(double sigma) {
    require_sigma(sigma);
    return {Mode::fixed, sigma};
}

double rbf_kernel(std::span<const double> u, std::span<const double> v, double sigma) {
    require_sigma(sigma);
    if (u.size() != v.size()) throw ShapeError("rbf_kernel: vectors differ in length");
    double sq = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double d = u[i] - v[i];
        sq += d * d;
    }
    return std::exp(-sq / (2.0 * sigma * sigma));
}

double median_heuristic_sigma(MatrixView<float> states) {
    const std::size_t n = states.rows();
    if (n < 2) throw ParameterError("median heuristic needs at least two states");
    const std::size_t pairs = n * (n - 1) / 2;
    std::vector<double> dist(pairs);
    const std::size_t dim = states.cols();

    // Row i owns the contiguous block of pairs (i, i+1..n-1).
#pragma omp parallel for schedule(dynamic, 8)
    for (std::ptrdiff_t si = 0; si < static_cast<std::ptrdiff_t>(n); ++si) {
        const auto i = static_cast<std::size_t>(si);
        const std::size_t base = i * (2 * n - i - 1) / 2;
        const auto ri = states.row(i);
        for (std::size_t j = i + 1; j < n; ++j) {
            const auto rj = states.row(j);
            double sq = 0.0;
            for (std::size_t k = 0; k < dim; ++k) {
                const double d = static_cast<double>(ri[k]) - static_cast<double>(rj[k]);
                sq += d * d;
            }
            dist[base + (j - i - 1)] = std::sqrt(sq);
        }
    }

    const double med = numeric::median(std::move(dist));
    if (!(med > 0.0)) {
        throw DegenerateError("median heuristic bandwidth is zero (states are identical)");
    }
    return med;
}

CenteredGram::CenteredGram(std::span<const double> y, double sigma)
    : n_(y.size()), sigma_(sigma), centered_(y.size() * y.size()) {
    require_sigma(sigma);
    if (n_ < 2) throw ParameterError("HSIC needs at least two paired samples");
    const double scale = 1.0 / (2.0 * sigma * sigma);
    for (std::size_t i = 0; i < n_; ++i) {
        centered_[i * n_ + i] = 1.0;
        for (std::size_t j = i + 1; j < n_; ++j) {
            const double d = y[i] - y[j];
            const double k = std::exp(-d * d * scale);
            centered_[i * n_ + j] = k;
            centered_[j * n_ + i] = k;
        }
    }
    std::vector<double> row_mean(n_, 0.0);
    double grand = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n_; ++j) s += centered_[i * n_ + j];
        row_mean[i] = s / static_cast<double>(n_);
        grand += s;
    }
    grand /= static_cast<double>(n_ * n_);
    // Gram matrix is symmetric, so column means equal row means.
    for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t j = 0; j < n_; ++j) {
            centered_[i * n_ + j] += grand - row_mean[i] - row_mean[j];
        }
    }
}

double CenteredGram::hsic(std::span<const double> x) const {
    if (x.size() != n_) throw ShapeError("HSIC samples differ in length");
    const double scale = 1.0 / (2.0 * sigma_ * sigma_);
    double diag = 0.0;
    double off = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
        diag += centered_[i * n_ + i];
        const double xi = x[i];
        const double* lc = centered_.data() + i * n_;
        for (std::size_t j = i + 1; j < n_; ++j) {
            const double d = xi - x[j];
            off += std::exp(-d * d * scale) * lc[j];
        }
    }
    const double denom = static_cast<double>(n_ - 1);
    return (diag + 2.0 * off) / (denom * denom);
}

double hsic_biased(std::span<const double> x, std::span<const double> y, double sigma) {
    if (x.size() != y.size()) throw ShapeError("HSIC samples differ in length");
    return CenteredGram(y, sigma).hsic(x);
}

double resolve_sigma(const BandwidthPolicy& policy, MatrixView<float> final_states) {
    if (policy.mode == BandwidthPolicy::Mode::fixed) {
        require_sigma(policy.fixed_sigma);
        return policy.fixed_sigma;
    }
    return median_heuristic_sigma(final_states);
}

MITrace mi_trace(std::string problem_id, MatrixView<float> final_states,
                 std::span<const float> gold_embedding, const BandwidthPolicy& policy) {
    if (final_states.cols() != gold_embedding.size()) {
        throw ShapeError("problem " + problem_id + ": final-state width " +
                         std::to_string(final_states.cols()) + " != gold embedding width " +
                         std::to_string(gold_embedding.size()));
    }
    const std::size_t T = final_states.rows();
    if (T == 0) throw ShapeError("problem " + problem_id + ": empty trace");

    MITrace trace;
    trace.problem_id = std::move(problem_id);
    trace.sigma_used = resolve_sigma(policy, final_states);
    trace.values.assign(T, 0.0);

    const std::vector<double> gold(gold_embedding.begin(), gold_embedding.end());
    const CenteredGram gram(gold, trace.sigma_used);
    const std::size_t n = gold.size();

#pragma omp parallel
    {
        std::vector<double> x(n);
#pragma omp for schedule(static)
        for (std::ptrdiff_t st = 0; st < static_cast<std::ptrdiff_t>(T); ++st) {
            const auto t = static_cast<std::size_t>(st);
            const auto row = final_states.row(t);
            for (std::size_t i = 0; i < n; ++i) x[i] = row[i];
            trace.values[t] = gram.hsic(x);
        }
    }
    return trace;
}

}  // namespace iar::mi
