#pragma once

// Non-parametric statistics battery: Mann-Whitney U with rank-biserial
// effect size, percentile bootstrap intervals, two-proportion z tests,
// chi-square contingency tests and Bonferroni verdicts.

#include "iar/common.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace iar::stats {

struct MannWhitneyOptions {
    // Exact enumeration of the null distribution is used when the samples
    // are tie-free and n1 + n2 <= exact_max_total.
    std::size_t exact_max_total = 12;
};

struct MannWhitneyResult {
    double u_a = 0.0;  // Σ [a > b] + 0.5 [a = b]
    double u_b = 0.0;
    double p_value = 1.0;  // two-sided
    bool exact = false;
};

MannWhitneyResult mann_whitney_u(std::span<const double> group_a, std::span<const double> group_b,
                                 MannWhitneyOptions options = {});

// Null distribution counts of U for tie-free samples: counts[u] = number of
// rank assignments with U_a = u, u in [0, n1*n2].
std::vector<double> mann_whitney_null_counts(std::size_t n1, std::size_t n2);

// 2 U_a / (n1 n2) - 1; -1 means group_a ranks uniformly lower.
double rank_biserial(double u_a, std::size_t n1, std::size_t n2);

// Rank-biserial of group_a against group_b.
double rank_biserial(std::span<const double> group_a, std::span<const double> group_b);

struct Interval {
    double low = 0.0;
    double high = 0.0;
};

using TwoSampleStatistic = std::function<double(std::span<const double>, std::span<const double>)>;

// Percentile interval (2.5th, 97.5th) of `statistic` over within-group
// resamples with replacement. Resample r draws from a generator seeded by
// (seed, r), so the interval does not depend on the thread count.
Interval bootstrap_ci(std::span<const double> group_a, std::span<const double> group_b,
                      const TwoSampleStatistic& statistic, std::size_t n_resamples = 1000,
                      std::uint64_t seed = 0);

struct ZTest {
    double z = 0.0;
    double p_value = 1.0;
};

// Pooled two-proportion z test; absent when the pooled proportion is 0 or 1.
std::optional<ZTest> two_proportion_z(std::size_t x1, std::size_t n1, std::size_t x2, std::size_t n2);

struct ChiSquare {
    double statistic = 0.0;
    double p_value = 1.0;
    std::size_t dof = 0;
};

ChiSquare chi_square_contingency(const std::vector<std::vector<double>>& table);

enum class Verdict { survives, directional, ns };
std::string_view to_string(Verdict v);

// survives: p < base/m; directional: base/m <= p < base; ns otherwise.
Verdict bonferroni_verdict(double p_value, std::size_t family_size, double base_alpha = 0.05);

struct EffectSizeReport {
    double u = 0.0;
    double p_value = 1.0;
    double r = 0.0;
    std::optional<Interval> ci;
    std::size_t n1 = 0;
    std::size_t n2 = 0;
    double bonferroni_alpha = 0.05;
    Verdict verdict = Verdict::ns;
};

struct EffectSizeOptions {
    std::size_t family_size = 1;
    double base_alpha = 0.05;
    bool bootstrap = true;
    std::size_t n_resamples = 1000;
    std::uint64_t seed = 0;
    MannWhitneyOptions mann_whitney;
};

// Mann-Whitney test of a against b with rank-biserial r and, optionally, a
// bootstrap interval for r.
EffectSizeReport effect_size(std::span<const double> group_a, std::span<const double> group_b,
                             const EffectSizeOptions& options);

}  // namespace iar::stats
