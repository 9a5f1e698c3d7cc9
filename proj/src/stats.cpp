#include "iar/stats.hpp"

#include "iar/numeric.hpp"
#include "iar/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace iar::stats {

namespace {

struct Ranking {
    double rank_sum_a = 0.0;
    double tie_term = 0.0;  // Σ (t^3 - t) over tie groups
    bool has_ties = false;
};

Ranking rank_groups(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = a.size() + b.size();
    std::vector<std::pair<double, bool>> pooled;
    pooled.reserve(n);
    for (double v : a) pooled.emplace_back(v, true);
    for (double v : b) pooled.emplace_back(v, false);
    std::sort(pooled.begin(), pooled.end(),
              [](const auto& x, const auto& y) { return x.first < y.first; });
    Ranking r;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i + 1;
        while (j < n && pooled[j].first == pooled[i].first) ++j;
        const double t = static_cast<double>(j - i);
        const double midrank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k) {
            if (pooled[k].second) r.rank_sum_a += midrank;
        }
        if (j - i > 1) {
            r.has_ties = true;
            r.tie_term += t * t * t - t;
        }
        i = j;
    }
    return r;
}

double u_statistic(std::span<const double> a, const Ranking& ranking) {
    const double n1 = static_cast<double>(a.size());
    return ranking.rank_sum_a - n1 * (n1 + 1.0) / 2.0;
}

}  // namespace

std::vector<double> mann_whitney_null_counts(std::size_t n1, std::size_t n2) {
    // ways[k][s]: subsets of size k of {0..i-1} whose element sum is s.
    const std::size_t N = n1 + n2;
    const std::size_t max_sum = n1 * (N - 1);
    std::vector<std::vector<double>> ways(n1 + 1, std::vector<double>(max_sum + 1, 0.0));
    ways[0][0] = 1.0;
    for (std::size_t item = 0; item < N; ++item) {
        for (std::size_t k = std::min(n1, item + 1); k >= 1; --k) {
            for (std::size_t s = max_sum; s >= item; --s) {
                ways[k][s] += ways[k - 1][s - item];
                if (s == 0) break;
            }
        }
    }
    // Zero-based rank sum of the a-group minus its minimum equals U_a.
    const std::size_t offset = n1 * (n1 - 1) / 2;
    std::vector<double> counts(n1 * n2 + 1, 0.0);
    for (std::size_t u = 0; u <= n1 * n2; ++u) counts[u] = ways[n1][u + offset];
    return counts;
}

MannWhitneyResult mann_whitney_u(std::span<const double> a, std::span<const double> b,
                                 MannWhitneyOptions options) {
    if (a.empty() || b.empty()) throw ParameterError("mann_whitney_u: both groups must be non-empty");
    const Ranking ranking = rank_groups(a, b);
    const double n1 = static_cast<double>(a.size());
    const double n2 = static_cast<double>(b.size());
    MannWhitneyResult res;
    res.u_a = u_statistic(a, ranking);
    res.u_b = n1 * n2 - res.u_a;

    const std::size_t total = a.size() + b.size();
    if (!ranking.has_ties && total <= options.exact_max_total) {
        const auto counts = mann_whitney_null_counts(a.size(), b.size());
        const double all = std::accumulate(counts.begin(), counts.end(), 0.0);
        const auto u = static_cast<std::size_t>(std::llround(res.u_a));
        double lower = 0.0;
        double upper = 0.0;
        for (std::size_t k = 0; k < counts.size(); ++k) {
            if (k <= u) lower += counts[k];
            if (k >= u) upper += counts[k];
        }
        res.p_value = std::min(1.0, 2.0 * std::min(lower, upper) / all);
        res.exact = true;
        return res;
    }

    const double N = n1 + n2;
    const double mu = n1 * n2 / 2.0;
    const double var = n1 * n2 / 12.0 * ((N + 1.0) - ranking.tie_term / (N * (N - 1.0)));
    if (!(var > 0.0)) {
        res.p_value = 1.0;
        return res;
    }
    const double z = std::max(0.0, std::abs(res.u_a - mu) - 0.5) / std::sqrt(var);
    res.p_value = std::min(1.0, 2.0 * numeric::normal_sf(z));
    return res;
}

double rank_biserial(double u_a, std::size_t n1, std::size_t n2) {
    if (n1 == 0 || n2 == 0) throw ParameterError("rank_biserial: group sizes must be >= 1");
    return 2.0 * u_a / (static_cast<double>(n1) * static_cast<double>(n2)) - 1.0;
}

double rank_biserial(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw ParameterError("rank_biserial: both groups must be non-empty");
    return rank_biserial(u_statistic(a, rank_groups(a, b)), a.size(), b.size());
}

Interval bootstrap_ci(std::span<const double> a, std::span<const double> b, const TwoSampleStatistic& statistic,
                      std::size_t n_resamples, std::uint64_t seed) {
    if (a.empty() || b.empty()) throw ParameterError("bootstrap_ci: both groups must be non-empty");
    if (n_resamples == 0) throw ParameterError("bootstrap_ci: need at least one resample");
    std::vector<double> values(n_resamples);
    parallel::for_each_index(n_resamples, [&](std::size_t r) {
        std::mt19937_64 rng(numeric::mix_seed(seed, r));
        std::uniform_int_distribution<std::size_t> pick_a(0, a.size() - 1);
        std::uniform_int_distribution<std::size_t> pick_b(0, b.size() - 1);
        std::vector<double> ra(a.size());
        std::vector<double> rb(b.size());
        for (double& v : ra) v = a[pick_a(rng)];
        for (double& v : rb) v = b[pick_b(rng)];
        values[r] = statistic(ra, rb);
    });
    std::sort(values.begin(), values.end());
    return {numeric::quantile_sorted(values, 0.025), numeric::quantile_sorted(values, 0.975)};
}

std::optional<ZTest> two_proportion_z(std::size_t x1, std::size_t n1, std::size_t x2, std::size_t n2) {
    if (n1 == 0 || n2 == 0) throw ParameterError("two_proportion_z: sample sizes must be >= 1");
    if (x1 > n1 || x2 > n2) throw ParameterError("two_proportion_z: successes exceed sample size");
    const double p1 = static_cast<double>(x1) / static_cast<double>(n1);
    const double p2 = static_cast<double>(x2) / static_cast<double>(n2);
    const double pooled = static_cast<double>(x1 + x2) / static_cast<double>(n1 + n2);
    if (pooled <= 0.0 || pooled >= 1.0) return std::nullopt;
    const double se =
        std::sqrt(pooled * (1.0 - pooled) * (1.0 / static_cast<double>(n1) + 1.0 / static_cast<double>(n2)));
    ZTest t;
    t.z = (p1 - p2) / se;
    t.p_value = std::min(1.0, 2.0 * numeric::normal_sf(std::abs(t.z)));
    return t;
}

ChiSquare chi_square_contingency(const std::vector<std::vector<double>>& table) {
    const std::size_t R = table.size();
    if (R < 2) throw ParameterError("chi_square_contingency: need at least two rows");
    const std::size_t C = table[0].size();
    if (C < 2) throw ParameterError("chi_square_contingency: need at least two columns");
    std::vector<double> row_sum(R, 0.0);
    std::vector<double> col_sum(C, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < R; ++i) {
        if (table[i].size() != C) throw ShapeError("chi_square_contingency: ragged table");
        for (std::size_t j = 0; j < C; ++j) {
            const double v = table[i][j];
            if (!(v >= 0.0)) throw ParameterError("chi_square_contingency: negative count");
            row_sum[i] += v;
            col_sum[j] += v;
            total += v;
        }
    }
    for (double s : row_sum)
        if (!(s > 0.0)) throw DegenerateError("chi_square_contingency: zero row margin");
    for (double s : col_sum)
        if (!(s > 0.0)) throw DegenerateError("chi_square_contingency: zero column margin");

    ChiSquare out;
    for (std::size_t i = 0; i < R; ++i) {
        for (std::size_t j = 0; j < C; ++j) {
            const double expected = row_sum[i] * col_sum[j] / total;
            const double diff = table[i][j] - expected;
            out.statistic += diff * diff / expected;
        }
    }
    out.dof = (R - 1) * (C - 1);
    out.p_value = numeric::chi_square_sf(out.statistic, static_cast<double>(out.dof));
    return out;
}

std::string_view to_string(Verdict v) {
    switch (v) {
        case Verdict::survives: return "survives";
        case Verdict::directional: return "directional";
        case Verdict::ns: return "ns";
    }
    return "?";
}

Verdict bonferroni_verdict(double p_value, std::size_t family_size, double base_alpha) {
    if (family_size == 0) throw ParameterError("bonferroni_verdict: family size must be >= 1");
    const double corrected = base_alpha / static_cast<double>(family_size);
    if (p_value < corrected) return Verdict::survives;
    if (p_value < base_alpha) return Verdict::directional;
    return Verdict::ns;
}

EffectSizeReport effect_size(std::span<const double> a, std::span<const double> b,
                             const EffectSizeOptions& options) {
    const MannWhitneyResult mw = mann_whitney_u(a, b, options.mann_whitney);
    EffectSizeReport r;
    r.u = mw.u_a;
    r.p_value = mw.p_value;
    r.n1 = a.size();
    r.n2 = b.size();
    r.r = rank_biserial(mw.u_a, r.n1, r.n2);
    r.bonferroni_alpha = options.base_alpha / static_cast<double>(options.family_size);
    r.verdict = bonferroni_verdict(mw.p_value, options.family_size, options.base_alpha);
    if (options.bootstrap) {
        r.ci = bootstrap_ci(a, b, [](auto x, auto y) { return rank_biserial(x, y); }, options.n_resamples,
                            options.seed);
    }
    return r;
}

}  // namespace iar::stats
