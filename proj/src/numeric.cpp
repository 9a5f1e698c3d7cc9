#include "iar/numeric.hpp"

#include "iar/common.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <numeric>

namespace iar::numeric {

double quantile_sorted(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw ParameterError("quantile of an empty sample");
    if (!(p >= 0.0 && p <= 1.0)) throw ParameterError("quantile probability outside [0, 1]");
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double quantile(std::span<const double> values, double p) {
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    return quantile_sorted(sorted, p);
}

double median(std::vector<double> values) {
    if (values.empty()) throw ParameterError("median of an empty sample");
    const std::size_t n = values.size();
    const auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(values.begin(), mid, values.end());
    const double upper = *mid;
    if (n % 2 == 1) return upper;
    const double lower = *std::max_element(values.begin(), mid);
    return 0.5 * (lower + upper);
}

double mean(std::span<const double> values) {
    if (values.empty()) throw ParameterError("mean of an empty sample");
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

double chi_square_sf(double x, double dof) {
    if (!(dof > 0.0)) throw ParameterError("chi-square degrees of freedom must be positive");
    if (x <= 0.0) return 1.0;
    boost::math::chi_squared_distribution<double> dist(dof);
    return boost::math::cdf(boost::math::complement(dist, x));
}

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t salt) {
    auto splitmix = [](std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    };
    return splitmix(base ^ splitmix(salt + 0x632be59bd9b4e019ULL));
}

}  // namespace iar::numeric
