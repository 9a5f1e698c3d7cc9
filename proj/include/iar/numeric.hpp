#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace iar::numeric {

// Quantile by linear interpolation between order statistics at position
// p*(n-1) of the sorted sample (Hyndman-Fan type 7). `sorted` must be sorted
// ascending and non-empty.
double quantile_sorted(std::span<const double> sorted, double p);

// Copies, sorts and takes quantile_sorted.
double quantile(std::span<const double> values, double p);

// Median with the even-count convention (mean of the two central values).
double median(std::vector<double> values);

double mean(std::span<const double> values);

// Upper tail of the standard normal, P(Z > z).
double normal_sf(double z);

// Upper tail of the chi-square distribution with `dof` degrees of freedom.
double chi_square_sf(double x, double dof);

// Deterministic seed derivation (splitmix64 finalizer over the combined words).
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t salt);

}  // namespace iar::numeric
