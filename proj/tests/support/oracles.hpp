#pragma once

// Independent brute-force implementations used as test oracles. They share no
// code with the library beyond plain containers.

#include <cstddef>
#include <cstdint>
#include <vector>

namespace oracle {

// trace(K H L H) / (n-1)^2 by explicit dense matrix products.
double hsic_dense(const std::vector<double>& x, const std::vector<double>& y, double sigma);

// Type-7 quartiles computed from scratch, fence Q3 + 1.5 IQR, strict exceedance.
double tukey_fence(const std::vector<double>& trace);
std::vector<std::size_t> tukey_peaks(const std::vector<double>& trace);

// Base-2 Jensen-Shannon divergence in entropy form H(m) - (H(p)+H(q))/2.
double jsd_entropy(const std::vector<double>& p, const std::vector<double>& q);

// Smallest 1-based l with row[l'-1] < tau for every l' >= l, by direct search.
std::size_t settling_direct(const std::vector<double>& row, double tau);

// Σ [a > b] + 0.5 [a = b] over all pairs.
double u_direct(const std::vector<double>& a, const std::vector<double>& b);

// Two-sided exact Mann-Whitney p by enumerating every split of the pooled
// sample into groups of the original sizes (tie-free samples).
double mwu_exact_enumerated(const std::vector<double>& a, const std::vector<double>& b);

// softmax(W (h / sqrt(mean h^2 + eps) * g)) by direct loops. W is V x d.
std::vector<double> logit_lens(const std::vector<double>& h, const std::vector<double>& g, double eps,
                               const std::vector<std::vector<double>>& W);

// Two samples whose rank-biserial against each other has the given
// population value: a ~ N(0,1), b ~ N(delta,1) with P(a > b) = (1 + r) / 2.
struct PlantedGroups {
    std::vector<double> a;
    std::vector<double> b;
};
PlantedGroups planted_groups(std::size_t n1, std::size_t n2, double r, std::uint64_t seed);

}  // namespace oracle
