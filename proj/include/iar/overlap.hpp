#pragma once

// MIP / DTR-deep containment measures.

#include "iar/common.hpp"
#include "iar/dtr.hpp"
#include "iar/peaks.hpp"

#include <map>
#include <span>
#include <string>
#include <vector>

namespace iar::overlap {

// |P ∩ D| / |P|; absent when P is empty.
Maybe inclusion_ratio(const peaks::PeakSet& peaks, const dtr::DeepSet& deep);

// Σ|P_q ∩ D_q| / Σ|P_q|; absent when no problem has a peak.
Maybe token_pool_precision(std::span<const peaks::PeakSet> peak_sets, std::span<const dtr::DeepSet> deep_sets);

struct PerProblemPrecision {
    Maybe mean;  // over problems with peaks; absent when there are none
    // With-peaks problems whose deep set is empty; they contribute 0 to the mean.
    std::vector<std::string> empty_deep_set;
};

// Mean over with-peaks problems of |P_q ∩ D_q| / |D_q|.
PerProblemPrecision per_problem_precision(std::span<const peaks::PeakSet> peak_sets,
                                          std::span<const dtr::DeepSet> deep_sets);

using TokenFrequency = std::map<std::string, std::size_t>;

// |top-k(peaks) ∩ top-k(deep)| / k. Ranking is by descending count, ties
// broken by lexicographic token order.
double vocab_overlap_topk(const TokenFrequency& peak_freq, const TokenFrequency& deep_freq, int k = 20);

// Top-k tokens of a frequency table under the same ordering.
std::vector<std::pair<std::string, std::size_t>> top_k(const TokenFrequency& freq, std::size_t k);

struct ProblemOverlap {
    std::string problem_id;
    std::size_t peaks = 0;
    std::size_t deep = 0;
    std::size_t both = 0;
    Maybe inclusion_ratio;
};

struct OverlapReport {
    std::vector<ProblemOverlap> problems;
    std::size_t pooled_peaks = 0;
    std::size_t pooled_deep = 0;
    std::size_t pooled_both = 0;
    Maybe tpp;
    PerProblemPrecision ppp;
};

OverlapReport overlap_report(std::span<const peaks::PeakSet> peak_sets, std::span<const dtr::DeepSet> deep_sets);

}  // namespace iar::overlap
