#include "iar/overlap.hpp"

#include <algorithm>
#include <set>

namespace iar::overlap {

namespace {

void check_pair(const peaks::PeakSet& p, const dtr::DeepSet& d) {
    if (p.problem_id != d.problem_id) {
        throw ConsistencyError("peak set '" + p.problem_id + "' paired with deep set '" + d.problem_id + "'");
    }
}

void check_aligned(std::span<const peaks::PeakSet> ps, std::span<const dtr::DeepSet> ds) {
    if (ps.size() != ds.size()) throw AlignmentError("peak and deep set lists differ in length");
    for (std::size_t i = 0; i < ps.size(); ++i) check_pair(ps[i], ds[i]);
}

}  // namespace

Maybe inclusion_ratio(const peaks::PeakSet& peaks, const dtr::DeepSet& deep) {
    check_pair(peaks, deep);
    if (peaks.indices.empty()) return std::nullopt;
    return static_cast<double>(intersection_size(peaks.indices, deep.indices)) /
           static_cast<double>(peaks.indices.size());
}

Maybe token_pool_precision(std::span<const peaks::PeakSet> peak_sets, std::span<const dtr::DeepSet> deep_sets) {
    check_aligned(peak_sets, deep_sets);
    std::size_t both = 0;
    std::size_t total = 0;
    for (std::size_t i = 0; i < peak_sets.size(); ++i) {
        both += intersection_size(peak_sets[i].indices, deep_sets[i].indices);
        total += peak_sets[i].indices.size();
    }
    if (total == 0) return std::nullopt;
    return static_cast<double>(both) / static_cast<double>(total);
}

PerProblemPrecision per_problem_precision(std::span<const peaks::PeakSet> peak_sets,
                                          std::span<const dtr::DeepSet> deep_sets) {
    check_aligned(peak_sets, deep_sets);
    PerProblemPrecision out;
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < peak_sets.size(); ++i) {
        if (peak_sets[i].empty()) continue;
        ++n;
        if (deep_sets[i].indices.empty()) {
            out.empty_deep_set.push_back(peak_sets[i].problem_id);
            continue;
        }
        sum += static_cast<double>(intersection_size(peak_sets[i].indices, deep_sets[i].indices)) /
               static_cast<double>(deep_sets[i].indices.size());
    }
    if (n > 0) out.mean = sum / static_cast<double>(n);
    return out;
}

std::vector<std::pair<std::string, std::size_t>> top_k(const TokenFrequency& freq, std::size_t k) {
    std::vector<std::pair<std::string, std::size_t>> items(freq.begin(), freq.end());
    std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (items.size() > k) items.resize(k);
    return items;
}

double vocab_overlap_topk(const TokenFrequency& peak_freq, const TokenFrequency& deep_freq, int k) {
    if (k <= 0) throw ParameterError("vocab_overlap_topk: k must be positive");
    if (peak_freq.empty() || deep_freq.empty()) throw ParameterError("vocab_overlap_topk: empty frequency table");
    const auto a = top_k(peak_freq, static_cast<std::size_t>(k));
    const auto b = top_k(deep_freq, static_cast<std::size_t>(k));
    std::set<std::string> sa;
    for (const auto& [tok, _] : a) sa.insert(tok);
    std::size_t common = 0;
    for (const auto& [tok, _] : b) common += sa.count(tok);
    return static_cast<double>(common) / static_cast<double>(k);
}

OverlapReport overlap_report(std::span<const peaks::PeakSet> peak_sets, std::span<const dtr::DeepSet> deep_sets) {
    check_aligned(peak_sets, deep_sets);
    OverlapReport r;
    for (std::size_t i = 0; i < peak_sets.size(); ++i) {
        ProblemOverlap po;
        po.problem_id = peak_sets[i].problem_id;
        po.peaks = peak_sets[i].indices.size();
        po.deep = deep_sets[i].indices.size();
        po.both = intersection_size(peak_sets[i].indices, deep_sets[i].indices);
        po.inclusion_ratio = inclusion_ratio(peak_sets[i], deep_sets[i]);
        r.pooled_peaks += po.peaks;
        r.pooled_deep += po.deep;
        r.pooled_both += po.both;
        r.problems.push_back(std::move(po));
    }
    r.tpp = token_pool_precision(peak_sets, deep_sets);
    r.ppp = per_problem_precision(peak_sets, deep_sets);
    return r;
}

}  // namespace iar::overlap
