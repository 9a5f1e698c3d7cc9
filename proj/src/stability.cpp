#include "iar/stability.hpp"

#include <algorithm>
#include <iterator>

namespace iar::stability {

std::string_view to_string(Category c) {
    switch (c) {
        case Category::genuine: return "Genuine";
        case Category::lucky: return "Lucky";
        case Category::silent: return "Silent";
    }
    return "?";
}

std::string_view to_string(LuckySubtype s) { return s == LuckySubtype::unstable ? "unstable" : "no_peaks"; }

bool StabilityThreshold::passes(Maybe j3) const noexcept {
    if (!j3) return false;
    return inclusive ? *j3 >= value : *j3 > value;
}

StabilityThreshold threshold_for(ThresholdPreset p) {
    switch (p) {
        case ThresholdPreset::baseline: return StabilityThreshold::baseline();
        case ThresholdPreset::strict: return StabilityThreshold::strict();
        case ThresholdPreset::stricter: return StabilityThreshold::stricter();
    }
    return StabilityThreshold::baseline();
}

std::string_view to_string(ThresholdPreset p) {
    switch (p) {
        case ThresholdPreset::baseline: return "baseline";
        case ThresholdPreset::strict: return "strict";
        case ThresholdPreset::stricter: return "stricter";
    }
    return "?";
}

ThresholdPreset preset_from_string(std::string_view s) {
    for (auto p : kAllPresets) {
        if (to_string(p) == s) return p;
    }
    throw ParameterError("unknown tau-j preset '" + std::string(s) + "'");
}

Maybe jaccard3(const IndexSet& a, const IndexSet& b, const IndexSet& c) {
    IndexSet ab_union;
    IndexSet uni;
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(ab_union));
    std::set_union(ab_union.begin(), ab_union.end(), c.begin(), c.end(), std::back_inserter(uni));
    if (uni.empty()) return std::nullopt;
    IndexSet ab;
    IndexSet inter;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(ab));
    std::set_intersection(ab.begin(), ab.end(), c.begin(), c.end(), std::back_inserter(inter));
    return static_cast<double>(inter.size()) / static_cast<double>(uni.size());
}

double no_peak_rate(std::span<const RunTriple> triples) {
    if (triples.empty()) throw ParameterError("no_peak_rate: no problems");
    const auto n = std::count_if(triples.begin(), triples.end(), [](const auto& t) { return t.all_peak_free(); });
    return 100.0 * static_cast<double>(n) / static_cast<double>(triples.size());
}

double consistent_correctness_rate(std::span<const RunTriple> triples) {
    if (triples.empty()) throw ParameterError("consistent_correctness_rate: no problems");
    const auto n =
        std::count_if(triples.begin(), triples.end(), [](const auto& t) { return t.correct_count() == 3; });
    return 100.0 * static_cast<double>(n) / static_cast<double>(triples.size());
}

QualityLabel classify_problem(const RunTriple& triple, StabilityThreshold threshold) {
    QualityLabel label;
    label.j3 = jaccard3(triple);
    const int c = triple.correct_count();
    if (c == 0) {
        label.category = Category::silent;
    } else if (c == 3 && threshold.passes(label.j3)) {
        label.category = Category::genuine;
    } else {
        label.category = Category::lucky;
        label.lucky_subtype = triple.all_peak_free() ? LuckySubtype::no_peaks : LuckySubtype::unstable;
    }
    return label;
}

PartitionResult partition(std::span<const RunTriple> triples, StabilityThreshold threshold) {
    if (triples.empty()) throw ParameterError("partition: no problems");
    PartitionResult r;
    r.labels.reserve(triples.size());
    for (const auto& t : triples) {
        const QualityLabel label = classify_problem(t, threshold);
        switch (label.category) {
            case Category::genuine: ++r.genuine; break;
            case Category::silent: ++r.silent; break;
            case Category::lucky:
                ++r.lucky;
                if (label.lucky_subtype == LuckySubtype::no_peaks) {
                    ++r.lucky_no_peaks;
                } else {
                    ++r.lucky_unstable;
                }
                break;
        }
        r.labels.push_back(label);
    }
    return r;
}

Maybe reclassification_rate(std::size_t genuine_baseline, std::size_t genuine_stricter) {
    if (genuine_baseline == 0) return std::nullopt;
    if (genuine_stricter > genuine_baseline) {
        throw ParameterError("reclassification_rate: stricter Genuine count exceeds baseline");
    }
    return static_cast<double>(genuine_baseline - genuine_stricter) / static_cast<double>(genuine_baseline);
}

Maybe mean_j3_with_peaks(std::span<const RunTriple> triples) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& t : triples) {
        if (const auto j = jaccard3(t)) {
            sum += *j;
            ++n;
        }
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
}

}  // namespace iar::stability
