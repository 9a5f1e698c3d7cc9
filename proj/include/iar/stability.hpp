#pragma once

// Multi-seed stability and the Genuine / Lucky / Silent problem taxonomy.

#include "iar/common.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace iar::stability {

inline constexpr std::array<std::int64_t, 3> kSeeds = {42, 123, 456};

struct RunTriple {
    std::string problem_id;
    std::array<IndexSet, 3> peak_sets;
    std::array<bool, 3> correct{};
    std::array<std::size_t, 3> token_counts{};

    int correct_count() const noexcept { return int(correct[0]) + int(correct[1]) + int(correct[2]); }
    bool all_peak_free() const noexcept {
        return peak_sets[0].empty() && peak_sets[1].empty() && peak_sets[2].empty();
    }
};

enum class Category { genuine, lucky, silent };
enum class LuckySubtype { unstable, no_peaks };

std::string_view to_string(Category c);
std::string_view to_string(LuckySubtype s);

// Threshold test on J3. Baseline is the exclusive test J3 > 0; the stricter
// presets are inclusive, J3 >= value. An undefined J3 fails every test.
struct StabilityThreshold {
    bool inclusive = false;
    double value = 0.0;

    bool passes(Maybe j3) const noexcept;

    static StabilityThreshold baseline() { return {false, 0.0}; }
    static StabilityThreshold strict() { return {true, 0.1}; }
    static StabilityThreshold stricter() { return {true, 0.2}; }
};

enum class ThresholdPreset { baseline, strict, stricter };
inline constexpr ThresholdPreset kAllPresets[] = {ThresholdPreset::baseline, ThresholdPreset::strict,
                                                  ThresholdPreset::stricter};

StabilityThreshold threshold_for(ThresholdPreset p);
std::string_view to_string(ThresholdPreset p);
ThresholdPreset preset_from_string(std::string_view s);

struct QualityLabel {
    Category category = Category::silent;
    std::optional<LuckySubtype> lucky_subtype;
    Maybe j3;
};

// |P1 ∩ P2 ∩ P3| / |P1 ∪ P2 ∪ P3|; absent when the union is empty.
Maybe jaccard3(const IndexSet& a, const IndexSet& b, const IndexSet& c);
inline Maybe jaccard3(const RunTriple& t) { return jaccard3(t.peak_sets[0], t.peak_sets[1], t.peak_sets[2]); }

// Percentage of problems with no peak under any of the three runs.
double no_peak_rate(std::span<const RunTriple> triples);

// Percentage of problems answered correctly by all three runs.
double consistent_correctness_rate(std::span<const RunTriple> triples);

QualityLabel classify_problem(const RunTriple& triple, StabilityThreshold threshold = StabilityThreshold::baseline());

struct PartitionResult {
    std::vector<QualityLabel> labels;  // aligned with the input triples
    std::size_t genuine = 0;
    std::size_t lucky = 0;
    std::size_t silent = 0;
    std::size_t lucky_unstable = 0;
    std::size_t lucky_no_peaks = 0;
};

PartitionResult partition(std::span<const RunTriple> triples, StabilityThreshold threshold);

// (G_baseline - G_stricter) / G_baseline; absent when G_baseline = 0.
Maybe reclassification_rate(std::size_t genuine_baseline, std::size_t genuine_stricter);

// Mean of the defined J3 values; absent when no problem has a peak.
Maybe mean_j3_with_peaks(std::span<const RunTriple> triples);

}  // namespace iar::stability
