#pragma once

// Tukey-fence peak detection on MI traces and per-problem peak statistics.

#include "iar/common.hpp"
#include "iar/mi.hpp"

#include <span>
#include <string>

namespace iar::peaks {

struct PeakSet {
    std::string problem_id;
    IndexSet indices;  // 0-based token positions, sorted
    double threshold = 0.0;
    std::size_t trace_length = 0;

    bool empty() const noexcept { return indices.empty(); }
};

struct PeakStats {
    std::size_t count = 0;
    double ratio = 0.0;
    Maybe intensity;  // absent when count == 0
};

// Q3 + 1.5 * (Q3 - Q1), quartiles by linear interpolation (type 7).
double tukey_threshold(std::span<const double> trace);

// Tokens whose MI strictly exceeds the Tukey fence.
PeakSet detect_peaks(const mi::MITrace& trace);

PeakStats peak_statistics(const PeakSet& peaks, const mi::MITrace& trace);

// Percentage of problems with at least one peak.
double with_peaks_rate(std::span<const PeakSet> peak_sets);

}  // namespace iar::peaks
