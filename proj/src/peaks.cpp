#include "iar/peaks.hpp"

#include "iar/numeric.hpp"

#include <algorithm>

namespace iar::peaks {

double tukey_threshold(std::span<const double> trace) {
    if (trace.empty()) throw ParameterError("tukey_threshold: empty trace");
    std::vector<double> sorted(trace.begin(), trace.end());
    std::sort(sorted.begin(), sorted.end());
    const double q1 = numeric::quantile_sorted(sorted, 0.25);
    const double q3 = numeric::quantile_sorted(sorted, 0.75);
    return q3 + 1.5 * (q3 - q1);
}

PeakSet detect_peaks(const mi::MITrace& trace) {
    PeakSet out;
    out.problem_id = trace.problem_id;
    out.trace_length = trace.values.size();
    out.threshold = tukey_threshold(trace.values);
    for (std::size_t t = 0; t < trace.values.size(); ++t) {
        if (trace.values[t] > out.threshold) out.indices.push_back(t);
    }
    return out;
}

PeakStats peak_statistics(const PeakSet& peaks, const mi::MITrace& trace) {
    if (peaks.problem_id != trace.problem_id) {
        throw ConsistencyError("peak set for '" + peaks.problem_id + "' paired with trace for '" +
                               trace.problem_id + "'");
    }
    if (peaks.trace_length != trace.values.size()) {
        throw ConsistencyError("peak set length does not match trace for '" + trace.problem_id + "'");
    }
    PeakStats s;
    s.count = peaks.indices.size();
    s.ratio = static_cast<double>(s.count) / static_cast<double>(trace.values.size());
    if (s.count > 0) {
        double sum = 0.0;
        for (std::size_t t : peaks.indices) sum += trace.values.at(t);
        s.intensity = sum / static_cast<double>(s.count);
    }
    return s;
}

double with_peaks_rate(std::span<const PeakSet> peak_sets) {
    if (peak_sets.empty()) throw ParameterError("with_peaks_rate: no problems");
    const auto with = std::count_if(peak_sets.begin(), peak_sets.end(),
                                    [](const PeakSet& p) { return !p.empty(); });
    return 100.0 * static_cast<double>(with) / static_cast<double>(peak_sets.size());
}

}  // namespace iar::peaks
