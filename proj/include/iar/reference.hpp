#pragma once

// Single-threaded reference versions of the OpenMP kernels. Results must be
// bitwise equal to the parallel versions; tests and benchmarks compare them.

#include "iar/archive.hpp"
#include "iar/dtr.hpp"
#include "iar/mi.hpp"
#include "iar/stats.hpp"

namespace iar::reference {

double median_heuristic_sigma(MatrixView<float> states);

mi::MITrace mi_trace(std::string problem_id, MatrixView<float> final_states, std::span<const float> gold_embedding,
                     const mi::BandwidthPolicy& policy);

dtr::JSMatrix js_matrix_from_raw(const archive::ArchiveHeader& header, const archive::ProblemMeta& meta,
                                 const archive::ProblemPayload& payload);

stats::Interval bootstrap_ci(std::span<const double> group_a, std::span<const double> group_b,
                             const stats::TwoSampleStatistic& statistic, std::size_t n_resamples, std::uint64_t seed);

}  // namespace iar::reference
