#pragma once

// Report orchestration: RQ1-RQ4 tables, the sigma and J3-threshold
// ablations and archive validation. Every entry point returns a Report whose
// rendering is deterministic for fixed inputs, config and seed.

#include "iar/archive.hpp"
#include "iar/dtr.hpp"
#include "iar/mi.hpp"
#include "iar/peaks.hpp"
#include "iar/report.hpp"
#include "iar/stability.hpp"
#include "iar/stats.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace iar::pipeline {

struct PipelineConfig {
    mi::BandwidthPolicy sigma_policy = mi::BandwidthPolicy::fixed(50.0);
    double tau = dtr::kDefaultTau;
    double alpha = dtr::kDefaultAlpha;
    stability::ThresholdPreset tau_j = stability::ThresholdPreset::baseline;
    double mi_high_threshold = 0.9;
    report::Format format = report::Format::tsv;
    std::uint64_t seed = 0;

    std::size_t top_k = 20;
    std::size_t min_group_size = 6;
    std::size_t rq2_family = 12;
    std::size_t rq3_family = 14;
    std::size_t rq4_family = 12;
    double base_alpha = 0.05;
    std::size_t n_resamples = 1000;
    std::size_t exact_max_total = 12;
    std::vector<double> sigma_grid = {10.0, 25.0, 50.0, 100.0, 200.0};
    std::set<std::string, std::less<>> reasoning_markers;  // empty: built-in lexicon
    int precision = 4;
};

// Throws ParameterError for out-of-range values.
void check_config(const PipelineConfig& config);

struct ProblemAnalysis {
    std::string problem_id;
    Domain domain = Domain::math;
    bool correct = false;
    std::vector<std::string> token_strings;
    mi::MITrace trace;
    peaks::PeakSet peaks;
    peaks::PeakStats stats;
    std::optional<dtr::DeepSet> deep;  // present when DTR was requested
};

struct Failure {
    std::string problem_id;
    std::string message;
};

struct ArchiveAnalysis {
    std::string model_name;
    std::optional<std::int64_t> seed;
    std::vector<ProblemAnalysis> problems;  // archive order, failed problems omitted
    std::vector<Failure> failures;
};

// Per-problem fan-out over the archive. A problem whose analysis throws is
// recorded in `failures` and skipped.
ArchiveAnalysis analyze_archive(const archive::Archive& archive, const mi::BandwidthPolicy& sigma_policy,
                                bool with_deep, double tau = dtr::kDefaultTau, double alpha = dtr::kDefaultAlpha);

// Three runs of one model, aligned on problem id.
struct ModelRuns {
    std::string label;
    std::vector<ArchiveAnalysis> runs;  // size 3
};

struct AlignedProblem {
    std::string problem_id;
    Domain domain = Domain::math;
    stability::RunTriple triple;
    std::array<const ProblemAnalysis*, 3> runs{};
};

// Problems present in all three runs, ordered as in the first run. Throws
// AlignmentError naming the ids missing from some archive; problems that
// failed analysis in any run are skipped and appended to `failures`.
std::vector<AlignedProblem> align_runs(const ModelRuns& model, std::vector<Failure>& failures);

// Per-problem three-run aggregates used as RQ4 discriminators.
struct ProblemMetrics {
    double count = 0.0;
    double ratio = 0.0;
    Maybe intensity;  // mean of the defined per-run intensities
};
ProblemMetrics problem_metrics(const AlignedProblem& p);

report::Report run_rq1(const archive::Archive& archive, const PipelineConfig& config);
report::Report run_rq2(std::span<const archive::Archive> archives, const PipelineConfig& config);
// `archives` holds one or more models, three consecutive archives each.
report::Report run_rq3(std::span<const archive::Archive> archives, const PipelineConfig& config);
report::Report run_rq4(std::span<const archive::Archive> archives, const PipelineConfig& config);
report::Report ablate_sigma(std::span<const archive::Archive> archives, const PipelineConfig& config);
report::Report ablate_tau(std::span<const archive::Archive> archives, const PipelineConfig& config);
// Violations of every archive; `clean` is false when any is found.
report::Report validate(std::span<const archive::Archive> archives, std::span<const std::string> names,
                        bool& clean);

}  // namespace iar::pipeline
