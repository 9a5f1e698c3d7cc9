#pragma once

// Synthetic raw-mode archives with planted structure, used as end-to-end
// test oracles.
//
// Planted peak tokens carry final-layer states coordinate-correlated with the
// gold embedding; all other tokens are independent of it. With the shifted
// background every non-peak state of a run is the same base vector plus a
// constant offset on a binary grid, so their MI values are bitwise equal and
// Tukey detection cannot fire on them. The gaussian background draws each
// non-peak state independently. Every token has a
// planted settling layer: below it the logit-lens distribution concentrates
// on a different vocabulary item than the final layer, from it onwards the
// state equals the final state. Deep tokens settle at or after
// floor(0.85 L).

#include "iar/archive.hpp"
#include "iar/common.hpp"
#include "iar/stability.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace iar::synth {

struct PlannedRun {
    std::size_t tokens = 0;
    bool correct = false;
    IndexSet peaks;
    IndexSet deep;
};

struct PlannedProblem {
    std::string problem_id;
    Domain domain = Domain::math;
    std::vector<PlannedRun> runs;
    std::optional<stability::Category> category;
    std::optional<stability::LuckySubtype> lucky_subtype;
};

enum class Background { shifted, gaussian };

std::string_view to_string(Background b);
Background background_from_string(std::string_view s);

struct SynthSpec {
    std::string model_name = "synthetic";
    std::size_t num_layers = 12;
    std::size_t subsample_dim = 64;
    std::size_t vocab_size = 16;  // hidden_dim = subsample_dim + vocab_size
    double state_scale = 50.0;    // std-dev of hidden-state coordinates
    double peak_coupling = 0.95;  // correlation of planted peak states with the gold embedding
    Background background = Background::shifted;
    double rmsnorm_eps = 1e-6;
    double alpha = 0.85;          // depth fraction the deep plan is laid out against
    std::uint64_t seed = 0;
    std::size_t runs = 1;
    std::vector<PlannedProblem> problems;

    std::size_t hidden_dim() const noexcept { return subsample_dim + vocab_size; }
};

// Checks planted positions lie in [0, T), run counts match, and shapes are valid.
void check_spec(const SynthSpec& spec);

struct CohortOptions {
    std::size_t num_problems = 200;
    std::size_t runs = 3;
    std::size_t tokens_min = 56;
    std::size_t tokens_max = 72;
    std::uint64_t seed = 0;
    bool planted = true;  // false: no planted peaks, random deep sets, random correctness
    // Category mix for planted cohorts; the remainder is Silent.
    double genuine_fraction = 0.3;
    double lucky_unstable_fraction = 0.35;
    double lucky_no_peaks_fraction = 0.05;
    double deep_fraction = 0.5;  // share of non-peak tokens planted deep
    bool all_domains = false;    // cycle problems through the four domains instead of math only
    Background background = Background::shifted;
    std::string model_name = "synthetic";
};

// Builds a spec with randomly placed structure. In planted cohorts:
//   Genuine: all runs correct, a shared core of 1-3 peaks plus 0-1 run-specific peaks
//   Lucky (unstable): 1-3 correct runs, 4-8 peaks per run, no position shared by all runs
//   Lucky (no peaks): 1-2 correct runs, no planted peaks
//   Silent: no correct run, 0-6 peaks per run
// Peaks are always a subset of the planted deep set.
SynthSpec make_cohort_spec(const CohortOptions& options);

struct GeneratedArchive {
    archive::ArchiveHeader header;
    std::vector<archive::ProblemPayload> payloads;
};

// Archive of a single run (0-based run index).
GeneratedArchive generate_run(const SynthSpec& spec, std::size_t run);

// One archive per run. Byte-identical for equal specs.
std::vector<GeneratedArchive> synth_generate(const SynthSpec& spec);

nlohmann::json spec_to_json(const SynthSpec& spec);
SynthSpec spec_from_json(const nlohmann::json& j);

// Writes <prefix>.iar (one run) or <prefix>.s<seed>.iar per run, and the
// ground-truth sidecar <prefix>.truth.json. Returns the archive paths.
std::vector<std::filesystem::path> write_synth(const SynthSpec& spec, const std::filesystem::path& prefix);

}  // namespace iar::synth
