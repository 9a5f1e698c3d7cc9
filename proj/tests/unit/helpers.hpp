#pragma once

#include "iar/archive.hpp"
#include "iar/synth.hpp"

#include <cstring>
#include <json.hpp>
#include <random>
#include <string>

namespace testing_support {

// Small js-mode archive with deterministic contents.
inline iar::archive::ArchiveHeader js_header(std::size_t problems, std::size_t T = 4, std::size_t L = 3,
                                             std::size_t sub = 5) {
    iar::archive::ArchiveHeader h;
    h.model_name = "tiny";
    h.num_layers = L;
    h.hidden_dim = sub + 3;
    h.subsample_dim = sub;
    h.mode = iar::archive::Mode::js;
    h.decoding = iar::archive::Decoding::sampled;
    h.seed = 42;
    for (std::size_t i = 0; i < problems; ++i) {
        iar::archive::ProblemMeta m;
        m.problem_id = "p" + std::to_string(i);
        m.domain = iar::kAllDomains[i % 4];
        m.num_tokens = T + i;
        for (std::size_t t = 0; t < m.num_tokens; ++t) m.token_strings.push_back("t" + std::to_string(t));
        m.gold_correct = i % 2 == 0;
        h.problems.push_back(m);
    }
    return h;
}

inline std::vector<iar::archive::ProblemPayload> js_payloads(const iar::archive::ArchiveHeader& h,
                                                             std::uint64_t seed = 1) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    std::vector<iar::archive::ProblemPayload> out;
    for (const auto& m : h.problems) {
        iar::archive::ProblemPayload p;
        p.final_states.resize(m.num_tokens * h.subsample_dim);
        for (auto& v : p.final_states) v = 10.0f * u(rng) - 5.0f;
        p.gold_embedding.resize(h.subsample_dim);
        for (auto& v : p.gold_embedding) v = u(rng);
        p.js_matrix.resize(m.num_tokens * h.num_layers);
        for (std::size_t t = 0; t < m.num_tokens; ++t)
            for (std::size_t l = 0; l < h.num_layers; ++l)
                p.js_matrix[t * h.num_layers + l] = l + 1 == h.num_layers ? 0.0f : u(rng);
        out.push_back(std::move(p));
    }
    return out;
}

struct SplitArchive {
    nlohmann::json header;
    std::string payload;
};

inline SplitArchive split(const std::string& bytes) {
    std::uint64_t len = 0;
    std::memcpy(&len, bytes.data() + 8, 8);
    return {nlohmann::json::parse(bytes.substr(16, len)), bytes.substr(16 + len)};
}

inline std::string join(const nlohmann::json& header, const std::string& payload, std::uint32_t version = 1) {
    const std::string text = header.dump();
    std::string out = "IAR1";
    out.append(reinterpret_cast<const char*>(&version), 4);
    const std::uint64_t len = text.size();
    out.append(reinterpret_cast<const char*>(&len), 8);
    return out + text + payload;
}

// Planted cohort with the acceptance-harness defaults.
inline iar::synth::SynthSpec cohort(std::size_t problems, std::uint64_t seed, std::size_t runs = 3) {
    iar::synth::CohortOptions o;
    o.num_problems = problems;
    o.seed = seed;
    o.runs = runs;
    return iar::synth::make_cohort_spec(o);
}

inline std::vector<iar::archive::Archive> in_memory(const iar::synth::SynthSpec& spec) {
    std::vector<iar::archive::Archive> out;
    for (const auto& g : iar::synth::synth_generate(spec))
        out.push_back(iar::archive::Archive::from_bytes(iar::archive::encode_archive(g.header, g.payloads)));
    return out;
}

}  // namespace testing_support
