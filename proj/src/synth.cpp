#include "iar/synth.hpp"

#include "iar/dtr.hpp"
#include "iar/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

namespace iar::synth {

namespace {

// Logit-lens contrast: the active vocabulary coordinate is this many state
// standard deviations, which puts ~99.6% of the mass on one item.
constexpr double kLogitScale = 20.0;
constexpr double kSettledNoise = 0.02;

const std::vector<std::string> kPeakTokens = {"\xC4\xA0So",    "\xC4\xA0Wait", "\xC4\xA0Okay", "\xC4\xA0Let",
                                              "\xC4\xA0" "First", "\xC4\xA0Total", "\xC4\xA0Next", "\xC4\xA0Hmm"};
const std::vector<std::string> kDeepTokens = {",", ".", "\xC4\xA0the", "\xC4\x8A", "\xC4\xA0of", "\xC4\xA0=", "\xC4\xA0is"};
const std::vector<std::string> kShallowTokens = {"\xC4\xA0" "apples", "\xC4\xA0" "12",   "\xC4\xA0" "cost",
                                                 "\xC4\xA0" "each",   "\xC4\xA0" "dollars", "\xC4\xA0" "has",
                                                 "\xC4\xA0" "more",   "\xC4\xA0" "times", "\xC4\xA0" "3",
                                                 "\xC4\xA0" "and"};
constexpr const char* kChainOpener = "Okay";

template <typename Rng>
std::size_t uniform_index(Rng& rng, std::size_t lo, std::size_t hi) {  // inclusive
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

template <typename Rng>
IndexSet sample_positions(Rng& rng, std::size_t T, std::size_t count, const IndexSet& exclude) {
    std::vector<std::size_t> pool;
    for (std::size_t t = 0; t < T; ++t) {
        if (!std::binary_search(exclude.begin(), exclude.end(), t)) pool.push_back(t);
    }
    count = std::min(count, pool.size());
    // Partial Fisher-Yates with explicit draws keeps the sequence portable.
    for (std::size_t i = 0; i < count; ++i) std::swap(pool[i], pool[uniform_index(rng, i, pool.size() - 1)]);
    IndexSet out(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(count));
    std::sort(out.begin(), out.end());
    return out;
}

IndexSet set_union(const IndexSet& a, const IndexSet& b) {
    IndexSet out;
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

template <typename Rng>
IndexSet plant_deep(Rng& rng, std::size_t T, const IndexSet& peaks, double deep_fraction) {
    IndexSet deep = peaks;
    std::bernoulli_distribution coin(deep_fraction);
    for (std::size_t t = 0; t < T; ++t) {
        if (!std::binary_search(peaks.begin(), peaks.end(), t) && coin(rng)) deep.push_back(t);
    }
    std::sort(deep.begin(), deep.end());
    return deep;
}

std::optional<stability::Category> category_from_string(const std::string& s) {
    if (s == "Genuine") return stability::Category::genuine;
    if (s == "Lucky") return stability::Category::lucky;
    if (s == "Silent") return stability::Category::silent;
    return std::nullopt;
}

std::optional<stability::LuckySubtype> subtype_from_string(const std::string& s) {
    if (s == "unstable") return stability::LuckySubtype::unstable;
    if (s == "no_peaks") return stability::LuckySubtype::no_peaks;
    return std::nullopt;
}

}  // namespace

std::string_view to_string(Background b) { return b == Background::shifted ? "shifted" : "gaussian"; }

Background background_from_string(std::string_view s) {
    if (s == "shifted") return Background::shifted;
    if (s == "gaussian") return Background::gaussian;
    throw ParameterError("unknown synth background '" + std::string(s) + "'");
}

GeneratedArchive generate_run(const SynthSpec& spec, std::size_t run) {
    check_spec(spec);
    if (run >= spec.runs) throw ParameterError("synth: run index out of range");
    const std::size_t L = spec.num_layers;
    const std::size_t sub = spec.subsample_dim;
    const std::size_t V = spec.vocab_size;
    const std::size_t d = spec.hidden_dim();
    const std::size_t cutoff = std::max<std::size_t>(1, dtr::cutoff_layer(L, spec.alpha));
    const double s = spec.state_scale;
    const double rho = spec.peak_coupling;
    const double c = kLogitScale * s;

    GeneratedArchive out;
    auto& h = out.header;
    h.model_name = spec.model_name;
    h.num_layers = L;
    h.hidden_dim = d;
    h.subsample_dim = sub;
    h.vocab_size = V;
    h.mode = archive::Mode::raw;
    h.rmsnorm_eps = spec.rmsnorm_eps;
    if (spec.runs == 1) {
        h.decoding = archive::Decoding::greedy;
    } else {
        h.decoding = archive::Decoding::sampled;
        h.seed = run < stability::kSeeds.size() ? stability::kSeeds[run] : static_cast<std::int64_t>(run);
    }

    std::vector<float> unembedding(V * d, 0.0f);
    for (std::size_t v = 0; v < V; ++v) unembedding[v * d + sub + v] = 1.0f;
    const std::vector<float> gain(d, 1.0f);

    for (std::size_t pi = 0; pi < spec.problems.size(); ++pi) {
        const PlannedProblem& prob = spec.problems[pi];
        const PlannedRun& plan = prob.runs[run];
        const std::size_t T = plan.tokens;

        std::mt19937_64 gold_rng(numeric::mix_seed(spec.seed, pi * 1000003ULL));
        std::normal_distribution<double> normal(0.0, 1.0);
        std::vector<double> gold(sub);
        for (double& g : gold) g = s * normal(gold_rng);

        std::mt19937_64 rng(numeric::mix_seed(numeric::mix_seed(spec.seed, pi * 1000003ULL), run + 1));

        archive::ProblemMeta meta;
        meta.problem_id = prob.problem_id;
        meta.domain = prob.domain;
        meta.num_tokens = T;
        meta.gold_correct = plan.correct;

        archive::ProblemPayload payload;
        payload.final_states.resize(T * sub);
        payload.gold_embedding.assign(gold.begin(), gold.end());
        payload.per_layer_states.resize(T * L * d);
        payload.rmsnorm_gain = gain;
        payload.unembedding = unembedding;

        // Shifted background: base vector and offsets on a grid fine enough for
        // the base and coarse enough that every sum is exact in float.
        const int e = std::ilogb(s);
        const double grid = std::ldexp(1.0, e - 13);
        const double step = std::ldexp(1.0, e - 3);
        std::vector<double> shared(sub);
        for (double& z : shared) z = std::round(s * normal(rng) / grid) * grid;

        std::vector<double> base(d);
        for (std::size_t t = 0; t < T; ++t) {
            const bool is_peak = std::binary_search(plan.peaks.begin(), plan.peaks.end(), t);
            const bool is_deep = std::binary_search(plan.deep.begin(), plan.deep.end(), t);

            if (is_peak) {
                for (std::size_t i = 0; i < sub; ++i)
                    base[i] = rho * gold[i] + std::sqrt(1.0 - rho * rho) * s * normal(rng);
            } else if (spec.background == Background::shifted) {
                const double offset = step * (static_cast<double>(uniform_index(rng, 0, 16)) - 8.0);
                for (std::size_t i = 0; i < sub; ++i) base[i] = shared[i] + offset;
            } else {
                for (std::size_t i = 0; i < sub; ++i) base[i] = s * normal(rng);
            }
            std::fill(base.begin() + static_cast<std::ptrdiff_t>(sub), base.end(), 0.0);
            const std::size_t final_item = uniform_index(rng, 0, V - 1);
            const std::size_t early_item = (final_item + 1 + uniform_index(rng, 0, V - 2)) % V;
            const std::size_t settle =
                is_deep ? uniform_index(rng, cutoff, L) : (cutoff > 1 ? uniform_index(rng, 1, cutoff - 1) : 1);

            for (std::size_t i = 0; i < sub; ++i) payload.final_states[t * sub + i] = static_cast<float>(base[i]);

            for (std::size_t l = 0; l < L; ++l) {
                float* state = payload.per_layer_states.data() + (t * L + l) * d;
                const bool final_layer = l + 1 == L;
                for (std::size_t i = 0; i < sub; ++i) {
                    const double jitter = final_layer ? 0.0 : kSettledNoise * s * normal(rng);
                    state[i] = static_cast<float>(base[i] + jitter);
                }
                const std::size_t item = (l + 1 < settle) ? early_item : final_item;
                state[sub + item] = static_cast<float>(c);
            }

            std::string tok;
            if (t == 0) {
                tok = kChainOpener;
            } else if (is_peak) {
                tok = kPeakTokens[uniform_index(rng, 0, kPeakTokens.size() - 1)];
            } else if (is_deep) {
                tok = kDeepTokens[uniform_index(rng, 0, kDeepTokens.size() - 1)];
            } else {
                tok = kShallowTokens[uniform_index(rng, 0, kShallowTokens.size() - 1)];
            }
            meta.token_strings.push_back(std::move(tok));
        }

        h.problems.push_back(std::move(meta));
        out.payloads.push_back(std::move(payload));
    }
    return out;
}

void check_spec(const SynthSpec& spec) {
    if (spec.num_layers < 2) throw ParameterError("synth: need at least two layers");
    if (spec.subsample_dim < 2) throw ParameterError("synth: subsample_dim must be >= 2");
    if (spec.vocab_size < 2) throw ParameterError("synth: vocab_size must be >= 2");
    if (!(spec.state_scale > 0.0)) throw ParameterError("synth: state_scale must be positive");
    if (!(spec.peak_coupling >= 0.0 && spec.peak_coupling <= 1.0))
        throw ParameterError("synth: peak_coupling must lie in [0, 1]");
    if (!(spec.rmsnorm_eps > 0.0)) throw ParameterError("synth: rmsnorm_eps must be positive");
    if (spec.runs == 0) throw ParameterError("synth: runs must be >= 1");
    for (const auto& p : spec.problems) {
        if (p.runs.size() != spec.runs) {
            throw ParameterError("synth: problem " + p.problem_id + " plans " + std::to_string(p.runs.size()) +
                                 " runs, spec has " + std::to_string(spec.runs));
        }
        for (const auto& r : p.runs) {
            if (r.tokens == 0) throw ParameterError("synth: problem " + p.problem_id + " has a zero-length run");
            for (const IndexSet* set : {&r.peaks, &r.deep}) {
                if (!std::is_sorted(set->begin(), set->end()) ||
                    std::adjacent_find(set->begin(), set->end()) != set->end()) {
                    throw ParameterError("synth: problem " + p.problem_id + " has unsorted planted positions");
                }
                if (!set->empty() && set->back() >= r.tokens) {
                    throw ParameterError("synth: problem " + p.problem_id + " plants a position outside [0, T)");
                }
            }
        }
    }
}

SynthSpec make_cohort_spec(const CohortOptions& o) {
    if (o.num_problems == 0) throw ParameterError("synth: num_problems must be >= 1");
    if (o.tokens_min == 0 || o.tokens_min > o.tokens_max) throw ParameterError("synth: bad token range");
    SynthSpec spec;
    spec.seed = o.seed;
    spec.runs = o.runs;
    spec.model_name = o.model_name;
    spec.background = o.background;

    std::mt19937_64 rng(numeric::mix_seed(o.seed, 0xC0407ULL));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double g_cut = o.genuine_fraction;
    const double u_cut = g_cut + o.lucky_unstable_fraction;
    const double n_cut = u_cut + o.lucky_no_peaks_fraction;

    for (std::size_t i = 0; i < o.num_problems; ++i) {
        PlannedProblem p;
        p.problem_id = "q" + std::to_string(i);
        p.domain = o.all_domains ? kAllDomains[i % 4] : Domain::math;
        std::vector<std::size_t> lengths(o.runs);
        for (auto& T : lengths) T = uniform_index(rng, o.tokens_min, o.tokens_max);
        const std::size_t min_T = *std::min_element(lengths.begin(), lengths.end());

        std::vector<IndexSet> peaks(o.runs);
        std::vector<bool> correct(o.runs, false);

        if (!o.planted) {
            for (std::size_t r = 0; r < o.runs; ++r) correct[r] = unit(rng) < 0.5;
        } else {
            const double u = unit(rng);
            if (u < g_cut && o.runs > 0) {
                p.category = stability::Category::genuine;
                const IndexSet core = sample_positions(rng, min_T - 1, uniform_index(rng, 1, 3), {});
                IndexSet shifted;  // keep position 0 free for the chain opener
                for (auto t : core) shifted.push_back(t + 1);
                for (std::size_t r = 0; r < o.runs; ++r) {
                    correct[r] = true;
                    IndexSet taken = shifted;
                    taken.insert(taken.begin(), 0);
                    const IndexSet extra = sample_positions(rng, lengths[r], uniform_index(rng, 0, 1), taken);
                    peaks[r] = set_union(shifted, extra);
                }
            } else if (u < u_cut) {
                p.category = stability::Category::lucky;
                p.lucky_subtype = stability::LuckySubtype::unstable;
                const std::size_t n_correct = uniform_index(rng, 1, std::max<std::size_t>(1, o.runs));
                for (std::size_t r = 0; r < n_correct; ++r) correct[r] = true;
                std::shuffle(correct.begin(), correct.end(), rng);
                // Disjoint per-run sets leave the three-way intersection empty.
                IndexSet used = {0};
                for (std::size_t r = 0; r < o.runs; ++r) {
                    const IndexSet mine = sample_positions(rng, lengths[r], uniform_index(rng, 4, 8), used);
                    peaks[r] = mine;
                    used = set_union(used, mine);
                }
            } else if (u < n_cut) {
                p.category = stability::Category::lucky;
                p.lucky_subtype = stability::LuckySubtype::no_peaks;
                const std::size_t n_correct = uniform_index(rng, 1, std::max<std::size_t>(1, std::min<std::size_t>(2, o.runs)));
                for (std::size_t r = 0; r < n_correct; ++r) correct[r] = true;
                std::shuffle(correct.begin(), correct.end(), rng);
            } else {
                p.category = stability::Category::silent;
                for (std::size_t r = 0; r < o.runs; ++r) {
                    peaks[r] = sample_positions(rng, lengths[r], uniform_index(rng, 0, 6), {0});
                }
            }
        }

        for (std::size_t r = 0; r < o.runs; ++r) {
            PlannedRun run;
            run.tokens = lengths[r];
            run.correct = correct[r];
            run.peaks = peaks[r];
            run.deep = plant_deep(rng, lengths[r], peaks[r], o.deep_fraction);
            p.runs.push_back(std::move(run));
        }
        spec.problems.push_back(std::move(p));
    }
    return spec;
}

std::vector<GeneratedArchive> synth_generate(const SynthSpec& spec) {
    check_spec(spec);
    std::vector<GeneratedArchive> out;
    for (std::size_t r = 0; r < spec.runs; ++r) out.push_back(generate_run(spec, r));
    return out;
}

nlohmann::json spec_to_json(const SynthSpec& spec) {
    nlohmann::json j;
    j["model_name"] = spec.model_name;
    j["num_layers"] = spec.num_layers;
    j["subsample_dim"] = spec.subsample_dim;
    j["vocab_size"] = spec.vocab_size;
    j["state_scale"] = spec.state_scale;
    j["peak_coupling"] = spec.peak_coupling;
    j["background"] = to_string(spec.background);
    j["rmsnorm_eps"] = spec.rmsnorm_eps;
    j["alpha"] = spec.alpha;
    j["seed"] = spec.seed;
    j["runs"] = spec.runs;
    auto problems = nlohmann::json::array();
    for (const auto& p : spec.problems) {
        nlohmann::json pj;
        pj["problem_id"] = p.problem_id;
        pj["domain"] = to_string(p.domain);
        pj["category"] = p.category ? nlohmann::json(to_string(*p.category)) : nlohmann::json(nullptr);
        pj["lucky_subtype"] = p.lucky_subtype ? nlohmann::json(to_string(*p.lucky_subtype)) : nlohmann::json(nullptr);
        auto runs = nlohmann::json::array();
        for (const auto& r : p.runs) {
            runs.push_back({{"tokens", r.tokens}, {"correct", r.correct}, {"peaks", r.peaks}, {"deep", r.deep}});
        }
        pj["runs"] = std::move(runs);
        problems.push_back(std::move(pj));
    }
    j["problems"] = std::move(problems);
    return j;
}

SynthSpec spec_from_json(const nlohmann::json& j) {
    SynthSpec spec;
    try {
        spec.model_name = j.value("model_name", spec.model_name);
        spec.num_layers = j.value("num_layers", spec.num_layers);
        spec.subsample_dim = j.value("subsample_dim", spec.subsample_dim);
        spec.vocab_size = j.value("vocab_size", spec.vocab_size);
        spec.state_scale = j.value("state_scale", spec.state_scale);
        spec.peak_coupling = j.value("peak_coupling", spec.peak_coupling);
        spec.background = background_from_string(j.value("background", std::string("shifted")));
        spec.rmsnorm_eps = j.value("rmsnorm_eps", spec.rmsnorm_eps);
        spec.alpha = j.value("alpha", spec.alpha);
        spec.seed = j.value("seed", spec.seed);
        spec.runs = j.value("runs", spec.runs);
        for (const auto& pj : j.at("problems")) {
            PlannedProblem p;
            p.problem_id = pj.at("problem_id").get<std::string>();
            p.domain = domain_from_string(pj.value("domain", std::string("math")));
            if (pj.contains("category") && pj["category"].is_string())
                p.category = category_from_string(pj["category"].get<std::string>());
            if (pj.contains("lucky_subtype") && pj["lucky_subtype"].is_string())
                p.lucky_subtype = subtype_from_string(pj["lucky_subtype"].get<std::string>());
            for (const auto& rj : pj.at("runs")) {
                PlannedRun r;
                r.tokens = rj.at("tokens").get<std::size_t>();
                r.correct = rj.value("correct", false);
                r.peaks = rj.value("peaks", IndexSet{});
                r.deep = rj.value("deep", IndexSet{});
                p.runs.push_back(std::move(r));
            }
            spec.problems.push_back(std::move(p));
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed synth spec: ") + e.what());
    }
    check_spec(spec);
    return spec;
}

std::vector<std::filesystem::path> write_synth(const SynthSpec& spec, const std::filesystem::path& prefix) {
    check_spec(spec);
    std::vector<std::filesystem::path> paths;
    for (std::size_t r = 0; r < spec.runs; ++r) {
        std::filesystem::path path = prefix;
        if (spec.runs == 1) {
            path += ".iar";
        } else {
            const auto seed = r < stability::kSeeds.size() ? stability::kSeeds[r] : static_cast<std::int64_t>(r);
            path += ".s" + std::to_string(seed) + ".iar";
        }
        const GeneratedArchive a = generate_run(spec, r);
        archive::write_archive(path, a.header, a.payloads);
        paths.push_back(std::move(path));
    }
    std::filesystem::path truth = prefix;
    truth += ".truth.json";
    std::ofstream out(truth);
    if (!out) throw Error("cannot write " + truth.string());
    out << spec_to_json(spec).dump(1) << '\n';
    return paths;
}

}  // namespace iar::synth
