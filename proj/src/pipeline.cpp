#include "iar/pipeline.hpp"

#include "iar/numeric.hpp"
#include "iar/overlap.hpp"
#include "iar/parallel.hpp"
#include "iar/vocab.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>
#include <unordered_set>

namespace iar::pipeline {

namespace {

using report::Cell;
using report::Report;
using report::Table;

constexpr std::string_view kTriplet = "count/ratio/intensity";

struct Fmt {
    int precision;
    Cell operator()(Maybe v) const { return Cell(v, precision); }
    Cell operator()(double v) const { return Cell(v, precision); }
};

const std::set<std::string, std::less<>>& markers_of(const PipelineConfig& c) {
    return c.reasoning_markers.empty() ? vocab::default_reasoning_markers() : c.reasoning_markers;
}

std::vector<std::string> model_labels(std::span<const archive::Archive> archives, std::size_t stride) {
    std::vector<std::string> labels;
    std::map<std::string, std::size_t> seen;
    for (std::size_t i = 0; i < archives.size(); i += stride) {
        std::string name = archives[i].header().model_name;
        if (name.empty()) name = "model";
        const std::size_t n = seen[name]++;
        labels.push_back(n == 0 ? name : name + "#" + std::to_string(n + 1));
    }
    return labels;
}

std::vector<Domain> domains_of(const archive::Archive& a) {
    std::vector<Domain> out;
    for (Domain d : kAllDomains) {
        for (const auto& m : a.header().problems) {
            if (m.domain == d) {
                out.push_back(d);
                break;
            }
        }
    }
    return out;
}

std::vector<const ProblemAnalysis*> in_domain(const ArchiveAnalysis& a, Domain d) {
    std::vector<const ProblemAnalysis*> out;
    for (const auto& p : a.problems)
        if (p.domain == d) out.push_back(&p);
    return out;
}

overlap::TokenFrequency peak_token_frequency(std::span<const ProblemAnalysis* const> problems) {
    overlap::TokenFrequency freq;
    for (const auto* p : problems)
        for (std::size_t t : p->peaks.indices) ++freq[p->token_strings.at(t)];
    return freq;
}

overlap::TokenFrequency deep_token_frequency(std::span<const ProblemAnalysis* const> problems) {
    overlap::TokenFrequency freq;
    for (const auto* p : problems)
        if (p->deep)
            for (std::size_t t : p->deep->indices) ++freq[p->token_strings.at(t)];
    return freq;
}

// Peak summary shared by rq1 and the sigma ablation, so that equal bandwidth
// policies give identical numbers.
struct PeakSummary {
    std::size_t n = 0;
    std::size_t with_peaks = 0;
    Maybe wpr;
    Maybe mean_count;      // over with-peaks problems
    Maybe mean_intensity;  // over with-peaks problems
};

PeakSummary summarize_peaks(std::span<const ProblemAnalysis* const> problems) {
    PeakSummary s;
    s.n = problems.size();
    if (problems.empty()) return s;
    std::vector<peaks::PeakSet> sets;
    std::vector<double> counts;
    std::vector<double> intensities;
    for (const auto* p : problems) {
        sets.push_back(p->peaks);
        if (!p->peaks.empty()) {
            counts.push_back(static_cast<double>(p->stats.count));
            intensities.push_back(*p->stats.intensity);
        }
    }
    s.with_peaks = counts.size();
    s.wpr = peaks::with_peaks_rate(sets);
    if (!counts.empty()) {
        s.mean_count = numeric::mean(counts);
        s.mean_intensity = numeric::mean(intensities);
    }
    return s;
}

Table& failures_table(Report& r) { return r.add_table("failures", {"archive", "problem_id", "message"}); }

void add_failures(Table& t, const std::string& archive_label, const std::vector<Failure>& failures) {
    for (const auto& f : failures) t.add_row({archive_label, f.problem_id, f.message});
}

std::string join_categories(const std::vector<std::pair<std::string, std::size_t>>& top,
                            const std::set<std::string, std::less<>>& markers) {
    std::vector<std::string_view> cats;
    for (const auto& [tok, n] : top) {
        const auto c = vocab::to_string(vocab::classify_token_vocab(tok, markers));
        if (std::find(cats.begin(), cats.end(), c) == cats.end()) cats.push_back(c);
    }
    std::string out;
    for (auto c : cats) {
        if (!out.empty()) out += "+";
        out += c;
    }
    return out;
}

std::vector<ModelRuns> analyze_models(std::span<const archive::Archive> archives, const PipelineConfig& config,
                                      bool with_deep) {
    if (archives.empty() || archives.size() % 3 != 0) {
        throw ParameterError("expected archives in groups of three (one group per model), got " +
                             std::to_string(archives.size()));
    }
    const auto labels = model_labels(archives, 3);
    std::vector<ModelRuns> models;
    for (std::size_t m = 0; m < labels.size(); ++m) {
        ModelRuns mr;
        mr.label = labels[m];
        for (std::size_t r = 0; r < 3; ++r) {
            mr.runs.push_back(
                analyze_archive(archives[3 * m + r], config.sigma_policy, with_deep, config.tau, config.alpha));
        }
        models.push_back(std::move(mr));
    }
    return models;
}

std::string run_label(const ModelRuns& m, std::size_t r) {
    const auto& seed = m.runs[r].seed;
    return m.label + (seed ? "@s" + std::to_string(*seed) : "@run" + std::to_string(r + 1));
}

stats::EffectSizeOptions effect_options(const PipelineConfig& c, std::size_t family, std::uint64_t salt) {
    stats::EffectSizeOptions o;
    o.family_size = family;
    o.base_alpha = c.base_alpha;
    o.n_resamples = c.n_resamples;
    o.seed = numeric::mix_seed(c.seed, salt);
    o.mann_whitney.exact_max_total = c.exact_max_total;
    return o;
}

struct EffectCell {
    std::size_t n1 = 0;
    std::size_t n2 = 0;
    std::optional<stats::EffectSizeReport> result;
    std::string note;
};

EffectCell compare(const std::vector<double>& a, const std::vector<double>& b, const PipelineConfig& c,
                   std::size_t family, std::uint64_t salt) {
    EffectCell cell;
    cell.n1 = a.size();
    cell.n2 = b.size();
    if (a.size() < c.min_group_size || b.size() < c.min_group_size) {
        cell.note = "underpowered (group size below " + std::to_string(c.min_group_size) + ")";
        return cell;
    }
    cell.result = stats::effect_size(a, b, effect_options(c, family, salt));
    return cell;
}

std::vector<Cell> effect_cells(const EffectCell& e, const Fmt& f) {
    std::vector<Cell> row = {e.n1, e.n2};
    if (e.result) {
        const auto& r = *e.result;
        row.push_back(f(r.u));
        row.push_back(f(r.p_value));
        row.push_back(f(r.r));
        row.push_back(r.ci ? f(r.ci->low) : Cell::absent());
        row.push_back(r.ci ? f(r.ci->high) : Cell::absent());
        row.push_back(stats::to_string(r.verdict));
    } else {
        for (int i = 0; i < 6; ++i) row.push_back(Cell::absent());
    }
    row.push_back(e.note);
    return row;
}

const std::vector<std::string> kEffectColumns = {"n1", "n2", "U", "p", "r", "ci_low", "ci_high", "verdict", "note"};

Maybe r_of(const EffectCell& e) { return e.result ? Maybe(e.result->r) : std::nullopt; }

struct GroupMetrics {
    std::vector<double> count, ratio, intensity, j3;
};

GroupMetrics gather(const std::vector<AlignedProblem>& problems, const stability::PartitionResult& part,
                    stability::Category cat, std::optional<stability::LuckySubtype> sub = std::nullopt) {
    GroupMetrics g;
    for (std::size_t i = 0; i < problems.size(); ++i) {
        const auto& label = part.labels[i];
        if (label.category != cat) continue;
        if (sub && label.lucky_subtype != sub) continue;
        const ProblemMetrics m = problem_metrics(problems[i]);
        g.count.push_back(m.count);
        g.ratio.push_back(m.ratio);
        if (m.intensity) g.intensity.push_back(*m.intensity);
        if (label.j3) g.j3.push_back(*label.j3);
    }
    return g;
}

std::vector<stability::RunTriple> triples_of(const std::vector<AlignedProblem>& problems) {
    std::vector<stability::RunTriple> out;
    for (const auto& p : problems) out.push_back(p.triple);
    return out;
}

// Salts keep each comparison's bootstrap stream fixed across subcommands.
std::uint64_t salt_for(std::size_t model, std::size_t comparison, std::size_t metric) {
    return (static_cast<std::uint64_t>(model) << 16) | (comparison << 8) | metric;
}

struct GenuineVsLucky {
    std::array<EffectCell, 3> cells;  // count, ratio, intensity
};

GenuineVsLucky genuine_vs_lucky(const std::vector<AlignedProblem>& problems, const stability::PartitionResult& part,
                                const PipelineConfig& c, std::size_t model) {
    const auto g = gather(problems, part, stability::Category::genuine);
    const auto l = gather(problems, part, stability::Category::lucky);
    return {{compare(g.count, l.count, c, c.rq4_family, salt_for(model, 0, 0)),
             compare(g.ratio, l.ratio, c, c.rq4_family, salt_for(model, 0, 1)),
             compare(g.intensity, l.intensity, c, c.rq4_family, salt_for(model, 0, 2))}};
}

const char* const kMetricNames[] = {"count", "ratio", "intensity"};

}  // namespace

void check_config(const PipelineConfig& c) {
    if (c.sigma_policy.mode == mi::BandwidthPolicy::Mode::fixed && !(c.sigma_policy.fixed_sigma > 0.0))
        throw ParameterError("sigma must be positive");
    if (!(c.tau > 0.0 && c.tau <= 1.0)) throw ParameterError("tau must lie in (0, 1]");
    if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw ParameterError("alpha must lie in (0, 1)");
    if (!std::isfinite(c.mi_high_threshold)) throw ParameterError("mi_high_threshold must be finite");
    if (c.top_k == 0) throw ParameterError("top_k must be >= 1");
    if (c.min_group_size == 0) throw ParameterError("min_group_size must be >= 1");
    if (c.rq2_family == 0 || c.rq3_family == 0 || c.rq4_family == 0)
        throw ParameterError("family sizes must be >= 1");
    if (!(c.base_alpha > 0.0 && c.base_alpha < 1.0)) throw ParameterError("base alpha must lie in (0, 1)");
    if (c.n_resamples == 0) throw ParameterError("n_resamples must be >= 1");
    if (c.sigma_grid.empty()) throw ParameterError("sigma grid is empty");
    for (double s : c.sigma_grid)
        if (!(s > 0.0)) throw ParameterError("sigma grid values must be positive");
    if (c.precision < 0 || c.precision > 17) throw ParameterError("precision must lie in [0, 17]");
}

ArchiveAnalysis analyze_archive(const archive::Archive& a, const mi::BandwidthPolicy& policy, bool with_deep,
                                double tau, double alpha) {
    const auto& h = a.header();
    const std::size_t n = a.size();
    std::vector<std::optional<ProblemAnalysis>> slots(n);
    std::vector<std::string> errors(n);

    parallel::for_each_index(n, [&](std::size_t i) {
        const auto& meta = a.meta(i);
        try {
            const auto payload = a.load(i);
            ProblemAnalysis p;
            p.problem_id = meta.problem_id;
            p.domain = meta.domain;
            p.correct = meta.gold_correct;
            p.token_strings = meta.token_strings;
            const MatrixView<float> states(payload.final_states, meta.num_tokens, h.subsample_dim);
            p.trace = mi::mi_trace(meta.problem_id, states, payload.gold_embedding, policy);
            p.peaks = peaks::detect_peaks(p.trace);
            p.stats = peaks::peak_statistics(p.peaks, p.trace);
            if (with_deep) p.deep = dtr::dtr_deep_set(dtr::js_matrix(h, meta, payload), tau, alpha);
            slots[i] = std::move(p);
        } catch (const Error& e) {
            errors[i] = e.what();
            if (errors[i].empty()) errors[i] = "error";
        }
    });

    ArchiveAnalysis out;
    out.model_name = h.model_name;
    out.seed = h.seed;
    for (std::size_t i = 0; i < n; ++i) {
        if (slots[i]) {
            out.problems.push_back(std::move(*slots[i]));
        } else {
            out.failures.push_back({a.meta(i).problem_id, errors[i]});
        }
    }
    return out;
}

std::vector<AlignedProblem> align_runs(const ModelRuns& model, std::vector<Failure>& failures) {
    if (model.runs.size() != 3) throw ParameterError("a model needs exactly three runs");
    std::array<std::unordered_map<std::string, const ProblemAnalysis*>, 3> index;
    std::array<std::unordered_set<std::string>, 3> failed;
    std::array<std::unordered_set<std::string>, 3> all_ids;
    for (std::size_t r = 0; r < 3; ++r) {
        for (const auto& p : model.runs[r].problems) {
            index[r].emplace(p.problem_id, &p);
            all_ids[r].insert(p.problem_id);
        }
        for (const auto& f : model.runs[r].failures) {
            failed[r].insert(f.problem_id);
            all_ids[r].insert(f.problem_id);
        }
    }
    std::set<std::string> missing;
    for (std::size_t r = 0; r < 3; ++r)
        for (const auto& id : all_ids[r])
            for (std::size_t s = 0; s < 3; ++s)
                if (!all_ids[s].count(id)) missing.insert(id);
    if (!missing.empty()) {
        std::string msg = model.label + ": problem ids not present in all three runs:";
        std::size_t shown = 0;
        for (const auto& id : missing) {
            if (shown++ == 20) {
                msg += " ...";
                break;
            }
            msg += " " + id;
        }
        throw AlignmentError(msg);
    }

    std::vector<AlignedProblem> out;
    std::set<std::string> reported;
    auto order_source = [&]() -> std::vector<std::string> {
        std::vector<std::string> ids;
        for (const auto& p : model.runs[0].problems) ids.push_back(p.problem_id);
        for (const auto& f : model.runs[0].failures) ids.push_back(f.problem_id);
        return ids;
    }();
    for (const auto& id : order_source) {
        bool ok = true;
        for (std::size_t r = 0; r < 3; ++r) ok = ok && index[r].count(id);
        if (!ok) {
            if (reported.insert(id).second)
                failures.push_back({id, model.label + ": analysis failed in at least one run"});
            continue;
        }
        AlignedProblem ap;
        ap.problem_id = id;
        ap.triple.problem_id = id;
        for (std::size_t r = 0; r < 3; ++r) {
            const ProblemAnalysis* p = index[r].at(id);
            ap.runs[r] = p;
            ap.triple.peak_sets[r] = p->peaks.indices;
            ap.triple.correct[r] = p->correct;
            ap.triple.token_counts[r] = p->peaks.trace_length;
        }
        ap.domain = ap.runs[0]->domain;
        out.push_back(std::move(ap));
    }
    return out;
}

ProblemMetrics problem_metrics(const AlignedProblem& p) {
    ProblemMetrics m;
    std::vector<double> intensities;
    for (const auto* run : p.runs) {
        m.count += static_cast<double>(run->stats.count);
        m.ratio += run->stats.ratio;
        if (run->stats.intensity) intensities.push_back(*run->stats.intensity);
    }
    m.count /= 3.0;
    m.ratio /= 3.0;
    if (!intensities.empty()) m.intensity = numeric::mean(intensities);
    return m;
}

Report run_rq1(const archive::Archive& a, const PipelineConfig& config) {
    check_config(config);
    const Fmt f{config.precision};
    const auto& markers = markers_of(config);
    const auto analysis = analyze_archive(a, config.sigma_policy, false);
    const std::string label = model_labels(std::span(&a, 1), 1).front();

    Report r;
    r.command = "rq1";
    auto& main = r.add_table("rq1", {"model", "domain", "N", "with_peaks", "WPR", "mean_peak_count", "mean_intensity",
                                     "MI_high_frac", "chain_opener", "opener_count"});
    auto& vocab_t = r.add_table("rq1_vocab", {"model", "domain", "rank", "token", "count", "category"});
    for (Domain d : domains_of(a)) {
        const auto probs = in_domain(analysis, d);
        const PeakSummary s = summarize_peaks(probs);
        std::size_t tokens = 0;
        std::size_t high = 0;
        std::map<std::string, std::size_t> openers;
        for (const auto* p : probs) {
            tokens += p->trace.values.size();
            for (double v : p->trace.values) high += v > config.mi_high_threshold;
            if (!p->token_strings.empty()) ++openers[p->token_strings.front()];
        }
        Maybe high_frac;
        if (tokens > 0) high_frac = static_cast<double>(high) / static_cast<double>(tokens);
        Cell opener = Cell::absent();
        Cell opener_n = Cell::absent();
        if (!openers.empty()) {
            const auto top = overlap::top_k(openers, 1).front();
            opener = top.first;
            opener_n = top.second;
        }
        main.add_row({label, to_string(d), s.n, s.with_peaks, f(s.wpr), f(s.mean_count), f(s.mean_intensity),
                      f(high_frac), opener, opener_n});
        const auto top = overlap::top_k(peak_token_frequency(probs), config.top_k);
        for (std::size_t i = 0; i < top.size(); ++i) {
            vocab_t.add_row({label, to_string(d), i + 1, top[i].first, top[i].second,
                             vocab::to_string(vocab::classify_token_vocab(top[i].first, markers))});
        }
    }
    add_failures(failures_table(r), label, analysis.failures);
    return r;
}

Report run_rq2(std::span<const archive::Archive> archives, const PipelineConfig& config) {
    check_config(config);
    if (archives.empty()) throw ParameterError("rq2 needs at least one archive");
    const Fmt f{config.precision};
    const auto labels = model_labels(archives, 1);
    std::vector<ArchiveAnalysis> analyses;
    for (const auto& a : archives)
        analyses.push_back(analyze_archive(a, config.sigma_policy, true, config.tau, config.alpha));

    Report r;
    r.command = "rq2";
    auto& main = r.add_table("rq2", {"model", "domain", "N", "with_peaks", "peaks", "deep", "both", "TPP", "PPP",
                                     "empty_deep_sets", "vocab_overlap"});
    struct Cellp {
        std::size_t both = 0, peaks = 0;
    };
    std::map<Domain, std::vector<std::pair<std::size_t, Cellp>>> by_domain;

    for (std::size_t m = 0; m < archives.size(); ++m) {
        for (Domain d : domains_of(archives[m])) {
            const auto probs = in_domain(analyses[m], d);
            std::vector<peaks::PeakSet> ps;
            std::vector<dtr::DeepSet> ds;
            std::size_t with_peaks = 0;
            for (const auto* p : probs) {
                ps.push_back(p->peaks);
                ds.push_back(*p->deep);
                with_peaks += !p->peaks.empty();
            }
            const auto rep = overlap::overlap_report(ps, ds);
            const auto pf = peak_token_frequency(probs);
            const auto df = deep_token_frequency(probs);
            Maybe vocab_overlap;
            if (!pf.empty() && !df.empty())
                vocab_overlap = overlap::vocab_overlap_topk(pf, df, static_cast<int>(config.top_k));
            main.add_row({labels[m], to_string(d), probs.size(), with_peaks, rep.pooled_peaks, rep.pooled_deep,
                          rep.pooled_both, f(rep.tpp), f(rep.ppp.mean), rep.ppp.empty_deep_set.size(),
                          f(vocab_overlap)});
            by_domain[d].push_back({m, {rep.pooled_both, rep.pooled_peaks}});
        }
    }

    auto& zt = r.add_table("rq2_ztest", {"domain", "model_a", "model_b", "both_a", "peaks_a", "both_b", "peaks_b",
                                         "z", "p", "verdict", "note"});
    auto& ct = r.add_table("rq2_chi2", {"domain", "models", "chi2", "dof", "p", "verdict", "note"});
    for (const auto& [d, cells] : by_domain) {
        if (cells.size() < 2) continue;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            for (std::size_t j = i + 1; j < cells.size(); ++j) {
                const auto& [ma, a] = cells[i];
                const auto& [mb, b] = cells[j];
                std::vector<Cell> row = {to_string(d), labels[ma], labels[mb], a.both, a.peaks, b.both, b.peaks};
                std::optional<stats::ZTest> z;
                std::string note;
                if (a.peaks == 0 || b.peaks == 0) {
                    note = "no peaks";
                } else {
                    z = stats::two_proportion_z(a.both, a.peaks, b.both, b.peaks);
                    if (!z) note = "pooled proportion is 0 or 1";
                }
                if (z) {
                    row.insert(row.end(), {f(z->z), f(z->p_value),
                                           stats::to_string(stats::bonferroni_verdict(z->p_value, config.rq2_family,
                                                                                       config.base_alpha))});
                } else {
                    row.insert(row.end(), {Cell::absent(), Cell::absent(), Cell::absent()});
                }
                row.push_back(note);
                zt.add_row(std::move(row));
            }
        }
        std::vector<std::vector<double>> table;
        std::string names;
        for (const auto& [m, c] : cells) {
            if (c.peaks == 0) continue;
            table.push_back({static_cast<double>(c.both), static_cast<double>(c.peaks - c.both)});
            names += (names.empty() ? "" : ",") + labels[m];
        }
        try {
            if (table.size() < 2) throw DegenerateError("fewer than two models with peaks");
            const auto chi = stats::chi_square_contingency(table);
            ct.add_row({to_string(d), names, f(chi.statistic), chi.dof, f(chi.p_value),
                        stats::to_string(stats::bonferroni_verdict(chi.p_value, config.rq2_family, config.base_alpha)),
                        ""});
        } catch (const DegenerateError& e) {
            ct.add_row({to_string(d), names, Cell::absent(), Cell::absent(), Cell::absent(), Cell::absent(),
                        std::string(e.what())});
        }
    }
    auto& ft = failures_table(r);
    for (std::size_t m = 0; m < analyses.size(); ++m) add_failures(ft, labels[m], analyses[m].failures);
    return r;
}

Report run_rq3(std::span<const archive::Archive> archives, const PipelineConfig& config) {
    check_config(config);
    const Fmt f{config.precision};
    const auto models = analyze_models(archives, config, false);
    std::vector<Failure> failures;
    std::vector<std::vector<AlignedProblem>> aligned;
    for (const auto& m : models) aligned.push_back(align_runs(m, failures));

    Report r;
    r.command = "rq3";
    auto& main = r.add_table("rq3", {"model", "N", "with_peaks", "J3", "NPR", "CCR"});
    auto& cs = r.add_table("rq3_correctness_stability", {"model", "n_c", "n_nc", "U", "p", "r", "verdict", "note"});

    struct Counts {
        std::size_t n = 0, no_peak = 0, all_correct = 0;
        std::vector<double> j3;
    };
    std::vector<Counts> counts;
    for (std::size_t m = 0; m < models.size(); ++m) {
        const auto triples = triples_of(aligned[m]);
        Counts c;
        c.n = triples.size();
        std::vector<double> j3_correct;
        std::vector<double> j3_other;
        for (const auto& t : triples) {
            c.no_peak += t.all_peak_free();
            c.all_correct += t.correct_count() == 3;
            const Maybe j = stability::jaccard3(t);
            if (!j) continue;
            c.j3.push_back(*j);
            (t.correct_count() == 3 ? j3_correct : j3_other).push_back(*j);
        }
        Maybe npr, ccr;
        if (!triples.empty()) {
            npr = stability::no_peak_rate(triples);
            ccr = stability::consistent_correctness_rate(triples);
        }
        main.add_row({models[m].label, c.n, c.j3.size(), f(stability::mean_j3_with_peaks(triples)), f(npr), f(ccr)});

        std::vector<Cell> row = {models[m].label, j3_correct.size(), j3_other.size()};
        if (j3_correct.empty() || j3_other.empty()) {
            row.insert(row.end(), {Cell::absent(), Cell::absent(), Cell::absent(), Cell::absent(), "empty group"});
        } else {
            auto o = effect_options(config, config.rq3_family, salt_for(m, 9, 0));
            o.bootstrap = false;
            const auto e = stats::effect_size(j3_correct, j3_other, o);
            row.insert(row.end(), {f(e.u), f(e.p_value), f(e.r), stats::to_string(e.verdict), ""});
        }
        cs.add_row(std::move(row));
        counts.push_back(std::move(c));
    }

    auto& tests = r.add_table("rq3_tests", {"family", "test", "model_a", "model_b", "statistic", "r", "p", "verdict",
                                            "note"});
    auto verdict = [&](double p) {
        return stats::to_string(stats::bonferroni_verdict(p, config.rq3_family, config.base_alpha));
    };
    if (models.size() >= 2) {
        auto proportion_family = [&](const char* name, auto successes) {
            std::vector<std::vector<double>> table;
            for (const auto& c : counts) {
                const double x = static_cast<double>(successes(c));
                table.push_back({x, static_cast<double>(c.n) - x});
            }
            try {
                const auto chi = stats::chi_square_contingency(table);
                tests.add_row({name, "chi2", "all", "", f(chi.statistic), Cell::absent(), f(chi.p_value),
                               verdict(chi.p_value), ""});
            } catch (const Error& e) {
                tests.add_row({name, "chi2", "all", "", Cell::absent(), Cell::absent(), Cell::absent(),
                               Cell::absent(), std::string(e.what())});
            }
            for (std::size_t i = 0; i < counts.size(); ++i) {
                for (std::size_t j = i + 1; j < counts.size(); ++j) {
                    std::optional<stats::ZTest> z;
                    if (counts[i].n > 0 && counts[j].n > 0)
                        z = stats::two_proportion_z(successes(counts[i]), counts[i].n, successes(counts[j]),
                                                    counts[j].n);
                    if (z) {
                        tests.add_row({name, "z", models[i].label, models[j].label, f(z->z), Cell::absent(),
                                       f(z->p_value), verdict(z->p_value), ""});
                    } else {
                        tests.add_row({name, "z", models[i].label, models[j].label, Cell::absent(), Cell::absent(),
                                       Cell::absent(), Cell::absent(), "degenerate proportions"});
                    }
                }
            }
        };
        proportion_family("NPR", [](const Counts& c) { return c.no_peak; });
        proportion_family("CCR", [](const Counts& c) { return c.all_correct; });
        for (std::size_t i = 0; i < counts.size(); ++i) {
            for (std::size_t j = i + 1; j < counts.size(); ++j) {
                if (counts[i].j3.empty() || counts[j].j3.empty()) {
                    tests.add_row({"J3", "mwu", models[i].label, models[j].label, Cell::absent(), Cell::absent(),
                                   Cell::absent(), Cell::absent(), "empty group"});
                    continue;
                }
                auto o = effect_options(config, config.rq3_family, salt_for(i, 10, j));
                o.bootstrap = false;
                const auto e = stats::effect_size(counts[i].j3, counts[j].j3, o);
                tests.add_row({"J3", "mwu", models[i].label, models[j].label, f(e.u), f(e.r), f(e.p_value),
                               stats::to_string(e.verdict), ""});
            }
        }
    }

    auto& ft = failures_table(r);
    for (const auto& m : models)
        for (std::size_t k = 0; k < 3; ++k) add_failures(ft, run_label(m, k), m.runs[k].failures);
    add_failures(ft, "aligned", failures);
    return r;
}

Report run_rq4(std::span<const archive::Archive> archives, const PipelineConfig& config) {
    check_config(config);
    const Fmt f{config.precision};
    const auto models = analyze_models(archives, config, false);
    const auto threshold = stability::threshold_for(config.tau_j);
    const std::string setting(stability::to_string(config.tau_j));
    std::vector<Failure> failures;

    Report r;
    r.command = "rq4";
    auto& summary = r.add_table("rq4", {"model", "setting", "N", "Genuine", "Lucky", "Silent", "Lucky_unstable",
                                        "Lucky_no_peaks", std::string(kTriplet)});
    std::vector<std::string> ecols = {"model", "setting", "comparison", "metric"};
    ecols.insert(ecols.end(), kEffectColumns.begin(), kEffectColumns.end());
    auto& effects = r.add_table("rq4_effects", ecols);

    for (std::size_t m = 0; m < models.size(); ++m) {
        const auto problems = align_runs(models[m], failures);
        const auto triples = triples_of(problems);
        const auto part = stability::partition(triples, threshold);
        const auto gl = genuine_vs_lucky(problems, part, config, m);
        summary.add_row({models[m].label, setting, triples.size(), part.genuine, part.lucky, part.silent,
                         part.lucky_unstable, part.lucky_no_peaks,
                         report::triplet(r_of(gl.cells[0]), r_of(gl.cells[1]), r_of(gl.cells[2]))});

        auto emit = [&](const char* comparison, const char* metric, const EffectCell& e) {
            std::vector<Cell> row = {models[m].label, setting, comparison, metric};
            auto rest = effect_cells(e, f);
            row.insert(row.end(), rest.begin(), rest.end());
            effects.add_row(std::move(row));
        };
        for (std::size_t k = 0; k < 3; ++k) emit("Genuine-vs-Lucky", kMetricNames[k], gl.cells[k]);

        const auto g = gather(problems, part, stability::Category::genuine);
        const auto s = gather(problems, part, stability::Category::silent);
        emit("Genuine-vs-Silent", "count", compare(g.count, s.count, config, config.rq4_family, salt_for(m, 1, 0)));
        emit("Genuine-vs-Silent", "J3", compare(g.j3, s.j3, config, config.rq4_family, salt_for(m, 1, 3)));

        const auto u = gather(problems, part, stability::Category::lucky, stability::LuckySubtype::unstable);
        emit("Genuine-vs-Lucky_unstable", "count",
             compare(g.count, u.count, config, config.rq4_family, salt_for(m, 2, 0)));
        emit("Genuine-vs-Lucky_unstable", "ratio",
             compare(g.ratio, u.ratio, config, config.rq4_family, salt_for(m, 2, 1)));
        emit("Genuine-vs-Lucky_unstable", "intensity",
             compare(g.intensity, u.intensity, config, config.rq4_family, salt_for(m, 2, 2)));
    }

    auto& ft = failures_table(r);
    for (const auto& m : models)
        for (std::size_t k = 0; k < 3; ++k) add_failures(ft, run_label(m, k), m.runs[k].failures);
    add_failures(ft, "aligned", failures);
    return r;
}

Report ablate_sigma(std::span<const archive::Archive> archives, const PipelineConfig& config) {
    check_config(config);
    if (archives.empty()) throw ParameterError("ablate-sigma needs at least one archive");
    const Fmt f{config.precision};
    const auto& markers = markers_of(config);
    const auto labels = model_labels(archives, 1);

    Report r;
    r.command = "ablate-sigma";
    auto& main = r.add_table("ablate_sigma", {"model", "sigma", "domain", "N", "with_peaks", "WPR",
                                              "mean_peak_count", "mean_intensity", "top_categories"});
    auto& vt = r.add_table("ablate_sigma_vocab", {"model", "sigma", "domain", "rank", "token", "count", "category"});
    auto& ft = failures_table(r);
    constexpr std::size_t kTopVocab = 3;
    for (std::size_t m = 0; m < archives.size(); ++m) {
        const auto domains = domains_of(archives[m]);
        for (double sigma : config.sigma_grid) {
            const auto analysis = analyze_archive(archives[m], mi::BandwidthPolicy::fixed(sigma), false);
            const Cell sigma_cell(sigma, 2);
            for (Domain d : domains) {
                const auto probs = in_domain(analysis, d);
                const PeakSummary s = summarize_peaks(probs);
                const auto top = overlap::top_k(peak_token_frequency(probs), kTopVocab);
                main.add_row({labels[m], sigma_cell, to_string(d), s.n, s.with_peaks, f(s.wpr), f(s.mean_count),
                              f(s.mean_intensity), top.empty() ? Cell::absent() : Cell(join_categories(top, markers))});
                for (std::size_t i = 0; i < top.size(); ++i) {
                    vt.add_row({labels[m], sigma_cell, to_string(d), i + 1, top[i].first, top[i].second,
                                vocab::to_string(vocab::classify_token_vocab(top[i].first, markers))});
                }
            }
            for (const auto& fl : analysis.failures)
                ft.add_row({labels[m] + "@sigma=" + report::format_cell(sigma_cell), fl.problem_id, fl.message});
        }
    }
    return r;
}

Report ablate_tau(std::span<const archive::Archive> archives, const PipelineConfig& config) {
    check_config(config);
    const Fmt f{config.precision};
    const auto models = analyze_models(archives, config, false);
    std::vector<Failure> failures;

    Report r;
    r.command = "ablate-tau";
    auto& main = r.add_table("ablate_tau", {"setting", "model", "Genuine", "Lucky", "Silent", std::string(kTriplet)});
    std::vector<std::string> ecols = {"setting", "model", "metric"};
    ecols.insert(ecols.end(), kEffectColumns.begin(), kEffectColumns.end());
    auto& effects = r.add_table("ablate_tau_effects", ecols);
    auto& rho_t = r.add_table("ablate_tau_rho", {"model", "Genuine_baseline", "Genuine_stricter", "rho"});

    std::vector<std::vector<AlignedProblem>> aligned;
    for (const auto& m : models) aligned.push_back(align_runs(m, failures));

    for (auto preset : stability::kAllPresets) {
        const std::string setting(stability::to_string(preset));
        for (std::size_t m = 0; m < models.size(); ++m) {
            const auto part = stability::partition(triples_of(aligned[m]), stability::threshold_for(preset));
            const auto gl = genuine_vs_lucky(aligned[m], part, config, m);
            main.add_row({setting, models[m].label, part.genuine, part.lucky, part.silent,
                          report::triplet(r_of(gl.cells[0]), r_of(gl.cells[1]), r_of(gl.cells[2]))});
            for (std::size_t k = 0; k < 3; ++k) {
                std::vector<Cell> row = {setting, models[m].label, kMetricNames[k]};
                auto rest = effect_cells(gl.cells[k], f);
                row.insert(row.end(), rest.begin(), rest.end());
                effects.add_row(std::move(row));
            }
        }
    }
    for (std::size_t m = 0; m < models.size(); ++m) {
        const auto triples = triples_of(aligned[m]);
        const auto base = stability::partition(triples, stability::StabilityThreshold::baseline()).genuine;
        const auto strict = stability::partition(triples, stability::StabilityThreshold::stricter()).genuine;
        rho_t.add_row({models[m].label, base, strict, f(stability::reclassification_rate(base, strict))});
    }

    auto& ft = failures_table(r);
    for (const auto& m : models)
        for (std::size_t k = 0; k < 3; ++k) add_failures(ft, run_label(m, k), m.runs[k].failures);
    add_failures(ft, "aligned", failures);
    return r;
}

Report validate(std::span<const archive::Archive> archives, std::span<const std::string> names, bool& clean) {
    if (names.size() != archives.size()) throw ParameterError("validate: one name per archive");
    Report r;
    r.command = "validate";
    auto& summary = r.add_table("validate", {"archive", "model", "mode", "problems", "violations"});
    auto& vt = r.add_table("violations", {"archive", "problem_id", "tensor", "message"});
    clean = true;
    for (std::size_t i = 0; i < archives.size(); ++i) {
        const auto violations = archive::validate_archive(archives[i]);
        clean = clean && violations.empty();
        summary.add_row({names[i], archives[i].header().model_name, archive::to_string(archives[i].header().mode),
                         archives[i].size(), violations.size()});
        for (const auto& v : violations) vt.add_row({names[i], v.problem_id, v.tensor, v.message});
    }
    return r;
}

}  // namespace iar::pipeline
