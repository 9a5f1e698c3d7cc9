// iar: command-line front end for the analysis pipeline.
//
// Exit codes: 0 success, 1 input error (bad flags, unreadable or malformed
// archives, failed validation), 2 internal error.

#include "iar/parallel.hpp"
#include "iar/pipeline.hpp"
#include "iar/synth.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

using iar::pipeline::PipelineConfig;

struct SharedOptions {
    std::optional<double> sigma;
    std::string sigma_mode = "fixed";
    double tau = iar::dtr::kDefaultTau;
    double alpha = iar::dtr::kDefaultAlpha;
    std::string tau_j = "baseline";
    std::string format = "tsv";
    std::uint64_t seed = 0;
    std::string out;
    int threads = 0;
    std::size_t resamples = 1000;
    std::size_t min_group = 6;
    int precision = 4;
    double mi_high = 0.9;
    std::size_t top_k = 20;
    std::vector<std::string> markers;
    std::vector<double> grid;
};

void add_shared(CLI::App* cmd, SharedOptions& o) {
    cmd->add_option("--sigma", o.sigma, "Fixed RBF kernel bandwidth (default 50)");
    cmd->add_option("--sigma-mode", o.sigma_mode, "Bandwidth policy")->check(CLI::IsMember({"fixed", "median"}));
    cmd->add_option("--tau", o.tau, "JSD settling threshold");
    cmd->add_option("--alpha", o.alpha, "Depth fraction for the DTR-deep cutoff");
    cmd->add_option("--tau-j", o.tau_j, "Jaccard stability threshold preset")
        ->check(CLI::IsMember({"baseline", "strict", "stricter"}));
    cmd->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"tsv", "json"}));
    cmd->add_option("--seed", o.seed, "Bootstrap seed");
    cmd->add_option("--out", o.out, "Write the report to this file instead of stdout");
    cmd->add_option("--threads", o.threads, "OpenMP thread count (0: runtime default)")->check(CLI::NonNegativeNumber);
    cmd->add_option("--resamples", o.resamples, "Bootstrap resamples")->check(CLI::PositiveNumber);
    cmd->add_option("--min-group", o.min_group, "Minimum group size for effect sizes")->check(CLI::PositiveNumber);
    cmd->add_option("--precision", o.precision, "Digits after the decimal point")->check(CLI::Range(0, 17));
    cmd->add_option("--mi-high", o.mi_high, "MI level counted by the high-MI fraction");
    cmd->add_option("--top-k", o.top_k, "Vocabulary list length")->check(CLI::PositiveNumber);
    cmd->add_option("--markers", o.markers, "Reasoning-marker lexicon override")->delimiter(',');
}

PipelineConfig make_config(const SharedOptions& o) {
    PipelineConfig c;
    if (o.sigma_mode == "median") {
        if (o.sigma) throw iar::ParameterError("--sigma cannot be combined with --sigma-mode median");
        c.sigma_policy = iar::mi::BandwidthPolicy::median();
    } else {
        c.sigma_policy = iar::mi::BandwidthPolicy::fixed(o.sigma.value_or(50.0));
    }
    c.tau = o.tau;
    c.alpha = o.alpha;
    c.tau_j = iar::stability::preset_from_string(o.tau_j);
    c.format = iar::report::format_from_string(o.format);
    c.seed = o.seed;
    c.n_resamples = o.resamples;
    c.min_group_size = o.min_group;
    c.precision = o.precision;
    c.mi_high_threshold = o.mi_high;
    c.top_k = o.top_k;
    c.reasoning_markers.insert(o.markers.begin(), o.markers.end());
    if (!o.grid.empty()) c.sigma_grid = o.grid;
    iar::pipeline::check_config(c);
    if (o.threads > 0) iar::parallel::set_threads(o.threads);
    return c;
}

std::vector<iar::archive::Archive> open_all(const std::vector<std::string>& paths) {
    std::vector<iar::archive::Archive> out;
    for (const auto& p : paths) {
        try {
            out.push_back(iar::archive::Archive::open(p));
        } catch (const iar::Error& e) {
            throw iar::FormatError(p + ": " + e.what());
        }
    }
    return out;
}

void emit(const std::string& text, const std::string& out) {
    if (out.empty()) {
        std::cout << text;
        std::cout.flush();
        return;
    }
    std::ofstream f(out, std::ios::binary);
    if (!f) throw iar::Error("cannot open " + out + " for writing");
    f << text;
    if (!f) throw iar::Error("failed writing " + out);
}

struct SynthOptions {
    std::size_t problems = 200;
    std::size_t runs = 3;
    std::uint64_t seed = 0;
    bool unplanted = false;
    bool all_domains = false;
    std::string model = "synthetic";
    std::size_t layers = 12;
    std::size_t tokens_min = 56;
    std::size_t tokens_max = 72;
    std::string spec;
    std::string out;
    double state_scale = 50.0;
    double coupling = 0.95;
    std::string background = "shifted";
};

int run(int argc, char** argv) {
    CLI::App app{"Hidden-state archive analysis: MI peaks, settling depth, stability and quality statistics"};
    app.require_subcommand(1);

    SharedOptions shared;
    std::vector<std::string> paths;
    std::string command;
    auto add_cmd = [&](const char* name, const char* help, const char* arch_help) {
        auto* cmd = app.add_subcommand(name, help);
        cmd->add_option("archives", paths, arch_help)->required()->check(CLI::ExistingFile);
        add_shared(cmd, shared);
        cmd->callback([&command, name] { command = name; });
        return cmd;
    };
    add_cmd("validate", "List value-level invariant violations", "Archives to check");
    add_cmd("rq1", "Peak detectability per domain", "One archive");
    add_cmd("rq2", "Peak / DTR-deep containment", "Archives, one per model");
    add_cmd("rq3", "Multi-seed stability", "Archives, three runs per model");
    add_cmd("rq4", "Reasoning-quality partition and effect sizes", "Archives, three runs per model");
    auto* sig = add_cmd("ablate-sigma", "Kernel bandwidth sweep", "Archives, one per model");
    sig->add_option("--grid", shared.grid, "Bandwidth grid")->delimiter(',');
    add_cmd("ablate-tau", "Stability threshold sweep", "Archives, three runs per model");

    SynthOptions so;
    auto* synth = app.add_subcommand("synth", "Generate synthetic raw-mode archives with planted structure");
    synth->add_option("--out", so.out, "Output prefix")->required();
    synth->add_option("--problems", so.problems, "Number of problems")->check(CLI::PositiveNumber);
    synth->add_option("--runs", so.runs, "Runs per problem (1: greedy)")->check(CLI::Range(1, 3));
    synth->add_option("--seed", so.seed, "Generator seed");
    synth->add_flag("--unplanted", so.unplanted, "No planted peaks or categories");
    synth->add_flag("--all-domains", so.all_domains, "Cycle problems through the four domains");
    synth->add_option("--model-name", so.model, "Model name written to the header");
    synth->add_option("--layers", so.layers, "Number of layers")->check(CLI::Range(2, 1024));
    synth->add_option("--tokens-min", so.tokens_min, "Shortest trace")->check(CLI::PositiveNumber);
    synth->add_option("--tokens-max", so.tokens_max, "Longest trace")->check(CLI::PositiveNumber);
    synth->add_option("--state-scale", so.state_scale, "Hidden-state coordinate scale");
    synth->add_option("--coupling", so.coupling, "Peak-state correlation with the gold embedding");
    synth->add_option("--background", so.background, "Non-peak state model")
        ->check(CLI::IsMember({"shifted", "gaussian"}));
    synth->add_option("--spec", so.spec, "Generate from a ground-truth JSON spec instead")->check(CLI::ExistingFile);
    synth->callback([&command] { command = "synth"; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    if (command == "synth") {
        iar::synth::SynthSpec spec;
        if (!so.spec.empty()) {
            std::ifstream in(so.spec);
            nlohmann::json j;
            try {
                in >> j;
            } catch (const nlohmann::json::exception& e) {
                throw iar::FormatError(so.spec + ": " + e.what());
            }
            spec = iar::synth::spec_from_json(j);
        } else {
            iar::synth::CohortOptions o;
            o.num_problems = so.problems;
            o.runs = so.runs;
            o.seed = so.seed;
            o.planted = !so.unplanted;
            o.all_domains = so.all_domains;
            o.model_name = so.model;
            o.tokens_min = so.tokens_min;
            o.tokens_max = so.tokens_max;
            o.background = iar::synth::background_from_string(so.background);
            spec = iar::synth::make_cohort_spec(o);
            spec.num_layers = so.layers;
            spec.state_scale = so.state_scale;
            spec.peak_coupling = so.coupling;
        }
        for (const auto& p : iar::synth::write_synth(spec, so.out)) std::cout << p.string() << '\n';
        return 0;
    }

    const PipelineConfig config = make_config(shared);
    const auto archives = open_all(paths);
    iar::report::Report report;
    int code = 0;
    if (command == "validate") {
        bool clean = true;
        report = iar::pipeline::validate(archives, paths, clean);
        code = clean ? 0 : 1;
    } else if (command == "rq1") {
        if (archives.size() != 1) throw iar::ParameterError("rq1 takes exactly one archive");
        report = iar::pipeline::run_rq1(archives.front(), config);
    } else if (command == "rq2") {
        report = iar::pipeline::run_rq2(archives, config);
    } else if (command == "rq3") {
        report = iar::pipeline::run_rq3(archives, config);
    } else if (command == "rq4") {
        report = iar::pipeline::run_rq4(archives, config);
    } else if (command == "ablate-sigma") {
        report = iar::pipeline::ablate_sigma(archives, config);
    } else if (command == "ablate-tau") {
        report = iar::pipeline::ablate_tau(archives, config);
    } else {
        throw std::logic_error("unhandled subcommand " + command);
    }
    emit(iar::report::render(report, config.format), shared.out);
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const iar::Error& e) {
        std::cerr << "iar: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "iar: internal error: " << e.what() << '\n';
        return 2;
    }
}
