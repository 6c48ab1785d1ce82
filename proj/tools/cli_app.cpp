#include "cli_app.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

#include "commands.hpp"

namespace gann::cli {

namespace {

struct Flags {
    std::string dataset, queries, truth, index, out, dump_results, config;
    std::size_t k = 100;
    std::size_t l = 200;
    unsigned threads = 1;
    double ratio = 0.8;
    unsigned m_start = 1;
    unsigned m_cap = 0;
    unsigned stage_interval = 1;
    unsigned warmup_steps = 1;
    std::string mode = "speedann";
    unsigned reps = 1;
    std::uint64_t seed = 1;
    double top_fraction = kDefaultTopFraction;
    std::string grouping = "none";
    bool pin = false;
    std::size_t warmup_queries = kDefaultWarmupQueries;
};

unsigned threads_from_env(unsigned fallback) {
    const char* env = std::getenv("GANN_THREADS");
    if (env == nullptr || *env == '\0') return fallback;
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (*end != '\0' || v == 0) throw UsageError(std::string("GANN_THREADS: expected a positive integer, got ") + env);
    return static_cast<unsigned>(v);
}

RunConfig run_config_from(const Flags& f) {
    RunConfig cfg;
    cfg.mode = parse_mode(f.mode);
    cfg.grouping = parse_grouping(f.grouping);
    cfg.params.k = f.k;
    cfg.params.l = f.l;
    cfg.params.threads = threads_from_env(f.threads);
    cfg.params.ratio = f.ratio;
    cfg.params.m_start = f.m_start;
    cfg.params.m_cap = f.m_cap;
    cfg.params.stage_interval = f.stage_interval;
    cfg.params.warmup_steps = f.warmup_steps;
    cfg.dataset = f.dataset;
    cfg.queries = f.queries;
    cfg.truth = f.truth;
    cfg.index = f.index;
    cfg.out = f.out;
    cfg.dump_results = f.dump_results;
    cfg.reps = f.reps;
    cfg.top_fraction = f.top_fraction;
    cfg.pin = f.pin;
    cfg.warmup_queries = f.warmup_queries;
    return cfg;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Graph-based approximate nearest neighbour search toolkit", "gann"};
    app.require_subcommand(1);
    app.fallthrough();

    Flags f;
    app.set_config("--config", "", "Flat key=value file; command-line flags take precedence");
    app.add_option("--dataset", f.dataset, "Base vectors (fvecs)");
    app.add_option("--queries", f.queries, "Query vectors (fvecs)");
    app.add_option("--truth", f.truth, "Ground truth ids (ivecs)");
    app.add_option("--index", f.index, "Graph index file");
    app.add_option("--out", f.out, "Output file (groundtruth and build fall back to --truth / --index)");
    app.add_option("--dump-results", f.dump_results, "bench: write result ids (ivecs)");
    app.add_option("--K", f.k, "Result count")->capture_default_str();
    app.add_option("--L", f.l, "Candidate queue capacity")->capture_default_str();
    app.add_option("--T", f.threads, "Worker count (GANN_THREADS overrides)")->capture_default_str();
    app.add_option("--R", f.ratio, "Update-position ratio for adaptive sync")->capture_default_str();
    app.add_option("--M-start", f.m_start, "Initial expansion width")->capture_default_str();
    app.add_option("--M-cap", f.m_cap, "Maximum expansion width (0 = T); fixed width for topm")->capture_default_str();
    app.add_option("--stage-interval", f.stage_interval, "Global steps between width doublings")
        ->capture_default_str();
    app.add_option("--warmup-steps", f.warmup_steps, "Sequential expansions before the parallel loop")
        ->capture_default_str();
    app.add_option("--mode", f.mode, "bfis, topm, speedann or speedann-nosync")->capture_default_str();
    app.add_option("--reps", f.reps, "Passes over the query set")->capture_default_str();
    app.add_option("--warmup-queries", f.warmup_queries, "Searches excluded from latency statistics")
        ->capture_default_str();
    app.add_option("--seed", f.seed, "Random seed")->capture_default_str();
    app.add_option("--top-fraction", f.top_fraction, "Share of vertices in the flattened level")
        ->capture_default_str();
    app.add_option("--grouping", f.grouping, "none, degree or frequency")->capture_default_str();
    app.add_flag("--pin", f.pin, "Pin workers to CPUs (best effort)");

    GenConfig gen;
    auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic base set and query set");
    gen_cmd->add_option("--n", gen.n, "Base vectors")->capture_default_str();
    gen_cmd->add_option("--d", gen.d, "Dimension")->capture_default_str();
    gen_cmd->add_option("--dist", gen.distribution, "clusters or uniform")->capture_default_str();
    gen_cmd->add_option("--clusters", gen.clusters, "Cluster count")->capture_default_str();
    gen_cmd->add_option("--spread", gen.spread, "Cluster standard deviation")->capture_default_str();
    gen_cmd->add_option("--num-queries", gen.query_count, "Query count (0 = max(10, n/100))")
        ->capture_default_str();

    auto* gt_cmd = app.add_subcommand("groundtruth", "Exact K nearest neighbours by linear scan");

    BuildConfig build;
    auto* build_cmd = app.add_subcommand("build", "Build a kNN graph index");
    build_cmd->add_option("--degree", build.degree, "Out-degree")->capture_default_str();
    build_cmd->add_option("--threads", build.threads, "Build threads (0 = all CPUs)")->capture_default_str();

    auto* bench_cmd = app.add_subcommand("bench", "Run every query under one configuration");

    std::string matrix;
    auto* sweep_cmd = app.add_subcommand("sweep", "Cartesian sweep over L/T/R/M values");
    sweep_cmd->add_option("--matrix", matrix, "Lines of key=v1,v2,... for keys L, T, R, M, mode")->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (gen_cmd->parsed()) {
            gen.seed = f.seed;
            gen.dataset = f.dataset;
            gen.queries = f.queries;
            cmd_gen(gen);
        } else if (gt_cmd->parsed()) {
            GroundTruthConfig cfg;
            cfg.dataset = f.dataset;
            cfg.queries = f.queries;
            cfg.out = f.out.empty() ? f.truth : f.out;
            cfg.k = f.k;
            cmd_groundtruth(cfg);
        } else if (build_cmd->parsed()) {
            build.dataset = f.dataset;
            build.out = f.out.empty() ? f.index : f.out;
            build.seed = f.seed;
            build.grouping = parse_grouping(f.grouping);
            build.top_fraction = f.top_fraction;
            build.query_log = f.queries;
            build.log_l = f.l;
            cmd_build(build);
        } else if (bench_cmd->parsed()) {
            cmd_bench(run_config_from(f), out, err);
        } else if (sweep_cmd->parsed()) {
            cmd_sweep(run_config_from(f), load_sweep_matrix(matrix), out, err);
        }
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\nRun with --help for usage.\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

}  // namespace gann::cli
