#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "gann/worker_pool.hpp"

namespace gann::cli {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

void require_file(const fs::path& p, const char* flag) {
    if (p.empty()) throw UsageError(std::string(flag) + " is required");
    if (!fs::exists(p)) throw UsageError(std::string(flag) + ": no such file " + p.string());
}

void require_out(const fs::path& p, const char* flag) {
    if (p.empty()) throw UsageError(std::string(flag) + " is required");
}

// topm runs with a fixed width: M_cap if given, else T.
unsigned topm_width(const SearchParams& p) { return p.m_cap != 0 ? p.m_cap : p.threads; }

SearchParams validated_params(const RunConfig& cfg) {
    SearchParams p = cfg.params;
    if (cfg.mode == Mode::kTopm) {
        if (topm_width(p) == 0) throw UsageError("topm width must be >= 1");
        p.m_cap = 0;
        p.m_start = 1;
    }
    if (cfg.mode == Mode::kSpeedannNoSync) p.sync = SyncMode::kNone;
    if (cfg.mode == Mode::kSpeedann) p.sync = SyncMode::kAdaptive;
    try {
        p.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    return p;
}

std::string format_number(double v) {
    std::ostringstream s;
    s << v;
    return s.str();
}

}  // namespace

Mode parse_mode(const std::string& s) {
    if (s == "bfis") return Mode::kBfis;
    if (s == "topm") return Mode::kTopm;
    if (s == "speedann") return Mode::kSpeedann;
    if (s == "speedann-nosync") return Mode::kSpeedannNoSync;
    throw UsageError("unknown mode '" + s + "' (expected bfis, topm, speedann, speedann-nosync)");
}

std::string mode_name(Mode m) {
    switch (m) {
        case Mode::kBfis: return "bfis";
        case Mode::kTopm: return "topm";
        case Mode::kSpeedann: return "speedann";
        case Mode::kSpeedannNoSync: return "speedann-nosync";
    }
    return "?";
}

Grouping parse_grouping(const std::string& s) {
    if (s == "none") return Grouping::kNone;
    if (s == "degree") return Grouping::kDegree;
    if (s == "frequency") return Grouping::kFrequency;
    throw UsageError("unknown grouping '" + s + "' (expected none, degree, frequency)");
}

void cmd_gen(const GenConfig& cfg) {
    require_out(cfg.dataset, "--dataset");
    require_out(cfg.queries, "--queries");
    if (cfg.n == 0 || cfg.d == 0) throw UsageError("--n and --d must be positive");
    SyntheticSpec spec;
    spec.n = cfg.n;
    spec.d = cfg.d;
    spec.seed = cfg.seed;
    spec.clusters = cfg.clusters;
    spec.cluster_spread = cfg.spread;
    if (cfg.distribution == "clusters") {
        spec.distribution = Distribution::kGaussianClusters;
    } else if (cfg.distribution == "uniform") {
        spec.distribution = Distribution::kUniformCube;
    } else {
        throw UsageError("unknown distribution '" + cfg.distribution + "' (expected clusters, uniform)");
    }
    write_fvecs(gen_synthetic(spec, 0), cfg.dataset);
    spec.n = cfg.query_count != 0 ? cfg.query_count : std::max<std::size_t>(10, cfg.n / 100);
    write_fvecs(gen_synthetic(spec, 1), cfg.queries);
}

void cmd_groundtruth(const GroundTruthConfig& cfg) {
    require_file(cfg.dataset, "--dataset");
    require_file(cfg.queries, "--queries");
    require_out(cfg.out, "--out");
    const Dataset ds = read_fvecs(cfg.dataset);
    const QuerySet qs = read_fvecs(cfg.queries);
    if (cfg.k == 0 || cfg.k > ds.size()) {
        throw UsageError("--K must be in [1, " + std::to_string(ds.size()) + "]");
    }
    write_ivecs(ground_truth_to_ivecs(brute_force_knn(ds, qs, cfg.k, cfg.threads)), cfg.out);
}

void cmd_build(const BuildConfig& cfg) {
    require_file(cfg.dataset, "--dataset");
    require_out(cfg.out, "--out");
    auto ds = std::make_shared<const Dataset>(read_fvecs(cfg.dataset));
    if (cfg.degree == 0 || cfg.degree >= ds->size()) {
        throw UsageError("--degree must be in [1, " + std::to_string(ds->size() - 1) + "]");
    }
    const GraphIndex g = build_knn_graph(ds, cfg.degree, cfg.seed, cfg.threads);
    std::vector<IndexSection> sections;
    if (cfg.grouping != Grouping::kNone) {
        VertexRanking ranking;
        if (cfg.grouping == Grouping::kDegree) {
            ranking = rank_by_indegree(g);
        } else {
            require_file(cfg.query_log, "--queries (query log for frequency ranking)");
            SearchParams p;
            p.l = cfg.log_l;
            p.k = std::min<std::size_t>(p.k, p.l);
            ranking = rank_by_frequency(g, visit_frequency(g, read_fvecs(cfg.query_log), p));
        }
        sections.push_back(encode_grouping_section(TwoLevelIndex(g, std::move(ranking), cfg.top_fraction)));
    }
    save_index(g, cfg.out, sections);
}

std::string default_label(const RunConfig& cfg) {
    const SearchParams& p = cfg.params;
    std::string s = mode_name(cfg.mode) + "-L" + std::to_string(p.l) + "-T" + std::to_string(p.threads);
    switch (cfg.mode) {
        case Mode::kBfis: break;
        case Mode::kTopm: s += "-M" + std::to_string(topm_width(p)); break;
        case Mode::kSpeedann:
            s += "-R" + format_number(p.ratio) + "-M" + std::to_string(p.m_start) + "x" +
                 std::to_string(p.effective_m_cap());
            break;
        case Mode::kSpeedannNoSync: s += "-M" + std::to_string(p.effective_m_cap()); break;
    }
    if (cfg.grouping == Grouping::kDegree) s += "-degree";
    if (cfg.grouping == Grouping::kFrequency) s += "-frequency";
    return s;
}

BenchContext load_context(const RunConfig& cfg) {
    require_file(cfg.dataset, "--dataset");
    require_file(cfg.queries, "--queries");
    require_file(cfg.truth, "--truth");
    require_file(cfg.index, "--index");
    BenchContext ctx;
    ctx.dataset = std::make_shared<const Dataset>(read_fvecs(cfg.dataset));
    ctx.queries = read_fvecs(cfg.queries);
    if (ctx.queries.dimension() != ctx.dataset->dimension()) throw UsageError("query and dataset dimensions differ");
    ctx.truth = ground_truth_from_ivecs(read_ivecs(cfg.truth), ctx.dataset->size());
    if (ctx.truth.queries != ctx.queries.size()) throw UsageError("truth rows do not match the query count");
    ctx.index = std::make_unique<LoadedIndex>(load_index(cfg.index, ctx.dataset));
    return ctx;
}

namespace {

const TwoLevelIndex* two_level_for(BenchContext& ctx, const RunConfig& cfg) {
    if (cfg.grouping == Grouping::kNone) return nullptr;
    const RankCriterion want = cfg.grouping == Grouping::kDegree ? RankCriterion::kDegree : RankCriterion::kFrequency;
    if (ctx.two_level && ctx.two_level->ranking().criterion == want &&
        ctx.two_level->top_fraction() == cfg.top_fraction) {
        return ctx.two_level.get();
    }
    const GraphIndex& g = ctx.index->graph;
    if (const IndexSection* s = ctx.index->find_section("GRP1")) {
        auto stored = std::make_unique<TwoLevelIndex>(decode_grouping_section(*s, g));
        if (stored->ranking().criterion == want) {
            ctx.two_level = stored->top_fraction() == cfg.top_fraction
                                ? std::move(stored)
                                : std::make_unique<TwoLevelIndex>(g, stored->ranking(), cfg.top_fraction);
            return ctx.two_level.get();
        }
    }
    if (want == RankCriterion::kFrequency) {
        throw UsageError("--grouping frequency needs an index built with --grouping frequency");
    }
    ctx.two_level = std::make_unique<TwoLevelIndex>(g, rank_by_indegree(g), cfg.top_fraction);
    return ctx.two_level.get();
}

}  // namespace

ConfigRun run_config(BenchContext& ctx, const RunConfig& cfg, std::vector<std::vector<VertexId>>* results) {
    const SearchParams p = validated_params(cfg);
    if (p.k > ctx.truth.k) throw UsageError("--K exceeds the ground-truth depth " + std::to_string(ctx.truth.k));
    if (cfg.reps == 0) throw UsageError("--reps must be >= 1");
    const GraphIndex& flat = ctx.index->graph;
    const TwoLevelIndex* tl = two_level_for(ctx, cfg);
    const unsigned width = topm_width(cfg.params);
    const unsigned pool_size = cfg.mode == Mode::kTopm ? std::min(p.threads, width) : p.threads;
    ParallelSearcher engine(pool_size, cfg.pin);

    auto search = [&](std::span<const float> q) -> SearchResult {
        switch (cfg.mode) {
            case Mode::kBfis: return tl ? bfis_search(*tl, q, p) : bfis_search(flat, q, p);
            case Mode::kTopm:
                if (pool_size == 1) return tl ? topm_search(*tl, q, p, width) : topm_search(flat, q, p, width);
                return tl ? engine.topm(*tl, q, p, width) : engine.topm(flat, q, p, width);
            case Mode::kSpeedann:
            case Mode::kSpeedannNoSync: return tl ? engine.speedann(*tl, q, p) : engine.speedann(flat, q, p);
        }
        return {};
    };

    ConfigRun run;
    run.config = cfg.label.empty() ? default_label(cfg) : cfg.label;
    std::vector<std::vector<VertexId>> first(ctx.queries.size());
    std::vector<double> samples;
    std::size_t issued = 0;
    for (unsigned rep = 0; rep < cfg.reps; ++rep) {
        for (std::size_t i = 0; i < ctx.queries.size(); ++i, ++issued) {
            const auto t0 = std::chrono::steady_clock::now();
            SearchResult r = search(ctx.queries.row(i));
            const auto ns = std::chrono::duration<double, std::nano>(std::chrono::steady_clock::now() - t0).count();
            if (issued >= cfg.warmup_queries) {
                samples.push_back(ns);
                run.stats.push_back(std::move(r.stats));
            }
            if (rep == 0) first[i] = std::move(r.ids);
        }
    }
    run.recall = recall_report(first, ctx.truth, p.k);
    run.latency = latency_report(std::move(samples));
    if (results != nullptr) *results = std::move(first);
    return run;
}

AblationRow cmd_bench(const RunConfig& cfg, std::ostream& csv, std::ostream& log) {
    (void)validated_params(cfg);
    BenchContext ctx = load_context(cfg);
    std::vector<std::vector<VertexId>> results;
    const ConfigRun run = run_config(ctx, cfg, cfg.dump_results.empty() ? nullptr : &results);
    const AblationRow row = summarize_run(run);

    if (!cfg.dump_results.empty()) {
        IntMatrix m{results.size(), cfg.params.k, {}};
        m.values.reserve(m.rows * m.cols);
        for (const auto& ids : results) {
            for (VertexId v : ids) m.values.push_back(static_cast<std::int32_t>(v));
        }
        write_ivecs(m, cfg.dump_results);
    }
    if (cfg.out.empty()) {
        write_ablation_csv(csv, std::span(&row, 1));
    } else {
        std::ofstream f(cfg.out);
        if (!f) throw IoError("cannot open " + cfg.out.string() + " for writing");
        write_ablation_csv(f, std::span(&row, 1));
    }
    log << std::fixed << std::setprecision(4) << row.config << ": recall@" << cfg.params.k << " " << row.recall
        << ", mean " << row.mean_ms << " ms, p99 " << row.p99_ms << " ms, " << std::setprecision(1) << row.compt
        << " distance computations, " << row.steps << " steps per query\n";
    return row;
}

SweepMatrix parse_sweep_matrix(std::istream& in) {
    static const char* kKeys[] = {"L", "T", "R", "M", "mode"};
    SweepMatrix m;
    std::string line;
    for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
        line = trim(line.substr(0, line.find('#')));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw UsageError("sweep line " + std::to_string(lineno) + ": expected key=values");
        const std::string key = trim(line.substr(0, eq));
        if (std::find(std::begin(kKeys), std::end(kKeys), key) == std::end(kKeys)) {
            throw UsageError("sweep line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
        std::vector<std::string> values;
        std::istringstream items(line.substr(eq + 1));
        for (std::string v; std::getline(items, v, ',');) {
            v = trim(v);
            if (!v.empty()) values.push_back(v);
        }
        if (values.empty()) throw UsageError("sweep line " + std::to_string(lineno) + ": no values");
        m[key] = std::move(values);
    }
    return m;
}

SweepMatrix load_sweep_matrix(const fs::path& path) {
    require_file(path, "--matrix");
    std::ifstream f(path);
    return parse_sweep_matrix(f);
}

namespace {

std::size_t to_size(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    unsigned long long x = 0;
    try {
        x = std::stoull(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != v.size()) throw UsageError("sweep " + key + ": not an integer: " + v);
    return static_cast<std::size_t>(x);
}

double to_double(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    double x = 0;
    try {
        x = std::stod(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != v.size()) throw UsageError("sweep " + key + ": not a number: " + v);
    return x;
}

void apply(RunConfig& cfg, const std::string& key, const std::string& v) {
    if (key == "L") cfg.params.l = to_size(key, v);
    else if (key == "T") cfg.params.threads = static_cast<unsigned>(to_size(key, v));
    else if (key == "R") cfg.params.ratio = to_double(key, v);
    else if (key == "M") cfg.params.m_cap = static_cast<unsigned>(to_size(key, v));
    else if (key == "mode") cfg.mode = parse_mode(v);
}

}  // namespace

std::vector<RunConfig> expand_sweep(const RunConfig& base, const SweepMatrix& matrix) {
    std::vector<RunConfig> out{base};
    out.front().label.clear();
    for (const auto& [key, values] : matrix) {
        std::vector<RunConfig> next;
        next.reserve(out.size() * values.size());
        for (const auto& cfg : out) {
            for (const auto& v : values) {
                RunConfig c = cfg;
                apply(c, key, v);
                next.push_back(std::move(c));
            }
        }
        out = std::move(next);
    }
    return out;
}

std::vector<AblationRow> cmd_sweep(const RunConfig& base, const SweepMatrix& matrix, std::ostream& csv,
                                   std::ostream& log) {
    const std::vector<RunConfig> configs = expand_sweep(base, matrix);
    for (const auto& c : configs) (void)validated_params(c);
    BenchContext ctx = load_context(base);
    std::vector<AblationRow> rows;
    rows.reserve(configs.size());
    for (const auto& c : configs) {
        rows.push_back(summarize_run(run_config(ctx, c)));
        log << rows.back().config << ": recall " << rows.back().recall << ", mean " << rows.back().mean_ms << " ms\n";
    }
    if (base.out.empty()) {
        write_ablation_csv(csv, rows);
    } else {
        std::ofstream f(base.out);
        if (!f) throw IoError("cannot open " + base.out.string() + " for writing");
        write_ablation_csv(f, rows);
    }
    return rows;
}

}  // namespace gann::cli
