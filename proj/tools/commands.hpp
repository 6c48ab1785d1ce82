#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gann/dataset.hpp"
#include "gann/eval.hpp"
#include "gann/graph_index.hpp"
#include "gann/grouping.hpp"
#include "gann/search.hpp"

namespace gann::cli {

namespace fs = std::filesystem;

/// Bad flag values or combinations; main() maps it to exit code 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Mode { kBfis, kTopm, kSpeedann, kSpeedannNoSync };
enum class Grouping { kNone, kDegree, kFrequency };

Mode parse_mode(const std::string& s);
std::string mode_name(Mode m);
Grouping parse_grouping(const std::string& s);

struct GenConfig {
    std::size_t n = 10000;
    std::size_t d = 32;
    std::uint64_t seed = 1;
    std::string distribution = "clusters";  // "clusters" or "uniform"
    std::size_t clusters = 64;
    float spread = 1.0f;
    /// 0 picks max(10, n / 100).
    std::size_t query_count = 0;
    fs::path dataset;
    fs::path queries;
};

/// Writes the base set (stream 0) and the query set (stream 1).
void cmd_gen(const GenConfig& cfg);

struct GroundTruthConfig {
    fs::path dataset;
    fs::path queries;
    fs::path out;
    std::size_t k = 100;
    unsigned threads = 0;
};

void cmd_groundtruth(const GroundTruthConfig& cfg);

struct BuildConfig {
    fs::path dataset;
    fs::path out;
    std::size_t degree = 20;
    std::uint64_t seed = 1;
    unsigned threads = 0;
    Grouping grouping = Grouping::kNone;
    double top_fraction = kDefaultTopFraction;
    /// Query log replayed with bfis for frequency ranking.
    fs::path query_log;
    std::size_t log_l = 100;
};

void cmd_build(const BuildConfig& cfg);

struct RunConfig {
    Mode mode = Mode::kSpeedann;
    SearchParams params;
    fs::path dataset;
    fs::path queries;
    fs::path truth;
    fs::path index;
    /// CSV destination; empty writes to the given stream.
    fs::path out;
    /// ivecs file receiving the K result ids of every query.
    fs::path dump_results;
    unsigned reps = 1;
    Grouping grouping = Grouping::kNone;
    double top_fraction = kDefaultTopFraction;
    bool pin = false;
    std::size_t warmup_queries = kDefaultWarmupQueries;
    /// Row label; derived from mode and params when empty.
    std::string label;
};

std::string default_label(const RunConfig& cfg);

/// Files shared by every run of a bench or sweep, loaded once.
struct BenchContext {
    std::shared_ptr<const Dataset> dataset;
    QuerySet queries;
    GroundTruth truth;
    std::unique_ptr<LoadedIndex> index;
    std::unique_ptr<TwoLevelIndex> two_level;
};

BenchContext load_context(const RunConfig& cfg);

/// Runs every query `reps` times. The first `warmup_queries` searches are
/// left out of the latency sample and the stats. Result ids of the first
/// repetition go to `results` when given.
ConfigRun run_config(BenchContext& ctx, const RunConfig& cfg, std::vector<std::vector<VertexId>>* results = nullptr);

/// One CSV row to cfg.out (or `csv`), human summary to `log`.
AblationRow cmd_bench(const RunConfig& cfg, std::ostream& csv, std::ostream& log);

/// key -> value list, from lines of `key=v1,v2,...`. Keys: L, T, R, M, mode.
using SweepMatrix = std::map<std::string, std::vector<std::string>>;

SweepMatrix parse_sweep_matrix(std::istream& in);
SweepMatrix load_sweep_matrix(const fs::path& path);

/// Cartesian product over the matrix applied on top of `base`.
std::vector<RunConfig> expand_sweep(const RunConfig& base, const SweepMatrix& matrix);

std::vector<AblationRow> cmd_sweep(const RunConfig& base, const SweepMatrix& matrix, std::ostream& csv,
                                   std::ostream& log);

}  // namespace gann::cli
