#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "gann/dataset.hpp"
#include "gann/search.hpp"

namespace gann {

/// |result ∩ truth[0..k)| / k. Throws std::invalid_argument unless
/// result.size() == k and truth.size() >= k.
double recall_at_k(std::span<const VertexId> result, std::span<const VertexId> truth, std::size_t k);

struct RecallReport {
    std::vector<double> per_query;
    double mean = 0.0;
};

/// results[i] is scored against truth row i.
RecallReport recall_report(std::span<const std::vector<VertexId>> results, const GroundTruth& truth, std::size_t k);

/// Nearest-rank percentile: sorted[ceil(p/100 * n) - 1]. p in (0, 100].
double percentile(std::span<const double> samples, double p);

inline constexpr std::size_t kDefaultWarmupQueries = 10;

struct LatencyReport {
    double mean_ns = 0.0;
    double p90_ns = 0.0;
    double p95_ns = 0.0;
    double p99_ns = 0.0;
    std::vector<double> samples_ns;
};

/// Summary of per-query wall-clock samples (warm-up already dropped).
LatencyReport latency_report(std::vector<double> samples_ns);

/// Everything measured for one configuration.
struct ConfigRun {
    std::string config;
    RecallReport recall;
    LatencyReport latency;
    /// Stats of every measured query.
    std::vector<SearchStats> stats;
};

struct AblationRow {
    std::string config;
    double recall = 0.0;
    double mean_ms = 0.0;
    double p90_ms = 0.0;
    double p95_ms = 0.0;
    double p99_ms = 0.0;
    /// Per-query means.
    double compt = 0.0;
    double steps = 0.0;
    double merges = 0.0;
    /// Phase time over total search time, summed across queries.
    double expand_frac = 0.0;
    double merge_frac = 0.0;
    double seq_frac = 0.0;
    /// Duplicate computations over all distance computations.
    double dup_frac = 0.0;
};

inline constexpr const char* kAblationColumns =
    "config,recall,mean_ms,p90_ms,p95_ms,p99_ms,compt,steps,merges,expand_frac,merge_frac,seq_frac,dup_frac";

AblationRow summarize_run(const ConfigRun& run);
std::vector<AblationRow> assemble_ablation(std::span<const ConfigRun> runs);

/// Header line plus one line per row. Config names containing commas or
/// quotes are quoted.
void write_ablation_csv(std::ostream& out, std::span<const AblationRow> rows);
std::string ablation_csv(std::span<const AblationRow> rows);

}  // namespace gann
