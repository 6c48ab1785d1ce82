#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "gann/candidate_queue.hpp"
#include "gann/graph_index.hpp"
#include "gann/types.hpp"

namespace gann {

class TwoLevelIndex;

enum class SyncMode {
    kAdaptive,  ///< merge when the mean update position reaches L*R
    kNone,      ///< merge only when every worker has run out of work
};

enum class MergeMode {
    kAuto,      ///< parallel tree merge when there is a CPU per worker
    kSerial,
    kParallel,
};

struct SearchParams {
    std::size_t k = 10;
    std::size_t l = 100;
    unsigned threads = 1;
    /// Position ratio: sync once the mean update position is >= l * ratio.
    double ratio = 0.8;
    unsigned m_start = 1;
    /// Expansion-width cap; 0 means `threads`.
    unsigned m_cap = 0;
    /// Global steps between width doublings.
    unsigned stage_interval = 1;
    /// Sequential best-first expansions on the global queue before the
    /// parallel loop starts.
    unsigned warmup_steps = 1;
    SyncMode sync = SyncMode::kAdaptive;
    MergeMode merge = MergeMode::kAuto;

    unsigned effective_m_cap() const noexcept { return m_cap == 0 ? threads : m_cap; }

    /// Throws std::invalid_argument unless 1 <= k <= l, threads >= 1,
    /// 0 < ratio <= 1, 1 <= m_start <= m_cap <= threads, stage_interval >= 1.
    void validate() const;
};

struct SearchStats {
    std::uint64_t distance_computations = 0;
    /// Distance computations per worker; sums to distance_computations.
    std::vector<std::uint64_t> worker_distance_computations;
    /// Convergence steps: BFiS expansions, Top-M rounds, or parallel global
    /// iterations (warm-up expansions excluded and counted separately).
    std::uint64_t global_steps = 0;
    std::uint64_t warmup_steps = 0;
    std::vector<std::uint64_t> local_steps;
    std::uint64_t merges = 0;
    /// Merges started because the checker raised the sync flag.
    std::uint64_t sync_triggers = 0;
    /// Merges reached because every worker ran out of work.
    std::uint64_t exhaustion_merges = 0;
    /// Vertices computed more than once because of visit-map races.
    std::uint64_t duplicates_computed = 0;
    /// Duplicate ids removed while folding queues together.
    std::uint64_t duplicates_collapsed = 0;
    std::int64_t expand_ns = 0;
    std::int64_t merge_ns = 0;
    std::int64_t seq_ns = 0;
    std::int64_t total_ns = 0;
    /// Expansion width used by each global step.
    std::vector<std::uint32_t> width_trace;
    /// Designated checker of each parallel global step.
    std::vector<std::uint32_t> checker_trace;
    /// 1 where the step ended on the sync flag, 0 where workers ran dry.
    std::vector<std::uint8_t> sync_trace;
};

struct SearchResult {
    std::vector<VertexId> ids;
    std::vector<float> dists;
    SearchStats stats;
};

/// Mean of `positions` >= l * ratio.
bool check_metrics(std::span<const std::uint32_t> positions, std::size_t l, double ratio);

/// Deals the unchecked entries of `global` round-robin by rank into
/// `workers` lists (rank i -> list i mod workers); checked entries stay in
/// `global`, which keeps only them afterwards.
std::vector<std::vector<Candidate>> divide_unchecked(CandidateQueue& global, unsigned workers);

// Sequential best-first search: expand the closest unchecked candidate until
// none remains, keeping the best l candidates.
SearchResult bfis_search(const GraphIndex& g, std::span<const float> query, const SearchParams& p);
SearchResult bfis_search(const TwoLevelIndex& g, std::span<const float> query, const SearchParams& p);

// Bulk-synchronous Top-M search, executed serially on the calling thread.
SearchResult topm_search(const GraphIndex& g, std::span<const float> query, const SearchParams& p, unsigned m);
SearchResult topm_search(const TwoLevelIndex& g, std::span<const float> query, const SearchParams& p,
                         unsigned m);

/// Global queue after the sequential warm-up, plus the work it cost.
struct PrimedQueue {
    CandidateQueue queue;
    std::uint64_t distance_computations = 0;
    std::uint64_t expansions = 0;
};

/// Seeds the queue with the entry point and runs `warmup_steps` best-first
/// expansions on it.
PrimedQueue two_stage_prelude(const GraphIndex& g, std::span<const float> query, const SearchParams& p,
                              unsigned warmup_steps);

/// Owns the worker pool and per-query scratch for the parallel algorithms.
/// One query at a time per instance; distinct instances are independent.
class ParallelSearcher {
public:
    explicit ParallelSearcher(unsigned workers, bool pin = false);
    ~ParallelSearcher();
    ParallelSearcher(ParallelSearcher&&) noexcept;
    ParallelSearcher& operator=(ParallelSearcher&&) noexcept;

    unsigned workers() const noexcept;

    /// Top-M with the M expansions of a round spread over the workers.
    /// Identical results to topm_search().
    SearchResult topm(const GraphIndex& g, std::span<const float> query, const SearchParams& p, unsigned m);
    SearchResult topm(const TwoLevelIndex& g, std::span<const float> query, const SearchParams& p, unsigned m);

    /// Staged, loosely synchronised parallel search with local queues.
    /// Requires p.threads <= workers().
    SearchResult speedann(const GraphIndex& g, std::span<const float> query, const SearchParams& p);
    SearchResult speedann(const TwoLevelIndex& g, std::span<const float> query, const SearchParams& p);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Convenience wrapper that spins up a ParallelSearcher for one query.
SearchResult speedann_search(const GraphIndex& g, std::span<const float> query, const SearchParams& p);

}  // namespace gann
