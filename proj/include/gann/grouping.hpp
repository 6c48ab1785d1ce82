#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "gann/dataset.hpp"
#include "gann/graph_index.hpp"
#include "gann/search.hpp"

namespace gann {

enum class RankCriterion : std::uint32_t { kDegree = 0, kFrequency = 1 };

/// Relabeling of [0, n): new_id[old] and its inverse.
struct VertexRanking {
    RankCriterion criterion = RankCriterion::kDegree;
    std::vector<VertexId> new_id;
    std::vector<VertexId> old_id;

    /// Builds the inverse; throws if `new_of_old` is not a bijection.
    static VertexRanking from_new_ids(RankCriterion criterion, std::vector<VertexId> new_of_old);
};

/// Descending in-degree, ties by ascending old id.
VertexRanking rank_by_indegree(const GraphIndex& g);

/// Descending visit count, ties by ascending old id.
VertexRanking rank_by_frequency(const GraphIndex& g, std::span<const std::uint64_t> visit_counts);

/// Per-vertex count of distance computations made by best-first search over
/// a query log.
std::vector<std::uint64_t> visit_frequency(const GraphIndex& g, const QuerySet& log, const SearchParams& p);

inline constexpr double kDefaultTopFraction = 0.001;

/// Two-level layout of a graph after relabeling.
///
/// Vertices are renumbered by rank. The first ceil(top_fraction * n) (the
/// top level) each own one contiguous block: their own vector, then the
/// vectors of all their out-neighbours in adjacency order. The remaining vertices use plain CSR adjacency and a
/// separate row-major vector matrix. Vectors of a vertex shared by several
/// blocks are stored once per block.
class TwoLevelIndex {
public:
    TwoLevelIndex(const GraphIndex& g, VertexRanking ranking, double top_fraction);

    std::size_t size() const noexcept { return n_; }
    std::size_t dimension() const noexcept { return d_; }
    std::size_t top_count() const noexcept { return top_count_; }
    double top_fraction() const noexcept { return top_fraction_; }
    const VertexRanking& ranking() const noexcept { return ranking_; }

    /// Entry point in new-id space.
    VertexId entry_point() const noexcept { return entry_; }

    VertexId to_original(VertexId new_id) const noexcept { return ranking_.old_id[new_id]; }
    VertexId to_internal(VertexId old_id) const noexcept { return ranking_.new_id[old_id]; }

    /// Vector of vertex `v` (new id).
    std::span<const float> fetch_vector(VertexId v) const noexcept { return {vector_ptr(v), d_}; }
    const float* vector_ptr(VertexId v) const noexcept {
        return v < top_count_ ? top_vectors_.data() + top_vec_offset_[v] * d_
                              : bottom_vectors_.data() + (v - top_count_) * d_;
    }

    std::size_t degree(VertexId v) const noexcept;
    /// Out-neighbours of `v`, both in new ids.
    std::span<const VertexId> neighbors(VertexId v) const noexcept;

    /// Calls fn(neighbour new id, neighbour vector) in adjacency order. Top
    /// level vertices read neighbour vectors from their own block.
    template <typename Fn>
    void for_each_neighbor(VertexId v, Fn&& fn) const {
        if (v < top_count_) {
            const auto nb = neighbors(v);
            const float* vec = top_vectors_.data() + (top_vec_offset_[v] + 1) * d_;
            for (std::size_t j = 0; j < nb.size(); ++j, vec += d_) fn(nb[j], vec);
        } else {
            for (VertexId u : neighbors(v)) fn(u, vector_ptr(u));
        }
    }

    /// Bytes spent on the optimised level's vectors: sum over top vertices
    /// of (deg + 1) * d * 4.
    std::size_t optimized_vector_bytes() const noexcept { return top_vectors_.size() * sizeof(float); }

private:
    std::size_t n_;
    std::size_t d_;
    std::size_t top_count_;
    double top_fraction_;
    VertexRanking ranking_;
    VertexId entry_;

    // Top level: per vertex, index (in vectors) of its block start.
    std::vector<std::uint64_t> top_vec_offset_;
    std::vector<float> top_vectors_;
    std::vector<std::uint64_t> top_adj_offset_;
    std::vector<VertexId> top_adj_;

    // Bottom level, indexed by (new id - top_count).
    std::vector<std::uint64_t> bottom_offsets_;
    std::vector<VertexId> bottom_adj_;
    std::vector<float> bottom_vectors_;
};

// Optional index-file section "GRP1" (version 1):
//   u32 criterion, u32 reserved, f64 top_fraction, u64 n, u32 new_id[n]
// The flattened blocks are rebuilt from graph + dataset on load.
IndexSection encode_grouping_section(const TwoLevelIndex& tl);
TwoLevelIndex decode_grouping_section(const IndexSection& section, const GraphIndex& g);

}  // namespace gann
