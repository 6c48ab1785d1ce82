#include "gann/grouping.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "byte_io.hpp"
#include "search_internal.hpp"

namespace gann {

namespace {

// Stable descending order of `score`, ties by ascending old id.
template <typename Score>
std::vector<VertexId> order_descending(std::span<const Score> score) {
    std::vector<VertexId> order(score.size());
    std::iota(order.begin(), order.end(), VertexId{0});
    std::stable_sort(order.begin(), order.end(), [&](VertexId a, VertexId b) { return score[a] > score[b]; });
    return order;
}

VertexRanking from_order(RankCriterion criterion, std::vector<VertexId> order) {
    VertexRanking r;
    r.criterion = criterion;
    r.new_id.resize(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) r.new_id[order[i]] = static_cast<VertexId>(i);
    r.old_id = std::move(order);
    return r;
}

}  // namespace

VertexRanking VertexRanking::from_new_ids(RankCriterion criterion, std::vector<VertexId> new_of_old) {
    VertexRanking r;
    r.criterion = criterion;
    r.old_id.assign(new_of_old.size(), kInvalidVertex);
    for (std::size_t old = 0; old < new_of_old.size(); ++old) {
        const VertexId v = new_of_old[old];
        if (v >= new_of_old.size() || r.old_id[v] != kInvalidVertex) {
            throw std::invalid_argument("vertex ranking is not a permutation");
        }
        r.old_id[v] = static_cast<VertexId>(old);
    }
    r.new_id = std::move(new_of_old);
    return r;
}

VertexRanking rank_by_indegree(const GraphIndex& g) {
    const auto stats = degree_stats(g);
    return from_order(RankCriterion::kDegree, order_descending(std::span<const std::uint32_t>(stats.in_degree)));
}

VertexRanking rank_by_frequency(const GraphIndex& g, std::span<const std::uint64_t> visit_counts) {
    if (visit_counts.size() != g.size()) throw std::invalid_argument("visit counts do not match the graph size");
    return from_order(RankCriterion::kFrequency, order_descending(visit_counts));
}

std::vector<std::uint64_t> visit_frequency(const GraphIndex& g, const QuerySet& log, const SearchParams& p) {
    if (log.dimension() != g.dimension()) throw std::invalid_argument("query log dimension mismatch");
    std::vector<std::uint64_t> counts(g.size(), 0);
    for (std::size_t i = 0; i < log.size(); ++i) detail::bfis_search_counting(g, log.row(i), p, counts);
    return counts;
}

TwoLevelIndex::TwoLevelIndex(const GraphIndex& g, VertexRanking ranking, double top_fraction)
    : n_(g.size()), d_(g.dimension()), top_fraction_(top_fraction), ranking_(std::move(ranking)) {
    if (!(top_fraction >= 0.0 && top_fraction <= 1.0)) {
        throw std::invalid_argument("top fraction must lie in [0, 1]");
    }
    if (ranking_.new_id.size() != n_ || ranking_.old_id.size() != n_) {
        throw std::invalid_argument("ranking size does not match the graph");
    }
    top_count_ = std::min(n_, static_cast<std::size_t>(std::ceil(top_fraction * static_cast<double>(n_))));
    entry_ = ranking_.new_id[g.entry_point()];
    const Dataset& ds = g.dataset();
    auto append_vector = [&](std::vector<float>& dst, VertexId old) {
        const float* row = ds.row_ptr(old);
        dst.insert(dst.end(), row, row + d_);
    };

    top_vec_offset_.reserve(top_count_);
    top_adj_offset_.reserve(top_count_ + 1);
    top_adj_offset_.push_back(0);
    for (std::size_t v = 0; v < top_count_; ++v) {
        const VertexId old = ranking_.old_id[v];
        top_vec_offset_.push_back(top_vectors_.size() / d_);
        append_vector(top_vectors_, old);
        for (VertexId u : g.neighbors(old)) {
            append_vector(top_vectors_, u);
            top_adj_.push_back(ranking_.new_id[u]);
        }
        top_adj_offset_.push_back(top_adj_.size());
    }

    bottom_offsets_.reserve(n_ - top_count_ + 1);
    bottom_offsets_.push_back(0);
    bottom_vectors_.reserve((n_ - top_count_) * d_);
    for (std::size_t v = top_count_; v < n_; ++v) {
        const VertexId old = ranking_.old_id[v];
        append_vector(bottom_vectors_, old);
        for (VertexId u : g.neighbors(old)) bottom_adj_.push_back(ranking_.new_id[u]);
        bottom_offsets_.push_back(bottom_adj_.size());
    }
}

std::size_t TwoLevelIndex::degree(VertexId v) const noexcept { return neighbors(v).size(); }

std::span<const VertexId> TwoLevelIndex::neighbors(VertexId v) const noexcept {
    if (v < top_count_) {
        return std::span(top_adj_).subspan(top_adj_offset_[v], top_adj_offset_[v + 1] - top_adj_offset_[v]);
    }
    const std::size_t b = v - top_count_;
    return std::span(bottom_adj_).subspan(bottom_offsets_[b], bottom_offsets_[b + 1] - bottom_offsets_[b]);
}

IndexSection encode_grouping_section(const TwoLevelIndex& tl) {
    detail::ByteWriter w;
    w.put(static_cast<std::uint32_t>(tl.ranking().criterion));
    w.put(std::uint32_t{0});
    w.put(tl.top_fraction());
    w.put(static_cast<std::uint64_t>(tl.size()));
    for (VertexId v : tl.ranking().new_id) w.put(v);
    IndexSection s{{'G', 'R', 'P', '1'}, 1, std::move(w).take()};
    return s;
}

TwoLevelIndex decode_grouping_section(const IndexSection& section, const GraphIndex& g) {
    if (section.version != 1) {
        throw FormatError("unsupported grouping section version " + std::to_string(section.version));
    }
    detail::ByteReader r(section.payload);
    const auto criterion = r.get<std::uint32_t>();
    if (criterion > 1) throw FormatError("unknown ranking criterion " + std::to_string(criterion));
    (void)r.get<std::uint32_t>();
    const double fraction = r.get<double>();
    const auto n = r.get<std::uint64_t>();
    if (n != g.size()) throw FormatError("grouping section covers " + std::to_string(n) + " vertices, graph has " +
                                         std::to_string(g.size()));
    std::vector<VertexId> new_id(n);
    for (auto& v : new_id) v = r.get<VertexId>();
    if (!r.done()) throw FormatError("trailing bytes in grouping section");
    try {
        return TwoLevelIndex(g, VertexRanking::from_new_ids(static_cast<RankCriterion>(criterion), std::move(new_id)),
                             fraction);
    } catch (const std::invalid_argument& e) {
        throw FormatError(std::string("bad grouping section: ") + e.what());
    }
}

}  // namespace gann
