#include "gann/candidate_queue.hpp"

#include <algorithm>
#include <cstring>

namespace gann {

std::size_t first_unchecked(std::span<const Candidate> entries, std::size_t from) noexcept {
    for (std::size_t i = from; i < entries.size(); ++i) {
        if (!entries[i].checked) return i;
    }
    return kNone;
}

std::size_t rank_of(std::span<const Candidate> entries, const Candidate& c) noexcept {
    return static_cast<std::size_t>(std::lower_bound(entries.begin(), entries.end(), c, closer) - entries.begin());
}

std::size_t QueueRef::insert(const Candidate& c) noexcept {
    const std::size_t len = *size_;
    const std::size_t pos = gann::rank_of(entries(), c);
    if (pos >= capacity()) return kDropped;
    if (pos < len && storage_[pos].id == c.id) return kDropped;
    const std::size_t keep = std::min(len, capacity() - 1);
    // Shift [pos, keep) one slot right; the worst entry falls off when full.
    if (pos < keep) {
        std::memmove(&storage_[pos + 1], &storage_[pos], (keep - pos) * sizeof(Candidate));
    }
    storage_[pos] = c;
    *size_ = keep + 1;
    return pos;
}

void QueueRef::resize(std::size_t len) noexcept {
    if (len < *size_) *size_ = len;
}

void QueueRef::assign(std::span<const Candidate> sorted) noexcept {
    const std::size_t len = std::min(sorted.size(), capacity());
    if (len > 0 && sorted.data() != storage_.data()) {
        std::memmove(storage_.data(), sorted.data(), len * sizeof(Candidate));
    }
    *size_ = len;
}

std::size_t merge_pair(QueueRef dst, std::span<const Candidate> src, std::size_t limit,
                       std::span<Candidate> scratch) noexcept {
    limit = std::min(limit, dst.capacity());
    const std::span<const Candidate> a = dst.entries();
    std::size_t i = 0;
    std::size_t j = 0;
    std::size_t out = 0;
    std::size_t collapsed = 0;
    while (out < limit && (i < a.size() || j < src.size())) {
        if (j == src.size() || (i < a.size() && closer(a[i], src[j]))) {
            scratch[out++] = a[i++];
        } else if (i == a.size() || closer(src[j], a[i])) {
            scratch[out++] = src[j++];
        } else {
            // Equal key: the same vertex reached by both sides.
            Candidate c = a[i++];
            if (src[j++].checked) c.checked = true;
            scratch[out++] = c;
            ++collapsed;
        }
    }
    // Duplicates beyond the cut are still duplicates.
    while (i < a.size() && j < src.size()) {
        if (closer(a[i], src[j])) {
            ++i;
        } else if (closer(src[j], a[i])) {
            ++j;
        } else {
            ++i;
            ++j;
            ++collapsed;
        }
    }
    dst.assign(scratch.first(out));
    return collapsed;
}

std::size_t merge_pair(CandidateQueue& dst, const CandidateQueue& src, std::size_t limit) {
    std::vector<Candidate> scratch(std::min(limit, dst.size() + src.size()));
    return merge_pair(dst.ref(), src.entries(), limit, scratch);
}

void LocalQueueBlock::reset(std::size_t regions, std::size_t capacity) {
    capacity_ = capacity;
    if (storage_.size() < regions * capacity) {
        storage_.resize(regions * capacity);
        scratch_.resize(regions * capacity);
    }
    sizes_.assign(regions, 0);
}

void LocalQueueBlock::clear_all() noexcept {
    std::fill(sizes_.begin(), sizes_.end(), 0);
}

std::vector<std::pair<std::size_t, std::size_t>> tree_merge_level(std::size_t regions, std::size_t stride) {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    if (regions == 0 || stride == 0 || stride >= regions) return pairs;
    // Receivers sit at last, last - 2*stride, ...; each absorbs the slot
    // `stride` below it.
    const std::size_t last = regions - 1;
    for (std::size_t back = 0; back <= last; back += 2 * stride) {
        const std::size_t receiver = last - back;
        if (receiver < stride) break;
        pairs.emplace_back(receiver, receiver - stride);
    }
    return pairs;
}

std::size_t tree_merge_in_place(LocalQueueBlock& block, std::span<const std::size_t> order, std::size_t limit,
                                const ParallelFor& parallel) {
    const std::size_t count = order.size();
    if (count == 0) return 0;
    limit = std::min(limit, block.capacity());
    std::size_t collapsed = 0;
    std::vector<std::size_t> per_pair;
    for (std::size_t stride = 1; stride < count; stride *= 2) {
        const auto pairs = tree_merge_level(count, stride);
        per_pair.assign(pairs.size(), 0);
        auto merge_one = [&](std::size_t p) {
            const std::size_t recv = order[pairs[p].first];
            const std::size_t send = order[pairs[p].second];
            per_pair[p] = merge_pair(block.region(recv), block.entries(send), limit, block.scratch(recv));
        };
        if (parallel && pairs.size() > 1) {
            parallel(pairs.size(), merge_one);
        } else {
            for (std::size_t p = 0; p < pairs.size(); ++p) merge_one(p);
        }
        for (std::size_t c : per_pair) collapsed += c;
    }
    // A lone region is still cut to the limit.
    block.region(order.back()).resize(limit);
    return collapsed;
}

std::size_t tree_merge_in_place(LocalQueueBlock& block, std::size_t limit, const ParallelFor& parallel) {
    std::vector<std::size_t> order(block.regions());
    for (std::size_t r = 0; r < order.size(); ++r) order[r] = r;
    return tree_merge_in_place(block, order, limit, parallel);
}

CandidateQueue tree_merge(const LocalQueueBlock& block, std::size_t limit) {
    LocalQueueBlock copy = block;
    tree_merge_in_place(copy, limit);
    CandidateQueue out(limit);
    const auto folded = copy.entries(copy.regions() - 1);
    out.ref().assign(folded.first(std::min(folded.size(), limit)));
    return out;
}

}  // namespace gann
