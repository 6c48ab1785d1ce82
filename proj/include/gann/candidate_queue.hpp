#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "gann/types.hpp"

namespace gann {

struct Candidate {
    VertexId id = kInvalidVertex;
    float dist = 0.0f;
    bool checked = false;

    friend bool operator==(const Candidate&, const Candidate&) = default;
};

/// Strict (dist, id) order used by every queue.
constexpr bool closer(const Candidate& a, const Candidate& b) noexcept {
    return a.dist < b.dist || (a.dist == b.dist && a.id < b.id);
}

/// Returned by insert() when the candidate is not stored.
inline constexpr std::size_t kDropped = std::numeric_limits<std::size_t>::max();
/// Returned by first_unchecked() when there is no unchecked entry.
inline constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

/// Index of the first unchecked entry at or after `from`, or kNone.
std::size_t first_unchecked(std::span<const Candidate> entries, std::size_t from = 0) noexcept;

/// Number of entries strictly closer than `c` in a sorted run.
std::size_t rank_of(std::span<const Candidate> entries, const Candidate& c) noexcept;

/// Non-owning view of a bounded, (dist, id)-sorted, duplicate-free run of
/// candidates: `size` live entries at the front of `storage`.
///
/// A vertex always carries the same distance within one query, so a
/// duplicate id is always an equal key and found by the binary search.
class QueueRef {
public:
    QueueRef(std::span<Candidate> storage, std::size_t& size) noexcept : storage_(storage), size_(&size) {}

    std::size_t size() const noexcept { return *size_; }
    std::size_t capacity() const noexcept { return storage_.size(); }
    bool empty() const noexcept { return *size_ == 0; }

    Candidate& operator[](std::size_t i) noexcept { return storage_[i]; }
    const Candidate& operator[](std::size_t i) const noexcept { return storage_[i]; }
    std::span<Candidate> entries() noexcept { return storage_.first(*size_); }
    std::span<const Candidate> entries() const noexcept { return storage_.first(*size_); }

    /// Places `c` at its sorted position, evicting the worst entry if full.
    /// Returns the 0-based landing position, or kDropped if `c` is already
    /// present or would land at or beyond capacity.
    std::size_t insert(const Candidate& c) noexcept;

    std::size_t first_unchecked(std::size_t from = 0) const noexcept {
        return gann::first_unchecked(entries(), from);
    }

    /// Keeps only the best `len` entries.
    void resize(std::size_t len) noexcept;

    void clear() noexcept { *size_ = 0; }

    /// Replaces the contents with `sorted`, which must already satisfy the
    /// queue invariants and fit the capacity.
    void assign(std::span<const Candidate> sorted) noexcept;

    std::size_t rank_of(const Candidate& c) const noexcept { return gann::rank_of(entries(), c); }

private:
    std::span<Candidate> storage_;
    std::size_t* size_;
};

/// Owning bounded candidate list with capacity L.
class CandidateQueue {
public:
    explicit CandidateQueue(std::size_t capacity) : storage_(capacity) {}

    std::size_t size() const noexcept { return size_; }
    std::size_t capacity() const noexcept { return storage_.size(); }
    bool empty() const noexcept { return size_ == 0; }
    const Candidate& operator[](std::size_t i) const noexcept { return storage_[i]; }
    Candidate& operator[](std::size_t i) noexcept { return storage_[i]; }
    std::span<const Candidate> entries() const noexcept { return {storage_.data(), size_}; }

    std::size_t insert(const Candidate& c) noexcept { return ref().insert(c); }
    std::size_t first_unchecked(std::size_t from = 0) const noexcept {
        return gann::first_unchecked(entries(), from);
    }
    void resize(std::size_t len) noexcept { ref().resize(len); }
    void clear() noexcept { size_ = 0; }

    QueueRef ref() noexcept { return QueueRef(storage_, size_); }

private:
    std::vector<Candidate> storage_;
    std::size_t size_ = 0;
};

/// dst <- best `limit` of dst ∪ src. Equal ids collapse to one entry that is
/// checked if either copy was. `scratch` must hold at least
/// min(limit, dst.size() + src.size()) entries and `limit` must not exceed
/// dst.capacity(). Returns the number of collapsed duplicates.
std::size_t merge_pair(QueueRef dst, std::span<const Candidate> src, std::size_t limit,
                       std::span<Candidate> scratch) noexcept;

std::size_t merge_pair(CandidateQueue& dst, const CandidateQueue& src, std::size_t limit);

/// Contiguous queue regions carved from one backing array, plus a scratch
/// region per slot for merging. The last region doubles as the
/// global queue when regions are folded together.
class LocalQueueBlock {
public:
    LocalQueueBlock() = default;
    LocalQueueBlock(std::size_t regions, std::size_t capacity) { reset(regions, capacity); }

    /// Reallocates only when the shape grows.
    void reset(std::size_t regions, std::size_t capacity);

    std::size_t regions() const noexcept { return sizes_.size(); }
    std::size_t capacity() const noexcept { return capacity_; }

    QueueRef region(std::size_t r) noexcept {
        return QueueRef(std::span(storage_).subspan(r * capacity_, capacity_), sizes_[r]);
    }
    std::span<const Candidate> entries(std::size_t r) const noexcept {
        return std::span(storage_).subspan(r * capacity_, sizes_[r]);
    }
    std::span<Candidate> scratch(std::size_t r) noexcept {
        return std::span(scratch_).subspan(r * capacity_, capacity_);
    }

    void clear_all() noexcept;

private:
    std::size_t capacity_ = 0;
    std::vector<Candidate> storage_;
    std::vector<Candidate> scratch_;
    std::vector<std::size_t> sizes_;
};

/// Runs fn(0..count-1), possibly concurrently; returns when all are done.
using ParallelFor = std::function<void(std::size_t count, const std::function<void(std::size_t)>& fn)>;

/// The (receiver, sender) pairs of one balanced-binary-tree merge level over
/// `regions` slots, folding towards the last slot. Empty once stride >= regions.
std::vector<std::pair<std::size_t, std::size_t>> tree_merge_level(std::size_t regions, std::size_t stride);

/// Folds all regions into the last one, pairwise level by level; pairs of one
/// level are handed to `parallel` together. Result: best `limit` of the union
/// with duplicate ids collapsed (checked wins). Returns collapsed duplicates.
std::size_t tree_merge_in_place(LocalQueueBlock& block, std::size_t limit, const ParallelFor& parallel = {});

/// Folds the listed regions into the last one listed. Regions not listed
/// are left untouched.
std::size_t tree_merge_in_place(LocalQueueBlock& block, std::span<const std::size_t> order, std::size_t limit,
                                const ParallelFor& parallel = {});

/// Non-destructive variant returning the folded queue.
CandidateQueue tree_merge(const LocalQueueBlock& block, std::size_t limit);

}  // namespace gann
