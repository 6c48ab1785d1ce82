#pragma once

#include <atomic>
#include <cstdint>
#include <memory>

#include "gann/types.hpp"

namespace gann {

/// Shared "distance already computed" bitvector, one bit per vertex.
///
/// Bits are only ever set during a query. Concurrent workers use
/// test_and_set(), whose check is a plain relaxed load: two workers can both
/// see a bit clear and both compute the vertex. That race is benign; the
/// duplicate is collapsed when local queues merge. Every set is followed by
/// a release fence so it is visible to all workers by the next merge.
class VisitMap {
public:
    VisitMap() = default;
    explicit VisitMap(std::size_t n) { reset(n); }

    /// Resizes to `n` vertices and clears every bit.
    void reset(std::size_t n);
    void clear() noexcept;

    std::size_t size() const noexcept { return n_; }

    bool test(VertexId v) const noexcept {
        return (words_[v >> 6].load(std::memory_order_relaxed) & bit(v)) != 0;
    }

    /// Relaxed shared test-and-set. Returns true when the caller saw the bit
    /// clear (and must compute the vertex). `*raced` is set when another
    /// worker had set the bit between this caller's check and its own set.
    bool test_and_set(VertexId v, bool* raced = nullptr) noexcept {
        auto& w = words_[v >> 6];
        const std::uint64_t mask = bit(v);
        if (w.load(std::memory_order_relaxed) & mask) return false;
        const std::uint64_t before = w.fetch_or(mask, std::memory_order_relaxed);
        std::atomic_thread_fence(std::memory_order_release);
        if (raced != nullptr) *raced = (before & mask) != 0;
        return true;
    }

    /// Exact test-and-set: exactly one caller wins each bit.
    bool test_and_set_exact(VertexId v) noexcept {
        const std::uint64_t mask = bit(v);
        return (words_[v >> 6].fetch_or(mask, std::memory_order_acq_rel) & mask) == 0;
    }

    /// Single-writer fast path; only valid while no other thread touches the map.
    bool test_and_set_exclusive(VertexId v) noexcept {
        auto& w = words_[v >> 6];
        const std::uint64_t mask = bit(v);
        const std::uint64_t cur = w.load(std::memory_order_relaxed);
        if (cur & mask) return false;
        w.store(cur | mask, std::memory_order_relaxed);
        return true;
    }

    std::size_t count() const noexcept;

private:
    static constexpr std::uint64_t bit(VertexId v) noexcept { return std::uint64_t{1} << (v & 63u); }

    std::size_t n_ = 0;
    std::size_t words_len_ = 0;
    std::unique_ptr<std::atomic<std::uint64_t>[]> words_;
};

}  // namespace gann
