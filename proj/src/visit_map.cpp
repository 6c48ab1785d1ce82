#include "gann/visit_map.hpp"

#include <bit>

namespace gann {

void VisitMap::reset(std::size_t n) {
    const std::size_t words = (n + 63) / 64;
    if (words > words_len_) {
        words_ = std::make_unique<std::atomic<std::uint64_t>[]>(words);
        words_len_ = words;
    }
    n_ = n;
    clear();
}

void VisitMap::clear() noexcept {
    const std::size_t words = (n_ + 63) / 64;
    for (std::size_t i = 0; i < words; ++i) words_[i].store(0, std::memory_order_relaxed);
}

std::size_t VisitMap::count() const noexcept {
    std::size_t total = 0;
    const std::size_t words = (n_ + 63) / 64;
    for (std::size_t i = 0; i < words; ++i) {
        total += static_cast<std::size_t>(std::popcount(words_[i].load(std::memory_order_relaxed)));
    }
    return total;
}

}  // namespace gann
