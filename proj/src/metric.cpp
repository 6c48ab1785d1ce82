#include "gann/metric.hpp"

#include <atomic>
#include <stdexcept>
#include <string>

namespace gann {

namespace {

#ifdef GANN_DISTANCE_F64
using Accum = double;
#else
using Accum = float;
#endif

#ifdef GANN_COUNT_KERNEL_CALLS
std::atomic<std::uint64_t> g_kernel_calls{0};
#endif

}  // namespace

float l2_sq_raw(const float* a, const float* b, std::size_t d) noexcept {
#ifdef GANN_COUNT_KERNEL_CALLS
    g_kernel_calls.fetch_add(1, std::memory_order_relaxed);
#endif
    // Independent lanes let the compiler vectorise without reassociating.
    Accum lane[8] = {0, 0, 0, 0, 0, 0, 0, 0};
    std::size_t i = 0;
    for (; i + 8 <= d; i += 8) {
        for (std::size_t j = 0; j < 8; ++j) {
            const Accum diff = static_cast<Accum>(a[i + j]) - static_cast<Accum>(b[i + j]);
            lane[j] += diff * diff;
        }
    }
    for (std::size_t j = 0; i < d; ++i, ++j) {
        const Accum diff = static_cast<Accum>(a[i]) - static_cast<Accum>(b[i]);
        lane[j] += diff * diff;
    }
    const Accum sum = ((lane[0] + lane[4]) + (lane[1] + lane[5])) +
                      ((lane[2] + lane[6]) + (lane[3] + lane[7]));
    return static_cast<float>(sum);
}

float l2_sq(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("l2_sq: dimension mismatch (" + std::to_string(a.size()) +
                                    " vs " + std::to_string(b.size()) + ")");
    }
    return l2_sq_raw(a.data(), b.data(), a.size());
}

double l2_sq_reference(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("l2_sq_reference: dimension mismatch");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        sum += diff * diff;
    }
    return sum;
}

std::uint64_t kernel_invocations() noexcept {
#ifdef GANN_COUNT_KERNEL_CALLS
    return g_kernel_calls.load(std::memory_order_relaxed);
#else
    return 0;
#endif
}

void reset_kernel_invocations() noexcept {
#ifdef GANN_COUNT_KERNEL_CALLS
    g_kernel_calls.store(0, std::memory_order_relaxed);
#endif
}

}  // namespace gann
