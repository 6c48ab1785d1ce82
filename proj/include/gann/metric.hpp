#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

namespace gann {

/// Squared Euclidean distance over `d` floats.
///
/// Eight independent partial sums, reduced pairwise at the end. The default
/// build accumulates in float; configure with GANN_DISTANCE_F64 to
/// accumulate in double instead.
float l2_sq_raw(const float* a, const float* b, std::size_t d) noexcept;

/// Checked variant: throws std::invalid_argument on dimension mismatch.
float l2_sq(std::span<const float> a, std::span<const float> b);

/// Plain left-to-right double-precision loop. Reference for tests and the
/// ground-truth path where speed does not matter.
double l2_sq_reference(std::span<const float> a, std::span<const float> b);

/// Per-search tally of distance evaluations. Owned by one worker at a time;
/// worker tallies are summed when local queues are merged.
struct DistanceCounter {
    std::uint64_t count = 0;

    float operator()(const float* a, const float* b, std::size_t d) noexcept {
        ++count;
        return l2_sq_raw(a, b, d);
    }
};

/// Kernel invocations since process start. Only non-zero in builds compiled
/// with GANN_COUNT_KERNEL_CALLS (the instrumented test library).
std::uint64_t kernel_invocations() noexcept;
void reset_kernel_invocations() noexcept;

}  // namespace gann
