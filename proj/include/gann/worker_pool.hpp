#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

namespace gann {

/// Fixed set of T workers for intra-query parallelism. Worker 0 is the
/// calling thread; workers 1..T-1 are resident threads that sleep between
/// dispatches. Each run() is a fork plus a full barrier.
class WorkerPool {
public:
    using Task = std::function<void(unsigned worker)>;

    /// `pin` requests best-effort CPU affinity (worker w -> cpu w mod ncpu).
    explicit WorkerPool(unsigned workers, bool pin = false);
    ~WorkerPool();

    WorkerPool(const WorkerPool&) = delete;
    WorkerPool& operator=(const WorkerPool&) = delete;

    unsigned size() const noexcept { return static_cast<unsigned>(slots_.size()); }

    /// Runs task(w) for w in [0, active) and returns once all have finished.
    /// Rethrows the first exception raised by any worker.
    void run(unsigned active, const Task& task);

    /// Adapter for queue merging: parallel for over `count` items.
    void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

private:
    struct alignas(64) Slot {
        std::atomic<std::uint32_t> generation{0};
    };

    void helper_loop(unsigned worker);
    void wait_for_helpers();
    void record_failure() noexcept;

    std::vector<Slot> slots_;
    std::vector<std::jthread> threads_;
    const Task* task_ = nullptr;
    alignas(64) std::atomic<std::uint32_t> pending_{0};
    std::atomic<bool> stop_{false};
    unsigned spin_limit_ = 0;

    std::mutex failure_mutex_;
    std::exception_ptr failure_;
};

/// Number of CPUs this process may run on (affinity mask aware).
unsigned available_cpus() noexcept;

}  // namespace gann
