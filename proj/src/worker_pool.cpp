#include "gann/worker_pool.hpp"

#include <algorithm>
#include <stdexcept>

#if defined(__linux__)
#include <pthread.h>
#include <sched.h>
#endif

namespace gann {

namespace {

inline void cpu_relax() noexcept {
#if defined(__x86_64__) || defined(__i386__)
    __builtin_ia32_pause();
#endif
}

void pin_current_thread(unsigned worker) noexcept {
#if defined(__linux__)
    const unsigned cpus = available_cpus();
    cpu_set_t set;
    CPU_ZERO(&set);
    CPU_SET(worker % std::max(1u, cpus), &set);
    (void)pthread_setaffinity_np(pthread_self(), sizeof(set), &set);
#else
    (void)worker;
#endif
}

// Waits until `value` differs from `old`: spins briefly when cores are
// plentiful, otherwise blocks straight away.
template <typename T>
T await_change(const std::atomic<T>& value, T old, unsigned spin_limit) noexcept {
    for (unsigned i = 0; i < spin_limit; ++i) {
        const T cur = value.load(std::memory_order_acquire);
        if (cur != old) return cur;
        cpu_relax();
    }
    for (;;) {
        value.wait(old, std::memory_order_acquire);
        const T cur = value.load(std::memory_order_acquire);
        if (cur != old) return cur;
    }
}

}  // namespace

unsigned available_cpus() noexcept {
#if defined(__linux__)
    cpu_set_t set;
    if (sched_getaffinity(0, sizeof(set), &set) == 0) return std::max(1, CPU_COUNT(&set));
#endif
    return std::max(1u, std::thread::hardware_concurrency());
}

WorkerPool::WorkerPool(unsigned workers, bool pin) : slots_(std::max(1u, workers)) {
    spin_limit_ = available_cpus() >= size() ? 1u << 14 : 0u;
    if (pin) pin_current_thread(0);
    threads_.reserve(size() - 1);
    for (unsigned w = 1; w < size(); ++w) {
        threads_.emplace_back([this, w, pin] {
            if (pin) pin_current_thread(w);
            helper_loop(w);
        });
    }
}

WorkerPool::~WorkerPool() {
    stop_.store(true, std::memory_order_release);
    for (unsigned w = 1; w < size(); ++w) {
        slots_[w].generation.fetch_add(1, std::memory_order_release);
        slots_[w].generation.notify_one();
    }
    threads_.clear();
}

void WorkerPool::helper_loop(unsigned worker) {
    std::uint32_t seen = 0;
    for (;;) {
        seen = await_change(slots_[worker].generation, seen, spin_limit_);
        if (stop_.load(std::memory_order_acquire)) return;
        try {
            (*task_)(worker);
        } catch (...) {
            record_failure();
        }
        if (pending_.fetch_sub(1, std::memory_order_acq_rel) == 1) pending_.notify_one();
    }
}

void WorkerPool::record_failure() noexcept {
    std::lock_guard lock(failure_mutex_);
    if (!failure_) failure_ = std::current_exception();
}

void WorkerPool::wait_for_helpers() {
    for (std::uint32_t p = pending_.load(std::memory_order_acquire); p != 0;
         p = pending_.load(std::memory_order_acquire)) {
        await_change(pending_, p, spin_limit_);
    }
}

void WorkerPool::run(unsigned active, const Task& task) {
    active = std::min(active, size());
    if (active == 0) return;
    if (active > 1) {
        task_ = &task;
        pending_.store(active - 1, std::memory_order_relaxed);
        for (unsigned w = 1; w < active; ++w) {
            slots_[w].generation.fetch_add(1, std::memory_order_release);
            slots_[w].generation.notify_one();
        }
    }
    try {
        task(0);
    } catch (...) {
        record_failure();
    }
    if (active > 1) wait_for_helpers();
    if (failure_) {
        std::exception_ptr e;
        {
            std::lock_guard lock(failure_mutex_);
            std::swap(e, failure_);
        }
        std::rethrow_exception(e);
    }
}

void WorkerPool::parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
    const unsigned active = static_cast<unsigned>(std::min<std::size_t>(count, size()));
    const unsigned stride = std::max(1u, active);
    run(active, [&](unsigned w) {
        for (std::size_t i = w; i < count; i += stride) fn(i);
    });
}

}  // namespace gann
