#include "gann/search.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <stdexcept>
#include <string>

#include "gann/grouping.hpp"
#include "gann/metric.hpp"
#include "gann/visit_map.hpp"
#include "gann/worker_pool.hpp"
#include "search_internal.hpp"

namespace gann {

namespace {

using Clock = std::chrono::steady_clock;

// mean >= l * ratio, with ratio read as the decimal it was written as: 0.8
// is stored slightly above 0.8, which would otherwise turn 80 >= 80 false.
bool mean_reaches(double sum, std::size_t count, std::size_t l, double ratio) noexcept {
    const double threshold = static_cast<double>(l) * ratio;
    return sum / static_cast<double>(count) >= threshold * (1.0 - 1e-12);
}

std::int64_t elapsed_ns(Clock::time_point since) {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - since).count();
}

// Adapts a GraphIndex + its dataset to the interface shared with TwoLevelIndex.
class FlatView {
public:
    explicit FlatView(const GraphIndex& g) : g_(g), ds_(g.dataset()), d_(ds_.dimension()) {}

    std::size_t size() const noexcept { return g_.size(); }
    std::size_t dimension() const noexcept { return d_; }
    VertexId entry_point() const noexcept { return g_.entry_point(); }
    VertexId to_original(VertexId v) const noexcept { return v; }
    const float* vector_ptr(VertexId v) const noexcept { return ds_.row_ptr(v); }

    template <typename Fn>
    void for_each_neighbor(VertexId v, Fn&& fn) const {
        for (VertexId u : g_.neighbors(v)) fn(u, ds_.row_ptr(u));
    }

private:
    const GraphIndex& g_;
    const Dataset& ds_;
    std::size_t d_;
};

template <typename View>
void check_query(const View& g, std::span<const float> query) {
    if (query.size() != g.dimension()) {
        throw std::invalid_argument("query dimension " + std::to_string(query.size()) + " != index dimension " +
                                    std::to_string(g.dimension()));
    }
}

template <typename View>
void fill_result(const View& g, std::span<const Candidate> queue, std::size_t k, SearchResult& out) {
    const std::size_t take = std::min(k, queue.size());
    out.ids.resize(take);
    out.dists.resize(take);
    for (std::size_t i = 0; i < take; ++i) {
        out.ids[i] = g.to_original(queue[i].id);
        out.dists[i] = queue[i].dist;
    }
}

// One best-first expansion of q[index] by the only thread touching `visit`.
// Returns the best landing position among inserted neighbours (kDropped if
// none landed).
template <typename View>
std::size_t expand_exclusive(const View& g, const float* query, QueueRef q, std::size_t index, VisitMap& visit,
                             DistanceCounter& dist, std::uint64_t* counts = nullptr) {
    q[index].checked = true;
    std::size_t best = kDropped;
    const std::size_t d = g.dimension();
    g.for_each_neighbor(q[index].id, [&](VertexId u, const float* vec) {
        if (!visit.test_and_set_exclusive(u)) return;
        if (counts != nullptr) ++counts[g.to_original(u)];
        const std::size_t pos = q.insert(Candidate{u, dist(query, vec, d), false});
        best = std::min(best, pos);
    });
    return best;
}

template <typename View>
void seed_entry(const View& g, const float* query, QueueRef q, VisitMap& visit, DistanceCounter& dist,
                std::uint64_t* counts = nullptr) {
    const VertexId ep = g.entry_point();
    visit.test_and_set_exclusive(ep);
    if (counts != nullptr) ++counts[g.to_original(ep)];
    q.insert(Candidate{ep, dist(query, g.vector_ptr(ep), g.dimension()), false});
}

template <typename View>
SearchResult bfis_impl(const View& g, std::span<const float> query, const SearchParams& p,
                       std::uint64_t* counts = nullptr) {
    p.validate();
    check_query(g, query);
    const auto start = Clock::now();
    SearchResult out;
    VisitMap visit(g.size());
    CandidateQueue queue(p.l);
    DistanceCounter dist;
    seed_entry(g, query.data(), queue.ref(), visit, dist, counts);
    out.stats.seq_ns = elapsed_ns(start);

    const auto expand_start = Clock::now();
    std::size_t cursor = 0;
    for (std::size_t i; (i = queue.first_unchecked(cursor)) != kNone;) {
        const std::size_t landed = expand_exclusive(g, query.data(), queue.ref(), i, visit, dist, counts);
        cursor = std::min(i + 1, landed);
        ++out.stats.global_steps;
    }
    out.stats.expand_ns = elapsed_ns(expand_start);

    out.stats.distance_computations = dist.count;
    out.stats.worker_distance_computations = {dist.count};
    out.stats.local_steps = {out.stats.global_steps};
    fill_result(g, queue.entries(), p.k, out);
    out.stats.total_ns = elapsed_ns(start);
    return out;
}

struct NeighborHit {
    VertexId id;
    float dist;
};

struct alignas(64) ExpandBuffer {
    std::vector<NeighborHit> hits;
    std::uint64_t computations = 0;
};

// Bulk-synchronous Top-M. With a pool the m expansions of a round are spread
// over workers and the visit map is claimed exactly, so the set of computed
// vertices (and thus the result) matches the serial run.
template <typename View>
SearchResult topm_impl(const View& g, std::span<const float> query, const SearchParams& p, unsigned m,
                       WorkerPool* pool, VisitMap& visit, std::vector<ExpandBuffer>& buffers) {
    p.validate();
    check_query(g, query);
    if (m == 0) throw std::invalid_argument("topm: M must be >= 1");
    const auto start = Clock::now();
    SearchResult out;
    const unsigned workers = pool != nullptr ? std::min(pool->size(), p.threads) : 1u;
    buffers.resize(std::max<std::size_t>(buffers.size(), workers));
    visit.reset(g.size());
    CandidateQueue queue(p.l);
    DistanceCounter seed_dist;
    seed_entry(g, query.data(), queue.ref(), visit, seed_dist);
    std::vector<std::uint64_t> per_worker(workers, 0);
    per_worker[0] = seed_dist.count;
    std::vector<std::size_t> active;
    active.reserve(m);
    const std::size_t d = g.dimension();

    for (;;) {
        auto seq_start = Clock::now();
        active.clear();
        for (std::size_t i = queue.first_unchecked(); i != kNone && active.size() < m;
             i = queue.first_unchecked(i + 1)) {
            queue[i].checked = true;
            active.push_back(i);
        }
        if (active.empty()) {
            out.stats.seq_ns += elapsed_ns(seq_start);
            break;
        }
        ++out.stats.global_steps;
        out.stats.width_trace.push_back(static_cast<std::uint32_t>(active.size()));
        std::vector<VertexId> roots(active.size());
        for (std::size_t j = 0; j < active.size(); ++j) roots[j] = queue[active[j]].id;
        out.stats.seq_ns += elapsed_ns(seq_start);

        const auto expand_start = Clock::now();
        const unsigned fan = static_cast<unsigned>(std::min<std::size_t>(workers, roots.size()));
        auto expand = [&](unsigned w) {
            auto& buf = buffers[w];
            buf.hits.clear();
            buf.computations = 0;
            for (std::size_t j = w; j < roots.size(); j += fan) {
                g.for_each_neighbor(roots[j], [&](VertexId u, const float* vec) {
                    const bool fresh = fan > 1 ? visit.test_and_set_exact(u) : visit.test_and_set_exclusive(u);
                    if (!fresh) return;
                    ++buf.computations;
                    buf.hits.push_back(NeighborHit{u, l2_sq_raw(query.data(), vec, d)});
                });
            }
        };
        if (fan > 1) {
            pool->run(fan, expand);
        } else {
            expand(0);
        }
        out.stats.expand_ns += elapsed_ns(expand_start);

        const auto merge_start = Clock::now();
        for (unsigned w = 0; w < fan; ++w) {
            per_worker[w] += buffers[w].computations;
            for (const auto& h : buffers[w].hits) queue.insert(Candidate{h.id, h.dist, false});
        }
        ++out.stats.merges;
        out.stats.merge_ns += elapsed_ns(merge_start);
    }

    out.stats.worker_distance_computations = per_worker;
    for (auto c : per_worker) out.stats.distance_computations += c;
    out.stats.local_steps.assign(workers, 0);
    out.stats.local_steps[0] = out.stats.global_steps;
    fill_result(g, queue.entries(), p.k, out);
    out.stats.total_ns = elapsed_ns(start);
    return out;
}

template <typename View>
std::uint64_t run_prelude(const View& g, const float* query, QueueRef q, VisitMap& visit, DistanceCounter& dist,
                          unsigned steps) {
    seed_entry(g, query, q, visit, dist);
    std::uint64_t done = 0;
    for (std::size_t cursor = 0; done < steps; ++done) {
        const std::size_t i = q.first_unchecked(cursor);
        if (i == kNone) break;
        const std::size_t landed = expand_exclusive(g, query, q, i, visit, dist);
        cursor = std::min(i + 1, landed);
    }
    return done;
}

}  // namespace

void SearchParams::validate() const {
    if (k < 1) throw std::invalid_argument("SearchParams: K must be >= 1");
    if (l < k) throw std::invalid_argument("SearchParams: L must be >= K");
    if (threads < 1) throw std::invalid_argument("SearchParams: T must be >= 1");
    if (!(ratio > 0.0 && ratio <= 1.0)) throw std::invalid_argument("SearchParams: R must be in (0, 1]");
    if (stage_interval < 1) throw std::invalid_argument("SearchParams: stage interval must be >= 1");
    const unsigned cap = effective_m_cap();
    if (m_start < 1 || m_start > cap || cap > threads) {
        throw std::invalid_argument("SearchParams: need 1 <= M_start <= M_cap <= T");
    }
}

bool check_metrics(std::span<const std::uint32_t> positions, std::size_t l, double ratio) {
    if (positions.empty()) throw std::invalid_argument("check_metrics: no active workers");
    double sum = 0.0;
    for (auto u : positions) sum += u;
    return mean_reaches(sum, positions.size(), l, ratio);
}

std::vector<std::vector<Candidate>> divide_unchecked(CandidateQueue& global, unsigned workers) {
    if (workers == 0) throw std::invalid_argument("divide_unchecked: need at least one worker");
    std::vector<std::vector<Candidate>> lists(workers);
    std::vector<Candidate> checked;
    std::size_t rank = 0;
    for (const auto& c : global.entries()) {
        if (c.checked) {
            checked.push_back(c);
        } else {
            lists[rank++ % workers].push_back(c);
        }
    }
    global.ref().assign(checked);
    return lists;
}

SearchResult bfis_search(const GraphIndex& g, std::span<const float> query, const SearchParams& p) {
    return bfis_impl(FlatView(g), query, p);
}

SearchResult bfis_search(const TwoLevelIndex& g, std::span<const float> query, const SearchParams& p) {
    return bfis_impl(g, query, p);
}

SearchResult topm_search(const GraphIndex& g, std::span<const float> query, const SearchParams& p, unsigned m) {
    VisitMap visit;
    std::vector<ExpandBuffer> buffers;
    return topm_impl(FlatView(g), query, p, m, nullptr, visit, buffers);
}

SearchResult topm_search(const TwoLevelIndex& g, std::span<const float> query, const SearchParams& p,
                         unsigned m) {
    VisitMap visit;
    std::vector<ExpandBuffer> buffers;
    return topm_impl(g, query, p, m, nullptr, visit, buffers);
}

PrimedQueue two_stage_prelude(const GraphIndex& g, std::span<const float> query, const SearchParams& p,
                              unsigned warmup_steps) {
    p.validate();
    const FlatView view(g);
    check_query(view, query);
    PrimedQueue out{CandidateQueue(p.l)};
    VisitMap visit(g.size());
    DistanceCounter dist;
    out.expansions = run_prelude(view, query.data(), out.queue.ref(), visit, dist, warmup_steps);
    out.distance_computations = dist.count;
    return out;
}

namespace detail {

SearchResult bfis_search_counting(const GraphIndex& g, std::span<const float> query, const SearchParams& p,
                                  std::span<std::uint64_t> counts) {
    if (counts.size() != g.size()) throw std::invalid_argument("visit count buffer has wrong length");
    return bfis_impl(FlatView(g), query, p, counts.data());
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Parallel engine
// ---------------------------------------------------------------------------

struct ParallelSearcher::Impl {
    struct alignas(64) WorkerState {
        std::atomic<std::uint32_t> update_position{0};
        std::atomic<bool> finished{false};
        std::uint64_t computations = 0;
        std::uint64_t local_steps = 0;
        std::uint64_t duplicates = 0;
    };

    explicit Impl(unsigned workers, bool pin) : pool(workers, pin), states(new WorkerState[pool.size()]) {}

    template <typename View>
    SearchResult speedann(const View& g, std::span<const float> query, const SearchParams& p);

    WorkerPool pool;
    VisitMap visit;
    LocalQueueBlock block;
    std::vector<ExpandBuffer> buffers;
    std::unique_ptr<WorkerState[]> states;
    std::vector<unsigned> active;
    std::vector<std::vector<Candidate>> dealt;
    alignas(64) std::atomic<bool> do_merge{false};
    alignas(64) std::atomic<std::uint32_t> checker{0};
};

template <typename View>
SearchResult ParallelSearcher::Impl::speedann(const View& g, std::span<const float> query, const SearchParams& p) {
    p.validate();
    check_query(g, query);
    if (p.threads > pool.size()) {
        throw std::invalid_argument("speedann: T=" + std::to_string(p.threads) + " exceeds the pool's " +
                                    std::to_string(pool.size()) + " workers");
    }
    const auto start = Clock::now();
    const unsigned threads = p.threads;
    const std::size_t l = p.l;
    const std::size_t d = g.dimension();
    const float* q = query.data();
    const std::size_t global_slot = threads;

    SearchResult out;
    SearchStats& stats = out.stats;
    stats.worker_distance_computations.assign(threads, 0);
    stats.local_steps.assign(threads, 0);

    visit.reset(g.size());
    block.reset(threads + 1, l);
    QueueRef global = block.region(global_slot);

    DistanceCounter seed_dist;
    stats.warmup_steps = run_prelude(g, q, global, visit, seed_dist, p.warmup_steps);
    stats.worker_distance_computations[0] += seed_dist.count;

    const bool adaptive = p.sync == SyncMode::kAdaptive;
    const bool parallel_merge =
        p.merge == MergeMode::kParallel || (p.merge == MergeMode::kAuto && available_cpus() >= threads && threads > 2);
    const unsigned m_cap = p.effective_m_cap();
    // Without sync points there is nothing to stage on: all workers start at once.
    unsigned width = adaptive ? p.m_start : m_cap;
    std::uint32_t checker_turn = 0;
    std::vector<std::size_t> merge_order;
    stats.seq_ns += elapsed_ns(start);

    for (;;) {
        // Sequential part: deal the unchecked global candidates to the active workers.
        const auto seq_start = Clock::now();
        const unsigned w_count = std::min(width, threads);
        dealt.resize(std::max<std::size_t>(dealt.size(), w_count));
        for (unsigned w = 0; w < w_count; ++w) dealt[w].clear();
        std::size_t rank = 0;
        std::size_t kept = 0;
        for (std::size_t i = 0; i < global.size(); ++i) {
            const Candidate c = global[i];
            if (c.checked) {
                global[kept++] = c;
            } else {
                dealt[rank++ % w_count].push_back(c);
            }
        }
        for (unsigned w = 0; w < w_count; ++w) block.region(w).assign(dealt[w]);
        global.resize(kept);
        if (rank == 0) {
            stats.seq_ns += elapsed_ns(seq_start);
            break;
        }

        active.clear();
        for (unsigned w = 0; w < w_count; ++w) {
            WorkerState& s = states[w];
            s.update_position.store(0, std::memory_order_relaxed);
            s.finished.store(false, std::memory_order_relaxed);
            s.computations = 0;
            s.local_steps = 0;
            s.duplicates = 0;
            if (!block.region(w).empty()) active.push_back(w);
        }
        const std::uint32_t designated = checker_turn % w_count;
        checker.store(designated, std::memory_order_relaxed);
        do_merge.store(false, std::memory_order_relaxed);
        stats.width_trace.push_back(w_count);
        stats.checker_trace.push_back(designated);
        ++stats.global_steps;
        stats.seq_ns += elapsed_ns(seq_start);

        // Expanding part: private best-first subsearches.
        const auto expand_start = Clock::now();
        const std::span<const Candidate> global_checked = block.entries(global_slot);
        std::atomic<bool> triggered{false};
        auto subsearch = [&](unsigned w) {
            WorkerState& me = states[w];
            QueueRef local = block.region(w);
            DistanceCounter dist;
            auto finish = [&] {
                me.update_position.store(static_cast<std::uint32_t>(l), std::memory_order_relaxed);
                me.finished.store(true, std::memory_order_seq_cst);
                if (checker.load(std::memory_order_seq_cst) != w) return;
                // Hand the checker role to the next worker still searching.
                for (unsigned k = 1; k < w_count; ++k) {
                    const unsigned next = (w + k) % w_count;
                    if (!block.entries(next).empty() && !states[next].finished.load(std::memory_order_seq_cst)) {
                        checker.store(next, std::memory_order_seq_cst);
                        break;
                    }
                }
            };
            if (local.empty()) {
                finish();
                return;
            }
            std::size_t cursor = 0;
            while (!do_merge.load(std::memory_order_acquire)) {
                const std::size_t i = local.first_unchecked(cursor);
                if (i == kNone) break;
                // Cannot reach the merged top-l even against the global checked
                // entries alone; neither can anything after it.
                if (i + rank_of(global_checked, local[i]) >= l) break;
                local[i].checked = true;
                cursor = i + 1;
                std::size_t best = l;
                g.for_each_neighbor(local[i].id, [&](VertexId u, const float* vec) {
                    bool raced = false;
                    if (!visit.test_and_set(u, &raced)) return;
                    if (raced) ++me.duplicates;
                    const std::size_t pos = local.insert(Candidate{u, dist(q, vec, d), false});
                    if (pos != kDropped) {
                        best = std::min(best, pos);
                        cursor = std::min(cursor, pos);
                    }
                });
                ++me.local_steps;
                me.update_position.store(static_cast<std::uint32_t>(best), std::memory_order_relaxed);
                if (adaptive && checker.load(std::memory_order_relaxed) == w) {
                    double sum = 0.0;
                    for (unsigned a : active) sum += states[a].update_position.load(std::memory_order_relaxed);
                    if (mean_reaches(sum, active.size(), l, p.ratio)) {
                        triggered.store(true, std::memory_order_relaxed);
                        do_merge.store(true, std::memory_order_release);
                        break;
                    }
                }
            }
            me.computations = dist.count;
            finish();
        };
        pool.run(w_count, subsearch);
        stats.expand_ns += elapsed_ns(expand_start);

        // Merging part: fold local queues into the global one.
        const auto merge_start = Clock::now();
        for (unsigned w = 0; w < w_count; ++w) {
            stats.worker_distance_computations[w] += states[w].computations;
            stats.local_steps[w] += states[w].local_steps;
            stats.duplicates_computed += states[w].duplicates;
        }
        merge_order.clear();
        for (unsigned w = 0; w < w_count; ++w) merge_order.push_back(w);
        merge_order.push_back(global_slot);
        ParallelFor par;
        if (parallel_merge) {
            par = [this](std::size_t count, const std::function<void(std::size_t)>& fn) {
                pool.parallel_for(count, fn);
            };
        }
        stats.duplicates_collapsed += tree_merge_in_place(block, merge_order, l, par);
        ++stats.merges;
        stats.sync_trace.push_back(triggered.load(std::memory_order_relaxed) ? 1 : 0);
        if (stats.sync_trace.back() != 0) {
            ++stats.sync_triggers;
            ++checker_turn;
        } else {
            ++stats.exhaustion_merges;
        }
        if (stats.global_steps % p.stage_interval == 0) width = std::min(width * 2, m_cap);
        stats.merge_ns += elapsed_ns(merge_start);
    }

    for (auto c : stats.worker_distance_computations) stats.distance_computations += c;
    fill_result(g, block.entries(global_slot), p.k, out);
    stats.total_ns = elapsed_ns(start);
    return out;
}

ParallelSearcher::ParallelSearcher(unsigned workers, bool pin) : impl_(std::make_unique<Impl>(workers, pin)) {}
ParallelSearcher::~ParallelSearcher() = default;
ParallelSearcher::ParallelSearcher(ParallelSearcher&&) noexcept = default;
ParallelSearcher& ParallelSearcher::operator=(ParallelSearcher&&) noexcept = default;

unsigned ParallelSearcher::workers() const noexcept { return impl_->pool.size(); }

SearchResult ParallelSearcher::topm(const GraphIndex& g, std::span<const float> query, const SearchParams& p,
                                    unsigned m) {
    return topm_impl(FlatView(g), query, p, m, &impl_->pool, impl_->visit, impl_->buffers);
}

SearchResult ParallelSearcher::topm(const TwoLevelIndex& g, std::span<const float> query, const SearchParams& p,
                                    unsigned m) {
    return topm_impl(g, query, p, m, &impl_->pool, impl_->visit, impl_->buffers);
}

SearchResult ParallelSearcher::speedann(const GraphIndex& g, std::span<const float> query, const SearchParams& p) {
    return impl_->speedann(FlatView(g), query, p);
}

SearchResult ParallelSearcher::speedann(const TwoLevelIndex& g, std::span<const float> query,
                                        const SearchParams& p) {
    return impl_->speedann(g, query, p);
}

SearchResult speedann_search(const GraphIndex& g, std::span<const float> query, const SearchParams& p) {
    ParallelSearcher engine(p.threads);
    return engine.speedann(g, query, p);
}

}  // namespace gann
