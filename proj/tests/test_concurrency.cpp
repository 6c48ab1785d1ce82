#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include "gann/visit_map.hpp"
#include "gann/worker_pool.hpp"

using namespace gann;

TEST(VisitMap, SequentialSemantics) {
    VisitMap m(130);
    EXPECT_TRUE(m.test_and_set(5));
    EXPECT_FALSE(m.test_and_set(5));
    EXPECT_TRUE(m.test(5));
    EXPECT_FALSE(m.test(6));
    bool raced = true;
    EXPECT_TRUE(m.test_and_set(129, &raced));
    EXPECT_FALSE(raced);
    EXPECT_TRUE(m.test_and_set_exact(64));
    EXPECT_FALSE(m.test_and_set_exact(64));
    EXPECT_TRUE(m.test_and_set_exclusive(0));
    EXPECT_FALSE(m.test_and_set_exclusive(0));
    EXPECT_EQ(m.count(), 4u);
    m.clear();
    EXPECT_EQ(m.count(), 0u);
    m.reset(10);
    EXPECT_EQ(m.size(), 10u);
    EXPECT_FALSE(m.test(5));
}

TEST(VisitMap, ConcurrentExactClaimsEachBitOnce) {
    constexpr std::size_t n = 1 << 14;
    VisitMap m(n);
    std::atomic<std::size_t> wins{0};
    {
        std::vector<std::jthread> ts;
        for (int t = 0; t < 4; ++t) {
            ts.emplace_back([&] {
                std::size_t mine = 0;
                for (VertexId v = 0; v < n; ++v) mine += m.test_and_set_exact(v);
                wins += mine;
            });
        }
    }
    EXPECT_EQ(wins.load(), n);
    EXPECT_EQ(m.count(), n);
}

TEST(VisitMap, RelaxedRacesAreReportedExactly) {
    // Every successful call either owns the bit or reports the race, so
    // winners minus races is exactly one per vertex.
    constexpr std::size_t n = 1 << 14;
    VisitMap m(n);
    std::atomic<std::size_t> claims{0}, races{0};
    {
        std::vector<std::jthread> ts;
        for (int t = 0; t < 4; ++t) {
            ts.emplace_back([&] {
                std::size_t c = 0, r = 0;
                for (VertexId v = 0; v < n; ++v) {
                    bool raced = false;
                    if (m.test_and_set(v, &raced)) {
                        ++c;
                        r += raced;
                    }
                }
                claims += c;
                races += r;
            });
        }
    }
    EXPECT_EQ(claims.load() - races.load(), n);
}

TEST(WorkerPool, RunsEveryWorkerOnce) {
    WorkerPool pool(5);
    EXPECT_EQ(pool.size(), 5u);
    for (unsigned active : {1u, 3u, 5u, 9u}) {
        std::vector<std::atomic<int>> hits(5);
        pool.run(active, [&](unsigned w) { hits[w]++; });
        for (unsigned w = 0; w < 5; ++w) EXPECT_EQ(hits[w].load(), w < std::min(active, 5u) ? 1 : 0);
    }
}

TEST(WorkerPool, CallerIsWorkerZero) {
    WorkerPool pool(3);
    std::thread::id seen;
    pool.run(3, [&](unsigned w) {
        if (w == 0) seen = std::this_thread::get_id();
    });
    EXPECT_EQ(seen, std::this_thread::get_id());
}

TEST(WorkerPool, ManyRoundsAndParallelFor) {
    WorkerPool pool(4);
    std::atomic<long> sum{0};
    for (int round = 0; round < 2000; ++round) pool.run(4, [&](unsigned w) { sum += w; });
    EXPECT_EQ(sum.load(), 2000L * 6);
    std::vector<int> marks(37, 0);
    pool.parallel_for(37, [&](std::size_t i) { marks[i] += 1; });
    EXPECT_EQ(std::count(marks.begin(), marks.end(), 1), 37);
}

TEST(WorkerPool, PropagatesExceptions) {
    WorkerPool pool(3);
    EXPECT_THROW(pool.run(3,
                          [](unsigned w) {
                              if (w == 2) throw std::runtime_error("boom");
                          }),
                 std::runtime_error);
    std::atomic<int> after{0};
    pool.run(3, [&](unsigned) { after++; });
    EXPECT_EQ(after.load(), 3);
}

TEST(WorkerPool, AvailableCpusPositive) { EXPECT_GE(available_cpus(), 1u); }
