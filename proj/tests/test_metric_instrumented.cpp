#include <gtest/gtest.h>

#include "gann/grouping.hpp"
#include "gann/metric.hpp"
#include "gann/search.hpp"
#include "test_util.hpp"

// Linked against the instrumented library: every kernel call bumps a global
// tally, which must agree with the per-search counters.

using namespace gann;

namespace {

GraphIndex small_graph() {
    auto ds = std::make_shared<const Dataset>(gann::testing::random_dataset(2000, 12, 21));
    return build_knn_graph(ds, 10, 0, 1);
}

}  // namespace

TEST(InstrumentedKernel, SequentialSearchesMatchTally) {
    const GraphIndex g = small_graph();
    const Dataset qs = gann::testing::random_dataset(20, 12, 22);
    SearchParams p;
    p.k = 10;
    p.l = 64;
    for (std::size_t i = 0; i < qs.size(); ++i) {
        reset_kernel_invocations();
        const auto r = bfis_search(g, qs.row(i), p);
        EXPECT_EQ(kernel_invocations(), r.stats.distance_computations);
        reset_kernel_invocations();
        const auto t = topm_search(g, qs.row(i), p, 4);
        EXPECT_EQ(kernel_invocations(), t.stats.distance_computations);
    }
}

TEST(InstrumentedKernel, ParallelSearchesMatchTally) {
    const GraphIndex g = small_graph();
    const Dataset qs = gann::testing::random_dataset(20, 12, 23);
    SearchParams p;
    p.k = 10;
    p.l = 64;
    p.threads = 4;
    ParallelSearcher engine(4);
    for (std::size_t i = 0; i < qs.size(); ++i) {
        reset_kernel_invocations();
        const auto r = engine.speedann(g, qs.row(i), p);
        EXPECT_EQ(kernel_invocations(), r.stats.distance_computations);
        reset_kernel_invocations();
        const auto t = engine.topm(g, qs.row(i), p, 4);
        EXPECT_EQ(kernel_invocations(), t.stats.distance_computations);
    }
}

TEST(InstrumentedKernel, TwoLevelSearchMatchesTally) {
    const GraphIndex g = small_graph();
    const TwoLevelIndex tl(g, rank_by_indegree(g), 0.05);
    const Dataset qs = gann::testing::random_dataset(10, 12, 24);
    SearchParams p;
    p.l = 32;
    for (std::size_t i = 0; i < qs.size(); ++i) {
        reset_kernel_invocations();
        const auto r = bfis_search(tl, qs.row(i), p);
        EXPECT_EQ(kernel_invocations(), r.stats.distance_computations);
    }
}
