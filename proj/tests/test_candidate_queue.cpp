#include <gtest/gtest.h>

#include "gann/candidate_queue.hpp"
#include "queue_oracle.hpp"

using namespace gann;
using gann::testing::CandidateSource;
using gann::testing::reference_merge;

namespace {

std::vector<Candidate> contents(const CandidateQueue& q) { return {q.entries().begin(), q.entries().end()}; }

CandidateQueue queue_of(std::size_t cap, std::initializer_list<Candidate> items) {
    CandidateQueue q(cap);
    for (const auto& c : items) q.insert(c);
    return q;
}

}  // namespace

TEST(Insert, IntoEmpty) {
    CandidateQueue q(3);
    EXPECT_EQ(q.insert({5, 2.0f}), 0u);
    EXPECT_EQ(q.size(), 1u);
}

TEST(Insert, EvictsWorstWhenFull) {
    CandidateQueue q = queue_of(2, {{1, 1.0f}, {2, 3.0f}});
    EXPECT_EQ(q.insert({7, 2.0f}), 1u);
    EXPECT_EQ(contents(q), (std::vector<Candidate>{{1, 1.0f}, {7, 2.0f}}));
}

TEST(Insert, DropsWorseThanLastWhenFull) {
    CandidateQueue q = queue_of(2, {{1, 1.0f}, {2, 3.0f}});
    EXPECT_EQ(q.insert({7, 4.0f}), kDropped);
    EXPECT_EQ(q.insert({7, 3.0f}), kDropped);  // ties go to the lower id, 2 stays
    EXPECT_EQ(contents(q), (std::vector<Candidate>{{1, 1.0f}, {2, 3.0f}}));
}

TEST(Insert, DuplicateIdDropped) {
    CandidateQueue q = queue_of(4, {{1, 1.0f, true}, {2, 3.0f}});
    EXPECT_EQ(q.insert({1, 1.0f, false}), kDropped);
    EXPECT_TRUE(q[0].checked);
    EXPECT_EQ(q.size(), 2u);
}

TEST(Insert, TieBreakById) {
    CandidateQueue q(4);
    q.insert({9, 1.0f});
    EXPECT_EQ(q.insert({3, 1.0f}), 0u);
    EXPECT_EQ(q.insert({5, 1.0f}), 1u);
}

TEST(FirstUnchecked, Cases) {
    CandidateQueue q = queue_of(4, {{1, 1.0f, true}, {2, 2.0f}, {3, 3.0f}});
    EXPECT_EQ(q.first_unchecked(), 1u);
    EXPECT_EQ(q.first_unchecked(2), 2u);
    q[1].checked = q[2].checked = true;
    EXPECT_EQ(q.first_unchecked(), kNone);
    EXPECT_EQ(CandidateQueue(3).first_unchecked(), kNone);
}

TEST(Resize, TruncatesOnly) {
    CandidateQueue q = queue_of(4, {{1, 1.0f, true}, {2, 2.0f}, {3, 3.0f}});
    q.resize(5);
    EXPECT_EQ(q.size(), 3u);
    q.resize(2);
    EXPECT_EQ(contents(q), (std::vector<Candidate>{{1, 1.0f, true}, {2, 2.0f}}));
}

TEST(MergePair, CheckedWins) {
    CandidateQueue dst = queue_of(4, {{1, 1.0f, true}});
    CandidateQueue src = queue_of(4, {{1, 1.0f, false}});
    EXPECT_EQ(merge_pair(dst, src, 4), 1u);
    EXPECT_EQ(contents(dst), (std::vector<Candidate>{{1, 1.0f, true}}));

    dst = queue_of(4, {{1, 1.0f, false}});
    src = queue_of(4, {{1, 1.0f, true}});
    merge_pair(dst, src, 4);
    EXPECT_TRUE(dst[0].checked);
}

TEST(MergePair, DisjointKeepsBest) {
    CandidateQueue dst = queue_of(4, {{1, 1.0f}, {3, 3.0f}});
    CandidateQueue src = queue_of(4, {{2, 2.0f}, {4, 4.0f}});
    EXPECT_EQ(merge_pair(dst, src, 3), 0u);
    EXPECT_EQ(contents(dst), (std::vector<Candidate>{{1, 1.0f}, {2, 2.0f}, {3, 3.0f}}));
}

TEST(MergePair, CountsDuplicatesBeyondTheCut) {
    CandidateQueue dst = queue_of(4, {{1, 1.0f}, {3, 3.0f}});
    CandidateQueue src = queue_of(4, {{2, 2.0f}, {3, 3.0f}});
    EXPECT_EQ(merge_pair(dst, src, 1), 1u);
    EXPECT_EQ(dst.size(), 1u);
}

TEST(TreeMergeLevel, PairsFoldTowardsLast) {
    using P = std::pair<std::size_t, std::size_t>;
    EXPECT_EQ(tree_merge_level(4, 1), (std::vector<P>{{3, 2}, {1, 0}}));
    EXPECT_EQ(tree_merge_level(4, 2), (std::vector<P>{{3, 1}}));
    EXPECT_TRUE(tree_merge_level(4, 4).empty());
    EXPECT_EQ(tree_merge_level(5, 1), (std::vector<P>{{4, 3}, {2, 1}}));
    EXPECT_TRUE(tree_merge_level(1, 1).empty());
}

TEST(TreeMerge, SingleRegionIsIdentity) {
    LocalQueueBlock block(1, 4);
    block.region(0).insert({3, 1.0f, true});
    block.region(0).insert({1, 2.0f});
    const CandidateQueue out = tree_merge(block, 4);
    EXPECT_EQ(contents(out), (std::vector<Candidate>{{3, 1.0f, true}, {1, 2.0f}}));
}

TEST(TreeMerge, AllEmpty) {
    LocalQueueBlock block(6, 4);
    EXPECT_TRUE(tree_merge(block, 4).empty());
}

TEST(TreeMerge, FourRegionsEqualSequentialFold) {
    LocalQueueBlock block(4, 3);
    const std::vector<std::vector<Candidate>> parts = {
        {{1, 1.0f}, {5, 5.0f}},
        {{2, 2.0f, true}, {5, 5.0f, true}},
        {{0, 0.5f}},
        {{2, 2.0f}, {7, 7.0f}, {8, 8.0f}},
    };
    for (std::size_t r = 0; r < 4; ++r) block.region(r).assign(parts[r]);
    CandidateQueue fold(3);
    for (const auto& p : parts) {
        CandidateQueue src(3);
        src.ref().assign(p);
        merge_pair(fold, src, 3);
    }
    const CandidateQueue tree = tree_merge(block, 3);
    EXPECT_EQ(contents(tree), contents(fold));
    EXPECT_EQ(contents(tree), (std::vector<Candidate>{{0, 0.5f}, {1, 1.0f}, {2, 2.0f, true}}));
}

TEST(TreeMerge, OrderSubsetLeavesOtherRegions) {
    LocalQueueBlock block(4, 4);
    block.region(0).insert({1, 1.0f});
    block.region(1).insert({2, 2.0f});
    block.region(2).insert({9, 9.0f});
    block.region(3).insert({3, 3.0f});
    const std::size_t order[] = {0, 1, 3};
    tree_merge_in_place(block, order, 4);
    EXPECT_EQ(block.entries(3).size(), 3u);
    EXPECT_EQ(block.entries(2).size(), 1u);
}

TEST(Properties, RandomOperationsMatchReference) {
    CandidateSource src(99, 300);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t cap = 1 + src.rng()() % 40;
        CandidateQueue q(cap);
        std::vector<Candidate> inserted;
        for (int op = 0; op < 60; ++op) {
            const Candidate c = src.draw();
            const bool present = std::any_of(q.entries().begin(), q.entries().end(),
                                             [&](const Candidate& e) { return e.id == c.id; });
            const std::size_t pos = q.insert(c);
            if (present) {
                ASSERT_EQ(pos, kDropped);
            } else {
                inserted.push_back(c);
                if (pos != kDropped) ASSERT_EQ(q[pos], c);
            }
            ASSERT_TRUE(gann::testing::queue_invariants(q.entries(), cap));
        }
        // Nothing is removed except by eviction, so the queue holds the best
        // `cap` distinct ids ever offered (checked flags aside).
        auto strip = [](std::vector<Candidate> v) {
            for (auto& c : v) c.checked = false;
            return v;
        };
        ASSERT_EQ(strip(contents(q)), strip(reference_merge({strip(inserted)}, cap)));
        const std::size_t cut = src.rng()() % (cap + 2);
        std::vector<Candidate> before = contents(q);
        q.resize(cut);
        before.resize(std::min(before.size(), cut));
        ASSERT_EQ(contents(q), before);
    }
}

TEST(Properties, MergePairMatchesReference) {
    CandidateSource src(7, 120);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t cap = 1 + src.rng()() % 30;
        const std::size_t limit = 1 + src.rng()() % cap;
        const auto a = src.run(cap);
        const auto b = src.run(cap);
        CandidateQueue dst(cap);
        dst.ref().assign(a);
        std::vector<Candidate> scratch(cap);
        merge_pair(dst.ref(), b, limit, scratch);
        ASSERT_EQ(contents(dst), reference_merge({a, b}, limit)) << "trial " << trial;
    }
}

TEST(Properties, TreeMergeMatchesReferenceAndParallel) {
    CandidateSource src(8, 200);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t regions = 1 + src.rng()() % 17;
        const std::size_t cap = 1 + src.rng()() % 25;
        LocalQueueBlock block(regions, cap);
        std::vector<std::vector<Candidate>> parts;
        for (std::size_t r = 0; r < regions; ++r) {
            parts.push_back(src.run(cap));
            block.region(r).assign(parts.back());
        }
        const auto want = reference_merge(parts, cap);
        ASSERT_EQ(contents(tree_merge(block, cap)), want);

        std::size_t calls = 0;
        ParallelFor serial_pf = [&](std::size_t n, const std::function<void(std::size_t)>& fn) {
            ++calls;
            for (std::size_t i = n; i-- > 0;) fn(i);
        };
        tree_merge_in_place(block, cap, serial_pf);
        const auto folded = block.entries(regions - 1);
        ASSERT_EQ(std::vector<Candidate>(folded.begin(), folded.end()), want);
    }
}
