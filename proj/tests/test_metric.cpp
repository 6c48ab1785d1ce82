#include <gtest/gtest.h>

#include <cmath>

#include "gann/metric.hpp"
#include "test_util.hpp"

using namespace gann;

TEST(L2, ThreeFourFive) {
    const float a[] = {0, 0};
    const float b[] = {3, 4};
    EXPECT_EQ(l2_sq(a, b), 25.0f);
    EXPECT_EQ(l2_sq(b, b), 0.0f);
}

TEST(L2, DimensionMismatch) {
    const float a[] = {0, 0};
    const float b[] = {3, 4, 5};
    EXPECT_THROW(l2_sq(a, b), std::invalid_argument);
}

TEST(L2, MatchesScalarReference) {
    std::mt19937 rng(1);
    for (std::size_t d : {1, 3, 7, 8, 9, 16, 31, 64, 100, 128, 960}) {
        const Dataset ds = gann::testing::random_dataset(2, d, rng(), -10, 10);
        const double ref = gann::testing::oracle_l2(ds.row(0), ds.row(1));
        EXPECT_NEAR(l2_sq(ds.row(0), ds.row(1)), ref, 1e-5 * ref) << "d=" << d;
        EXPECT_NEAR(l2_sq_reference(ds.row(0), ds.row(1)), ref, 1e-12 * ref);
    }
}

TEST(L2, SymmetricAndZeroOnlyOnEquality) {
    std::mt19937 rng(2);
    for (int t = 0; t < 200; ++t) {
        const Dataset ds = gann::testing::random_dataset(2, 1 + rng() % 70, rng());
        EXPECT_EQ(l2_sq(ds.row(0), ds.row(1)), l2_sq(ds.row(1), ds.row(0)));
        EXPECT_GT(l2_sq(ds.row(0), ds.row(1)), 0.0f);
        EXPECT_EQ(l2_sq(ds.row(0), ds.row(0)), 0.0f);
    }
}

TEST(DistanceCounter, CountsEachCall) {
    DistanceCounter c;
    const float a[] = {1, 2, 3};
    const float b[] = {1, 2, 4};
    EXPECT_EQ(c(a, b, 3), 1.0f);
    c(a, a, 3);
    EXPECT_EQ(c.count, 2u);
}

TEST(KernelCounter, DisabledInDefaultBuild) {
    reset_kernel_invocations();
    const float a[] = {1};
    (void)l2_sq(a, a);
    EXPECT_EQ(kernel_invocations(), 0u);
}
