#include <gtest/gtest.h>

#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "gann/eval.hpp"

using namespace gann;

TEST(Recall, SmallCases) {
    const VertexId truth[] = {1, 2, 3};
    const VertexId exact[] = {1, 2, 3};
    const VertexId two[] = {1, 2, 9};
    const VertexId shuffled[] = {3, 1, 2};
    EXPECT_DOUBLE_EQ(recall_at_k(exact, truth, 3), 1.0);
    EXPECT_DOUBLE_EQ(recall_at_k(two, truth, 3), 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(recall_at_k(shuffled, truth, 3), 1.0);
}

TEST(Recall, SizeErrors) {
    const VertexId truth[] = {1, 2, 3};
    const VertexId two[] = {1, 2};
    EXPECT_THROW(recall_at_k(two, truth, 3), std::invalid_argument);
    EXPECT_THROW(recall_at_k(two, std::span(truth, 1), 2), std::invalid_argument);
    EXPECT_THROW(recall_at_k({}, truth, 0), std::invalid_argument);
}

TEST(Recall, OnlyTruthPrefixCounts) {
    const VertexId truth[] = {1, 2, 3, 4};
    const VertexId res[] = {4, 1};
    EXPECT_DOUBLE_EQ(recall_at_k(res, truth, 2), 0.5);
}

TEST(Recall, MatchesSetIntersectionOracle) {
    std::mt19937 rng(4);
    for (int t = 0; t < 500; ++t) {
        const std::size_t k = 1 + rng() % 20;
        std::vector<VertexId> truth, res;
        std::set<VertexId> used_t, used_r;
        while (truth.size() < k + rng() % 5) {
            const VertexId v = rng() % 40;
            if (used_t.insert(v).second) truth.push_back(v);
        }
        while (res.size() < k) {
            const VertexId v = rng() % 40;
            if (used_r.insert(v).second) res.push_back(v);
        }
        std::set<VertexId> prefix(truth.begin(), truth.begin() + static_cast<std::ptrdiff_t>(k));
        std::size_t hit = 0;
        for (VertexId v : res) hit += prefix.count(v);
        const double r = recall_at_k(res, truth, k);
        EXPECT_DOUBLE_EQ(r, static_cast<double>(hit) / static_cast<double>(k));
        EXPECT_GE(r, 0.0);
        EXPECT_LE(r, 1.0);
    }
}

TEST(Recall, ReportMean) {
    GroundTruth gt{2, 2, {0, 1, 2, 3}};
    const std::vector<std::vector<VertexId>> res = {{0, 1}, {2, 9}};
    const auto r = recall_report(res, gt, 2);
    EXPECT_DOUBLE_EQ(r.mean, 0.75);
    EXPECT_EQ(r.per_query, (std::vector<double>{1.0, 0.5}));
    EXPECT_THROW(recall_report(std::span(res).first(1), gt, 2), std::invalid_argument);
}

TEST(Percentile, NearestRank) {
    std::vector<double> s(100);
    for (int i = 0; i < 100; ++i) s[i] = 100 - i;  // unsorted 1..100
    EXPECT_EQ(percentile(s, 99), 99.0);
    EXPECT_EQ(percentile(s, 100), 100.0);
    EXPECT_EQ(percentile(s, 0.5), 1.0);
    const double one[] = {42};
    EXPECT_EQ(percentile(one, 90), 42.0);
    EXPECT_THROW(percentile({}, 50), std::invalid_argument);
    EXPECT_THROW(percentile(one, 0), std::invalid_argument);
    EXPECT_THROW(percentile(one, 101), std::invalid_argument);
}

TEST(Percentile, MatchesSortOracle) {
    std::mt19937 rng(9);
    std::uniform_real_distribution<double> u(0, 1000);
    for (int t = 0; t < 300; ++t) {
        std::vector<double> s(1 + rng() % 200);
        for (auto& x : s) x = u(rng);
        const double p = 1 + rng() % 100;
        auto sorted = s;
        std::sort(sorted.begin(), sorted.end());
        // Smallest value with at least p% of the sample at or below it.
        std::size_t idx = 0;
        while (static_cast<double>(idx + 1) * 100.0 < p * static_cast<double>(s.size())) ++idx;
        EXPECT_EQ(percentile(s, p), sorted[idx]);
    }
}

TEST(Latency, ReportOrdering) {
    std::mt19937 rng(3);
    std::vector<double> s(500);
    for (auto& x : s) x = rng() % 100000;
    const auto r = latency_report(s);
    EXPECT_LE(r.p90_ns, r.p95_ns);
    EXPECT_LE(r.p95_ns, r.p99_ns);
    EXPECT_NEAR(r.mean_ns, std::accumulate(s.begin(), s.end(), 0.0) / 500, 1e-6);
    EXPECT_EQ(r.samples_ns.size(), 500u);
    EXPECT_EQ(latency_report({}).mean_ns, 0.0);
}

namespace {

ConfigRun make_run(const std::string& name, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    ConfigRun run;
    run.config = name;
    run.recall.mean = 0.5 + (rng() % 100) / 200.0;
    std::vector<double> lat;
    for (int q = 0; q < 20; ++q) {
        SearchStats s;
        s.distance_computations = rng() % 5000;
        s.duplicates_computed = s.distance_computations / 50;
        s.global_steps = rng() % 100;
        s.merges = rng() % 10;
        s.expand_ns = static_cast<std::int64_t>(rng() % 1000);
        s.merge_ns = static_cast<std::int64_t>(rng() % 1000);
        s.seq_ns = static_cast<std::int64_t>(rng() % 1000);
        s.total_ns = s.expand_ns + s.merge_ns + s.seq_ns + static_cast<std::int64_t>(rng() % 100);
        run.stats.push_back(s);
        lat.push_back(static_cast<double>(s.total_ns));
    }
    run.latency = latency_report(lat);
    return run;
}

}  // namespace

TEST(Ablation, RowsAndCsv) {
    EXPECT_EQ(ablation_csv({}), std::string(kAblationColumns) + "\n");
    const std::vector<ConfigRun> runs = {make_run("a", 1), make_run("b,c", 2)};
    const auto rows = assemble_ablation(runs);
    ASSERT_EQ(rows.size(), 2u);
    const std::string csv = ablation_csv(rows);
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, kAblationColumns);
    std::getline(in, line);
    EXPECT_EQ(line.substr(0, 2), "a,");
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 12);
    std::getline(in, line);
    EXPECT_EQ(line.substr(0, 6), "\"b,c\",");
}

TEST(Ablation, ValuesMatchRecomputation) {
    const ConfigRun run = make_run("x", 5);
    const AblationRow row = summarize_run(run);
    double compt = 0, steps = 0, merges = 0, dup = 0, ex = 0, mg = 0, sq = 0, tot = 0;
    for (const auto& s : run.stats) {
        compt += s.distance_computations;
        steps += s.global_steps;
        merges += s.merges;
        dup += s.duplicates_computed;
        ex += s.expand_ns;
        mg += s.merge_ns;
        sq += s.seq_ns;
        tot += s.total_ns;
    }
    EXPECT_DOUBLE_EQ(row.compt, compt / 20);
    EXPECT_DOUBLE_EQ(row.steps, steps / 20);
    EXPECT_DOUBLE_EQ(row.merges, merges / 20);
    EXPECT_DOUBLE_EQ(row.dup_frac, dup / compt);
    EXPECT_DOUBLE_EQ(row.expand_frac, ex / tot);
    EXPECT_DOUBLE_EQ(row.merge_frac, mg / tot);
    EXPECT_DOUBLE_EQ(row.seq_frac, sq / tot);
    EXPECT_DOUBLE_EQ(row.mean_ms, run.latency.mean_ns / 1e6);
    EXPECT_DOUBLE_EQ(row.p99_ms, run.latency.p99_ns / 1e6);
    EXPECT_DOUBLE_EQ(row.recall, run.recall.mean);
    EXPECT_LE(row.expand_frac + row.merge_frac + row.seq_frac, 1.0);
}
