#include "gann/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace gann {

double recall_at_k(std::span<const VertexId> result, std::span<const VertexId> truth, std::size_t k) {
    if (k == 0) throw std::invalid_argument("recall_at_k: K must be >= 1");
    if (result.size() != k) {
        throw std::invalid_argument("recall_at_k: got " + std::to_string(result.size()) + " results for K=" +
                                    std::to_string(k));
    }
    if (truth.size() < k) throw std::invalid_argument("recall_at_k: truth row shorter than K");
    std::vector<VertexId> want(truth.begin(), truth.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(want.begin(), want.end());
    std::size_t hit = 0;
    std::vector<VertexId> seen;
    seen.reserve(k);
    for (VertexId v : result) {
        if (std::binary_search(want.begin(), want.end(), v) && std::find(seen.begin(), seen.end(), v) == seen.end()) {
            ++hit;
            seen.push_back(v);
        }
    }
    return static_cast<double>(hit) / static_cast<double>(k);
}

RecallReport recall_report(std::span<const std::vector<VertexId>> results, const GroundTruth& truth, std::size_t k) {
    if (results.size() != truth.queries) {
        throw std::invalid_argument("recall_report: " + std::to_string(results.size()) + " results for " +
                                    std::to_string(truth.queries) + " truth rows");
    }
    RecallReport r;
    r.per_query.reserve(results.size());
    for (std::size_t i = 0; i < results.size(); ++i) r.per_query.push_back(recall_at_k(results[i], truth.row(i), k));
    if (!r.per_query.empty()) {
        r.mean = std::accumulate(r.per_query.begin(), r.per_query.end(), 0.0) / static_cast<double>(r.per_query.size());
    }
    return r;
}

double percentile(std::span<const double> samples, double p) {
    if (samples.empty()) throw std::invalid_argument("percentile of an empty sample");
    if (!(p > 0.0 && p <= 100.0)) throw std::invalid_argument("percentile must be in (0, 100]");
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    const auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(sorted.size())));
    return sorted[std::clamp<std::size_t>(rank, 1, sorted.size()) - 1];
}

LatencyReport latency_report(std::vector<double> samples_ns) {
    LatencyReport r;
    if (!samples_ns.empty()) {
        r.mean_ns = std::accumulate(samples_ns.begin(), samples_ns.end(), 0.0) / static_cast<double>(samples_ns.size());
        r.p90_ns = percentile(samples_ns, 90);
        r.p95_ns = percentile(samples_ns, 95);
        r.p99_ns = percentile(samples_ns, 99);
    }
    r.samples_ns = std::move(samples_ns);
    return r;
}

AblationRow summarize_run(const ConfigRun& run) {
    AblationRow row;
    row.config = run.config;
    row.recall = run.recall.mean;
    row.mean_ms = run.latency.mean_ns / 1e6;
    row.p90_ms = run.latency.p90_ns / 1e6;
    row.p95_ms = run.latency.p95_ns / 1e6;
    row.p99_ms = run.latency.p99_ns / 1e6;
    if (run.stats.empty()) return row;

    double compt = 0, steps = 0, merges = 0, dups = 0;
    double expand = 0, merge = 0, seq = 0, total = 0;
    for (const auto& s : run.stats) {
        compt += static_cast<double>(s.distance_computations);
        steps += static_cast<double>(s.global_steps);
        merges += static_cast<double>(s.merges);
        dups += static_cast<double>(s.duplicates_computed);
        expand += static_cast<double>(s.expand_ns);
        merge += static_cast<double>(s.merge_ns);
        seq += static_cast<double>(s.seq_ns);
        total += static_cast<double>(s.total_ns);
    }
    const auto count = static_cast<double>(run.stats.size());
    row.compt = compt / count;
    row.steps = steps / count;
    row.merges = merges / count;
    if (total > 0) {
        row.expand_frac = expand / total;
        row.merge_frac = merge / total;
        row.seq_frac = seq / total;
    }
    if (compt > 0) row.dup_frac = dups / compt;
    return row;
}

std::vector<AblationRow> assemble_ablation(std::span<const ConfigRun> runs) {
    std::vector<AblationRow> rows;
    rows.reserve(runs.size());
    for (const auto& r : runs) rows.push_back(summarize_run(r));
    return rows;
}

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

}  // namespace

void write_ablation_csv(std::ostream& out, std::span<const AblationRow> rows) {
    out << kAblationColumns << '\n';
    std::ostringstream line;
    line.precision(10);
    for (const auto& r : rows) {
        line.str({});
        line << csv_field(r.config) << ',' << r.recall << ',' << r.mean_ms << ',' << r.p90_ms << ',' << r.p95_ms << ','
             << r.p99_ms << ',' << r.compt << ',' << r.steps << ',' << r.merges << ',' << r.expand_frac << ','
             << r.merge_frac << ',' << r.seq_frac << ',' << r.dup_frac;
        out << line.str() << '\n';
    }
}

std::string ablation_csv(std::span<const AblationRow> rows) {
    std::ostringstream out;
    write_ablation_csv(out, rows);
    return out.str();
}

}  // namespace gann
