#include "gann/graph_index.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>

#include "byte_io.hpp"
#include "gann/metric.hpp"

namespace gann {

namespace {

using detail::ByteReader;
using detail::ByteWriter;

using Neighbor = std::pair<float, VertexId>;

// Bounded max-heap of the best `cap` (dist, id) pairs.
class TopK {
public:
    explicit TopK(std::size_t cap) : cap_(cap) { heap_.reserve(cap); }

    void offer(float dist, VertexId id) {
        const Neighbor e{dist, id};
        if (heap_.size() < cap_) {
            heap_.push_back(e);
            std::push_heap(heap_.begin(), heap_.end());
            if (heap_.size() == cap_) worst_ = heap_.front().first;
        } else if (dist <= worst_ && e < heap_.front()) {
            std::pop_heap(heap_.begin(), heap_.end());
            heap_.back() = e;
            std::push_heap(heap_.begin(), heap_.end());
            worst_ = heap_.front().first;
        }
    }

    std::vector<Neighbor> sorted() && {
        std::sort_heap(heap_.begin(), heap_.end());
        return std::move(heap_);
    }

private:
    std::size_t cap_;
    float worst_ = std::numeric_limits<float>::infinity();
    std::vector<Neighbor> heap_;
};

}  // namespace

GraphIndex::GraphIndex(std::shared_ptr<const Dataset> dataset, std::vector<std::uint64_t> offsets,
                       std::vector<VertexId> neighbors, VertexId entry_point, std::uint32_t max_degree)
    : dataset_(std::move(dataset)),
      offsets_(std::move(offsets)),
      neighbors_(std::move(neighbors)),
      entry_point_(entry_point),
      max_degree_(max_degree) {
    if (!dataset_) throw std::invalid_argument("GraphIndex: null dataset");
    if (offsets_.size() < 2) throw std::invalid_argument("GraphIndex: need at least one vertex");
    const std::size_t n = offsets_.size() - 1;
    if (n != dataset_->size()) {
        throw std::invalid_argument("GraphIndex: graph has " + std::to_string(n) + " vertices, dataset has " +
                                    std::to_string(dataset_->size()));
    }
    if (offsets_.front() != 0) throw std::invalid_argument("GraphIndex: offsets[0] != 0");
    if (offsets_.back() != neighbors_.size()) throw std::invalid_argument("GraphIndex: offsets[n] != |neighbors|");
    for (std::size_t v = 0; v < n; ++v) {
        if (offsets_[v + 1] < offsets_[v]) {
            throw std::invalid_argument("GraphIndex: offsets decrease at vertex " + std::to_string(v));
        }
        if (offsets_[v + 1] - offsets_[v] > max_degree_) {
            throw std::invalid_argument("GraphIndex: vertex " + std::to_string(v) + " exceeds max_degree");
        }
        for (auto i = offsets_[v]; i < offsets_[v + 1]; ++i) {
            const VertexId u = neighbors_[i];
            if (u >= n) {
                throw std::invalid_argument("GraphIndex: neighbor id " + std::to_string(u) + " out of range");
            }
            if (u == v) throw std::invalid_argument("GraphIndex: self loop at vertex " + std::to_string(v));
        }
    }
    if (entry_point_ >= n) throw std::invalid_argument("GraphIndex: entry point out of range");
}

bool GraphIndex::same_topology(const GraphIndex& other) const noexcept {
    return offsets_ == other.offsets_ && neighbors_ == other.neighbors_ && entry_point_ == other.entry_point_ &&
           max_degree_ == other.max_degree_;
}

VertexId compute_medoid(const Dataset& ds) {
    if (ds.empty()) throw std::invalid_argument("compute_medoid: empty dataset");
    const std::size_t d = ds.dimension();
    std::vector<double> sum(d, 0.0);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const float* r = ds.row_ptr(i);
        for (std::size_t j = 0; j < d; ++j) sum[j] += r[j];
    }
    std::vector<float> mean(d);
    for (std::size_t j = 0; j < d; ++j) mean[j] = static_cast<float>(sum[j] / static_cast<double>(ds.size()));

    VertexId best = 0;
    float best_dist = std::numeric_limits<float>::infinity();
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const float dist = l2_sq_raw(ds.row_ptr(i), mean.data(), d);
        if (dist < best_dist) {
            best_dist = dist;
            best = static_cast<VertexId>(i);
        }
    }
    return best;
}

GraphIndex build_knn_graph(std::shared_ptr<const Dataset> ds, std::size_t degree, std::uint64_t /*seed*/,
                           unsigned threads) {
    if (!ds) throw std::invalid_argument("build_knn_graph: null dataset");
    const std::size_t n = ds->size();
    const std::size_t d = ds->dimension();
    if (degree < 1 || degree >= n) {
        throw std::invalid_argument("build_knn_graph: degree must be in [1, n), got " + std::to_string(degree) +
                                    " with n=" + std::to_string(n));
    }
    if (n > std::numeric_limits<VertexId>::max()) throw std::invalid_argument("build_knn_graph: too many vertices");

    std::vector<TopK> best(n, TopK(degree));
    const unsigned t = threads != 0 ? threads : std::max(1u, std::thread::hardware_concurrency());

    if (t == 1) {
        // Each pair is evaluated once and offered to both endpoints; tiles keep
        // the touched heaps and rows cache resident.
        constexpr std::size_t kTile = 256;
        for (std::size_t ib = 0; ib < n; ib += kTile) {
            const std::size_t ie = std::min(n, ib + kTile);
            for (std::size_t jb = ib; jb < n; jb += kTile) {
                const std::size_t je = std::min(n, jb + kTile);
                for (std::size_t i = ib; i < ie; ++i) {
                    const float* a = ds->row_ptr(i);
                    for (std::size_t j = std::max(jb, i + 1); j < je; ++j) {
                        const float dist = l2_sq_raw(a, ds->row_ptr(j), d);
                        best[i].offer(dist, static_cast<VertexId>(j));
                        best[j].offer(dist, static_cast<VertexId>(i));
                    }
                }
            }
        }
    } else {
        auto rows = [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) {
                const float* a = ds->row_ptr(i);
                for (std::size_t j = 0; j < n; ++j) {
                    if (j == i) continue;
                    best[i].offer(l2_sq_raw(a, ds->row_ptr(j), d), static_cast<VertexId>(j));
                }
            }
        };
        std::vector<std::jthread> pool;
        const std::size_t chunk = (n + t - 1) / t;
        for (unsigned w = 0; w < t; ++w) {
            const std::size_t b = w * chunk;
            const std::size_t e = std::min(n, b + chunk);
            if (b < e) pool.emplace_back(rows, b, e);
        }
    }

    std::vector<std::uint64_t> offsets(n + 1, 0);
    std::vector<VertexId> neighbors;
    neighbors.reserve(n * degree);
    for (std::size_t v = 0; v < n; ++v) {
        for (const auto& [dist, id] : std::move(best[v]).sorted()) neighbors.push_back(id);
        offsets[v + 1] = neighbors.size();
    }
    const VertexId entry = compute_medoid(*ds);
    return GraphIndex(std::move(ds), std::move(offsets), std::move(neighbors), entry,
                      static_cast<std::uint32_t>(degree));
}

DegreeStats degree_stats(const GraphIndex& g) {
    DegreeStats s;
    const std::size_t n = g.size();
    s.min_out = std::numeric_limits<std::size_t>::max();
    s.in_degree.assign(n, 0);
    for (VertexId v = 0; v < n; ++v) {
        const std::size_t deg = g.degree(v);
        s.min_out = std::min(s.min_out, deg);
        s.max_out = std::max(s.max_out, deg);
        for (VertexId u : g.neighbors(v)) ++s.in_degree[u];
    }
    s.mean_out = static_cast<double>(g.num_edges()) / static_cast<double>(n);
    const std::uint32_t max_in = *std::max_element(s.in_degree.begin(), s.in_degree.end());
    s.in_degree_histogram.assign(static_cast<std::size_t>(max_in) + 1, 0);
    for (std::uint32_t k : s.in_degree) ++s.in_degree_histogram[k];
    return s;
}

std::vector<std::byte> serialize_index(const GraphIndex& g, std::span<const IndexSection> sections) {
    ByteWriter w;
    w.raw(std::as_bytes(std::span(kIndexMagic)));
    w.put<std::uint32_t>(kIndexVersion);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(g.dimension()));
    w.put<std::uint64_t>(g.size());
    w.put<std::uint32_t>(g.max_degree());
    w.put<std::uint32_t>(g.entry_point());
    w.put<std::uint64_t>(g.num_edges());
    for (std::uint64_t o : g.offsets()) w.put(o);
    for (VertexId u : g.flat_neighbors()) w.put(u);
    for (const auto& s : sections) {
        w.raw(std::as_bytes(std::span(s.tag)));
        w.put<std::uint32_t>(s.version);
        w.put<std::uint64_t>(s.payload.size());
        w.raw(s.payload);
    }
    return std::move(w).take();
}

void save_index(const GraphIndex& g, const std::filesystem::path& path, std::span<const IndexSection> sections) {
    const auto bytes = serialize_index(g, sections);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot create " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed on " + path.string());
}

const IndexSection* LoadedIndex::find_section(const char (&tag)[5]) const noexcept {
    for (const auto& s : sections) {
        if (std::memcmp(s.tag, tag, 4) == 0) return &s;
    }
    return nullptr;
}

LoadedIndex deserialize_index(std::span<const std::byte> bytes, std::shared_ptr<const Dataset> ds) {
    if (!ds) throw std::invalid_argument("load_index: null dataset");
    ByteReader r(bytes);
    const auto magic = r.take(sizeof(kIndexMagic));
    if (std::memcmp(magic.data(), kIndexMagic, sizeof(kIndexMagic)) != 0) throw FormatError("bad index magic");
    const auto version = r.get<std::uint32_t>();
    if (version != kIndexVersion) throw FormatError("unsupported index version " + std::to_string(version));
    const auto d = r.get<std::uint32_t>();
    const auto n = r.get<std::uint64_t>();
    const auto max_degree = r.get<std::uint32_t>();
    const auto entry = r.get<std::uint32_t>();
    const auto edges = r.get<std::uint64_t>();
    if (d != ds->dimension() || n != ds->size()) {
        throw FormatError("index (n=" + std::to_string(n) + ", d=" + std::to_string(d) +
                          ") does not match dataset (n=" + std::to_string(ds->size()) +
                          ", d=" + std::to_string(ds->dimension()) + ")");
    }
    // Bound the allocation by what the file can actually hold.
    if ((n + 1) > bytes.size() / 8 || edges > bytes.size() / 4) throw FormatError("index header sizes exceed file");
    std::vector<std::uint64_t> offsets(n + 1);
    for (auto& o : offsets) o = r.get<std::uint64_t>();
    std::vector<VertexId> neighbors(edges);
    for (auto& u : neighbors) u = r.get<std::uint32_t>();

    std::vector<IndexSection> sections;
    while (!r.done()) {
        IndexSection s{};
        const auto tag = r.take(4);
        std::memcpy(s.tag, tag.data(), 4);
        s.version = r.get<std::uint32_t>();
        const auto len = r.get<std::uint64_t>();
        const auto payload = r.take(len);
        s.payload.assign(payload.begin(), payload.end());
        sections.push_back(std::move(s));
    }

    try {
        return LoadedIndex{GraphIndex(std::move(ds), std::move(offsets), std::move(neighbors), entry, max_degree),
                           std::move(sections)};
    } catch (const std::invalid_argument& e) {
        throw FormatError(std::string("index invariant violated: ") + e.what());
    }
}

LoadedIndex load_index(const std::filesystem::path& path, std::shared_ptr<const Dataset> ds) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw IoError("cannot open " + path.string());
    const auto size = static_cast<std::size_t>(in.tellg());
    std::vector<std::byte> bytes(size);
    in.seekg(0);
    if (size > 0 && !in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size))) {
        throw IoError("short read on " + path.string());
    }
    return deserialize_index(bytes, std::move(ds));
}

}  // namespace gann
