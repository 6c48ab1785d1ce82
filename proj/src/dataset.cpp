#include "gann/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <queue>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>

#include "gann/metric.hpp"

namespace gann {

namespace {

static_assert(sizeof(float) == 4 && sizeof(std::int32_t) == 4);

std::uint32_t byteswap32(std::uint32_t v) noexcept {
    return ((v & 0x000000FFu) << 24) | ((v & 0x0000FF00u) << 8) | ((v & 0x00FF0000u) >> 8) |
           ((v & 0xFF000000u) >> 24);
}

std::uint32_t load_le32(const std::byte* p) noexcept {
    std::uint32_t v;
    std::memcpy(&v, p, 4);
    if constexpr (std::endian::native == std::endian::big) v = byteswap32(v);
    return v;
}

void store_le32(std::byte* p, std::uint32_t v) noexcept {
    if constexpr (std::endian::native == std::endian::big) v = byteswap32(v);
    std::memcpy(p, &v, 4);
}

std::vector<std::byte> slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw IoError("cannot open " + path.string());
    const auto size = static_cast<std::size_t>(in.tellg());
    std::vector<std::byte> bytes(size);
    in.seekg(0);
    if (size > 0 && !in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size))) {
        throw IoError("short read on " + path.string());
    }
    return bytes;
}

void spill(const std::filesystem::path& path, std::span<const std::byte> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot create " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed on " + path.string());
}

// Shared record walker for fvecs/ivecs: every record is [int32 width][width x 4 bytes].
// Returns (rows, width) and hands each payload word to `sink`.
template <typename Sink>
std::pair<std::size_t, std::size_t> walk_records(std::span<const std::byte> bytes,
                                                 std::string_view source, Sink&& sink) {
    if (bytes.empty()) throw FormatError(std::string(source) + ": empty file");
    if (bytes.size() < 4) throw FormatError(std::string(source) + ": truncated header");
    const auto first = static_cast<std::int32_t>(load_le32(bytes.data()));
    if (first <= 0) {
        throw FormatError(std::string(source) + ": non-positive record width " + std::to_string(first));
    }
    const auto width = static_cast<std::size_t>(first);
    const std::size_t record = 4 + 4 * width;
    if (bytes.size() % record != 0) {
        // Either truncated, or a later record declares another width.
        for (std::size_t off = 0; off + 4 <= bytes.size(); off += record) {
            const auto w = static_cast<std::int32_t>(load_le32(bytes.data() + off));
            if (w != first) {
                throw FormatError(std::string(source) + ": inconsistent record width at byte " +
                                  std::to_string(off) + " (" + std::to_string(w) + " vs " +
                                  std::to_string(first) + ")");
            }
        }
        throw FormatError(std::string(source) + ": truncated file (" + std::to_string(bytes.size()) +
                          " bytes is not a multiple of record size " + std::to_string(record) + ")");
    }
    const std::size_t rows = bytes.size() / record;
    for (std::size_t r = 0; r < rows; ++r) {
        const std::byte* rec = bytes.data() + r * record;
        const auto w = static_cast<std::int32_t>(load_le32(rec));
        if (w != first) {
            throw FormatError(std::string(source) + ": inconsistent record width in record " +
                              std::to_string(r) + " (" + std::to_string(w) + " vs " +
                              std::to_string(first) + ")");
        }
        for (std::size_t j = 0; j < width; ++j) sink(r, j, load_le32(rec + 4 + 4 * j));
    }
    return {rows, width};
}

template <typename Word>
std::vector<std::byte> encode_records(std::size_t rows, std::size_t width, std::span<const Word> values) {
    std::vector<std::byte> out(rows * (4 + 4 * width));
    std::byte* p = out.data();
    for (std::size_t r = 0; r < rows; ++r) {
        store_le32(p, static_cast<std::uint32_t>(width));
        p += 4;
        for (std::size_t j = 0; j < width; ++j, p += 4) {
            store_le32(p, std::bit_cast<std::uint32_t>(values[r * width + j]));
        }
    }
    return out;
}

std::uint64_t splitmix64(std::uint64_t& state) noexcept {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t state = seed ^ (0xD1B54A32D192ED03ull * (stream + 1));
    std::seed_seq seq{splitmix64(state), splitmix64(state), splitmix64(state), splitmix64(state)};
    return std::mt19937_64(seq);
}

unsigned resolve_threads(unsigned requested, std::size_t work) {
    unsigned t = requested != 0 ? requested : std::max(1u, std::thread::hardware_concurrency());
    return static_cast<unsigned>(std::min<std::size_t>(t, std::max<std::size_t>(work, 1)));
}

}  // namespace

Dataset::Dataset(std::size_t n, std::size_t d, std::vector<float> values)
    : n_(n), d_(d), values_(std::move(values)) {
    if (n_ == 0) throw std::invalid_argument("Dataset: n must be >= 1");
    if (d_ == 0) throw std::invalid_argument("Dataset: d must be >= 1");
    if (values_.size() != n_ * d_) {
        throw std::invalid_argument("Dataset: expected " + std::to_string(n_ * d_) + " values, got " +
                                    std::to_string(values_.size()));
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!std::isfinite(values_[i])) {
            throw std::invalid_argument("Dataset: non-finite value in row " + std::to_string(i / d_));
        }
    }
}

Dataset parse_fvecs(std::span<const std::byte> bytes, std::string_view source) {
    std::vector<float> values;
    std::size_t width_hint = 0;
    if (bytes.size() >= 4) width_hint = load_le32(bytes.data());
    if (width_hint > 0 && bytes.size() % (4 + 4 * width_hint) == 0) {
        values.reserve(bytes.size() / (4 + 4 * width_hint) * width_hint);
    }
    auto [rows, width] = walk_records(bytes, source, [&](std::size_t, std::size_t, std::uint32_t w) {
        values.push_back(std::bit_cast<float>(w));
    });
    try {
        return Dataset(rows, width, std::move(values));
    } catch (const std::invalid_argument& e) {
        throw FormatError(std::string(source) + ": " + e.what());
    }
}

IntMatrix parse_ivecs(std::span<const std::byte> bytes, std::string_view source) {
    IntMatrix m;
    auto [rows, width] = walk_records(bytes, source, [&](std::size_t, std::size_t, std::uint32_t w) {
        m.values.push_back(static_cast<std::int32_t>(w));
    });
    m.rows = rows;
    m.cols = width;
    return m;
}

Dataset read_fvecs(const std::filesystem::path& path) {
    const auto bytes = slurp(path);
    return parse_fvecs(bytes, path.string());
}

void write_fvecs(const Dataset& ds, const std::filesystem::path& path) {
    if (ds.empty()) throw std::invalid_argument("write_fvecs: dataset is empty");
    spill(path, encode_records(ds.size(), ds.dimension(), ds.values()));
}

IntMatrix read_ivecs(const std::filesystem::path& path) {
    const auto bytes = slurp(path);
    return parse_ivecs(bytes, path.string());
}

void write_ivecs(const IntMatrix& m, const std::filesystem::path& path) {
    if (m.rows == 0 || m.cols == 0) throw std::invalid_argument("write_ivecs: matrix is empty");
    if (m.values.size() != m.rows * m.cols) throw std::invalid_argument("write_ivecs: shape mismatch");
    spill(path, encode_records(m.rows, m.cols, std::span<const std::int32_t>(m.values)));
}

GroundTruth ground_truth_from_ivecs(const IntMatrix& m, std::size_t n) {
    GroundTruth gt;
    gt.queries = m.rows;
    gt.k = m.cols;
    gt.ids.reserve(m.values.size());
    for (std::size_t r = 0; r < m.rows; ++r) {
        auto row = m.row(r);
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (row[j] < 0 || static_cast<std::size_t>(row[j]) >= n) {
                throw FormatError("ground truth id " + std::to_string(row[j]) + " out of range [0, " +
                                  std::to_string(n) + ") in row " + std::to_string(r));
            }
            for (std::size_t k = 0; k < j; ++k) {
                if (row[k] == row[j]) {
                    throw FormatError("duplicate ground truth id in row " + std::to_string(r));
                }
            }
            gt.ids.push_back(static_cast<VertexId>(row[j]));
        }
    }
    return gt;
}

IntMatrix ground_truth_to_ivecs(const GroundTruth& gt) {
    IntMatrix m;
    m.rows = gt.queries;
    m.cols = gt.k;
    m.values.assign(gt.ids.begin(), gt.ids.end());
    return m;
}

Dataset gen_synthetic(const SyntheticSpec& spec, std::uint64_t stream) {
    if (spec.n == 0 || spec.d == 0) throw std::invalid_argument("gen_synthetic: n and d must be >= 1");
    std::vector<float> values(spec.n * spec.d);
    switch (spec.distribution) {
        case Distribution::kUniformCube: {
            auto rng = make_rng(spec.seed, stream);
            std::uniform_real_distribution<float> unit(0.0f, 1.0f);
            for (auto& v : values) v = unit(rng);
            break;
        }
        case Distribution::kGaussianClusters: {
            if (spec.clusters == 0) throw std::invalid_argument("gen_synthetic: clusters must be >= 1");
            if (!(spec.cluster_spread > 0.0f) || !std::isfinite(spec.cluster_spread)) {
                throw std::invalid_argument("gen_synthetic: cluster_spread must be positive");
            }
            // Centres come from a stream reserved for them so that datasets and
            // query sets drawn from the same seed share the same clusters.
            auto centre_rng = make_rng(spec.seed, ~std::uint64_t{0});
            std::normal_distribution<float> unit_normal(0.0f, 1.0f);
            std::vector<float> centres(spec.clusters * spec.d);
            for (auto& c : centres) c = unit_normal(centre_rng);

            auto rng = make_rng(spec.seed, stream);
            std::uniform_int_distribution<std::size_t> pick(0, spec.clusters - 1);
            std::normal_distribution<float> noise(0.0f, spec.cluster_spread);
            for (std::size_t i = 0; i < spec.n; ++i) {
                const float* c = centres.data() + pick(rng) * spec.d;
                for (std::size_t j = 0; j < spec.d; ++j) values[i * spec.d + j] = c[j] + noise(rng);
            }
            break;
        }
    }
    return Dataset(spec.n, spec.d, std::move(values));
}

GroundTruth brute_force_knn(const Dataset& ds, const QuerySet& qs, std::size_t k, unsigned threads) {
    if (k == 0) throw std::invalid_argument("brute_force_knn: K must be >= 1");
    if (k > ds.size()) {
        throw std::invalid_argument("brute_force_knn: K=" + std::to_string(k) + " exceeds n=" +
                                    std::to_string(ds.size()));
    }
    if (qs.dimension() != ds.dimension()) throw std::invalid_argument("brute_force_knn: dimension mismatch");

    GroundTruth gt;
    gt.queries = qs.size();
    gt.k = k;
    gt.ids.resize(qs.size() * k);

    const std::size_t d = ds.dimension();
    auto solve = [&](std::size_t begin, std::size_t end) {
        using Entry = std::pair<float, VertexId>;
        std::vector<Entry> heap;
        heap.reserve(k + 1);
        for (std::size_t q = begin; q < end; ++q) {
            heap.clear();
            const float* qv = qs.row_ptr(q);
            for (std::size_t i = 0; i < ds.size(); ++i) {
                const Entry e{l2_sq_raw(qv, ds.row_ptr(i), d), static_cast<VertexId>(i)};
                if (heap.size() < k) {
                    heap.push_back(e);
                    std::push_heap(heap.begin(), heap.end());
                } else if (e < heap.front()) {
                    std::pop_heap(heap.begin(), heap.end());
                    heap.back() = e;
                    std::push_heap(heap.begin(), heap.end());
                }
            }
            std::sort_heap(heap.begin(), heap.end());
            for (std::size_t j = 0; j < k; ++j) gt.ids[q * k + j] = heap[j].second;
        }
    };

    const unsigned t = resolve_threads(threads, qs.size());
    if (t == 1) {
        solve(0, qs.size());
        return gt;
    }
    {
        std::vector<std::jthread> pool;
        const std::size_t chunk = (qs.size() + t - 1) / t;
        for (unsigned w = 0; w < t; ++w) {
            const std::size_t b = w * chunk;
            const std::size_t e = std::min(qs.size(), b + chunk);
            if (b < e) pool.emplace_back(solve, b, e);
        }
    }
    return gt;
}

}  // namespace gann
