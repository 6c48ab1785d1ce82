#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "gann/types.hpp"

namespace gann {

/// Row-major matrix of n vectors of dimension d (32-bit floats).
///
/// Used both for the indexed point set and for query sets; a query set
/// must share the dimension of the dataset it is searched against.
class Dataset {
public:
    Dataset() = default;

    /// Takes ownership of `values`, which must hold exactly n*d finite floats
    /// with n >= 1 and d >= 1.
    Dataset(std::size_t n, std::size_t d, std::vector<float> values);

    std::size_t size() const noexcept { return n_; }
    std::size_t dimension() const noexcept { return d_; }
    bool empty() const noexcept { return n_ == 0; }

    std::span<const float> row(std::size_t i) const noexcept {
        return {values_.data() + i * d_, d_};
    }
    const float* row_ptr(std::size_t i) const noexcept { return values_.data() + i * d_; }

    std::span<const float> values() const noexcept { return values_; }

    friend bool operator==(const Dataset&, const Dataset&) = default;

private:
    std::size_t n_ = 0;
    std::size_t d_ = 0;
    std::vector<float> values_;
};

using QuerySet = Dataset;

/// Row-major int32 matrix as stored in .ivecs files.
struct IntMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::int32_t> values;

    std::span<const std::int32_t> row(std::size_t i) const noexcept {
        return {values.data() + i * cols, cols};
    }

    friend bool operator==(const IntMatrix&, const IntMatrix&) = default;
};

/// Exact K nearest neighbours per query, each row ascending by distance.
struct GroundTruth {
    std::size_t queries = 0;
    std::size_t k = 0;
    std::vector<VertexId> ids;

    std::span<const VertexId> row(std::size_t i) const noexcept {
        return {ids.data() + i * k, k};
    }

    friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

// fvecs / ivecs: per record [int32 dim][dim x payload], little-endian, no header.
Dataset read_fvecs(const std::filesystem::path& path);
void write_fvecs(const Dataset& ds, const std::filesystem::path& path);
IntMatrix read_ivecs(const std::filesystem::path& path);
void write_ivecs(const IntMatrix& m, const std::filesystem::path& path);

/// Decodes an in-memory fvecs image. `source` is only used in error messages.
Dataset parse_fvecs(std::span<const std::byte> bytes, std::string_view source = "<memory>");
IntMatrix parse_ivecs(std::span<const std::byte> bytes, std::string_view source = "<memory>");

GroundTruth ground_truth_from_ivecs(const IntMatrix& m, std::size_t n);
IntMatrix ground_truth_to_ivecs(const GroundTruth& gt);

enum class Distribution { kUniformCube, kGaussianClusters };

struct SyntheticSpec {
    std::size_t n = 0;
    std::size_t d = 0;
    std::uint64_t seed = 0;
    Distribution distribution = Distribution::kUniformCube;
    /// Number of cluster centres; only read for kGaussianClusters.
    std::size_t clusters = 1;
    /// Per-coordinate standard deviation of points around their centre,
    /// relative to the unit spread of the centres themselves.
    float cluster_spread = 1.0f;
};

/// Deterministic synthetic vectors.
///
/// `stream` selects an independent sample sequence from the same
/// distribution: stream 0 is the dataset, stream 1 the queries. For
/// gaussian clusters every stream shares the cluster centres, which depend
/// only on `seed`.
Dataset gen_synthetic(const SyntheticSpec& spec, std::uint64_t stream = 0);

/// Exact K-NN by linear scan, ties broken by ascending id. Parallelised over
/// queries with `threads` workers (0 = hardware concurrency); the result does
/// not depend on the thread count.
GroundTruth brute_force_knn(const Dataset& ds, const QuerySet& qs, std::size_t k,
                            unsigned threads = 0);

}  // namespace gann
