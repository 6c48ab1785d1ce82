#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "gann/dataset.hpp"
#include "gann/types.hpp"

namespace gann {

/// Similarity graph over a dataset in CSR form.
///
///   offsets   : n+1 monotone entries, offsets[0] = 0, offsets[n] = |neighbors|
///   neighbors : out-neighbours of vertex v are neighbors[offsets[v] .. offsets[v+1])
///
/// Immutable once constructed; the constructor validates every invariant
/// (ids in range, no self loops, out-degree <= max_degree, entry in range).
class GraphIndex {
public:
    GraphIndex(std::shared_ptr<const Dataset> dataset, std::vector<std::uint64_t> offsets,
               std::vector<VertexId> neighbors, VertexId entry_point, std::uint32_t max_degree);

    std::size_t size() const noexcept { return offsets_.size() - 1; }
    std::size_t dimension() const noexcept { return dataset_->dimension(); }
    VertexId entry_point() const noexcept { return entry_point_; }
    std::uint32_t max_degree() const noexcept { return max_degree_; }
    std::size_t num_edges() const noexcept { return neighbors_.size(); }

    std::span<const VertexId> neighbors(VertexId v) const noexcept {
        return {neighbors_.data() + offsets_[v], static_cast<std::size_t>(offsets_[v + 1] - offsets_[v])};
    }
    std::size_t degree(VertexId v) const noexcept {
        return static_cast<std::size_t>(offsets_[v + 1] - offsets_[v]);
    }

    const Dataset& dataset() const noexcept { return *dataset_; }
    const std::shared_ptr<const Dataset>& dataset_ptr() const noexcept { return dataset_; }
    const std::vector<std::uint64_t>& offsets() const noexcept { return offsets_; }
    const std::vector<VertexId>& flat_neighbors() const noexcept { return neighbors_; }

    /// Same adjacency and entry point (the backing dataset is not compared).
    bool same_topology(const GraphIndex& other) const noexcept;

private:
    std::shared_ptr<const Dataset> dataset_;
    std::vector<std::uint64_t> offsets_;
    std::vector<VertexId> neighbors_;
    VertexId entry_point_;
    std::uint32_t max_degree_;
};

/// Index of the dataset row closest to the arithmetic mean, ties to the lower id.
VertexId compute_medoid(const Dataset& ds);

/// Exact kNN graph: each vertex links to its `degree` nearest other vertices,
/// ascending distance, ties by id. Entry point is the medoid. `seed` is kept
/// for interface stability; the exact builder consumes no randomness.
GraphIndex build_knn_graph(std::shared_ptr<const Dataset> ds, std::size_t degree, std::uint64_t seed = 0,
                           unsigned threads = 0);

struct DegreeStats {
    std::size_t min_out = 0;
    std::size_t max_out = 0;
    double mean_out = 0.0;
    /// in_degree[v] for every vertex.
    std::vector<std::uint32_t> in_degree;
    /// histogram[k] = number of vertices with in-degree k.
    std::vector<std::uint64_t> in_degree_histogram;
};

DegreeStats degree_stats(const GraphIndex& g);

// --- persistence -----------------------------------------------------------
//
// Little-endian layout:
//   char[8]  magic "GANNIDX1"
//   u32      version (1)
//   u32      d
//   u64      n
//   u32      max_degree
//   u32      entry_point
//   u64      num_edges
//   u64      offsets[n+1]
//   u32      neighbors[num_edges]
//   then zero or more tagged sections, each:
//   char[4]  tag
//   u32      section version
//   u64      payload bytes
//   payload

inline constexpr char kIndexMagic[8] = {'G', 'A', 'N', 'N', 'I', 'D', 'X', '1'};
inline constexpr std::uint32_t kIndexVersion = 1;

struct IndexSection {
    char tag[4];
    std::uint32_t version = 1;
    std::vector<std::byte> payload;
};

std::vector<std::byte> serialize_index(const GraphIndex& g, std::span<const IndexSection> sections = {});
void save_index(const GraphIndex& g, const std::filesystem::path& path,
                std::span<const IndexSection> sections = {});

struct LoadedIndex {
    GraphIndex graph;
    std::vector<IndexSection> sections;

    const IndexSection* find_section(const char (&tag)[5]) const noexcept;
};

LoadedIndex deserialize_index(std::span<const std::byte> bytes, std::shared_ptr<const Dataset> ds);
LoadedIndex load_index(const std::filesystem::path& path, std::shared_ptr<const Dataset> ds);

}  // namespace gann
